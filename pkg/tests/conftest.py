import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from prowras.data import Dataset  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
DATASETS = ROOT / "datasets"


def blobs(n_maj=60, n_min=15, n_feats=2, seed=0, gap=3.0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n_maj, n_feats)), rng.normal(gap, 1, (n_min, n_feats))])
    y = np.array(["maj"] * n_maj + ["min"] * n_min)
    return Dataset(X, y, "min")


@pytest.fixture
def small():
    return blobs()


@pytest.fixture
def yeast4_path():
    return DATASETS / "yeast4.csv"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
