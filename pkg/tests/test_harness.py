import csv
import json
import warnings

import numpy as np
import pytest

from conftest import blobs
from prowras.data import Dataset, DatasetEntry, write_csv
from prowras.harness import (
    BenchmarkConfig,
    ClassifierSpec,
    CoverageError,
    OversamplerSpec,
    ResultRow,
    ResultsTable,
    fold_plan,
    import_external_predictions,
    pairwise_counts,
    run_benchmark,
    run_fold,
)
from prowras.samplers import ProwrasParams


def make_csv(tmp_path, name="toy", seed=0, n_maj=60, n_min=15, n_feats=3, gap=1.5):
    p = tmp_path / f"{name}.csv"
    write_csv(p, blobs(n_maj, n_min, n_feats, seed, gap))
    return DatasetEntry(name, str(p))


def config(entries, ovs, clfs=("knn",), repeats=2, folds=3, seed=0):
    return BenchmarkConfig(
        datasets=tuple(entries),
        oversamplers=tuple(OversamplerSpec(**o) if isinstance(o, dict) else OversamplerSpec(o, o) for o in ovs),
        classifiers=tuple(ClassifierSpec(c, c) for c in clfs),
        repeats=repeats, folds=folds, seed=seed,
    )


def test_baseline_twice_identical(tmp_path):
    e = make_csv(tmp_path)
    rt = run_benchmark(config([e], ["baseline", {"name": "baseline2", "method": "baseline"}]))
    a, b = rt.rows
    assert a.status == b.status == "ok"
    assert a.per_fold_scores == b.per_fold_scores


def test_zero_sample_oversampler_equals_baseline(tmp_path):
    e = make_csv(tmp_path)
    rt = run_benchmark(config([e], ["baseline", {"name": "none", "method": "smote", "proportion": 0.0}],
                              clfs=("knn", "logreg")))
    by = {(r.oversampler, r.classifier): r for r in rt.rows}
    for clf in ("knn", "logreg"):
        assert by[("none", clf)].per_fold_scores == by[("baseline", clf)].per_fold_scores


def test_rows_and_fold_counts(tmp_path):
    e = make_csv(tmp_path)
    rt = run_benchmark(config([e], ["baseline", "smote"], clfs=("knn", "logreg"), repeats=2, folds=3))
    assert len(rt.rows) == 4
    assert all(len(r.per_fold_scores) == 6 for r in rt.rows)
    assert all(0 <= r.mean_f1 <= 1 for r in rt.rows)


SENTINEL = 987654.321


def sentinel_dataset():
    """Every minority sample carries a unique large value in feature 0."""
    rng = np.random.default_rng(0)
    X = rng.normal(size=(80, 3))
    y = np.array(["maj"] * 60 + ["min"] * 20)
    X[60:, 0] = SENTINEL + np.arange(20)
    return Dataset(X, y, "min")


@pytest.mark.parametrize("method,scheme", [("prowras", "hgv"), ("prowras", "llv"), ("smote", None),
                                           ("prowsyn", None), ("loras", None), ("pfsmote", None)])
def test_leakage_sentinel(tmp_path, method, scheme):
    """Synthetic points only ever combine training-fold minority samples."""
    d = sentinel_dataset()
    write_csv(tmp_path / "s.csv", d)
    cfg = BenchmarkConfig(
        datasets=(DatasetEntry("s", str(tmp_path / "s.csv")),),
        oversamplers=(OversamplerSpec("o", method, scheme),),
        classifiers=(ClassifierSpec("knn", "knn"),),
        repeats=2, folds=4, sigma_profile=0.0,
    )
    seen = []

    def hook(train_idx, test_idx, points, **_):
        train_vals = d.features[train_idx][d.minority_mask[train_idx], 0]
        test_vals = d.features[test_idx][d.minority_mask[test_idx], 0]
        lo, hi = train_vals.min(), train_vals.max()
        assert len(points) > 0
        # exact sentinel values of test samples never appear
        assert not np.isin(points[:, 0].round(6), test_vals.round(6)).any()
        # every synthetic sentinel coordinate lies in the hull of training sentinels
        assert np.all(points[:, 0] >= lo - 1e-6) and np.all(points[:, 0] <= hi + 1e-6)
        seen.append(len(points))

    rt = run_benchmark(cfg, on_synthetic=hook)
    assert rt.rows[0].status == "ok"
    assert len(seen) == 8


@pytest.mark.parametrize("method,scheme", [("prowras", "lgv"), ("prowras", "hlv"), ("loras", None)])
def test_leakage_single_sentinel_sample(tmp_path, method, scheme):
    """One minority sample carries a far-out value; when it is in the test fold no synthetic point nears it."""
    rng = np.random.default_rng(1)
    X = rng.normal(size=(100, 3))
    X[99, 0] = SENTINEL
    d = Dataset(X, ["maj"] * 80 + ["min"] * 20, "min")
    write_csv(tmp_path / "s.csv", d)
    cfg = BenchmarkConfig(
        datasets=(DatasetEntry("s", str(tmp_path / "s.csv")),),
        oversamplers=(OversamplerSpec("p", method, scheme),),
        classifiers=(ClassifierSpec("knn", "knn"),),
        repeats=3, folds=5, sigma_profile="recommended",
    )
    checked = []

    def hook(test_idx, points, **_):
        if 99 in test_idx:
            assert np.abs(points[:, 0]).max() < 10
            checked.append(True)

    assert run_benchmark(cfg, on_synthetic=hook).rows[0].status == "ok"
    assert len(checked) == 3


def test_ceiling_overshoot_bound(tmp_path):
    e = make_csv(tmp_path, n_maj=90, n_min=20, gap=0.8)
    d = e.load()
    cfg = config([e], ["prowras"])
    plan = fold_plan(cfg, e.name, d)
    for _, _, train, test in plan.splits():
        for scheme in ("hgv", "lgv", "hlv", "llv"):
            scores, _ = run_fold(d, train, test, OversamplerSpec("p", "prowras", scheme), scheme,
                                 ClassifierSpec("knn"), ProwrasParams(), 0)
            tr = d.subset(train)
            total = tr.n_minority + scores["n_synthetic"]
            assert tr.n_majority <= total <= tr.n_majority + 5


def test_determinism_byte_identical(tmp_path):
    entries = [make_csv(tmp_path, f"d{i}", seed=i) for i in range(3)]
    ovs = ["baseline", "smote", {"name": "prowras", "method": "prowras", "scheme": "auto"}]
    a = run_benchmark(config(entries, ovs, clfs=("knn", "logreg"))).to_jsonl()
    b = run_benchmark(config(entries, ovs, clfs=("knn", "logreg"))).to_jsonl()
    assert a == b
    c = run_benchmark(config(entries, ovs, clfs=("knn", "logreg")), workers=2).to_jsonl()
    assert a == c


def test_failures_recorded_per_row(tmp_path):
    good = make_csv(tmp_path)
    bad = DatasetEntry("missing", str(tmp_path / "nope.csv"))
    # LoRAS needs k+1 minority samples; with k=50 it fails but the run continues
    rt = run_benchmark(config([good, bad], ["baseline", {"name": "l", "method": "loras", "k": 50}]))
    status = {(r.dataset, r.oversampler): r.status for r in rt.rows}
    assert status[("toy", "baseline")] == "ok"
    assert status[("toy", "l")] == "failed"
    assert status[("missing", "baseline")] == "failed"


def test_jsonl_round_trip(tmp_path):
    e = make_csv(tmp_path)
    rt = run_benchmark(config([e], ["baseline", "smote"]))
    rt.write_jsonl(tmp_path / "r.jsonl")
    back = ResultsTable.read_jsonl(tmp_path / "r.jsonl")
    assert back.to_jsonl() == rt.to_jsonl()


def test_table_csv_precision(tmp_path):
    e = make_csv(tmp_path)
    rt = run_benchmark(config([e], ["baseline", "smote"]))
    rt.write_table_csv(tmp_path / "t.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["classifier", "dataset", "baseline", "smote"]
    f1, kappa = rows[1][2].split("/")
    assert len(f1.split(".")[1]) == 3 and len(kappa.split(".")[1]) == 3


# --- pairwise counts ---------------------------------------------------------

def table_from(scores):
    rows = [ResultRow(d, o, "knn", None, v, v, [], 0) for d, per in scores.items() for o, v in per.items()]
    return ResultsTable(rows)


def test_pairwise_hand_built():
    rt = table_from({
        "d1": {"a": 0.5, "b": 0.4, "c": 0.5},
        "d2": {"a": 0.1, "b": 0.3, "c": 0.2},
        "d3": {"a": 0.9, "b": 0.9, "c": 0.1},
    })
    ovs, counts = pairwise_counts(rt, "knn")
    assert ovs == ["a", "b", "c"]
    assert counts.tolist() == [[3, 2, 2], [2, 3, 2], [2, 1, 3]]


def test_pairwise_trichotomy():
    rng = np.random.default_rng(0)
    scores = {f"d{i}": {o: float(rng.integers(0, 4)) / 4 for o in "abcd"} for i in range(7)}
    _, counts = pairwise_counts(table_from(scores), "knn")
    assert np.all(np.diag(counts) == 7)
    s = np.array([[scores[d][o] for o in "abcd"] for d in scores])
    ties = (s[:, :, None] == s[:, None, :]).sum(0)
    assert np.array_equal(counts + counts.T, 7 + ties)


def test_pairwise_incomplete():
    rt = table_from({"d1": {"a": 0.5, "b": 0.4}, "d2": {"a": 0.1}})
    with pytest.raises(ValueError, match="incomplete"):
        pairwise_counts(rt, "knn")


# --- external predictions ----------------------------------------------------

def write_predictions(path, rows, with_ov=False):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "repeat", "fold", "sample_index", "predicted_label"] + (["oversampler"] if with_ov else []))
        w.writerows(rows)


def knn_prediction_rows(e, cfg):
    """Predictions produced outside the harness with the same fold plan."""
    from prowras.classifiers import knn_fit
    from prowras.data import fit_normalizer
    d = e.load()
    rows = []
    for r, f, train, test in fold_plan(cfg, e.name, d).splits():
        tr = d.subset(train)
        norm = fit_normalizer(tr)
        pred = knn_fit(tr.with_features(norm.transform(tr.features))).predict(norm.transform(d.features[test]))
        rows += [[e.name, r, f, int(i), p] for i, p in zip(test, pred)]
    return rows


def test_external_predictions_match_in_process(tmp_path):
    e = make_csv(tmp_path)
    cfg = config([e], ["baseline"])
    write_predictions(tmp_path / "p.csv", knn_prediction_rows(e, cfg))
    cfg = BenchmarkConfig(cfg.datasets, cfg.oversamplers,
                          (ClassifierSpec("knn", "knn"),
                           ClassifierSpec("ext", "external", predictions=str(tmp_path / "p.csv"))),
                          repeats=cfg.repeats, folds=cfg.folds)
    rt = run_benchmark(cfg)
    inproc, ext = rt.rows
    assert ext.status == "ok"
    for a, b in zip(inproc.per_fold_scores, ext.per_fold_scores):
        assert abs(a["f1"] - b["f1"]) <= 1e-12 and abs(a["kappa"] - b["kappa"]) <= 1e-12


def test_external_missing_fold_named(tmp_path):
    e = make_csv(tmp_path)
    cfg = config([e], ["baseline"])
    rows = [r for r in knn_prediction_rows(e, cfg) if not (r[1] == 1 and r[2] == 2)]
    write_predictions(tmp_path / "p.csv", rows)
    ext = import_external_predictions(tmp_path / "p.csv")
    with pytest.raises(CoverageError, match=r"\(1, 2\)"):
        ext.predictions(e.name, "baseline", fold_plan(cfg, e.name, e.load()))


def test_external_extra_rows_warn(tmp_path):
    e = make_csv(tmp_path)
    cfg = config([e], ["baseline"])
    rows = knn_prediction_rows(e, cfg) + [[e.name, 7, 0, 0, "maj"]]
    write_predictions(tmp_path / "p.csv", rows)
    ext = import_external_predictions(tmp_path / "p.csv")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        preds = ext.predictions(e.name, "baseline", fold_plan(cfg, e.name, e.load()))
    assert len(preds) == 6
    assert any("ignoring" in str(w.message) for w in caught)


def test_external_bad_header(tmp_path):
    (tmp_path / "p.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="header"):
        import_external_predictions(tmp_path / "p.csv")


def test_config_from_json(tmp_path):
    e = make_csv(tmp_path)
    (tmp_path / "cfg.json").write_text(json.dumps({
        "datasets": [{"name": "toy", "path": "toy.csv"}],
        "oversamplers": ["baseline", {"name": "pw", "method": "prowras", "scheme": "auto"}],
        "classifiers": ["knn"],
        "repeats": 1, "folds": 2, "seed": 3, "sigma_profile": "recommended",
    }))
    cfg = BenchmarkConfig.from_json(tmp_path / "cfg.json")
    assert cfg.datasets[0].path == e.path
    assert cfg.params.sigma == 1e-3
    assert cfg.oversamplers[1].scheme == "auto"
