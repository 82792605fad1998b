"""Repeated stratified cross-validation benchmark of oversamplers.

Per fold: fit min-max scaling on the training part, oversample the scaled
training part up to class balance, train a classifier on training plus
synthetic points, and score minority F1 and Cohen's kappa on the untouched
test part.
"""
from __future__ import annotations

import csv
import json
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from ._rng import derive_int
from .classifiers import fit_classifier
from .data import Dataset, DatasetEntry, FoldPlan, fit_normalizer, parse_entry, stratified_folds
from .metrics import ComparisonCube, ConfusionMatrix, cohen_kappa, f1_minority
from .samplers import (
    BENCHMARK_SIGMA,
    METHODS,
    RECOMMENDED_SIGMA,
    ProwrasParams,
    Scheme,
    oversample,
    select_scheme,
)

logger = logging.getLogger(__name__)

SIGMA_PROFILES = {"benchmark": BENCHMARK_SIGMA, "recommended": RECOMMENDED_SIGMA}


class CoverageError(ValueError):
    """External predictions do not cover every test sample."""


@dataclass(frozen=True)
class OversamplerSpec:
    name: str
    method: str = "baseline"
    scheme: str | None = None  # hgv/lgv/hlv/llv, "auto", or None
    proportion: float = 1.0  # fraction of the class-count gap to synthesize
    k: int = 5
    n_aff: int | None = None

    def __post_init__(self):
        if self.method != "baseline" and self.method not in METHODS:
            raise ValueError(f"unknown oversampling method {self.method!r}")
        if self.scheme not in (None, "auto"):
            Scheme(self.scheme)
        if self.proportion < 0:
            raise ValueError("proportion must be >= 0")


@dataclass(frozen=True)
class ClassifierSpec:
    name: str
    kind: str = "knn"  # knn, logreg, external
    params: dict = field(default_factory=dict)
    predictions: str | None = None  # external predictions file

    def __post_init__(self):
        if self.kind not in ("knn", "logreg", "external"):
            raise ValueError(f"unknown classifier kind {self.kind!r}")
        if self.kind == "external" and not self.predictions:
            raise ValueError(f"external classifier {self.name!r} needs a predictions file")


@dataclass(frozen=True)
class BenchmarkConfig:
    datasets: tuple[DatasetEntry, ...]
    oversamplers: tuple[OversamplerSpec, ...]
    classifiers: tuple[ClassifierSpec, ...]
    repeats: int = 5
    folds: int = 5
    seed: int = 0
    sigma_profile: str | float = "benchmark"
    params: ProwrasParams = ProwrasParams()

    def __post_init__(self):
        if not (self.datasets and self.oversamplers and self.classifiers):
            raise ValueError("datasets, oversamplers and classifiers must be non-empty")
        names = [o.name for o in self.oversamplers]
        if len(set(names)) != len(names):
            raise ValueError("oversampler names must be unique")
        object.__setattr__(self, "params", replace(self.params, sigma=self.sigma))

    @property
    def sigma(self) -> float:
        if isinstance(self.sigma_profile, str):
            return SIGMA_PROFILES[self.sigma_profile]
        return float(self.sigma_profile)

    @classmethod
    def from_dict(cls, raw: dict, base: Path | None = None) -> "BenchmarkConfig":
        datasets = raw["datasets"]
        if isinstance(datasets, str):
            from .data import load_manifest
            p = Path(datasets)
            datasets = load_manifest(base / p if base and not p.is_absolute() else p)
        else:
            datasets = [parse_entry(d, base) for d in datasets]
        ovs = [OversamplerSpec(name=o, method=o) if isinstance(o, str) else OversamplerSpec(**o)
               for o in raw["oversamplers"]]
        clfs = []
        for c in raw["classifiers"]:
            c = {"name": c, "kind": c} if isinstance(c, str) else dict(c)
            if c.get("predictions") and base is not None and not Path(c["predictions"]).is_absolute():
                c["predictions"] = str(base / c["predictions"])
            clfs.append(ClassifierSpec(**c))
        return cls(
            datasets=tuple(datasets),
            oversamplers=tuple(ovs),
            classifiers=tuple(clfs),
            repeats=raw.get("repeats", 5),
            folds=raw.get("folds", 5),
            seed=raw.get("seed", 0),
            sigma_profile=raw.get("sigma_profile", "benchmark"),
            params=ProwrasParams(**raw.get("params", {})),
        )

    @classmethod
    def from_json(cls, path) -> "BenchmarkConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)


# --- results -----------------------------------------------------------------

@dataclass
class ResultRow:
    dataset: str
    oversampler: str
    classifier: str
    scheme_used: str | None
    mean_f1: float | None
    mean_kappa: float | None
    per_fold_scores: list[dict]
    seed: int
    status: str = "ok"
    error: str | None = None


@dataclass
class ResultsTable:
    rows: list[ResultRow]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(r), sort_keys=True) + "\n" for r in self.rows)

    def write_jsonl(self, path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def read_jsonl(cls, path) -> "ResultsTable":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([ResultRow(**json.loads(line)) for line in lines if line.strip()])

    def names(self, attr: str) -> list[str]:
        return list(dict.fromkeys(getattr(r, attr) for r in self.rows))

    def lookup(self, classifier: str, metric: str = "f1") -> dict[str, dict[str, float]]:
        """``{dataset: {oversampler: mean metric}}`` for successful rows."""
        key = {"f1": "mean_f1", "kappa": "mean_kappa"}[metric]
        out: dict[str, dict[str, float]] = {}
        for r in self.rows:
            if r.classifier == classifier and r.status == "ok":
                out.setdefault(r.dataset, {})[r.oversampler] = getattr(r, key)
        return out

    def to_cube(self, metric: str = "f1") -> ComparisonCube:
        return ComparisonCube.from_nested({c: self.lookup(c, metric) for c in self.names("classifier")})

    def write_table_csv(self, path) -> None:
        """One row per (classifier, dataset) with ``F1/kappa`` cells."""
        ovs = self.names("oversampler")
        cells = {(r.classifier, r.dataset, r.oversampler): r for r in self.rows}
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["classifier", "dataset", *ovs])
            for c in self.names("classifier"):
                for d in self.names("dataset"):
                    out = [c, d]
                    for o in ovs:
                        r = cells.get((c, d, o))
                        if r is None or r.status != "ok":
                            out.append("failed" if r else "")
                        else:
                            out.append(f"{r.mean_f1:.3f}/{r.mean_kappa:.3f}")
                    w.writerow(out)


def pairwise_counts(rt: ResultsTable, classifier: str, metric: str = "f1",
                    decimals: int | None = 3) -> tuple[list[str], np.ndarray]:
    """``counts[i, j]``: datasets where oversampler ``i`` scores at least as well as ``j``."""
    table = rt.lookup(classifier, metric)
    ovs = [o for o in rt.names("oversampler")]
    datasets = rt.names("dataset")
    missing = [(d, o) for d in datasets for o in ovs if o not in table.get(d, {})]
    if missing:
        raise ValueError(f"incomplete results for classifier {classifier!r}: {missing}")
    s = np.array([[table[d][o] for o in ovs] for d in datasets])
    if decimals is not None:
        s = np.round(s, decimals)
    counts = (s[:, :, None] >= s[:, None, :]).sum(axis=0)
    return ovs, counts


# --- external predictions ----------------------------------------------------

@dataclass
class ExternalPredictions:
    """Predicted labels keyed by ``(dataset, oversampler, repeat, fold)``.

    ``oversampler`` is ``None`` for files without an oversampler column; such
    predictions serve every oversampler.
    """

    table: dict[tuple, dict[int, str]]
    source: str = ""

    def _oversampler_key(self, dataset: str, oversampler: str) -> str | None:
        """Rows for this oversampler if present, else the oversampler-agnostic rows."""
        if any(k[0] == dataset and k[1] == oversampler for k in self.table):
            return oversampler
        return None

    def predictions(self, dataset: str, oversampler: str, plan: FoldPlan) -> dict[tuple[int, int], np.ndarray]:
        """Per-(repeat, fold) label arrays aligned with each test index set."""
        ov = self._oversampler_key(dataset, oversampler)
        out, missing = {}, []
        used = set()
        for r, f, _, test in plan.splits():
            got = self.table.get((dataset, ov, r, f))
            if got is None or any(int(i) not in got for i in test):
                missing.append((r, f))
                continue
            out[(r, f)] = np.array([got[int(i)] for i in test])
            used.add((r, f))
            extra = set(got) - set(test.tolist())
            if extra:
                warnings.warn(f"{self.source}: ignoring {len(extra)} predictions outside "
                              f"test fold (repeat={r}, fold={f}) of {dataset}")
        if missing:
            raise CoverageError(
                f"{self.source}: predictions for {dataset!r} miss (repeat, fold) {missing}")
        unused = [k for k in self.table if k[0] == dataset and k[1] == ov and (k[2], k[3]) not in used]
        if unused:
            warnings.warn(f"{self.source}: ignoring predictions for unknown folds {sorted(unused)}")
        return out


def import_external_predictions(path) -> ExternalPredictions:
    """Read ``dataset,repeat,fold,sample_index,predicted_label[,oversampler]`` CSV rows."""
    table: dict[tuple, dict[int, str]] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"dataset", "repeat", "fold", "sample_index", "predicted_label"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"{path}: header must contain {sorted(need)}")
        for row in reader:
            key = (row["dataset"], row.get("oversampler") or None, int(row["repeat"]), int(row["fold"]))
            table.setdefault(key, {})[int(row["sample_index"])] = row["predicted_label"].strip()
    return ExternalPredictions(table, str(path))


# --- running -----------------------------------------------------------------

def fold_plan(cfg: BenchmarkConfig, dataset_name: str, d: Dataset) -> FoldPlan:
    """The fold plan the harness uses for ``dataset_name``; shared by all configurations."""
    return stratified_folds(d, cfg.repeats, cfg.folds, derive_int(cfg.seed, "folds", dataset_name))


def _score(y_true, y_pred, minority_label) -> dict:
    cm = ConfusionMatrix.from_labels(y_true, y_pred, minority_label)
    return {"f1": f1_minority(cm), "kappa": cohen_kappa(cm)}


def run_fold(d: Dataset, train_idx, test_idx, ov: OversamplerSpec, scheme: str | None,
             clf: ClassifierSpec, params: ProwrasParams, seed: int,
             keep_synthetic: bool = False):
    """Train and score one fold; returns ``(scores, synthetic_points_or_None)``.

    Synthetic points are returned in the original feature space.
    """
    train, test = d.subset(train_idx), d.subset(test_idx)
    norm = fit_normalizer(train)
    train_n = train.with_features(norm.transform(train.features))
    n = int(round(ov.proportion * (train.n_majority - train.n_minority)))
    synth = np.empty((0, d.n_feats))
    if ov.method != "baseline" and n > 0:
        batch = oversample(ov.method, train_n, n, seed, scheme=scheme, params=params,
                           k=ov.k, n_aff=ov.n_aff)
        synth = batch.points
    model = fit_classifier(clf.kind, train_n.augment(synth), **clf.params)
    pred = model.predict(norm.transform(test.features))
    scores = _score(test.labels, pred, d.minority_label)
    scores["n_synthetic"] = int(len(synth))
    return scores, (norm.inverse_transform(synth) if keep_synthetic else None)


def _fold_job(args):
    return run_fold(*args)[0]


SyntheticHook = Callable[..., None]


def run_benchmark(cfg: BenchmarkConfig, workers: int = 1,
                  on_synthetic: SyntheticHook | None = None) -> ResultsTable:
    """Run every (dataset, oversampler, classifier) configuration.

    Failures are recorded on the affected row and the run continues.
    ``on_synthetic(dataset=, oversampler=, classifier=, repeat=, fold=,
    train_idx=, test_idx=, points=)`` sees each fold's synthetic points
    (single-process runs only).
    """
    if on_synthetic is not None and workers > 1:
        raise ValueError("on_synthetic requires workers=1")
    externals = {c.name: import_external_predictions(c.predictions)
                 for c in cfg.classifiers if c.kind == "external"}
    rows: list[ResultRow] = []
    pending = []  # (row, [(repeat, fold, job)])
    for entry in cfg.datasets:
        try:
            d = entry.load()
            plan = fold_plan(cfg, entry.name, d)
        except Exception as exc:  # noqa: BLE001 - recorded per row
            logger.error("dataset %s failed to load: %s", entry.name, exc)
            for ov in cfg.oversamplers:
                for clf in cfg.classifiers:
                    rows.append(ResultRow(entry.name, ov.name, clf.name, None, None, None, [],
                                          cfg.seed, "failed", f"{type(exc).__name__}: {exc}"))
            continue
        splits = list(plan.splits())
        for ov in cfg.oversamplers:
            for clf in cfg.classifiers:
                row = ResultRow(entry.name, ov.name, clf.name, ov.scheme, None, None, [], cfg.seed)
                rows.append(row)
                try:
                    if clf.kind == "external":
                        preds = externals[clf.name].predictions(entry.name, ov.name, plan)
                        for r, f, _, test in splits:
                            s = _score(d.labels[test], preds[(r, f)], d.minority_label)
                            row.per_fold_scores.append({"repeat": r, "fold": f, **s})
                        continue
                    scheme = ov.scheme
                    if ov.method == "prowras" and scheme == "auto":
                        scheme = select_scheme(
                            d, clf.kind,
                            derive_int(cfg.seed, "scheme", entry.name, clf.name),
                            cfg.params,
                        ).value
                        row.scheme_used = scheme
                    jobs = []
                    for r, f, train, test in splits:
                        seed = derive_int(cfg.seed, entry.name, ov.name, clf.name, r, f)
                        jobs.append((r, f, (d, train, test, ov, scheme, clf, cfg.params, seed)))
                    pending.append((row, jobs))
                except Exception as exc:  # noqa: BLE001
                    row.status, row.error = "failed", f"{type(exc).__name__}: {exc}"

    def collect(row, results):
        for (r, f, _), res in zip(row_jobs[id(row)], results):
            row.per_fold_scores.append({"repeat": r, "fold": f, **res})

    row_jobs = {id(row): jobs for row, jobs in pending}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(row, [pool.submit(_fold_job, job[2]) for job in jobs]) for row, jobs in pending]
            for row, futs in futures:
                try:
                    collect(row, [fu.result() for fu in futs])
                except Exception as exc:  # noqa: BLE001
                    row.per_fold_scores.clear()
                    row.status, row.error = "failed", f"{type(exc).__name__}: {exc}"
    else:
        for row, jobs in pending:
            try:
                results = []
                for r, f, job in jobs:
                    scores, pts = run_fold(*job, keep_synthetic=on_synthetic is not None)
                    if on_synthetic is not None:
                        on_synthetic(dataset=row.dataset, oversampler=row.oversampler,
                                     classifier=row.classifier, repeat=r, fold=f,
                                     train_idx=job[1], test_idx=job[2], points=pts)
                    results.append(scores)
                collect(row, results)
            except Exception as exc:  # noqa: BLE001
                row.per_fold_scores.clear()
                row.status, row.error = "failed", f"{type(exc).__name__}: {exc}"

    for row in rows:
        if row.status == "ok" and row.per_fold_scores:
            row.mean_f1 = float(np.mean([s["f1"] for s in row.per_fold_scores]))
            row.mean_kappa = float(np.mean([s["kappa"] for s in row.per_fold_scores]))
        elif row.status == "ok":
            row.status, row.error = "failed", "no folds scored"
    return ResultsTable(rows)
