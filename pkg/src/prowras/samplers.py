"""ProWRAS and the baseline oversamplers (SMOTE, ProWSyn, LoRAS, pf-SMOTE star)."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from ._rng import as_rng, derive_int
from .data import Dataset, apply_normalizer, fit_normalizer, selection_split
from .neighbors import NeighborIndex
from .partition import partition_minority
from .synth import ShadowConfig, distinct_choices, generate_points, simplex_weights

RECOMMENDED_SIGMA = 1e-3
BENCHMARK_SIGMA = 1e-6
GLOBAL_NEB_CONV = 1000


class Scheme(str, Enum):
    HGV = "hgv"
    LGV = "lgv"
    HLV = "hlv"
    LLV = "llv"


SCHEME_ORDER = (Scheme.HGV, Scheme.LGV, Scheme.HLV, Scheme.LLV)


def scheme_params(scheme: Scheme | str, n_feats: int, minority_size: int) -> tuple[int, int]:
    """``(max_conv, neb_conv)`` for a scheme preset.

    High variance uses 2-way combinations, low variance ``n_feats``-way;
    global schemes make every cluster a single neighbourhood.
    """
    scheme = Scheme(scheme)
    max_conv = 2 if scheme in (Scheme.HGV, Scheme.HLV) else n_feats
    neb_conv = max(GLOBAL_NEB_CONV, minority_size) if scheme in (Scheme.HGV, Scheme.LGV) else 5
    return max_conv, neb_conv


@dataclass(frozen=True)
class ProwrasParams:
    max_levels: int = 5
    n_neighbours_max: int = 5
    num_samples_to_generate: int | None = None  # None: |majority| - |minority|
    theta: float = 1.0
    shadow: int = 100
    sigma: float = RECOMMENDED_SIGMA
    max_conv: int | None = None
    neb_conv: int | None = None

    def __post_init__(self):
        for name in ("max_levels", "n_neighbours_max", "shadow"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("max_conv", "neb_conv"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.num_samples_to_generate is not None and self.num_samples_to_generate < 0:
            raise ValueError("num_samples_to_generate must be >= 0")
        if not self.theta > 0:
            raise ValueError("theta must be > 0")
        if np.any(np.asarray(self.sigma) < 0):
            raise ValueError("sigma must be >= 0")

    def with_scheme(self, scheme: Scheme | str, n_feats: int, minority_size: int) -> "ProwrasParams":
        max_conv, neb_conv = scheme_params(scheme, n_feats, minority_size)
        return replace(self, max_conv=max_conv, neb_conv=neb_conv)


@dataclass(frozen=True)
class SyntheticBatch:
    points: np.ndarray
    label: str
    method: str
    levels: np.ndarray | None = None  # cluster level per point, when clustered
    scheme: str | None = None
    seed: int | None = None

    def __len__(self):
        return len(self.points)


def _seed_of(rng) -> int | None:
    return int(rng) if isinstance(rng, (int, np.integer)) else None


def _check_n(n: int) -> None:
    if n < 0:
        raise ValueError("number of samples must be >= 0")


def prowras(d: Dataset, params: ProwrasParams | None = None, rng=None,
            scheme: Scheme | str | None = None, trace: list | None = None) -> SyntheticBatch:
    """ProWRAS oversampling of the minority class of ``d``.

    Clusters from :func:`partition_minority` receive ``ceil(N * w)`` samples
    and ``ceil(max_conv * w / w_max)`` combined points each, so clusters near
    the majority class get the low-variance treatment. ``scheme`` fills in
    ``max_conv``/``neb_conv`` from a preset.

    With ``trace`` a list, ``(level, GenerationTrace)`` pairs are appended.
    """
    params = params or ProwrasParams()
    if scheme is not None:
        params = params.with_scheme(scheme, d.n_feats, d.n_minority)
    if params.max_conv is None or params.neb_conv is None:
        raise ValueError("max_conv and neb_conv must be set (or pass a scheme)")
    seed = _seed_of(rng)
    rng = as_rng(rng)
    N = params.num_samples_to_generate
    if N is None:
        N = d.n_majority - d.n_minority

    part = partition_minority(d, params.max_levels, params.n_neighbours_max, params.theta)
    cfg = ShadowConfig(params.shadow, params.sigma)
    w_max = max(part.weights)
    chunks, levels = [], []
    for cluster, level, w in zip(part.clusters, part.levels, part.weights):
        num_samples = math.ceil(N * w)
        num_convcomb = math.ceil(params.max_conv * w / w_max)
        local = [] if trace is not None else None
        pts = generate_points(d.features[cluster], num_samples, num_convcomb,
                              params.neb_conv, cfg, d.n_feats, rng, trace=local)
        if trace is not None:
            trace.extend((level, t) for t in local)
        chunks.append(pts)
        levels.append(np.full(len(pts), level))
    return SyntheticBatch(
        points=np.vstack(chunks) if chunks else np.empty((0, d.n_feats)),
        label=d.minority_label,
        method="prowras",
        levels=np.concatenate(levels) if levels else np.empty(0, dtype=int),
        scheme=Scheme(scheme).value if scheme is not None else None,
        seed=seed,
    )


def smote(d: Dataset, n: int, k: int = 5, rng=None) -> SyntheticBatch:
    """Classic SMOTE: interpolate between a minority point and one of its k minority neighbours."""
    _check_n(n)
    X = d.minority_points
    if len(X) < k + 1:
        raise ValueError(f"SMOTE with k={k} needs at least {k + 1} minority samples")
    seed = _seed_of(rng)
    rng = as_rng(rng)
    nn = NeighborIndex(X).query(X, k, self_indices=np.arange(len(X)))
    base = rng.integers(0, len(X), size=n)
    other = nn[base, rng.integers(0, k, size=n)]
    u = rng.random(n)[:, None]
    pts = X[base] + u * (X[other] - X[base])
    return SyntheticBatch(pts, d.minority_label, "smote", seed=seed)


def prowsyn(d: Dataset, n: int, max_levels: int = 5, n_neighbours_max: int = 5,
            theta: float = 1.0, rng=None) -> SyntheticBatch:
    """ProWSyn: proximity-weighted clusters, 2-point interpolation inside each cluster."""
    _check_n(n)
    seed = _seed_of(rng)
    rng = as_rng(rng)
    part = partition_minority(d, max_levels, n_neighbours_max, theta)
    chunks, levels = [], []
    for cluster, level, w in zip(part.clusters, part.levels, part.weights):
        m = math.ceil(n * w)
        P = d.features[cluster]
        if len(P) == 1:
            pts = np.repeat(P, m, axis=0)
        else:
            pair = distinct_choices(rng, len(P), 2, m)
            u = rng.random(m)[:, None]
            pts = P[pair[:, 0]] + u * (P[pair[:, 1]] - P[pair[:, 0]])
        chunks.append(pts)
        levels.append(np.full(m, level))
    return SyntheticBatch(np.vstack(chunks), d.minority_label, "prowsyn",
                          levels=np.concatenate(levels), seed=seed)


def default_n_aff(n_feats: int) -> int:
    return max(2, min(30, n_feats))


def loras(d: Dataset, n: int, k: int = 5, shadow: int = 100, sigma: float = RECOMMENDED_SIGMA,
          n_aff: int | None = None, rng=None) -> SyntheticBatch:
    """LoRAS with Euclidean neighbourhoods.

    Each minority point anchors a neighbourhood of itself plus its ``k``
    nearest minority neighbours; samples are ``n_aff``-way simplex-uniform
    combinations of that neighbourhood's shadowsamples. Samples are spread
    evenly over the anchors, the remainder going to randomly chosen anchors.
    """
    _check_n(n)
    X = d.minority_points
    m = len(X)
    if m < k + 1:
        raise ValueError(f"LoRAS with k={k} needs at least {k + 1} minority samples")
    n_aff = default_n_aff(d.n_feats) if n_aff is None else n_aff
    pool = shadow * (k + 1)
    if not 2 <= n_aff <= pool:
        raise ValueError(f"n_aff must lie in [2, {pool}]")
    cfg = ShadowConfig(shadow, sigma)
    seed = _seed_of(rng)
    rng = as_rng(rng)
    nn = NeighborIndex(X).query(X, k, self_indices=np.arange(m))
    nbs = np.hstack([np.arange(m)[:, None], nn])
    counts = np.full(m, n // m)
    counts[rng.choice(m, n % m, replace=False)] += 1
    anchors = np.repeat(np.arange(m), counts)
    picks = distinct_choices(rng, pool, n_aff, n)
    parents = nbs[anchors[:, None], picks // shadow]
    members = X[parents] + rng.normal(0.0, cfg.sigma_vector(d.n_feats), size=(n, n_aff, d.n_feats))
    w = simplex_weights(n_aff, rng, size=n)
    pts = np.einsum("mk,mkf->mf", w, members)
    return SyntheticBatch(pts, d.minority_label, "loras", seed=seed)


def pf_smote_star(d: Dataset, n: int, rng=None) -> SyntheticBatch:
    """Polynom-fit SMOTE, star topology: points on segments from the minority mean to each minority point."""
    _check_n(n)
    X = d.minority_points
    seed = _seed_of(rng)
    rng = as_rng(rng)
    mean = X.mean(axis=0)
    x = X[rng.integers(0, len(X), size=n)]
    u = rng.random(n)[:, None]
    return SyntheticBatch(mean + u * (x - mean), d.minority_label, "pfsmote", seed=seed)


METHODS = ("prowras", "smote", "prowsyn", "loras", "pfsmote")


def oversample(method: str, d: Dataset, n: int | None = None, rng=None, *,
               scheme: Scheme | str | None = None, params: ProwrasParams | None = None,
               k: int = 5, n_aff: int | None = None) -> SyntheticBatch:
    """Dispatch by method name. ``n`` defaults to the class-count difference.

    ``params`` supplies the shared ProWRAS-style settings (levels, theta,
    shadow, sigma) to every method that uses them.
    """
    params = params or ProwrasParams()
    if n is None:
        n = d.n_majority - d.n_minority
    if method == "prowras":
        return prowras(d, replace(params, num_samples_to_generate=n), rng, scheme=scheme)
    if method == "smote":
        return smote(d, n, k=k, rng=rng)
    if method == "prowsyn":
        return prowsyn(d, n, params.max_levels, params.n_neighbours_max, params.theta, rng=rng)
    if method == "loras":
        return loras(d, n, k=k, shadow=params.shadow, sigma=params.sigma, n_aff=n_aff, rng=rng)
    if method == "pfsmote":
        return pf_smote_star(d, n, rng=rng)
    raise ValueError(f"unknown oversampling method {method!r}")


def score_schemes(d: Dataset, classifier: str = "knn", seed: int = 0,
                  params: ProwrasParams | None = None) -> dict[Scheme, float]:
    """Minority F1 of each scheme on a stratified 50 % / 20 % train/test selection split."""
    from .classifiers import fit_classifier
    from .metrics import ConfusionMatrix, f1_minority

    params = params or ProwrasParams()
    train, test = selection_split(d, 0.5, 0.2, seed=seed)
    norm = fit_normalizer(train)
    train, test = apply_normalizer(norm, train), apply_normalizer(norm, test)
    N = train.n_majority - train.n_minority
    scores = {}
    for scheme in SCHEME_ORDER:
        batch = prowras(train, replace(params, num_samples_to_generate=N),
                        derive_int(seed, "select", scheme.value), scheme=scheme)
        model = fit_classifier(classifier, train.augment(batch.points))
        cm = ConfusionMatrix.from_labels(test.labels, model.predict(test.features),
                                         d.minority_label)
        scores[scheme] = f1_minority(cm)
    return scores


def best_scheme(scores: dict[Scheme, float]) -> Scheme:
    """Highest score; ties go to the earlier preset in HGV, LGV, HLV, LLV order."""
    best = SCHEME_ORDER[0]
    for s in SCHEME_ORDER[1:]:
        if scores[s] > scores[best]:
            best = s
    return best


def select_scheme(d: Dataset, classifier: str = "knn", seed: int = 0,
                  params: ProwrasParams | None = None) -> Scheme:
    return best_scheme(score_schemes(d, classifier, seed, params))
