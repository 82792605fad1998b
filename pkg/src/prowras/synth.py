"""Shadowsamples, random convex combinations and cluster-wise point generation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .neighbors import neighborhoods


@dataclass(frozen=True)
class ShadowConfig:
    """``shadow`` noisy copies per parent, Gaussian noise of std ``sigma``.

    ``sigma`` is a scalar broadcast to every feature or one value per feature.
    """

    shadow: int = 100
    sigma: float | Sequence[float] = 0.001

    def __post_init__(self):
        if self.shadow < 1:
            raise ValueError("shadow must be >= 1")
        if np.any(np.asarray(self.sigma, dtype=float) < 0):
            raise ValueError("sigma must be >= 0")

    def sigma_vector(self, n_feats: int) -> np.ndarray:
        s = np.asarray(self.sigma, dtype=float)
        if s.ndim == 0:
            return np.full(n_feats, float(s))
        if s.shape != (n_feats,):
            raise ValueError(f"sigma has {s.size} entries, expected {n_feats}")
        return s


def make_shadows(parents, cfg: ShadowConfig, rng: np.random.Generator) -> np.ndarray:
    """``cfg.shadow`` shadowsamples per parent row, parent-major order."""
    parents = np.atleast_2d(np.asarray(parents, dtype=float))
    base = np.repeat(parents, cfg.shadow, axis=0)
    return base + rng.normal(0.0, cfg.sigma_vector(parents.shape[1]), size=base.shape)


def simplex_weights(k: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform draws from the (k-1)-simplex (normalized unit exponentials)."""
    shape = (k,) if size is None else (size, k)
    e = rng.exponential(1.0, size=shape)
    return e / e.sum(axis=-1, keepdims=True)


def distinct_choices(rng: np.random.Generator, pool_size: int, k: int, m: int) -> np.ndarray:
    """``m`` rows of ``k`` distinct integers from ``range(pool_size)``, each row uniform."""
    if k > pool_size:
        raise ValueError(f"cannot pick {k} distinct items from a pool of {pool_size}")
    if m == 0:
        return np.empty((0, k), dtype=int)
    if 2 * k > pool_size:
        return np.argsort(rng.random((m, pool_size)), axis=1)[:, :k]
    picks = rng.integers(0, pool_size, size=(m, k))
    while True:
        s = np.sort(picks, axis=1)
        bad = np.flatnonzero(np.any(s[:, 1:] == s[:, :-1], axis=1))
        if len(bad) == 0:
            return picks
        picks[bad] = rng.integers(0, pool_size, size=(len(bad), k))


def random_convex_combination(points, k: int, rng: np.random.Generator) -> np.ndarray:
    """Weighted sum of ``k`` distinct rows of ``points`` with simplex-uniform weights."""
    points = np.asarray(points, dtype=float)
    if not 1 <= k <= len(points):
        raise ValueError(f"k={k} with only {len(points)} points")
    idx = distinct_choices(rng, len(points), k, 1)[0]
    return simplex_weights(k, rng) @ points[idx]


@dataclass(frozen=True)
class GenerationTrace:
    """Per-sample provenance of one :func:`generate_points` call.

    Row ``i`` of the output equals ``weights[i] @ members[i]``. ``parents``
    are cluster row positions of each combined member; for the shadow branch
    ``pool_indices`` address the virtual pool of ``shadow`` copies per
    neighbourhood point (``pool_index // shadow`` is the position within the
    neighbourhood).
    """

    branch: str  # "raw" or "shadow"
    k: int
    pool_size: int
    anchors: np.ndarray
    pool_indices: np.ndarray
    parents: np.ndarray
    members: np.ndarray
    weights: np.ndarray

    def records(self, cluster_level: int | None = None) -> list[dict]:
        return [
            {
                "cluster": cluster_level,
                "neighborhood_anchor": int(a),
                "branch": self.branch,
                "k": self.k,
                "pool_size": self.pool_size,
                "pool_indices": p.tolist(),
                "weights": w.tolist(),
            }
            for a, p, w in zip(self.anchors, self.pool_indices, self.weights)
        ]


def generate_points(cluster, num_samples: int, num_convcomb: int, neb_conv: int,
                    cfg: ShadowConfig, num_feats: int, rng: np.random.Generator,
                    trace: list | None = None) -> np.ndarray:
    """Generate ``num_samples`` synthetic points from one minority cluster.

    Local neighbourhoods of ``neb_conv`` points are used when the cluster is
    larger than ``neb_conv``, otherwise the whole cluster. When
    ``num_convcomb < num_feats`` each point is a 2-way convex combination of
    raw neighbourhood points; otherwise a ``num_convcomb``-way combination of
    shadowsamples of the neighbourhood.

    A singleton cluster in the raw branch combines its point with itself,
    so every sample duplicates that point.

    If ``trace`` is a list, a :class:`GenerationTrace` is appended to it.
    """
    cluster = np.atleast_2d(np.asarray(cluster, dtype=float))
    if len(cluster) == 0:
        raise ValueError("empty cluster")
    if num_samples < 0 or num_convcomb < 1:
        raise ValueError("num_samples must be >= 0 and num_convcomb >= 1")
    nf = cluster.shape[1]
    nbs = np.asarray(neighborhoods(cluster, neb_conv), dtype=int)
    size = nbs.shape[1]
    shadow_branch = num_convcomb >= num_feats
    k = num_convcomb if shadow_branch else 2
    pool_size = cfg.shadow * size if shadow_branch else size
    singleton = not shadow_branch and size == 1
    if k > pool_size and not singleton:
        raise ValueError(
            f"need {k} distinct pool members but the neighbourhood pool has {pool_size}"
        )

    nb_ids = rng.integers(0, len(nbs), size=num_samples)
    if singleton:
        picks = np.zeros((num_samples, k), dtype=int)
    else:
        picks = distinct_choices(rng, pool_size, k, num_samples)
    positions = picks // cfg.shadow if shadow_branch else picks
    parents = nbs[nb_ids[:, None], positions]
    members = cluster[parents]
    if shadow_branch:
        members = members + rng.normal(0.0, cfg.sigma_vector(nf), size=members.shape)
    weights = simplex_weights(k, rng, size=num_samples)
    out = np.einsum("mk,mkf->mf", weights, members)
    if singleton:
        out = members[:, 0].copy()  # exact, free of weight rounding

    if trace is not None:
        trace.append(GenerationTrace(
            branch="shadow" if shadow_branch else "raw",
            k=k,
            pool_size=pool_size,
            anchors=nbs[nb_ids, 0],
            pool_indices=picks,
            parents=parents,
            members=members,
            weights=weights,
        ))
    return out
