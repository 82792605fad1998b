"""Imbalance-aware scores, the classifier-independence score and the Wilcoxon signed-rank test."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary confusion counts with the minority class as positive."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @classmethod
    def from_labels(cls, y_true, y_pred, minority_label) -> "ConfusionMatrix":
        t = np.asarray(y_true) == minority_label
        p = np.asarray(y_pred) == minority_label
        return cls(int(np.sum(t & p)), int(np.sum(~t & p)), int(np.sum(t & ~p)), int(np.sum(~t & ~p)))


def f1_minority(cm: ConfusionMatrix) -> float:
    if cm.tp == 0:
        return 0.0
    return 2 * cm.tp / (2 * cm.tp + cm.fp + cm.fn)


def cohen_kappa(cm: ConfusionMatrix) -> float:
    n = cm.n
    if n < 1:
        raise ValueError("empty confusion matrix")
    p_o = (cm.tp + cm.tn) / n
    p_e = ((cm.tp + cm.fp) * (cm.tp + cm.fn) + (cm.fn + cm.tn) * (cm.fp + cm.tn)) / (n * n)
    if p_e == 1.0:
        return 0.0
    return (p_o - p_e) / (1.0 - p_e)


# --- classifier independence -------------------------------------------------

@dataclass(frozen=True)
class ComparisonCube:
    """``scores[c, d, o]`` for classifier ``c``, dataset ``d``, oversampler ``o``."""

    classifiers: tuple[str, ...]
    datasets: tuple[str, ...]
    oversamplers: tuple[str, ...]
    scores: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float)
        shape = (len(self.classifiers), len(self.datasets), len(self.oversamplers))
        if s.shape != shape:
            raise ValueError(f"scores have shape {s.shape}, expected {shape}")
        if np.isnan(s).any():
            raise ValueError("incomplete comparison cube")
        object.__setattr__(self, "scores", s)

    @classmethod
    def from_nested(cls, nested: Mapping[str, Mapping[str, Mapping[str, float]]]) -> "ComparisonCube":
        """Build from ``nested[classifier][dataset][oversampler]``; missing cells raise."""
        classifiers = tuple(nested)
        datasets = tuple(dict.fromkeys(d for c in nested.values() for d in c))
        oversamplers = tuple(dict.fromkeys(o for c in nested.values() for d in c.values() for o in d))
        s = np.full((len(classifiers), len(datasets), len(oversamplers)), np.nan)
        for i, c in enumerate(classifiers):
            for j, d in enumerate(datasets):
                for k, o in enumerate(oversamplers):
                    try:
                        s[i, j, k] = nested[c][d][o]
                    except KeyError:
                        raise ValueError(f"incomplete comparison cube: missing ({c}, {d}, {o})") from None
        return cls(classifiers, datasets, oversamplers, s)


def iscore(cube: ComparisonCube, target: str, tie_tolerance: float = 0.0,
           decimals: int | None = 3) -> float:
    """Classifier-independence score of ``target`` in [0, 1].

    Per classifier: the fraction of datasets on which ``target`` scores at
    least as well as a competitor, averaged over competitors; then the
    geometric mean over classifiers. Scores are rounded to ``decimals``
    first (``None`` compares raw values).
    """
    if len(cube.oversamplers) < 2:
        raise ValueError("need at least two oversamplers")
    o = cube.oversamplers.index(target)
    s = cube.scores if decimals is None else np.round(cube.scores, decimals)
    mine = s[:, :, o:o + 1]
    others = np.delete(s, o, axis=2)
    wins = (mine >= others - tie_tolerance).sum(axis=1)  # (C, O-1)
    per_classifier = wins.mean(axis=1) / len(cube.datasets)
    return float(np.prod(per_classifier) ** (1.0 / len(cube.classifiers)))


def iscores(cube: ComparisonCube, **kw) -> dict[str, float]:
    return {o: iscore(cube, o, **kw) for o in cube.oversamplers}


# --- Wilcoxon signed-rank test -----------------------------------------------

@dataclass(frozen=True)
class WsrtResult:
    w_plus: float
    w_minus: float
    z: float
    p_one_sided: float
    p_two_sided: float
    r: float
    n_effective: int
    n_total: int
    degenerate: bool = False
    p_method: str = "normal"

    def to_json(self) -> dict:
        return {
            "w_plus": self.w_plus,
            "w_minus": self.w_minus,
            "z": self.z,
            "p_one_sided": self.p_one_sided,
            "p_two_sided": self.p_two_sided,
            "r": self.r,
            "n_effective": self.n_effective,
            "n_total": self.n_total,
            "degenerate": self.degenerate,
            "p_method": self.p_method,
        }


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their integer ranks."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sv = values[order]
    i = 0
    while i < len(sv):
        j = i
        while j + 1 < len(sv) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _normal_sf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


EXACT_MAX_N = 10


def signed_rank_upper_tail(ranks: np.ndarray, w_obs: float) -> tuple[float, float]:
    """Exact ``(P(W+ >= w_obs), P(W+ <= w_obs))`` under random signs.

    Average ranks are multiples of 1/2, so doubled ranks are integers and the
    null distribution of ``2 W+`` follows from a subset-sum count.
    """
    r2 = np.rint(2 * np.asarray(ranks)).astype(int)
    counts = np.zeros(r2.sum() + 1)
    counts[0] = 1.0
    for r in r2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:len(counts) - r]
        counts = counts + shifted
    counts /= counts.sum()
    k = int(round(2 * w_obs))
    return float(counts[k:].sum()), float(counts[:k + 1].sum())


def wsrt(a: Sequence[float], b: Sequence[float], decimals: int = 12,
         method: str = "auto") -> WsrtResult:
    """Wilcoxon signed-rank test of paired scores ``a`` against ``b``.

    Differences are rounded to ``decimals`` places so float noise cannot
    create spurious ties or nonzero differences. ``z`` uses
    ``min(W+, W-)`` and is therefore never positive; ``p_one_sided`` is for
    the alternative ``a > b``.

    ``method`` picks the p-value: ``"normal"`` uses the tie-corrected normal
    approximation, ``"exact"`` the permutation distribution of the signed
    ranks, ``"auto"`` exact for at most ``EXACT_MAX_N`` nonzero differences
    (where the approximation is off by up to 0.3) and normal above.
    """
    if method not in ("auto", "normal", "exact"):
        raise ValueError(f"unknown method {method!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 1:
        raise ValueError("wsrt needs two equal-length non-empty vectors")
    N = len(a)
    diff = np.round(a - b, decimals)
    diff = diff[diff != 0]
    n = len(diff)
    if n == 0:
        return WsrtResult(0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0, N, degenerate=True, p_method="none")

    absd = np.abs(diff)
    ranks = average_ranks(absd)
    w_plus = float(ranks[diff > 0].sum())
    w_minus = float(ranks[diff < 0].sum())
    _, t = np.unique(absd, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24 - (np.sum(t ** 3) - np.sum(t)) / 48
    w_r = min(w_plus, w_minus)
    z = (w_r - n * (n + 1) / 4) / math.sqrt(var) if var > 0 else 0.0
    if method == "exact" or (method == "auto" and n <= EXACT_MAX_N):
        upper, lower = signed_rank_upper_tail(ranks, w_plus)
        p_one, p_two, used = upper, min(1.0, 2.0 * min(upper, lower)), "exact"
    else:
        tail = _normal_sf(abs(z))
        p_one = tail if w_plus >= w_minus else 1.0 - tail
        p_two, used = min(1.0, 2.0 * tail), "normal"
    return WsrtResult(
        w_plus=w_plus,
        w_minus=w_minus,
        z=z,
        p_one_sided=p_one,
        p_two_sided=p_two,
        r=abs(z) / math.sqrt(N),
        n_effective=n,
        n_total=N,
        p_method=used,
    )
