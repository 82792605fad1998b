"""Proximity-weighted partitioning of the minority class."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .neighbors import NeighborIndex


@dataclass(frozen=True)
class WeightedPartition:
    """Minority clusters ordered by proximity to the majority class.

    ``clusters[i]`` holds dataset row indices (sorted) of level ``levels[i]``;
    level 1 is the closest to the majority class.
    """

    clusters: tuple[np.ndarray, ...]
    levels: tuple[int, ...]
    raw_weights: tuple[float, ...]
    weights: tuple[float, ...]
    theta: float
    max_levels: int

    def __len__(self):
        return len(self.clusters)

    def to_json(self) -> dict:
        return {
            "levels": [
                {
                    "level": lvl,
                    "indices": c.tolist(),
                    "raw_weight": rw,
                    "normalized_weight": w,
                }
                for c, lvl, rw, w in zip(self.clusters, self.levels, self.raw_weights, self.weights)
            ],
            "theta": self.theta,
            "max_levels": self.max_levels,
        }


def level_weight(level: int, theta: float) -> float:
    return math.exp(-theta * (level - 1))


def partition_minority(d: Dataset, max_levels: int = 5, n_neighbours_max: int = 5,
                       theta: float = 1.0) -> WeightedPartition:
    """Split the minority class into at most ``max_levels`` proximity levels.

    At each of the first ``max_levels - 1`` levels, every majority point
    claims its ``min(remaining, n_neighbours_max)`` nearest remaining
    minority points; the union of claims is that level's cluster. Whatever
    is left forms the last cluster at level ``max_levels``. Level ``i``
    weighs ``exp(-theta * (i - 1))`` before normalization by the sum.
    """
    if max_levels < 1 or n_neighbours_max < 1:
        raise ValueError("max_levels and n_neighbours_max must be >= 1")
    if not theta > 0:
        raise ValueError("theta must be > 0")
    remaining = d.minority_indices
    majority = d.majority_points
    if len(remaining) == 0 or len(majority) == 0:
        raise ValueError("both classes must be non-empty")

    clusters, levels = [], []
    for level in range(1, max_levels):
        if len(remaining) == 0:
            break
        k = min(len(remaining), n_neighbours_max)
        nn = NeighborIndex(d.features[remaining]).query(majority, k)
        claimed = np.unique(nn)
        assert len(claimed) > 0
        clusters.append(remaining[claimed])
        levels.append(level)
        remaining = np.delete(remaining, claimed)
    if len(remaining) > 0:
        clusters.append(remaining)
        levels.append(max_levels)

    raw = [level_weight(lvl, theta) for lvl in levels]
    total = sum(raw)
    for c in clusters:
        c.setflags(write=False)
    return WeightedPartition(
        clusters=tuple(clusters),
        levels=tuple(levels),
        raw_weights=tuple(raw),
        weights=tuple(w / total for w in raw),
        theta=float(theta),
        max_levels=int(max_levels),
    )
