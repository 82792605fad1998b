"""Exact Euclidean k-nearest-neighbour search.

Everything is brute force: the benchmark datasets have at most a few
thousand rows. Ties in distance are broken by the smaller point index.
"""
from __future__ import annotations

import numpy as np

_CHUNK = 512


def sq_distances(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape ``(len(queries), len(points))``.

    Computed from explicit differences (not the ``|a|^2 - 2ab + |b|^2``
    expansion) so that exact ties stay exact.
    """
    diff = queries[:, None, :] - points[None, :, :]
    return np.einsum("qpf,qpf->qp", diff, diff)


class NeighborIndex:
    def __init__(self, points):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or len(points) < 1:
            raise ValueError("NeighborIndex needs a non-empty 2-D point matrix")
        if not np.all(np.isfinite(points)):
            raise ValueError("NeighborIndex points must be finite")
        self.points = points

    def __len__(self):
        return len(self.points)

    def knn(self, query, k: int, exclude_self: bool = False) -> list[int]:
        """Indices of the ``k`` nearest points to ``query``.

        With ``exclude_self`` the lowest-index point coinciding with the
        query is skipped.
        """
        query = np.asarray(query, dtype=float).reshape(1, -1)
        d = sq_distances(query, self.points)[0]
        order = np.argsort(d, kind="stable")
        if exclude_self and d[order[0]] == 0.0:
            order = order[1:]
        if not 1 <= k <= len(order):
            raise ValueError(f"k={k} but only {len(order)} points available")
        return order[:k].tolist()

    def query(self, queries, k: int, self_indices=None) -> np.ndarray:
        """Batched kNN; returns an int matrix ``(len(queries), k)``.

        ``self_indices[i]``, when given, is an index to drop from row ``i``'s
        candidates (a query point's own position in the index).
        """
        queries = np.asarray(queries, dtype=float)
        avail = len(self.points) - (0 if self_indices is None else 1)
        if not 1 <= k <= avail:
            raise ValueError(f"k={k} but only {avail} points available")
        out = np.empty((len(queries), k), dtype=int)
        for start in range(0, len(queries), _CHUNK):
            stop = start + _CHUNK
            d = sq_distances(queries[start:stop], self.points)
            if self_indices is not None:
                rows = np.arange(d.shape[0])
                d[rows, np.asarray(self_indices)[start:stop]] = np.inf
            out[start:stop] = np.argsort(d, axis=1, kind="stable")[:, :k]
        return out


def neighborhoods(cluster, size: int) -> list[list[int]]:
    """Local neighbourhoods of ``size`` points, one per anchor.

    Each neighbourhood lists the anchor first, then its ``size - 1`` nearest
    cluster-mates. A cluster no larger than ``size`` is one neighbourhood.
    """
    cluster = np.asarray(cluster, dtype=float)
    m = len(cluster)
    if m == 0:
        raise ValueError("empty cluster")
    if m <= size:
        return [list(range(m))]
    if size <= 1:
        return [[i] for i in range(m)]
    nn = NeighborIndex(cluster).query(cluster, size - 1, self_indices=np.arange(m))
    return [[i, *row.tolist()] for i, row in enumerate(nn)]
