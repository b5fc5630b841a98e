"""SMOTE oversampling of the minority class."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from ..errors import ParameterError


class SmoteSample(NamedTuple):
    rows: np.ndarray
    base: np.ndarray
    neighbor: np.ndarray
    gap: np.ndarray


def _neighbor_table(z: np.ndarray, k: int) -> np.ndarray:
    """k nearest other rows for every row of ``z`` (self excluded)."""
    n = z.shape[0]
    _, idx = cKDTree(z).query(z, k=k + 1)
    idx = np.atleast_2d(idx).reshape(n, k + 1)
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        row = idx[i][idx[i] != i]
        out[i] = row[:k]
    return out


def smote(
    minority,
    amount: int,
    k_neighbors: int = 5,
    seed=None,
    scale=None,
) -> SmoteSample:
    """Generate ``amount`` synthetic minority rows.

    Each row is ``x + u * (x_nn - x)`` for a uniformly chosen minority row
    ``x``, one of its ``k_neighbors`` nearest minority neighbours ``x_nn``
    and ``u ~ U[0, 1]``. Distances are Euclidean after dividing each column
    by ``scale`` (default: the minority column standard deviation).
    The generating pairs and gaps are returned alongside the rows.
    """
    x = np.asarray(minority, dtype=np.float64)
    if x.ndim != 2:
        raise ParameterError("minority rows must form a 2-D array")
    if amount < 0:
        raise ParameterError("amount must be non-negative")
    n, d = x.shape
    if amount == 0:
        empty = np.zeros(0, dtype=np.int64)
        return SmoteSample(np.zeros((0, d)), empty, empty.copy(), np.zeros(0))
    if n <= k_neighbors:
        raise ParameterError(
            f"SMOTE needs more than k_neighbors={k_neighbors} minority rows, got {n}; "
            f"lower k_neighbors to at most {max(n - 1, 0)}"
        )
    if k_neighbors < 1:
        raise ParameterError("k_neighbors must be >= 1")
    rng = np.random.default_rng(seed)
    if scale is None:
        scale = x.std(axis=0)
    scale = np.where(np.asarray(scale, dtype=np.float64) > 0, scale, 1.0)
    nn = _neighbor_table(x / scale, k_neighbors)
    base = rng.integers(n, size=amount)
    neighbor = nn[base, rng.integers(k_neighbors, size=amount)]
    gap = rng.random(amount)
    rows = x[base] + gap[:, None] * (x[neighbor] - x[base])
    return SmoteSample(rows, base, neighbor, gap)
