"""Interval-valued outputs for ranking and metric learning, scored on pairs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IntervalSet:
    lo: float
    hi: float
    empty: bool = False

    def __post_init__(self):
        if not self.empty and self.lo > self.hi:
            raise ValueError(f"interval lo={self.lo} exceeds hi={self.hi}")

    def contains(self, other: IntervalSet) -> bool:
        return other.empty or (not self.empty and self.lo <= other.lo and other.hi <= self.hi)


def ranking_interval(r_hat: float, lam: float) -> IntervalSet:
    """``(r_hat - lam, r_hat + lam)``: the predicted score gap, widened by ``lam``."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    return IntervalSet(r_hat - lam, r_hat + lam)


def ranking_loss(y1, y2, s: IntervalSet) -> int:
    """1 when every value in ``s`` has the wrong sign for the true order."""
    if s.empty:
        return 0
    return int((s.hi < 0 and y1 > y2) or (s.lo > 0 and y1 < y2))


def metric_loss(y1, y2, s: IntervalSet) -> float:
    """Same-class pairs pay for a lower end above 1; other pairs for an upper end below 1."""
    if s.empty:
        return 0.0
    if y1 == y2:
        return max(s.lo - 1.0, 0.0)
    return max(1.0 - s.hi, 0.0)


def pairwise_empirical_risk(pair_loss, n: int) -> float:
    """Mean of ``pair_loss(i, j)`` over the ``n(n-1)/2`` pairs ``i < j``."""
    if n < 2:
        raise ValueError("need at least two points")
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += pair_loss(i, j)
    return total / (n * (n - 1) / 2)


def _pairs(n):
    i, j = np.triu_indices(n, k=1)
    return i, j


def ranking_loss_matrix(pair_scores, targets, grid) -> np.ndarray:
    """Rows are unordered pairs ``i < j`` (row-major), columns the width grid.

    ``pair_scores[i, j]`` is the predicted signed gap for ``(i, j)``.
    """
    r = np.asarray(pair_scores, dtype=np.float64)
    y = np.asarray(targets)
    n = y.size
    if r.shape != (n, n):
        raise ValueError("pair_scores must be n x n")
    i, j = _pairs(n)
    g = np.asarray(grid, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("ranking widths must be >= 0")
    gap = r[i, j][:, None]
    lo, hi = gap - g[None, :], gap + g[None, :]
    up = (y[i] > y[j])[:, None]
    down = (y[i] < y[j])[:, None]
    return ((hi < 0) & up | (lo > 0) & down).astype(np.float64)


def metric_loss_matrix(distances, labels, grid, scale: float = 1.0) -> np.ndarray:
    """Pair losses for intervals ``(d - lam, d + lam)``, divided by ``scale``."""
    d = np.asarray(distances, dtype=np.float64)
    y = np.asarray(labels)
    n = y.size
    if d.shape != (n, n):
        raise ValueError("distances must be n x n")
    i, j = _pairs(n)
    g = np.asarray(grid, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("metric widths must be >= 0")
    mid = d[i, j][:, None]
    same = (y[i] == y[j])[:, None]
    loss = np.where(same, np.maximum(mid - g - 1.0, 0.0), np.maximum(1.0 - (mid + g), 0.0))
    return loss / scale
