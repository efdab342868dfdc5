"""Distogram prediction sets: per residue pair, the distance bins with enough mass."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-6


@dataclass(frozen=True)
class Distogram:
    bins: np.ndarray  # ascending bin-centre distances
    mass: np.ndarray  # (L, L, K), sums to 1 over the last axis

    def __post_init__(self):
        b = np.asarray(self.bins, dtype=np.float64)
        m = np.asarray(self.mass, dtype=np.float64)
        if b.ndim != 1 or b.size == 0 or np.any(np.diff(b) <= 0):
            raise ValueError("bins must be a non-empty ascending 1-D array")
        if m.ndim != 3 or m.shape[0] != m.shape[1] or m.shape[2] != b.size:
            raise ValueError("mass must have shape (L, L, len(bins))")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValueError("mass must be finite and nonnegative")
        if np.any(np.abs(m.sum(axis=2) - 1.0) > NORM_TOL):
            raise ValueError("each cell's mass must sum to 1")
        object.__setattr__(self, "bins", b)
        object.__setattr__(self, "mass", m)


def distogram_set(d: Distogram, lam: float) -> np.ndarray:
    """Boolean (L, L, K) array: bin ``k`` is kept for cell ``(i, j)`` when its mass is at least ``-lam``."""
    return d.mass >= -lam


def distogram_loss(y, sets, bins) -> float:
    """Mean over cells of the distance from ``y[i, j]`` to the nearest kept bin."""
    y = np.asarray(y, dtype=np.float64)
    sets = np.asarray(sets, dtype=bool)
    bins = np.asarray(bins, dtype=np.float64)
    if sets.shape != y.shape + bins.shape:
        raise ValueError("sets must have shape y.shape + (len(bins),)")
    if not sets.any(axis=-1).all():
        i, j = np.argwhere(~sets.any(axis=-1))[0]
        raise ValueError(f"cell ({i}, {j}) has an empty bin set; the loss is undefined")
    gaps = np.where(sets, np.abs(y[..., None] - bins), np.inf)
    return float(gaps.min(axis=-1).mean())


def distogram_loss_matrix(distograms, truths, grid) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    if len(distograms) != len(truths):
        raise ValueError("need one true distance matrix per distogram")
    out = np.empty((len(truths), g.size))
    for i, (d, y) in enumerate(zip(distograms, truths)):
        y = np.asarray(y, dtype=np.float64)
        if y.shape != d.mass.shape[:2]:
            raise ValueError(f"example {i}: truth shape {y.shape} does not match the distogram")
        for j, lam in enumerate(g):
            try:
                out[i, j] = distogram_loss(y, distogram_set(d, lam), d.bins)
            except ValueError as exc:
                raise ValueError(f"example {i}, lambda={lam}: {exc}; restrict the grid to larger lambda") from None
    return out
