"""Score-threshold sets for single- and multi-label classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_SUM_TOL = 1e-6


@dataclass(frozen=True)
class LabelDist:
    """Estimated class scores for one input, with optional per-class losses."""

    probs: np.ndarray
    weights: np.ndarray | None = None
    probability: bool = True

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a non-empty 1-D array")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("probs must be finite and nonnegative")
        if self.probability and p.sum() > 1.0 + PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {p.sum()} > 1")
        object.__setattr__(self, "probs", p)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != p.shape or not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValueError("weights must be finite, nonnegative and match probs")
            object.__setattr__(self, "weights", w)


def _probs(dist) -> np.ndarray:
    return dist.probs if isinstance(dist, LabelDist) else np.asarray(dist, dtype=np.float64)


def threshold_set(dist, lam: float) -> frozenset[int]:
    """Labels whose score exceeds ``-lam``."""
    p = _probs(dist)
    return frozenset(int(i) for i in np.flatnonzero(p > -lam))


def class_varying_loss(y: int, s, weights) -> float:
    w = np.asarray(weights, dtype=np.float64)
    if not 0 <= y < w.size:
        raise ValueError(f"label {y} out of range for {w.size} classes")
    return 0.0 if y in s else float(w[y])


def multilabel_fnr_loss(y, s) -> float:
    """Fraction of the true labels missing from ``s``."""
    y = set(y)
    if not y:
        raise ValueError("the true label set must be non-empty")
    return 1.0 - len(y & set(s)) / len(y)


def class_varying_loss_matrix(probs, labels, grid, weights=None) -> np.ndarray:
    """Losses of the threshold family for every (example, grid value)."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if p.ndim != 2 or y.shape != (p.shape[0],):
        raise ValueError("probs must be n x K and labels length n")
    if y.min(initial=0) < 0 or y.max(initial=0) >= p.shape[1]:
        raise ValueError("a label is out of range for the score columns")
    w = np.ones(p.shape[1]) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (p.shape[1],):
        raise ValueError("need one weight per class")
    g = np.asarray(grid, dtype=np.float64)
    p_true = p[np.arange(p.shape[0]), y]
    missed = p_true[:, None] <= -g[None, :]
    return np.where(missed, w[y][:, None], 0.0)


def multilabel_loss_matrix(scores, label_sets, grid) -> np.ndarray:
    """False-negative rate of the threshold family for every (example, grid value)."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2 or len(label_sets) != s.shape[0]:
        raise ValueError("scores must be n x K with one label set per row")
    g = np.asarray(grid, dtype=np.float64)
    out = np.empty((s.shape[0], g.size))
    for i, ys in enumerate(label_sets):
        ys = np.fromiter(sorted(set(ys)), dtype=np.int64)
        if ys.size == 0:
            raise ValueError(f"row {i} has an empty true label set")
        if ys.min() < 0 or ys.max() >= s.shape[1]:
            raise ValueError(f"row {i} has a label out of range")
        covered = (s[i, ys][:, None] > -g[None, :]).sum(axis=0)
        out[i] = 1.0 - covered / ys.size
    return out
