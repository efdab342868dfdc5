"""Pixel-set predictors and the per-object miss rate."""

from __future__ import annotations

import numpy as np

from riskcal import kernels


def _mask(m) -> np.ndarray:
    a = np.asarray(m, dtype=bool)
    if a.ndim != 2 or min(a.shape) < 1:
        raise ValueError("masks must be 2-D with both dimensions >= 1")
    return a


def connected_components_8(mask) -> list[frozenset[tuple[int, int]]]:
    """8-connected components, ordered by their first pixel in row-major order."""
    labels, count = kernels.label_components_8(_mask(mask))
    rows, cols = np.nonzero(labels)
    comps: list[set] = [set() for _ in range(count)]
    for r, c, lab in zip(rows.tolist(), cols.tolist(), labels[rows, cols].tolist()):
        comps[lab - 1].add((r, c))
    return [frozenset(c) for c in comps]


def _as_pixel_mask(s, shape) -> np.ndarray:
    if isinstance(s, np.ndarray) and s.dtype == bool:
        if s.shape != shape:
            raise ValueError("prediction mask shape differs from the ground truth")
        return s
    out = np.zeros(shape, dtype=bool)
    for r, c in s:
        out[r, c] = True
    return out


def segmentation_loss(y, s) -> float:
    """Mean over true objects of the fraction of the object's pixels missed by ``s``.

    ``s`` is a boolean mask or an iterable of ``(row, col)`` pixels.
    """
    y = _mask(y)
    labels, count = kernels.label_components_8(y)
    if count == 0:
        raise ValueError("the ground truth has no object pixels")
    return _object_miss_rate(labels, count, _as_pixel_mask(s, y.shape))


def _object_miss_rate(labels, count, s) -> float:
    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=count + 1)[1:]
    missed = np.bincount(flat, weights=~s.ravel(), minlength=count + 1)[1:]
    return float(np.mean(missed / sizes))


def segmentation_set(scores, lam: float) -> np.ndarray:
    """Boolean mask of pixels scoring at least ``-lam``."""
    sc = np.asarray(scores, dtype=np.float64)
    if sc.ndim != 2:
        raise ValueError("scores must be 2-D")
    if np.any(~np.isfinite(sc)) or sc.min() < 0 or sc.max() > 1:
        raise ValueError("scores must lie in [0, 1]")
    return sc >= -lam


def segmentation_loss_matrix(score_maps, masks, grid) -> np.ndarray:
    """Loss matrix for a stack of score maps and ground-truth masks."""
    g = np.asarray(grid, dtype=np.float64)
    if len(score_maps) != len(masks):
        raise ValueError("need one mask per score map")
    out = np.empty((len(masks), g.size))
    for i, (sc, m) in enumerate(zip(score_maps, masks)):
        m = _mask(m)
        labels, count = kernels.label_components_8(m)
        if count == 0:
            raise ValueError(f"mask {i} has no object pixels")
        sc = np.asarray(sc, dtype=np.float64)
        if sc.shape != m.shape:
            raise ValueError(f"score map {i} and mask {i} differ in shape")
        for j, lam in enumerate(g):
            out[i, j] = _object_miss_rate(labels, count, segmentation_set(sc, lam))
    return out
