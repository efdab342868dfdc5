"""Pure-Python/numpy twins of the compiled kernels in ``_kernels.pyx``.

Same signatures and semantics; used when the extension is not built.
"""

from __future__ import annotations

import numpy as np

BISECT_TOL = 1e-10
MAX_ITER = 200
_CHUNK = 1 << 21


def betting_fractions(losses: np.ndarray, delta: float) -> np.ndarray:
    """Predictable bet sizes for a single loss sequence."""
    return _fractions_rows(np.asarray(losses, dtype=np.float64)[None, :], delta)[0]


def _fractions_rows(x: np.ndarray, delta: float) -> np.ndarray:
    n = x.shape[1]
    steps = np.arange(2.0, n + 2.0)
    mu = (0.5 + np.cumsum(x, axis=1)) / steps
    var = (0.25 + np.cumsum((x - mu) ** 2, axis=1)) / steps
    var_prev = np.empty_like(var)
    var_prev[:, 0] = 0.25
    var_prev[:, 1:] = var[:, :-1]
    return np.minimum(1.0, np.sqrt(2.0 * np.log(1.0 / delta) / (n * var_prev)))


def _exceeds(x: np.ndarray, nu: np.ndarray, r: np.ndarray, log_threshold: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_k = np.cumsum(np.log1p(-nu * (x - r[:, None])), axis=1)
    return log_k.max(axis=1) > log_threshold


def _wsr_block(x: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray]:
    reps = x.shape[0]
    nu = _fractions_rows(x, delta)
    log_threshold = np.log(1.0 / delta)
    at_one = _exceeds(x, nu, np.ones(reps), log_threshold)
    at_zero = _exceeds(x, nu, np.zeros(reps), log_threshold)
    lo = np.zeros(reps)
    hi = np.ones(reps)
    active = at_one & ~at_zero
    hi[at_zero] = 0.0
    it = 0
    while active.any() and it < MAX_ITER:
        idx = np.flatnonzero(active)
        mid = 0.5 * (lo[idx] + hi[idx])
        up = _exceeds(x[idx], nu[idx], mid, log_threshold)
        hi[idx[up]] = mid[up]
        lo[idx[~up]] = mid[~up]
        active[idx] = hi[idx] - lo[idx] > BISECT_TOL
        it += 1
    return hi, ~at_one


def wsr_ucb_rows(losses: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Betting-capital UCB for every row of a (reps, n) array."""
    x = np.ascontiguousarray(losses, dtype=np.float64)
    reps, n = x.shape
    out = np.empty(reps)
    flags = np.zeros(reps, dtype=bool)
    step = max(1, _CHUNK // max(n, 1))
    for start in range(0, reps, step):
        vals, clamped = _wsr_block(x[start:start + step], delta)
        out[start:start + step] = vals
        flags[start:start + step] = clamped
    return out, flags


def label_components_8(mask) -> tuple[np.ndarray, int]:
    """Label 8-connected components; labels ordered by first row-major pixel."""
    m = np.asarray(mask, dtype=bool)
    rows, cols = m.shape
    parent = list(range(rows * cols))

    def find(a: int) -> int:
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(a: int, b: int) -> None:
        a, b = find(a), find(b)
        if a < b:
            parent[b] = a
        elif b < a:
            parent[a] = b

    for i in range(rows):
        for j in range(cols):
            if not m[i, j]:
                continue
            idx = i * cols + j
            if j > 0 and m[i, j - 1]:
                union(idx, idx - 1)
            if i > 0:
                if j > 0 and m[i - 1, j - 1]:
                    union(idx, idx - cols - 1)
                if m[i - 1, j]:
                    union(idx, idx - cols)
                if j + 1 < cols and m[i - 1, j + 1]:
                    union(idx, idx - cols + 1)

    labels = np.zeros((rows, cols), dtype=np.int64)
    root_label: dict[int, int] = {}
    for i in range(rows):
        for j in range(cols):
            if m[i, j]:
                root = find(i * cols + j)
                labels[i, j] = root_label.setdefault(root, len(root_label) + 1)
    return labels, len(root_label)
