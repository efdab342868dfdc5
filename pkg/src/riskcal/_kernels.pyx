# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: the betting capital scan and 8-connected labeling.

Pure-Python twins live in ``_kernels_py``; both expose the same functions.
"""

import numpy as np

from libc.math cimport log, sqrt

cdef double BISECT_TOL = 1e-10
cdef int MAX_ITER = 200
cdef double RESCALE = 1e150
cdef double TINY = 1e-150


cdef void _betting_fractions(const double[::1] x, double delta, double[::1] nu) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef double total = 0.0, sq = 0.0, mu, var_prev = 0.25
    cdef double c = 2.0 * log(1.0 / delta) / n
    cdef double v
    for i in range(n):
        v = sqrt(c / var_prev)
        nu[i] = 1.0 if v > 1.0 else v
        total += x[i]
        mu = (0.5 + total) / (i + 2.0)
        sq += (x[i] - mu) * (x[i] - mu)
        var_prev = (0.25 + sq) / (i + 2.0)


cdef bint _capital_exceeds(const double[::1] x, const double[::1] nu, double r,
                           double threshold) noexcept nogil:
    # running product kept as k * TINY**scale so long losing streaks don't underflow
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double k = 1.0
    cdef int scale = 0
    for i in range(n):
        k *= 1.0 - nu[i] * (x[i] - r)
        if k == 0.0:
            return False
        if k < TINY:
            k *= RESCALE
            scale += 1
        elif scale > 0 and k > RESCALE:
            k *= TINY
            scale -= 1
        if scale == 0 and k > threshold:
            return True
    return False


cdef double _wsr_one(const double[::1] x, double delta, double[::1] nu, bint* clamped) noexcept nogil:
    cdef double threshold = 1.0 / delta
    cdef double lo = 0.0, hi = 1.0, mid
    cdef int it = 0
    _betting_fractions(x, delta, nu)
    clamped[0] = False
    if not _capital_exceeds(x, nu, 1.0, threshold):
        clamped[0] = True
        return 1.0
    if _capital_exceeds(x, nu, 0.0, threshold):
        return 0.0
    while hi - lo > BISECT_TOL and it < MAX_ITER:
        mid = 0.5 * (lo + hi)
        if _capital_exceeds(x, nu, mid, threshold):
            hi = mid
        else:
            lo = mid
        it += 1
    return hi


def wsr_ucb_rows(double[:, ::1] losses, double delta):
    """Betting-capital UCB for every row of a (reps, n) array.

    Returns ``(values, clamped)`` arrays of length ``reps``.
    """
    cdef Py_ssize_t reps = losses.shape[0], n = losses.shape[1], r
    out = np.empty(reps, dtype=np.float64)
    flags = np.zeros(reps, dtype=np.bool_)
    cdef double[::1] out_v = out
    cdef unsigned char[::1] flag_v = flags.view(np.uint8)
    cdef double[::1] nu = np.empty(n, dtype=np.float64)
    cdef bint clamped
    with nogil:
        for r in range(reps):
            out_v[r] = _wsr_one(losses[r], delta, nu, &clamped)
            flag_v[r] = clamped
    return out, flags


def betting_fractions(double[::1] losses, double delta):
    """Predictable bet sizes for a single loss sequence."""
    nu = np.empty(losses.shape[0], dtype=np.float64)
    _betting_fractions(losses, delta, nu)
    return nu


cdef Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t a) noexcept nogil:
    cdef Py_ssize_t root = a, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


cdef void _union(Py_ssize_t[::1] parent, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    a = _find(parent, a)
    b = _find(parent, b)
    if a < b:
        parent[b] = a
    elif b < a:
        parent[a] = b


def label_components_8(mask):
    """Label 8-connected components of a 2-D boolean mask.

    Labels run 1..count ordered by each component's first pixel in row-major
    order; background is 0.
    """
    cdef unsigned char[:, ::1] m = np.ascontiguousarray(mask, dtype=np.bool_).view(np.uint8)
    cdef Py_ssize_t rows = m.shape[0], cols = m.shape[1]
    cdef Py_ssize_t i, j, idx, root
    parent_arr = np.arange(rows * cols, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    labels_arr = np.zeros((rows, cols), dtype=np.int64)
    cdef long long[:, ::1] labels = labels_arr
    cdef long long[::1] root_label = np.zeros(rows * cols, dtype=np.int64)
    cdef long long count = 0
    with nogil:
        for i in range(rows):
            for j in range(cols):
                if not m[i, j]:
                    continue
                idx = i * cols + j
                if j > 0 and m[i, j - 1]:
                    _union(parent, idx, idx - 1)
                if i > 0:
                    if j > 0 and m[i - 1, j - 1]:
                        _union(parent, idx, idx - cols - 1)
                    if m[i - 1, j]:
                        _union(parent, idx, idx - cols)
                    if j + 1 < cols and m[i - 1, j + 1]:
                        _union(parent, idx, idx - cols + 1)
        # roots are the minimal index of each tree, so a raster pass numbers
        # components by their first pixel
        for i in range(rows):
            for j in range(cols):
                if not m[i, j]:
                    continue
                root = _find(parent, i * cols + j)
                if root_label[root] == 0:
                    count += 1
                    root_label[root] = count
                labels[i, j] = root_label[root]
    return labels_arr, int(count)
