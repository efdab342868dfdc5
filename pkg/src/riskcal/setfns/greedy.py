"""Greedy risk-density sets and a brute-force check of their optimality.

A risk density ``rho(y, T)`` scores how much loss label ``y`` still carries
given the current set ``T``. The greedy procedure lowers a threshold ``zeta``
from an upper bound ``B`` down to ``-lam`` in steps of ``dzeta``, adding every
label whose density exceeds the current threshold.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

DEFAULT_STEPS = 10_000
BRUTE_FORCE_LIMIT = 8
_REL_TOL = 1e-12


class RiskDensity:
    """Callable ``rho(y, current_set)`` over labels ``0..n_labels-1`` with bound ``upper``."""

    simple = False

    def __init__(self, fn, n_labels: int, upper: float):
        if not (upper > 0 and math.isfinite(upper)):
            raise ValueError("upper must be a positive finite bound on the density")
        self.fn = fn
        self.n_labels = int(n_labels)
        self.upper = float(upper)

    def __call__(self, y: int, current) -> float:
        v = float(self.fn(y, current))
        if v < 0 or math.isnan(v):
            raise ValueError(f"negative risk density {v} for label {y}")
        return v


class SimpleRiskDensity(RiskDensity):
    """Density for losses ``L_y * 1{y not in S}``: ``L_y * p(y)``, independent of the set."""

    simple = True

    def __init__(self, probs, weights=None):
        p = np.asarray(probs, dtype=np.float64)
        w = np.ones_like(p) if weights is None else np.asarray(weights, dtype=np.float64)
        if p.ndim != 1 or w.shape != p.shape:
            raise ValueError("probs and weights must be 1-D of equal length")
        if np.any(p < 0) or np.any(w < 0) or not np.all(np.isfinite(p * w)):
            raise ValueError("negative risk density")
        self.density = p * w
        # the bounded-loss choice of B: p(y) <= 1, so L_y bounds the density
        upper = float(w.max()) if w.max() > 0 else 1.0
        super().__init__(lambda y, current: 0.0 if y in current else self.density[y], p.size, upper)


def greedy_sets(rho: RiskDensity, lam: float, dzeta: float | None = None) -> frozenset[int]:
    """Greedy set at parameter ``lam <= 0``.

    For a :class:`SimpleRiskDensity` the iteration collapses to the exact
    threshold family ``{y : rho(y, {}) >= -lam, rho > 0}``, which is what is
    returned. Otherwise the iterative procedure runs with
    ``dzeta`` defaulting to ``B / 10**4``.
    """
    if lam > 0:
        raise ValueError("lam must be <= 0")
    if dzeta is not None and not dzeta > 0:
        raise ValueError("dzeta must be positive")
    if rho.simple:
        d = rho.density
        return frozenset(int(i) for i in np.flatnonzero((d >= -lam) & (d > 0)))
    return greedy_sets_iterative(rho, lam, dzeta)


def greedy_sets_iterative(rho: RiskDensity, lam: float, dzeta: float | None = None) -> frozenset[int]:
    """The step-by-step procedure, for any density (including simple ones)."""
    if dzeta is None:
        dzeta = rho.upper / DEFAULT_STEPS
    if not dzeta > 0:
        raise ValueError("dzeta must be positive")
    current: set[int] = set()
    k = 0
    zeta = rho.upper
    while zeta > -lam:
        k += 1
        zeta = rho.upper - k * dzeta  # no drift from repeated subtraction
        frozen = frozenset(current)
        current |= {y for y in range(rho.n_labels) if y not in frozen and rho(y, frozen) > zeta}
    return frozenset(current)


def _expected_costs(cond_probs: np.ndarray, weights=None, ell=None) -> np.ndarray:
    """c[x, z] = E[ell(Y, z) | X = x]."""
    k = cond_probs.shape[1]
    if ell is None:
        w = np.ones(k) if weights is None else np.asarray(weights, dtype=np.float64)
        ell = np.diag(w)
    ell = np.asarray(ell, dtype=np.float64)
    if ell.shape != (k, k) or np.any(ell < 0):
        raise ValueError("ell must be a nonnegative |Y| x |Y| matrix")
    return cond_probs @ ell


def optimal_sets(cond_probs, lam: float, weights=None, ell=None) -> list[frozenset[int]]:
    """Threshold sets ``{z : E[ell(Y, z) | x] >= -lam, > 0}`` for each x."""
    c = _expected_costs(np.asarray(cond_probs, dtype=np.float64), weights, ell)
    return [frozenset(int(z) for z in np.flatnonzero((row >= -lam) & (row > 0))) for row in c]


def _risk_and_size(sets, c, px) -> tuple[float, float]:
    risk = size = 0.0
    for x, s in enumerate(sets):
        missing = [z for z in range(c.shape[1]) if z not in s]
        risk += px[x] * c[x, missing].sum()
        size += px[x] * len(s)
    return risk, size


def _pareto(points):
    """Keep (size, risk) points not dominated by a smaller-or-equal size with lower-or-equal risk."""
    points = sorted(points)
    kept = []
    best = math.inf
    for size, risk in points:
        if risk < best:
            kept.append((size, risk))
            best = risk
    return kept


def greedy_optimality_check(cond_probs, px, lam: float, weights=None, ell=None, competitor=None) -> bool:
    """True iff no set map with risk <= R(T_lam) has smaller expected size.

    ``cond_probs[x, y]`` is P(Y=y | X=x) and ``px`` the law of X. With
    ``competitor=None`` every per-x subset choice is considered: each x's
    ``2**|Y|`` subsets are enumerated and combined across x keeping only the
    (size, risk) Pareto front, which cannot discard a counterexample.
    """
    p = np.asarray(cond_probs, dtype=np.float64)
    px = np.asarray(px, dtype=np.float64)
    n_x, n_y = p.shape
    if n_x > BRUTE_FORCE_LIMIT or n_y > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force needs |X|, |Y| <= {BRUTE_FORCE_LIMIT}")
    if px.shape != (n_x,):
        raise ValueError("px must have one entry per x")
    c = _expected_costs(p, weights, ell)
    target = optimal_sets(p, lam, weights, ell)
    risk_t, size_t = _risk_and_size(target, c, px)
    tol = _REL_TOL * max(1.0, c.sum())

    if competitor is not None:
        risk_c, size_c = _risk_and_size(competitor, c, px)
        return not (risk_c <= risk_t + tol and size_c < size_t - tol)

    front = [(0.0, 0.0)]
    for x in range(n_x):
        local = []
        for r in range(n_y + 1):
            for subset in itertools.combinations(range(n_y), r):
                missing = [z for z in range(n_y) if z not in subset]
                local.append((px[x] * r, px[x] * c[x, missing].sum()))
        local = _pareto(local)
        front = _pareto([(s0 + s1, r0 + r1) for s0, r0 in front for s1, r1 in local])
    return not any(risk <= risk_t + tol and size < size_t - tol for size, risk in front)
