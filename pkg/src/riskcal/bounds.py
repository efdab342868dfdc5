"""Upper confidence bounds on the mean of a loss.

Every bound here maps observed per-example losses to a value that is at least
the true mean with probability ``1 - delta``. The tail-bound based ones
(Hoeffding-Bentkus, exact binomial, Pinelis-Utev, U-statistic) are inverted by
bisection on the candidate mean; the betting bound scans a capital process.

Scalar helpers (``ucb_wsr`` etc.) return :class:`UCBValue`. ``ucb_rows`` is the
batched entry point used by calibration and the simulation lab: it takes a
``(reps, n)`` array and returns one bound per row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np
from scipy.special import betaincc, xlogy

from riskcal import kernels

SIMPLE_HOEFFDING = "simple-hoeffding"
HOEFFDING_BENTKUS = "hoeffding-bentkus"
BINOMIAL_EXACT = "binomial-exact"
EMPIRICAL_BERNSTEIN = "empirical-bernstein"
WSR = "wsr"
CLT = "clt"
PINELIS_UTEV = "pinelis-utev"
USTAT_HBM = "ustat-hbm"

BOUND_KINDS = (
    SIMPLE_HOEFFDING,
    HOEFFDING_BENTKUS,
    BINOMIAL_EXACT,
    EMPIRICAL_BERNSTEIN,
    WSR,
    CLT,
    PINELIS_UTEV,
    USTAT_HBM,
)
# bounds that need every loss in [0, 1]
BOUNDED_KINDS = frozenset(
    {SIMPLE_HOEFFDING, HOEFFDING_BENTKUS, BINOMIAL_EXACT, EMPIRICAL_BERNSTEIN, WSR, USTAT_HBM}
)

BISECT_TOL = 1e-10
MAX_ITER = 200
CEIL_GUARD = 1e-9
NU_RANGE = (1e-6, 20.0)
NU_TOL = 1e-8
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class BoundError(ValueError):
    """Invalid input for a confidence bound (domain, range or size)."""


@dataclass(frozen=True)
class BoundSpec:
    """Which bound to use and its parameters.

    ``cv`` is an upper bound on the coefficient of variation and only
    meaningful for ``pinelis-utev``; when absent it is estimated per sample.
    """

    kind: str
    delta: float
    cv: float | None = None

    def __post_init__(self):
        if self.kind not in BOUND_KINDS:
            raise BoundError(f"unknown bound {self.kind!r}; choose from {', '.join(BOUND_KINDS)}")
        _check_delta(self.delta, self.kind)
        if self.cv is not None:
            if self.kind != PINELIS_UTEV:
                raise BoundError("cv only applies to the pinelis-utev bound")
            if not (self.cv >= 0 and math.isfinite(self.cv)):
                raise BoundError(f"cv must be a finite nonnegative number, got {self.cv}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "delta": self.delta, "cv": self.cv}


@dataclass(frozen=True)
class UCBValue:
    value: float
    finite: bool = True
    clamped: bool = False
    approximate: bool = False

    def __float__(self) -> float:
        return self.value


def _check_delta(delta: float, kind: str | None = None) -> None:
    if not (0.0 < delta <= 1.0):
        raise BoundError(f"delta must lie in (0, 1], got {delta}")
    if kind == CLT and delta > 0.5:
        raise BoundError("the CLT bound needs delta <= 1/2 (otherwise the quantile is negative)")


def _as_rows(losses) -> np.ndarray:
    x = np.asarray(losses, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] == 0:
        raise BoundError("losses must be a non-empty 1-D sequence (or 2-D array of rows)")
    if not np.all(np.isfinite(x)):
        raise BoundError("losses must be finite")
    return x


def _check_unit(x: np.ndarray) -> None:
    if x.min() < 0.0 or x.max() > 1.0:
        raise BoundError("this bound requires every loss in [0, 1]; rescale first")


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------


def h1(t: float, r: float) -> float:
    """Bernoulli KL divergence ``t log(t/r) + (1-t) log((1-t)/(1-r))``."""
    if not (0.0 < r < 1.0):
        raise BoundError(f"r must lie in (0, 1), got {r}")
    if not (0.0 <= t < 1.0):
        raise BoundError(f"t must lie in [0, 1), got {t}")
    return float(xlogy(t, t / r) + xlogy(1.0 - t, (1.0 - t) / (1.0 - r)))


def _h1_vec(t: np.ndarray, r: np.ndarray) -> np.ndarray:
    # zero when r <= t: the tail bound is only applied below the mean
    with np.errstate(divide="ignore", invalid="ignore"):
        val = xlogy(t, t / r) + xlogy(1.0 - t, (1.0 - t) / (1.0 - r))
    val = np.where(r <= t, 0.0, val)
    return np.where(r >= 1.0, np.where(t >= 1.0, 0.0, np.inf), val)


def binom_cdf(k: int, n: int, p: float) -> float:
    """``P(Binom(n, p) <= k)`` via the regularized incomplete beta function."""
    if not (0.0 <= p <= 1.0):
        raise BoundError(f"p must lie in [0, 1], got {p}")
    if n < 0 or k < 0 or k > n:
        raise BoundError(f"need 0 <= k <= n, got k={k}, n={n}")
    return float(_binom_cdf_vec(np.asarray(k), n, np.asarray(p, dtype=float)))


def _binom_cdf_vec(k, n, p) -> np.ndarray:
    k = np.asarray(k, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    # P(X <= k) = 1 - I_p(k+1, n-k); betaincc keeps relative accuracy when p is tiny
    b = np.maximum(n - k, 1.0)
    val = betaincc(np.maximum(k, 0.0) + 1.0, b, p)
    val = np.where(k >= n, 1.0, val)
    return np.where(k < 0, 0.0, val)


def _ceil_count(n, t):
    return np.ceil(np.asarray(n, dtype=np.float64) * t - CEIL_GUARD)


def g_hoeffding_bentkus(t, r, n):
    """Hoeffding-Bentkus lower-tail bound on ``P(mean <= t)`` at true mean ``r``."""
    t = np.asarray(t, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    hoeff = np.exp(-np.asarray(n, dtype=np.float64) * _h1_vec(t, r))
    bentkus = math.e * _binom_cdf_vec(_ceil_count(n, t), n, r)
    return np.minimum(hoeff, bentkus)


def g_binomial(t, r, n):
    """Exact binomial lower tail ``P(Binom(n, r) <= ceil(n t))``."""
    return _binom_cdf_vec(_ceil_count(n, t), n, np.asarray(r, dtype=np.float64))


def g_pinelis_utev(t, r, n, cv):
    """Pinelis-Utev lower-tail bound for nonnegative losses with bounded CV."""
    t = np.asarray(t, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    u = t / r
    with np.errstate(divide="ignore", invalid="ignore"):
        shape = 1.0 - u + xlogy(u, u)
    return np.exp(-n / (np.asarray(cv, dtype=np.float64) ** 2 + 1.0) * shape)


def _maurer_exponent(t, r, n, nu):
    gnu = (np.expm1(nu) - nu) / nu
    return 0.5 * n * nu * (t - r / (1.0 + 2.0 * gnu))


def _maurer_log_term(t: np.ndarray, r: np.ndarray, n) -> np.ndarray:
    """``log inf_nu exp{-(n nu/2)(r/(1+2G(nu)) - t)}`` by golden-section search."""
    a = np.full(np.shape(t), NU_RANGE[0])
    b = np.full(np.shape(t), NU_RANGE[1])
    for _ in range(MAX_ITER):
        if np.all(b - a <= NU_TOL):
            break
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc = _maurer_exponent(t, r, n, c)
        fd = _maurer_exponent(t, r, n, d)
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    best = _maurer_exponent(t, r, n, 0.5 * (a + b))
    best = np.minimum(best, _maurer_exponent(t, r, n, np.full(np.shape(t), NU_RANGE[0])))
    return np.minimum(best, _maurer_exponent(t, r, n, np.full(np.shape(t), NU_RANGE[1])))


def g_ustat(t, r, n):
    """Hoeffding-Bentkus-Maurer lower-tail bound for order-2 U-statistics."""
    t = np.asarray(t, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    m = n // 2
    hb = g_hoeffding_bentkus(t, r, m)
    return np.minimum(hb, np.exp(_maurer_log_term(t, r, n)))


def _bisect_sup(feasible, lo: np.ndarray, hi: np.ndarray, rel: bool = False) -> np.ndarray:
    """Shrink ``[lo, hi]`` around the boundary of a feasible set ``{R <= R*}``.

    ``lo`` must be feasible and ``hi`` infeasible; returns the final ``hi``.
    """
    lo = lo.astype(np.float64).copy()
    hi = hi.astype(np.float64).copy()

    def width_ok(idx):
        tol = BISECT_TOL if not rel else np.maximum(BISECT_TOL, 4e-16 * hi[idx])
        return hi[idx] - lo[idx] <= tol

    active = ~width_ok(np.arange(lo.size))
    for _ in range(MAX_ITER):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        mid = 0.5 * (lo[idx] + hi[idx])
        ok = feasible(mid, idx)
        lo[idx[ok]] = mid[ok]
        hi[idx[~ok]] = mid[~ok]
        active[idx] = ~width_ok(idx)
    return hi


# ---------------------------------------------------------------------------
# vectorized inversions (arrays of empirical risks)
# ---------------------------------------------------------------------------


def _invert_unit(g, rhat: np.ndarray, delta: float, start: np.ndarray):
    """Invert a tail bound nonincreasing in R over ``[start, 1]``."""
    values = np.ones_like(rhat)
    clamped = np.zeros(rhat.shape, dtype=bool)
    at_one = g(rhat, np.ones_like(rhat), slice(None)) >= delta
    values[at_one] = 1.0
    clamped[at_one] = True
    todo = np.flatnonzero(~at_one)
    if todo.size:
        sub = rhat[todo]

        def feasible(mid, idx):
            return g(sub[idx], mid, todo[idx]) >= delta

        values[todo] = _bisect_sup(feasible, start[todo], np.ones(todo.size))
    return values, clamped


def hoeffding_bentkus_vec(rhat, n: int, delta: float):
    rhat = np.asarray(rhat, dtype=np.float64)
    return _invert_unit(lambda t, r, _: g_hoeffding_bentkus(t, r, n), rhat, delta, rhat.copy())


def binomial_exact_vec(rhat, n: int, delta: float):
    rhat = np.asarray(rhat, dtype=np.float64)
    counts = n * rhat
    if np.any(np.abs(counts - np.round(counts)) > CEIL_GUARD * max(1, n)):
        raise BoundError("binomial-exact needs binary losses (n * rhat must be an integer)")
    t = np.round(counts) / n
    # feasible set is an interval starting at 0; it contains rhat whenever delta <= 1/2
    return _invert_unit(lambda tt, r, _: g_binomial(tt, r, n), t, delta, np.zeros_like(t))


def ustat_hbm_vec(rhat, n: int, delta: float):
    rhat = np.asarray(rhat, dtype=np.float64)
    return _invert_unit(lambda t, r, _: g_ustat(t, r, n), rhat, delta, rhat.copy())


def pinelis_utev_vec(rhat, n: int, delta: float, cv):
    rhat = np.asarray(rhat, dtype=np.float64)
    cv = np.broadcast_to(np.asarray(cv, dtype=np.float64), rhat.shape)
    values = rhat.copy()
    finite = np.ones(rhat.shape, dtype=bool)
    # the bound tends to exp(-n/(cv^2+1)) as R grows; if that is >= delta nothing is excluded
    infinite = n <= (cv ** 2 + 1.0) * math.log(1.0 / delta)
    values[infinite] = np.inf
    finite[infinite] = False
    # with rhat = 0 and cv known, every R > 0 is rejected
    todo = np.flatnonzero(~infinite & (rhat > 0) & (delta < 1.0))
    if todo.size == 0:
        return values, finite
    t = rhat[todo]
    c = cv[todo]

    def feasible(mid, idx):
        return g_pinelis_utev(t[idx], mid, n, c[idx]) >= delta

    hi = 2.0 * t
    grow = feasible(hi, np.arange(todo.size))
    while grow.any():
        hi[grow] *= 2.0
        grow = feasible(hi, np.arange(todo.size))
    values[todo] = _bisect_sup(feasible, t.copy(), hi, rel=True)
    return values, finite


# ---------------------------------------------------------------------------
# batched entry point
# ---------------------------------------------------------------------------


def _pairs_to_n(pairs: int) -> int:
    n = int(round((1.0 + math.sqrt(1.0 + 8.0 * pairs)) / 2.0))
    if n * (n - 1) // 2 != pairs:
        raise BoundError(
            f"{pairs} pair losses is not n(n-1)/2 for any n; pass the sample size explicitly"
        )
    return n


def ucb_rows(losses, spec: BoundSpec, *, sample_size: int | None = None):
    """Bound every row of a ``(reps, n)`` loss array.

    Returns ``(values, finite, clamped)``. For ``ustat-hbm`` each row holds the
    pairwise losses of one sample; its size is inferred from the pair count
    unless ``sample_size`` is given.
    """
    x = _as_rows(losses)
    reps, n = x.shape
    kind, delta = spec.kind, spec.delta
    _check_delta(delta, kind)
    if kind in BOUNDED_KINDS:
        _check_unit(x)
    finite = np.ones(reps, dtype=bool)
    clamped = np.zeros(reps, dtype=bool)
    rhat = x.mean(axis=1)

    if kind == SIMPLE_HOEFFDING:
        raw = rhat + math.sqrt(math.log(1.0 / delta) / (2.0 * n))
        clamped = raw > 1.0
        values = np.minimum(raw, 1.0)
    elif kind == HOEFFDING_BENTKUS:
        values, clamped = hoeffding_bentkus_vec(rhat, n, delta)
    elif kind == BINOMIAL_EXACT:
        values, clamped = binomial_exact_vec(rhat, n, delta)
    elif kind == EMPIRICAL_BERNSTEIN:
        if n < 2:
            raise BoundError("empirical-bernstein needs at least 2 losses")
        sd = x.std(axis=1, ddof=1)
        log_term = math.log(2.0 / delta)
        raw = rhat + sd * math.sqrt(2.0 * log_term / n) + 7.0 * log_term / (3.0 * (n - 1))
        clamped = raw > 1.0
        values = np.minimum(raw, 1.0)
    elif kind == WSR:
        values, clamped = kernels.wsr_ucb_rows(np.ascontiguousarray(x), delta)
        # the running max over i lets the capital cross 1/delta below the final
        # sample mean; flooring at rhat keeps the bound valid (it only rises)
        values = np.maximum(values, rhat)
    elif kind == CLT:
        if n < 2:
            raise BoundError("the CLT bound needs at least 2 losses")
        z = NormalDist().inv_cdf(1.0 - delta)
        values = rhat + z * x.std(axis=1, ddof=1) / math.sqrt(n)
    elif kind == PINELIS_UTEV:
        if x.min() < 0.0:
            raise BoundError("pinelis-utev needs nonnegative losses")
        if spec.cv is None:
            if n < 2:
                raise BoundError("estimating cv needs at least 2 losses")
            if np.any(rhat == 0.0):
                raise BoundError("cannot estimate cv when the empirical risk is 0; pass cv")
            cv = x.std(axis=1, ddof=1) / rhat
        else:
            cv = spec.cv
        values, finite = pinelis_utev_vec(rhat, n, delta, cv)
    elif kind == USTAT_HBM:
        size = sample_size if sample_size is not None else _pairs_to_n(n)
        if size < 4:
            raise BoundError("ustat-hbm needs a sample of at least 4 points")
        values, clamped = ustat_hbm_vec(rhat, size, delta)
    else:  # pragma: no cover - BoundSpec validates kind
        raise BoundError(kind)
    return np.asarray(values, dtype=np.float64), np.asarray(finite), np.asarray(clamped)


def ucb(losses, spec: BoundSpec, *, sample_size: int | None = None) -> UCBValue:
    """Bound a single loss vector according to ``spec``."""
    x = np.asarray(losses, dtype=np.float64)
    if x.ndim != 1:
        raise BoundError("ucb expects a 1-D loss vector; use ucb_rows for batches")
    values, finite, clamped = ucb_rows(x, spec, sample_size=sample_size)
    approximate = spec.kind == PINELIS_UTEV and spec.cv is None
    return UCBValue(float(values[0]), bool(finite[0]), bool(clamped[0]), approximate)


# ---------------------------------------------------------------------------
# scalar API
# ---------------------------------------------------------------------------


def _check_rhat(rhat: float, n: int) -> None:
    if not (0.0 <= rhat <= 1.0):
        raise BoundError(f"rhat must lie in [0, 1], got {rhat}")
    if n < 1:
        raise BoundError(f"n must be positive, got {n}")


def ucb_simple_hoeffding(losses, delta: float) -> UCBValue:
    return ucb(losses, BoundSpec(SIMPLE_HOEFFDING, delta))


def ucb_hoeffding_bentkus(rhat: float, n: int, delta: float) -> UCBValue:
    _check_rhat(rhat, n)
    _check_delta(delta)
    values, clamped = hoeffding_bentkus_vec(np.array([rhat]), n, delta)
    return UCBValue(float(values[0]), True, bool(clamped[0]))


def ucb_binomial_exact(rhat: float, n: int, delta: float) -> UCBValue:
    _check_rhat(rhat, n)
    _check_delta(delta)
    values, clamped = binomial_exact_vec(np.array([rhat]), n, delta)
    return UCBValue(float(values[0]), True, bool(clamped[0]))


def ucb_empirical_bernstein(losses, delta: float) -> UCBValue:
    return ucb(losses, BoundSpec(EMPIRICAL_BERNSTEIN, delta))


def ucb_wsr(losses, delta: float) -> UCBValue:
    """One-sided betting (hedged capital) bound; order of ``losses`` matters."""
    return ucb(losses, BoundSpec(WSR, delta))


def ucb_clt(losses, delta: float) -> UCBValue:
    return ucb(losses, BoundSpec(CLT, delta))


def ucb_pinelis_utev(losses, delta: float, cv: float | None = None) -> UCBValue:
    return ucb(losses, BoundSpec(PINELIS_UTEV, delta, cv))


def ucb_ustat_hbm(rhat: float, n: int, delta: float) -> UCBValue:
    """Bound for a pairwise (order-2 U-statistic) empirical risk over ``n`` points."""
    _check_rhat(rhat, n)
    _check_delta(delta)
    if n < 4:
        raise BoundError("ustat-hbm needs a sample of at least 4 points")
    values, clamped = ustat_hbm_vec(np.array([rhat]), n, delta)
    return UCBValue(float(values[0]), True, bool(clamped[0]))
