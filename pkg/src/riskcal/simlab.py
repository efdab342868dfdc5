"""Monte Carlo checks: bound coverage/tightness and end-to-end calibration validity.

Randomness comes from numpy's PCG64. Replicate ``i`` of an experiment seeded
with ``seed`` draws from its own generator seeded ``seed + i``, so results do
not depend on chunking or evaluation order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from riskcal import bounds as B
from riskcal.bounds import BoundError, BoundSpec, ucb_rows
from riskcal.calibration import CalibrationWarning, LossMatrix, calibrate_rcps
from riskcal.setfns.classification import class_varying_loss_matrix

FAMILIES = ("bernoulli", "beta", "gamma", "squared-t", "lognormal")
BOUNDED_FAMILIES = ("bernoulli", "beta")
DEFAULT_NS = tuple(int(math.floor(10**r)) for r in (2, 2.5, 3, 3.5, 4))
CHUNK_ELEMENTS = 1 << 22


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class DistSpec:
    """A loss distribution with a known mean.

    ``params`` by family: bernoulli ``mu``; beta ``a, mu`` (b = a(1/mu - 1));
    gamma ``a`` (scaled to mean 1); squared-t ``v`` (scaled to mean 1, v > 2);
    lognormal ``mu, sigma`` (used as given).
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SimulationError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        need = {
            "bernoulli": {"mu"},
            "beta": {"a", "mu"},
            "gamma": {"a"},
            "squared-t": {"v"},
            "lognormal": {"mu", "sigma"},
        }[self.family]
        if set(self.params) != need:
            raise SimulationError(f"{self.family} takes parameters {sorted(need)}, got {sorted(self.params)}")
        p = {k: float(v) for k, v in self.params.items()}
        object.__setattr__(self, "params", p)
        if self.family in BOUNDED_FAMILIES and not 0.0 < p["mu"] < 1.0:
            raise SimulationError("mu must lie in (0, 1)")
        if self.family == "beta" and not p["a"] > 0:
            raise SimulationError("beta needs a > 0")
        if self.family == "gamma" and not p["a"] > 0:
            raise SimulationError("gamma needs a > 0")
        if self.family == "squared-t" and not p["v"] > 2:
            raise SimulationError("squared-t needs v > 2 for a finite mean")
        if self.family == "lognormal" and not p["sigma"] > 0:
            raise SimulationError("lognormal needs sigma > 0")

    @property
    def bounded(self) -> bool:
        return self.family in BOUNDED_FAMILIES

    @property
    def target_mean(self) -> float:
        p = self.params
        if self.family in BOUNDED_FAMILIES:
            return p["mu"]
        if self.family == "lognormal":
            return math.exp(p["mu"] + p["sigma"] ** 2 / 2)
        return 1.0

    def beta_b(self) -> float:
        return self.params["a"] * (1.0 / self.params["mu"] - 1.0)

    def label(self) -> str:
        return ";".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))


def _draw(spec: DistSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    p = spec.params
    f = spec.family
    if f == "bernoulli":
        return (rng.random(n) < p["mu"]).astype(np.float64)
    if f == "beta":
        return rng.beta(p["a"], spec.beta_b(), n)
    if f == "gamma":
        # numpy's sampler handles shape < 1 (boosted Marsaglia-Tsang)
        return rng.standard_gamma(p["a"], n) / p["a"]
    if f == "squared-t":
        v = p["v"]
        z = rng.standard_normal(n)
        chi = rng.chisquare(v, n)
        return z * z / (chi / v) * ((v - 2.0) / v)
    return rng.lognormal(p["mu"], p["sigma"], n)


def sample_dist(spec: DistSpec, n: int, seed: int) -> np.ndarray:
    """``n`` losses from ``spec``; deterministic in ``seed``."""
    if n < 1:
        raise SimulationError("n must be >= 1")
    return _draw(spec, n, np.random.default_rng(seed))


def sample_replicates(spec: DistSpec, n: int, reps: int, seed: int, start: int = 0) -> np.ndarray:
    """(reps, n) array; row ``i`` is ``sample_dist(spec, n, seed + start + i)``."""
    out = np.empty((reps, n))
    for i in range(reps):
        out[i] = sample_dist(spec, n, seed + start + i)
    return out


@dataclass(frozen=True)
class SimResult:
    dist: DistSpec
    bound: str
    n: int
    delta: float
    reps: int
    coverage: float
    median_gap: float
    mean_relative_gap: float
    seed: int

    CSV_COLUMNS = ("family", "params", "mu", "n", "delta", "bound", "reps", "coverage", "median_gap", "mean_relative_gap", "seed")

    def row(self) -> list:
        return [
            self.dist.family,
            self.dist.label(),
            repr(self.dist.target_mean),
            self.n,
            repr(self.delta),
            self.bound,
            self.reps,
            repr(self.coverage),
            repr(self.median_gap),
            repr(self.mean_relative_gap),
            self.seed,
        ]


def check_compatible(spec: DistSpec, kind: str) -> None:
    if kind in B.BOUNDED_KINDS and not spec.bounded:
        raise SimulationError(f"the {kind} bound needs losses in [0, 1]; {spec.family} is unbounded")
    if kind == B.BINOMIAL_EXACT and spec.family != "bernoulli":
        raise SimulationError("binomial-exact needs binary losses (bernoulli family)")


def bound_eval_experiment(
    spec: DistSpec,
    n: int,
    delta: float,
    bounds,
    reps: int,
    seed: int,
    cv: float | None = None,
) -> list[SimResult]:
    """Coverage and gap of each bound over ``reps`` replicates of size ``n``.

    Every bound sees the same replicates. The true mean is the analytic
    ``spec.target_mean``. ``cv`` is passed to the Pinelis-Utev bound; without
    it the bound estimates the coefficient of variation per replicate.
    """
    if reps < 1:
        raise SimulationError("reps must be >= 1")
    kinds = [b.kind if isinstance(b, BoundSpec) else b for b in bounds]
    for k in kinds:
        check_compatible(spec, k)
    specs = [BoundSpec(k, delta, cv if k == B.PINELIS_UTEV else None) for k in kinds]
    values = {k: np.empty(reps) for k in kinds}
    step = max(1, CHUNK_ELEMENTS // n)
    for start in range(0, reps, step):
        m = min(step, reps - start)
        x = sample_replicates(spec, n, m, seed, start)
        for k, s in zip(kinds, specs):
            values[k][start:start + m] = ucb_rows(x, s)[0]
    mu = spec.target_mean
    out = []
    for k in kinds:
        v = values[k]
        gaps = np.sort(v - mu)
        out.append(
            SimResult(
                dist=spec,
                bound=k,
                n=n,
                delta=delta,
                reps=reps,
                coverage=float(np.mean(v >= mu)),
                median_gap=float(np.median(gaps)),
                mean_relative_gap=float(np.mean(gaps / mu)),
                seed=seed,
            )
        )
    return out


class ClassVaryingTask:
    """Synthetic classification task whose risk curve is known exactly.

    Inputs are ``n_prototypes`` points drawn uniformly; each carries a fixed
    class distribution that the predictor knows exactly. Missing class ``y``
    costs ``weights[y] ~ Unif(0, 1)``. Sets are ``{y : p(y|x) > -lam}`` over
    ``grid`` in [-1, 0], so the risk at ``lam = 0`` is zero.
    """

    def __init__(self, n_classes: int = 10, n_prototypes: int = 200, concentration: float = 0.5,
                 grid_size: int = 201, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.probs = rng.dirichlet(np.full(n_classes, concentration), size=n_prototypes)
        self.weights = rng.random(n_classes)
        self.grid = np.linspace(-1.0, 0.0, grid_size)
        self._cum = self.probs.cumsum(axis=1)

    def risk(self, lam) -> np.ndarray:
        lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
        missed = self.probs[:, :, None] <= -lam[None, None, :]
        per_x = (self.probs[:, :, None] * self.weights[None, :, None] * missed).sum(axis=1)
        return per_x.mean(axis=0)

    def sample(self, n: int, rng: np.random.Generator) -> LossMatrix:
        x = rng.integers(0, self.probs.shape[0], n)
        u = rng.random(n)
        y = (u[:, None] > self._cum[x]).sum(axis=1)
        y = np.minimum(y, self.probs.shape[1] - 1)
        return LossMatrix(class_varying_loss_matrix(self.probs[x], y, self.grid, self.weights), self.grid)


@dataclass
class RCPSResult:
    trials: int
    violations: int
    saturated: int
    violation_rate: float
    lambda_hats: np.ndarray
    risks: np.ndarray

    def max_risk_when_valid(self, alpha: float) -> float:
        ok = self.risks <= alpha
        return float(self.risks[ok].max()) if ok.any() else float("nan")


def rcps_validity_experiment(task, bound, alpha: float, delta: float, trials: int, seed: int,
                             n: int = 2000) -> RCPSResult:
    """Calibrate on ``trials`` fresh samples; count how often the exact risk at lambda-hat exceeds ``alpha``.

    Trial ``t`` samples with seed ``seed + t``.
    """
    if trials < 1:
        raise SimulationError("trials must be >= 1")
    spec = bound if isinstance(bound, BoundSpec) else BoundSpec(bound, delta)
    true_risk = task.risk(task.grid)
    lam_hats = np.empty(trials)
    risks = np.empty(trials)
    saturated = 0
    for t in range(trials):
        m = task.sample(n, np.random.default_rng(seed + t))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CalibrationWarning)
            rep = calibrate_rcps(m, spec, alpha, validate=False)
        saturated += rep.saturated
        lam_hats[t] = rep.lambda_hat
        risks[t] = true_risk[rep.index]
    violations = int(np.sum(risks > alpha))
    return RCPSResult(trials, violations, saturated, violations / trials, lam_hats, risks)


__all__ = [
    "BoundError",
    "ClassVaryingTask",
    "DistSpec",
    "DEFAULT_NS",
    "RCPSResult",
    "SimResult",
    "SimulationError",
    "bound_eval_experiment",
    "check_compatible",
    "rcps_validity_experiment",
    "sample_dist",
    "sample_replicates",
]
