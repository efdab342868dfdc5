"""Choosing the set-size parameter from a calibration loss matrix.

A loss matrix holds one row per calibration example and one column per value
of an ascending parameter grid; larger parameters mean larger sets, so every
row must be nonincreasing. ``calibrate_rcps`` bounds each column's risk and
picks the smallest grid value beyond which every bound sits below ``alpha``.
``calibrate_conformal`` is the quantile-of-scores baseline for 0/1 losses.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from riskcal.bounds import BoundSpec, ucb_rows

MONOTONE_TOL = 1e-9
ZERO_LOSS_TOL = 1e-9
GAP_EPS = 1e-12


class MatrixValidationError(ValueError):
    """Loss matrix violates the nesting/monotonicity preconditions."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class CalibrationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LossMatrix:
    losses: np.ndarray
    grid: np.ndarray

    def __post_init__(self):
        losses = np.asarray(self.losses, dtype=np.float64)
        grid = np.asarray(self.grid, dtype=np.float64)
        if losses.ndim == 1:
            losses = losses[None, :]
        object.__setattr__(self, "losses", losses)
        object.__setattr__(self, "grid", grid)

    @property
    def n(self) -> int:
        return self.losses.shape[0]

    @property
    def k(self) -> int:
        return self.losses.shape[1]


@dataclass
class CalibrationReport:
    lambda_hat: float
    ucb_curve: np.ndarray
    risk_curve: np.ndarray
    alpha: float
    delta: float
    bound: BoundSpec
    saturated: bool
    relative_gap: float
    index: int = field(default=-1)

    def to_dict(self) -> dict:
        return {
            "lambda_hat": self.lambda_hat,
            "saturated": self.saturated,
            "alpha": self.alpha,
            "delta": self.delta,
            "bound": self.bound.to_dict(),
            "ucb_curve": [_json_float(v) for v in self.ucb_curve],
            "risk_curve": [_json_float(v) for v in self.risk_curve],
            "relative_gap": _json_float(self.relative_gap),
        }


def _json_float(v: float):
    v = float(v)
    if math.isfinite(v):
        return v
    return "inf" if v > 0 else ("-inf" if v < 0 else "nan")


def validate_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 1 or g.size < 2:
        raise MatrixValidationError("the lambda grid needs at least two values")
    if not np.all(np.isfinite(g)):
        raise MatrixValidationError("the lambda grid must be finite")
    if np.any(np.diff(g) <= 0):
        bad = int(np.flatnonzero(np.diff(g) <= 0)[0]) + 1
        raise MatrixValidationError(f"the lambda grid must be strictly ascending (column {bad})", column=bad)
    return g


def validate_matrix(matrix: LossMatrix) -> LossMatrix:
    """Check shape, finiteness, nonnegativity and row-wise monotonicity.

    Rows may rise by at most ``1e-9`` between neighbouring columns.
    """
    validate_grid(matrix.grid)
    x = matrix.losses
    if x.ndim != 2 or x.shape[0] == 0:
        raise MatrixValidationError("the loss matrix needs at least one row")
    if x.shape[1] != matrix.grid.size:
        raise MatrixValidationError(
            f"loss matrix has {x.shape[1]} columns but the grid has {matrix.grid.size} values"
        )
    bad = ~np.isfinite(x) | (x < 0)
    if bad.any():
        i, j = (int(v) for v in np.argwhere(bad)[0])
        raise MatrixValidationError(f"loss at row {i}, column {j} is {x[i, j]!r}; losses must be finite and >= 0", i, j)
    rises = np.diff(x, axis=1) > MONOTONE_TOL
    if rises.any():
        i, j = (int(v) for v in np.argwhere(rises)[0])
        raise MatrixValidationError(
            f"row {i} increases at column {j + 1} ({x[i, j]!r} -> {x[i, j + 1]!r}); "
            "losses must be nonincreasing in lambda",
            i,
            j + 1,
        )
    return matrix


def empirical_risk_curve(matrix: LossMatrix) -> np.ndarray:
    return matrix.losses.mean(axis=0)


def select_lambda_hat(ucb_curve, grid, alpha: float) -> tuple[float, bool]:
    """Smallest grid value whose bound, and every bound to its right, is below ``alpha``.

    Returns ``(lambda_hat, saturated)``; saturated means even the largest grid
    value fails and the largest value is returned.
    """
    idx, saturated = _select_index(np.asarray(ucb_curve, dtype=np.float64), alpha)
    g = np.asarray(grid, dtype=np.float64)
    if g.size == 0:
        raise ValueError("empty grid")
    return float(g[idx]), saturated


def _select_index(ucb_curve: np.ndarray, alpha: float) -> tuple[int, bool]:
    if ucb_curve.size == 0:
        raise ValueError("empty grid")
    below = ucb_curve < alpha
    if not below[-1]:
        return ucb_curve.size - 1, True
    failing = np.flatnonzero(~below)
    return (int(failing[-1]) + 1 if failing.size else 0), False


def _as_spec(bound, delta) -> BoundSpec:
    if isinstance(bound, BoundSpec):
        if delta is not None and delta != bound.delta:
            return BoundSpec(bound.kind, delta, bound.cv)
        return bound
    if delta is None:
        raise ValueError("delta is required when the bound is given by name")
    return BoundSpec(bound, delta)


def ucb_curve(matrix: LossMatrix, bound: BoundSpec, *, sample_size: int | None = None) -> np.ndarray:
    """Upper confidence bound on the risk of every column (row order kept)."""
    values, _, _ = ucb_rows(np.ascontiguousarray(matrix.losses.T), bound, sample_size=sample_size)
    return values


def calibrate_rcps(
    matrix: LossMatrix,
    bound: BoundSpec | str,
    alpha: float,
    delta: float | None = None,
    *,
    sample_size: int | None = None,
    validate: bool = True,
) -> CalibrationReport:
    """Pick lambda-hat so the chosen set controls risk at ``alpha`` w.p. ``1 - delta``.

    ``sample_size`` is only needed for ``ustat-hbm`` when rows are pairwise
    losses and their count is not ``n(n-1)/2``.
    """
    if not (alpha > 0.0 and math.isfinite(alpha)):
        raise ValueError(f"alpha must be a positive number, got {alpha}")
    spec = _as_spec(bound, delta)
    if validate:
        validate_matrix(matrix)
    risk = empirical_risk_curve(matrix)
    ucb = ucb_curve(matrix, spec, sample_size=sample_size)
    idx, saturated = _select_index(ucb, alpha)
    if saturated:
        warnings.warn(
            f"no grid value brings the {spec.kind} bound below alpha={alpha}; returning the largest",
            CalibrationWarning,
            stacklevel=2,
        )
    rel_gap = (ucb[idx] - risk[idx]) / max(risk[idx], GAP_EPS)
    return CalibrationReport(
        lambda_hat=float(matrix.grid[idx]),
        ucb_curve=ucb,
        risk_curve=risk,
        alpha=alpha,
        delta=spec.delta,
        bound=spec,
        saturated=saturated,
        relative_gap=float(rel_gap),
        index=idx,
    )


def conformal_scores(matrix: LossMatrix) -> np.ndarray:
    """Per row, the smallest grid value with (numerically) zero loss; ``inf`` if none."""
    zero = matrix.losses <= ZERO_LOSS_TOL
    first = np.argmax(zero, axis=1)
    scores = matrix.grid[first].astype(np.float64)
    scores[~zero.any(axis=1)] = np.inf
    return scores


def calibrate_conformal(scores, alpha: float, grid) -> float:
    """Conformal threshold: the ``ceil((n+1)(1-alpha))``-th smallest score.

    The order statistic is capped at ``n``; if it is infinite the grid maximum
    is returned. Both cases emit a :class:`CalibrationWarning`.
    """
    s = np.sort(np.asarray(scores, dtype=np.float64))
    n = s.size
    if n == 0:
        raise ValueError("need at least one score")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    k = math.ceil((n + 1) * (1.0 - alpha) - 1e-9)
    if k > n:
        warnings.warn(
            f"alpha={alpha} is too small for n={n}; using the largest score", CalibrationWarning, stacklevel=2
        )
        k = n
    value = s[max(k, 1) - 1]
    if not math.isfinite(value):
        warnings.warn("the conformal quantile is infinite; returning the grid maximum", CalibrationWarning, stacklevel=2)
        return float(np.max(grid))
    return float(value)
