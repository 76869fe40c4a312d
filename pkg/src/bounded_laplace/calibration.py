"""Noise-scale calibration for the bounded mechanism.

Restricting the Laplace density to a bounded interval makes the normalizing
constant depend on the query answer, so the scale that is private for the
unbounded mechanism generally is not private here.  The minimal private
scale is the unique fixed point of an update map on ``[b0, f(b0)]``; this
module finds it by bisection and also answers the inverse question (the
epsilon achieved by a given scale).

Everything here is pure and stateless; independent calibrations may run
concurrently.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import CalibrationInfeasibleError, ConvergenceError
from .mechanism import OutputDomain, PrivacyBudget, _require_scale, normalizer_ratio

__all__ = [
    "CalibrationReport",
    "SweepCell",
    "baseline_scale",
    "fixed_point_operator",
    "calibrate",
    "achieved_epsilon",
    "epsilon_ratio_grid",
    "default_sweep_grid",
]


@dataclass(frozen=True)
class CalibrationReport:
    """Result of a calibration run.

    ``b0`` is the unbounded-mechanism scale, ``[b0, f_b0]`` the search
    bracket, ``b_star`` the fixed point, ``residual`` the final
    ``|f(b_star) - b_star|`` and ``effective_epsilon`` the budget actually
    spent by the underlying Laplace distribution
    (``epsilon - log(normalizer_ratio(b_star))``).  For delta > 0 the
    effective epsilon is a diagnostic, not a standalone privacy claim.
    """

    b0: float
    f_b0: float
    b_star: float
    residual: float
    iterations: int
    effective_epsilon: float

    def to_dict(self) -> dict:
        return asdict(self)


def baseline_scale(domain, budget) -> float:
    """Scale making the unbounded mechanism private: sensitivity / (eps - log(1 - delta)).

    The budget's own validation guarantees the denominator is positive
    (epsilon and delta are not both zero, delta < 1).
    """
    return domain.sensitivity / (budget.epsilon - math.log1p(-budget.delta))


def _log_ratio_extended(domain, b):
    """log(normalizer_ratio) with extended-precision intermediates.

    Near the fixed point the operator divides by ``epsilon - log(ratio)``,
    a small difference whose double-precision rounding would put a ~1e-12
    floor under the achievable residual when the fixed point is far above
    the domain width; 80-bit intermediates push that floor to the scale's
    own ulp.  Exactly zero when the sensitivity spans the domain.
    """
    if domain.sensitivity == domain.width:
        return np.longdouble(0.0)
    lower = np.longdouble(domain.lower)
    upper = np.longdouble(domain.upper)
    scale = np.longdouble(b)
    shifted = min(lower + np.longdouble(domain.sensitivity), upper)
    c_shifted = -0.5 * (np.expm1(-(shifted - lower) / scale)
                        + np.expm1(-(upper - shifted) / scale))
    c_lower = -0.5 * np.expm1(-(upper - lower) / scale)
    return np.log(c_shifted / c_lower)


def fixed_point_operator(domain, budget, b) -> float:
    """Update map whose unique fixed point is the minimal private scale.

    Nonincreasing in b, and at least ``b0`` when evaluated at ``b0``.  The
    denominator is positive everywhere at or above ``b0``; the guard below
    covers smaller scales, where the update can be undefined.
    """
    b = _require_scale(b)
    log_ratio = _log_ratio_extended(domain, b)
    if log_ratio == 0.0:
        # bitwise-identical to baseline_scale when the ratio term vanishes
        return domain.sensitivity / (budget.epsilon - math.log1p(-budget.delta))
    gap = (
        np.longdouble(budget.epsilon)
        - log_ratio
        - np.log1p(np.longdouble(-budget.delta))
    )
    if gap <= 0.0:
        raise CalibrationInfeasibleError(
            f"fixed-point update undefined at scale {b}: exponent budget "
            f"{float(gap)} <= 0"
        )
    return float(np.longdouble(domain.sensitivity) / gap)


def calibrate(domain, budget, tolerance: float = 1e-12, max_iterations: int = 200):
    """Find the minimal private scale by bisecting ``f(b) - b`` on ``[b0, f(b0)]``.

    Bisection keeps halving until the bracket cannot shrink in double
    precision (or ``max_iterations`` is hit), so the reported residual is
    typically far below ``tolerance``; ``tolerance`` is the acceptance
    threshold on ``|f(b_star) - b_star|`` below which the result counts as
    converged.

    Raises:
        ConvergenceError: if the residual still exceeds ``tolerance`` when
            iteration stops; carries the last bracket.
    """
    if not tolerance > 0.0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    if max_iterations < 1:
        raise ValueError(f"max_iterations must be >= 1, got {max_iterations}")
    b0 = baseline_scale(domain, budget)
    # f(b0) >= b0 mathematically; clamp sub-ulp rounding dust so the
    # reported bracket is well ordered
    f_b0 = max(fixed_point_operator(domain, budget, b0), b0)
    lo, hi = b0, f_b0
    if hi - lo <= np.spacing(b0) and abs(f_b0 - b0) <= tolerance:
        # Sensitivity equals the width up to rounding: b0 is already the fixed point.
        return CalibrationReport(
            b0=b0,
            f_b0=f_b0,
            b_star=b0,
            residual=abs(f_b0 - b0),
            iterations=0,
            effective_epsilon=budget.epsilon - math.log(normalizer_ratio(domain, b0)),
        )
    g_lo = f_b0 - lo
    g_hi = fixed_point_operator(domain, budget, hi) - hi
    iterations = 0
    while iterations < max_iterations:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        g_mid = fixed_point_operator(domain, budget, mid) - mid
        if g_mid >= 0.0:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
        iterations += 1
        if g_mid == 0.0:
            break
    b_star, residual = (lo, abs(g_lo)) if abs(g_lo) <= abs(g_hi) else (hi, abs(g_hi))
    if residual > tolerance:
        raise ConvergenceError(
            f"bisection stopped after {iterations} iterations with residual "
            f"{residual:.3e} > tolerance {tolerance:.3e}; last bracket [{lo}, {hi}]",
            bracket=(lo, hi),
            residual=residual,
            iterations=iterations,
        )
    return CalibrationReport(
        b0=b0,
        f_b0=f_b0,
        b_star=b_star,
        residual=residual,
        iterations=iterations,
        effective_epsilon=budget.epsilon - math.log(normalizer_ratio(domain, b_star)),
    )


def achieved_epsilon(domain, b, delta: float = 0.0) -> float:
    """Smallest epsilon for which the scale b is private at the given delta."""
    b = _require_scale(b)
    if not 0.0 <= float(delta) < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    return (
        domain.sensitivity / b
        + math.log(normalizer_ratio(domain, b))
        + math.log1p(-float(delta))
    )


@dataclass(frozen=True)
class SweepCell:
    """One (sensitivity, epsilon) cell of a budget-inflation sweep.

    ``ratio`` is ``epsilon / effective_epsilon``; NaN with ``error`` set if
    the cell failed to calibrate.
    """

    sensitivity: float
    epsilon: float
    b_star: float
    effective_epsilon: float
    ratio: float
    error: str | None = None


def default_sweep_grid():
    """Default sweep axes: 50 log-spaced sensitivities in [1e-3, 1] and
    50 log-spaced epsilons in [1e-2, 10]."""
    return np.logspace(-3.0, 0.0, 50), np.logspace(-2.0, 1.0, 50)


def epsilon_ratio_grid(domain_width, sensitivities, epsilons,
                       tolerance: float = 1e-12, max_iterations: int = 200):
    """Calibrate every (sensitivity, epsilon) cell on [0, width] with delta = 0.

    Returns cells in the given axis order (sensitivity-major).  A failing
    cell is recorded with NaN values and its error message instead of
    aborting the sweep.
    """
    width = _finite_width(domain_width)
    cells = []
    for dq in sensitivities:
        for eps in epsilons:
            try:
                domain = OutputDomain(0.0, width, float(dq))
                report = calibrate(domain, PrivacyBudget(float(eps), 0.0),
                                   tolerance, max_iterations)
                cells.append(SweepCell(
                    sensitivity=float(dq),
                    epsilon=float(eps),
                    b_star=report.b_star,
                    effective_epsilon=report.effective_epsilon,
                    ratio=float(eps) / report.effective_epsilon,
                ))
            except (ValueError, ArithmeticError, ConvergenceError) as exc:
                cells.append(SweepCell(
                    sensitivity=float(dq),
                    epsilon=float(eps),
                    b_star=math.nan,
                    effective_epsilon=math.nan,
                    ratio=math.nan,
                    error=str(exc),
                ))
    return cells


def _finite_width(width):
    w = float(width)
    if not (math.isfinite(w) and w > 0.0):
        raise ValueError(f"domain width must be finite and positive, got {width!r}")
    return w
