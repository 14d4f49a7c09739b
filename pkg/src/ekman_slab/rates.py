"""Power-law fits and the acceptance verdicts of a sweep."""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING

import numpy as np
from scipy import stats

from .constants import ENERGY_TOL
from .errors import FitError
from .models import BoundConstant, FitResult, LambdaRegime, SweepReport, SweepRow, Verdict, VerdictStatus

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping, Sequence

    from .models import DampingRate, RegimeSequence

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 3
CONFIDENCE = 0.95

FITTED_QUANTITIES = ("vertical_velocity", "columnarity", "trace_gap", "mean_velocity", "limit_error")
BOUND_CONSTANTS = {
    "vertical_velocity": "vertical_velocity_constant",
    "trace": "trace_constant",
    "degenerate": "degenerate_constant",
}

VERTICAL_VELOCITY_MIN_EXPONENT = 0.4
CONSTANT_MAX_SPREAD = 5.0
LIMIT_ERROR_MIN_REDUCTION = 4.0
DAMPING_RTOL = 5e-3
SCALING_EXPONENT = 1.0
SCALING_EXPONENT_TOL = 0.1
COMMUTATOR_EXPONENT = -1.0
COMMUTATOR_EXPONENT_TOL = 0.15
RESIDUAL_MIN_ORDER = 1.8
RESIDUAL_ORDERS = ("wave_residual_order", "vorticity_residual_order")


def fit_rate(pairs: Iterable[tuple[float, float]]) -> FitResult:
    """Least squares on ``(log scale, log error)``.

    Args:
        pairs: ``(scale, error)`` pairs, at least three, all positive.

    Returns:
        FitResult: Exponent, constant, RMS of the log residuals and the 95% half-width of the exponent.

    Raises:
        FitError: For fewer than three pairs or a non-positive value.
    """
    data = np.asarray(list(pairs), dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < MIN_FIT_POINTS:  # noqa: PLR2004
        msg = f"a rate fit needs at least {MIN_FIT_POINTS} pairs, got {len(data)}"
        raise FitError(msg)
    if np.any(~np.isfinite(data)) or np.any(data <= 0):
        msg = "rate fits need finite positive scales and errors"
        raise FitError(msg)
    x, y = np.log(data[:, 0]), np.log(data[:, 1])
    if np.ptp(x) == 0:
        msg = "rate fits need at least two distinct scales"
        raise FitError(msg)
    fit = stats.linregress(x, y)
    residuals = y - (fit.intercept + fit.slope * x)
    points = len(x)
    half_width = float(stats.t.ppf(0.5 + CONFIDENCE / 2, points - 2) * fit.stderr)
    return FitResult(
        exponent=float(fit.slope),
        constant=math.exp(fit.intercept),
        residual=float(np.sqrt(np.mean(residuals**2))),
        half_width=abs(half_width),
        points=points,
    )


def _decreasing(values: Sequence[float]) -> bool:
    return all(later < earlier for earlier, later in zip(values, values[1:], strict=False))


def _spread_verdict(constant: BoundConstant | None, name: str) -> Verdict:
    if constant is None or not constant.values:
        return Verdict(status=VerdictStatus.SKIPPED, detail=f"no {name} constants measured")
    passed = constant.spread <= CONSTANT_MAX_SPREAD
    return Verdict(
        status=VerdictStatus.PASS if passed else VerdictStatus.FAIL,
        detail=f"spread={constant.spread:.3g} limit={CONSTANT_MAX_SPREAD:g}",
    )


def _column(rows: Sequence[SweepRow], name: str) -> list[float] | None:
    if not rows or any(name not in row.quantities for row in rows):
        return None
    return [row.quantities[name] for row in rows]


def _exponent_verdict(fit: FitResult | None, target: float, tolerance: float, missing: str) -> Verdict:
    if fit is None:
        return Verdict(status=VerdictStatus.SKIPPED, detail=missing)
    passed = abs(fit.exponent - target) <= tolerance
    return Verdict(
        status=VerdictStatus.PASS if passed else VerdictStatus.FAIL,
        detail=f"exponent={fit.exponent:.3f}+-{fit.half_width:.3f} target={target:g}+-{tolerance:g}",
    )


def _damping_verdict(rates: Sequence[DampingRate]) -> Verdict:
    if not rates:
        return Verdict(status=VerdictStatus.SKIPPED, detail="checks disabled")
    worst = max(rates, key=lambda rate: rate.relative_error)
    return Verdict(
        status=VerdictStatus.PASS if worst.relative_error <= DAMPING_RTOL else VerdictStatus.FAIL,
        detail=f"worst lam={worst.lam:g} relative_error={worst.relative_error:.3e} limit={DAMPING_RTOL:g}",
    )


def _residual_order_verdict(rows: Sequence[SweepRow]) -> Verdict:
    orders = [row.quantities[name] for row in rows for name in RESIDUAL_ORDERS if name in row.quantities]
    if not orders:
        detail = "no run had enough samples for a residual order, or wave diagnostics off"
        return Verdict(status=VerdictStatus.SKIPPED, detail=detail)
    lowest = min(orders)
    return Verdict(
        status=VerdictStatus.PASS if lowest >= RESIDUAL_MIN_ORDER else VerdictStatus.FAIL,
        detail=f"min_order={lowest:.3f} limit={RESIDUAL_MIN_ORDER:g} orders={len(orders)}",
    )


def sweep_verdicts(report: SweepReport) -> dict[str, Verdict]:  # noqa: C901
    """Acceptance verdicts computed from the table, fits and constants of ``report`` alone.

    Returns:
        dict: Verdict per acceptance check; ``skipped`` when the regime of the sweep does not apply.
    """
    rows = sorted(report.rows, key=lambda row: row.n)
    verdicts: dict[str, Verdict] = {}

    slack = _column(rows, "energy_slack_min")
    if slack is None:
        verdicts["energy_inequality"] = Verdict(status=VerdictStatus.SKIPPED, detail="no ledger")
    else:
        worst = min(slack)
        verdicts["energy_inequality"] = Verdict(
            status=VerdictStatus.PASS if worst >= 0 else VerdictStatus.FAIL, detail=f"min_slack={worst:.3e}"
        )

    fractions = _column(rows, "energy_fraction_max")
    if fractions is None:
        verdicts["uniform_bounds"] = Verdict(status=VerdictStatus.SKIPPED, detail="no diagnostics")
    else:
        largest = max(fractions)
        verdicts["uniform_bounds"] = Verdict(
            status=VerdictStatus.PASS if largest <= 1 + ENERGY_TOL else VerdictStatus.FAIL,
            detail=f"max_energy_fraction={largest:.6g}",
        )

    verdicts["trace_bound"] = _spread_verdict(report.constants.get("trace"), "trace")

    fit = report.fits.get("vertical_velocity")
    spread = _spread_verdict(report.constants.get("vertical_velocity"), "vertical velocity")
    if fit is None:
        verdicts["vertical_velocity_decay"] = Verdict(status=VerdictStatus.SKIPPED, detail="no fit")
    else:
        passed = fit.exponent >= VERTICAL_VELOCITY_MIN_EXPONENT and spread.status != VerdictStatus.FAIL
        verdicts["vertical_velocity_decay"] = Verdict(
            status=VerdictStatus.PASS if passed else VerdictStatus.FAIL,
            detail=f"exponent={fit.exponent:.3f}+-{fit.half_width:.3f} {spread.detail}",
        )

    errors = _column(rows, "limit_error")
    if report.lambda_regime != LambdaRegime.FINITE or errors is None or len(errors) < 2:  # noqa: PLR2004
        verdicts["limit_convergence"] = Verdict(
            status=VerdictStatus.SKIPPED, detail="no quasi-homogeneous finite-lambda comparison"
        )
    else:
        reduction = errors[0] / errors[-1] if errors[-1] > 0 else math.inf
        passed = _decreasing(errors) and reduction >= LIMIT_ERROR_MIN_REDUCTION
        verdicts["limit_convergence"] = Verdict(
            status=VerdictStatus.PASS if passed else VerdictStatus.FAIL,
            detail=f"monotone={_decreasing(errors)} reduction={reduction:.3g}",
        )

    means = _column(rows, "mean_velocity")
    if report.lambda_regime != LambdaRegime.DIVERGENT or means is None:
        verdicts["degenerate_decay"] = Verdict(status=VerdictStatus.SKIPPED, detail="lambda does not diverge")
    else:
        constant = _spread_verdict(report.constants.get("degenerate"), "degenerate")
        passed = _decreasing(means) and constant.status != VerdictStatus.FAIL
        verdicts["degenerate_decay"] = Verdict(
            status=VerdictStatus.PASS if passed else VerdictStatus.FAIL,
            detail=f"monotone={_decreasing(means)} {constant.detail}",
        )

    verdicts["ekman_damping"] = _damping_verdict(report.damping)
    verdicts["poincare_scaling"] = _exponent_verdict(
        report.fits.get("poincare_scaling"), SCALING_EXPONENT, SCALING_EXPONENT_TOL, "checks disabled"
    )
    verdicts["averaging_defect"] = _exponent_verdict(
        report.fits.get("averaging_defect"), SCALING_EXPONENT, SCALING_EXPONENT_TOL, "checks disabled"
    )
    verdicts["commutator_slope"] = _exponent_verdict(
        report.fits.get("commutator"),
        COMMUTATOR_EXPONENT,
        COMMUTATOR_EXPONENT_TOL,
        "constant reference density or checks disabled",
    )
    verdicts["residual_order"] = _residual_order_verdict(rows)
    return verdicts


def assemble_report(
    sequence: RegimeSequence,
    rows: Iterable[SweepRow],
    steps: int = 0,
    checks: Mapping[str, FitResult] | None = None,
    damping: Sequence[DampingRate] = (),
) -> SweepReport:
    """Sort the rows, fit every quantity against ``ell`` and decide the verdicts.

    ``checks`` are fits measured outside the sweep members and ``damping`` the Ekman damping rates; both join the
    report before the verdicts are taken.

    Returns:
        SweepReport: The complete report.
    """
    ordered = sorted(rows, key=lambda row: row.n)
    fits: dict[str, FitResult] = {}
    for name in FITTED_QUANTITIES:
        column = _column(ordered, name)
        if column is None:
            continue
        try:
            fits[name] = fit_rate(zip((row.ell for row in ordered), column, strict=True))
        except FitError as exc:
            logger.warning("fit skipped quantity=%s reason=%s", name, exc)
    fits.update(checks or {})
    constants = {
        key: BoundConstant(values=column)
        for key, name in BOUND_CONSTANTS.items()
        if (column := _column(ordered, name)) is not None
    }
    report = SweepReport(
        lambda_regime=sequence.lambda_regime,
        lambda_limit=sequence.lambda_limit,
        rows=ordered,
        fits=fits,
        constants=constants,
        steps=steps,
        damping=list(damping),
    )
    report.verdicts = sweep_verdicts(report)
    for name, verdict in report.verdicts.items():
        logger.info("verdict check=%s status=%s %s", name, verdict.status, verdict.detail)
    return report
