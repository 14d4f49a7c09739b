"""Tests of the power-law fits and the sweep verdicts."""

import pytest

from ekman_slab.errors import FitError
from ekman_slab.geometry import make_regime_sequence
from ekman_slab.models import (
    BoundConstant,
    DampingRate,
    FitResult,
    LambdaRegime,
    RegimeSequence,
    ScalingLaw,
    SweepReport,
    SweepRow,
    VerdictStatus,
)
from ekman_slab.rates import assemble_report, fit_rate, sweep_verdicts

SCALES = [0.5, 0.25, 0.125, 0.0625, 0.03125]


@pytest.fixture
def finite_sequence() -> RegimeSequence:
    """Provide regimes with ell = alpha = eps, so alpha / ell tends to 1."""
    return make_regime_sequence(2, 5, ScalingLaw(), ScalingLaw())


def _rows(sequence: RegimeSequence, **columns: list[float]) -> list[SweepRow]:
    return [
        SweepRow(
            n=n,
            epsilon=regime.epsilon,
            ell=regime.ell,
            alpha=regime.alpha,
            quantities={name: values[i] for name, values in columns.items()},
        )
        for i, (n, regime) in enumerate(zip(sequence.indices, sequence.regimes, strict=True))
    ]


def _fit(exponent: float) -> FitResult:
    return FitResult(exponent=exponent, constant=1.0, residual=0.0, half_width=0.01, points=4)


def test_exact_power_law() -> None:
    """Data on an exact power law are recovered without residual."""
    fit = fit_rate((scale, 2 * scale**2) for scale in SCALES)
    assert fit.exponent == pytest.approx(2.0)
    assert fit.constant == pytest.approx(2.0)
    assert fit.residual == pytest.approx(0.0, abs=1e-12)
    assert fit.points == len(SCALES)


def test_linear_law_constant() -> None:
    """A linear law reports its prefactor as constant."""
    fit = fit_rate([(0.5, 1.5), (0.25, 0.75), (0.125, 0.375)])
    assert fit.exponent == pytest.approx(1.0)
    assert fit.constant == pytest.approx(3.0)


def test_noisy_power_law() -> None:
    """A few percent of noise moves the exponent only slightly and widens its interval."""
    noise = [1.05, 0.95, 1.03, 0.97, 1.0]
    fit = fit_rate((scale, factor * scale**1.5) for scale, factor in zip(SCALES, noise, strict=True))
    assert fit.exponent == pytest.approx(1.5, abs=0.15)
    assert fit.half_width > 0
    assert fit.residual > 0


@pytest.mark.parametrize(
    "pairs",
    [
        [(0.5, 1.0), (0.25, 0.5)],
        [(0.5, 1.0), (0.25, 0.0), (0.125, 0.1)],
        [(0.5, 1.0), (0.5, 0.5), (0.5, 0.25)],
    ],
    ids=["too_few", "zero_error", "single_scale"],
)
def test_unusable_fits_are_refused(pairs: list[tuple[float, float]]) -> None:
    """Short, non-positive or degenerate data cannot be fitted."""
    with pytest.raises(FitError):
        fit_rate(pairs)


def test_bound_constant_spread() -> None:
    """The spread is the ratio of extreme constants."""
    constant = BoundConstant(values=[2.0, 1.0, 4.0])
    assert constant.spread == pytest.approx(4.0)
    assert BoundConstant(values=[0.0, 1.0]).spread == float("inf")


def test_assembled_report_passes_a_converging_sweep(finite_sequence: RegimeSequence) -> None:
    """Sorted rows, fits against ell and passing verdicts for a well-behaved finite-lambda sweep."""
    ells = [regime.ell for regime in finite_sequence.regimes]
    rows = _rows(
        finite_sequence,
        energy_slack_min=[1e-3, 2e-3, 1e-3, 5e-4],
        energy_fraction_max=[1.0, 0.99, 0.98, 1.0],
        vertical_velocity=[0.3 * ell**0.5 for ell in ells],
        vertical_velocity_constant=[1.0, 1.2, 1.1, 1.0],
        trace_constant=[0.5, 0.6, 0.55, 0.5],
        limit_error=[2.0 * ell**2 for ell in ells],
        wave_residual_order=[2.0, 1.98, 2.01, 1.99],
        vorticity_residual_order=[1.95, 1.97, 2.0, 1.9],
    )
    checks = {
        "poincare_scaling": _fit(1.02),
        "averaging_defect": _fit(0.97),
        "commutator": _fit(-1.04),
    }
    damping = [DampingRate(lam=lam, measured=2 * (2 + 2 * lam) * 1.001, expected=2 * (2 + 2 * lam)) for lam in (0, 2)]
    report = assemble_report(finite_sequence, reversed(rows), steps=40, checks=checks, damping=damping)
    assert [row.n for row in report.rows] == [2, 3, 4, 5]
    assert report.fits["vertical_velocity"].exponent == pytest.approx(0.5)
    assert report.fits["limit_error"].exponent == pytest.approx(2.0)
    assert "columnarity" not in report.fits
    assert report.constants["trace"].spread == pytest.approx(1.2)
    assert report.steps == 40
    statuses = {name: verdict.status for name, verdict in report.verdicts.items()}
    assert statuses == {
        "energy_inequality": VerdictStatus.PASS,
        "uniform_bounds": VerdictStatus.PASS,
        "trace_bound": VerdictStatus.PASS,
        "vertical_velocity_decay": VerdictStatus.PASS,
        "limit_convergence": VerdictStatus.PASS,
        "degenerate_decay": VerdictStatus.SKIPPED,
        "ekman_damping": VerdictStatus.PASS,
        "poincare_scaling": VerdictStatus.PASS,
        "averaging_defect": VerdictStatus.PASS,
        "commutator_slope": VerdictStatus.PASS,
        "residual_order": VerdictStatus.PASS,
    }


def test_verdicts_fail_and_skip(finite_sequence: RegimeSequence) -> None:
    """A negative slack fails, missing columns skip, a stalling limit error fails."""
    rows = _rows(finite_sequence, energy_slack_min=[1e-3, -1e-2, 1e-3, 1e-3], limit_error=[1.0, 0.9, 0.8, 0.7])
    report = SweepReport(lambda_regime=LambdaRegime.FINITE, lambda_limit=1.0, rows=rows)
    verdicts = sweep_verdicts(report)
    assert verdicts["energy_inequality"].status == VerdictStatus.FAIL
    assert verdicts["uniform_bounds"].status == VerdictStatus.SKIPPED
    assert verdicts["trace_bound"].status == VerdictStatus.SKIPPED
    assert verdicts["vertical_velocity_decay"].status == VerdictStatus.SKIPPED
    assert verdicts["limit_convergence"].status == VerdictStatus.FAIL


def test_regime_dependent_verdicts() -> None:
    """The limit comparison needs finite lambda; the degenerate decay needs a divergent one."""
    sequence = make_regime_sequence(2, 4, ScalingLaw(exponent=2.0), ScalingLaw(exponent=1.0))
    assert sequence.lambda_regime == LambdaRegime.DIVERGENT
    rows = _rows(
        sequence, mean_velocity=[0.4, 0.2, 0.1], degenerate_constant=[1.0, 1.5, 2.0], limit_error=[1.0, 0.1, 0.01]
    )
    verdicts = assemble_report(sequence, rows).verdicts
    assert verdicts["limit_convergence"].status == VerdictStatus.SKIPPED
    assert verdicts["degenerate_decay"].status == VerdictStatus.PASS
    rising = _rows(sequence, mean_velocity=[0.1, 0.2, 0.4])
    assert assemble_report(sequence, rising).verdicts["degenerate_decay"].status == VerdictStatus.FAIL


def test_check_verdicts_fail_outside_their_windows(finite_sequence: RegimeSequence) -> None:
    """Exponents outside their windows, a slow damping rate and a first-order residual all fail."""
    rows = _rows(finite_sequence, wave_residual_order=[2.0, 1.1, 2.0, 2.0])
    checks = {"poincare_scaling": _fit(1.2), "averaging_defect": _fit(0.85), "commutator": _fit(-0.8)}
    damping = [DampingRate(lam=0.5, measured=5.9, expected=6.0)]
    verdicts = assemble_report(finite_sequence, rows, checks=checks, damping=damping).verdicts
    for name in ("ekman_damping", "poincare_scaling", "averaging_defect", "commutator_slope", "residual_order"):
        assert verdicts[name].status == VerdictStatus.FAIL, name
    assert "min_order=1.100" in verdicts["residual_order"].detail


def test_check_verdicts_skip_without_measurements(finite_sequence: RegimeSequence) -> None:
    """Without checks or residual orders the verdicts are skipped with a reason."""
    verdicts = assemble_report(finite_sequence, _rows(finite_sequence)).verdicts
    for name in ("ekman_damping", "poincare_scaling", "averaging_defect", "commutator_slope", "residual_order"):
        assert verdicts[name].status == VerdictStatus.SKIPPED, name
        assert verdicts[name].detail
    assert "constant reference density" in verdicts["commutator_slope"].detail
