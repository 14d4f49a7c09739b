"""Service of the Ekman slab laboratory: single runs, limit runs, sweeps and data checks."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import yaml
from scipy import integrate

from .checks import run_checks
from .constants import RESIDUAL_ORDER_STRIDES
from .diagnostics import (
    diagnostics_record,
    initial_vorticity_balance,
    perturbation_field,
    poincare_defect,
    residual_orders,
    sigma_equation_residual,
    vorticity_eq_residual,
    wave_residual,
    write_records,
)
from .errors import (
    ConvergenceError,
    DensityBoundError,
    ParameterError,
    RunFailedError,
    TimeStepRejectedError,
    TrajectoryError,
)
from .geometry import SlabGeometry, make_regime_sequence, vertical_average
from .initial_data import build_initial_data, gen_initial_data
from .models import AdmissibilityReport, RunConfig, SweepRow
from .rates import assemble_report
from .settings import Settings
from .snapshots import write_csv
from .solver2d import LimitStepper, stable_time_step_2d
from .solver3d import EnergyLedger, StepOptions, Trajectory, stable_time_step, step_imex
from .spectral import dirichlet_energy, grad_h

if TYPE_CHECKING:
    from pathlib import Path

    from .geometry import Field2D
    from .models import DiagnosticsRecord, LedgerRow, LimitRow, RegimeParams, RegimeSequence, SweepReport
    from .solver2d import State2D
    from .solver3d import State3D

logger = logging.getLogger(__name__)

LEDGER_FILE = "ledger.csv"
DIAGNOSTICS_FILE = "diagnostics.csv"
LIMIT_FILE = "limit2d.csv"
SOLVER_ERRORS = (ConvergenceError, DensityBoundError, TimeStepRejectedError)


def load_config(path: Path) -> RunConfig:
    """Read a YAML run configuration.

    Returns:
        RunConfig: The validated configuration.

    Raises:
        pydantic.ValidationError: For unknown keys or invalid values.
    """
    with path.open(encoding="utf-8") as stream:
        document = yaml.safe_load(stream) or {}
    return RunConfig.model_validate(document)


def regime_sequence(config: RunConfig) -> RegimeSequence:
    """The regimes of the configured sequence.

    Returns:
        RegimeSequence: The sequence.
    """
    block = config.regime
    return make_regime_sequence(block.n_min, block.n_max, block.ell_law, block.alpha_law)


def slab_geometry(config: RunConfig, regime: RegimeParams) -> SlabGeometry:
    """The configured grid with the regime's thickness.

    Returns:
        SlabGeometry: The geometry.
    """
    block = config.geometry
    return SlabGeometry(block.horizontal_period, block.nh, block.nv, regime.ell)


def time_grid(dt: float, t_final: float, stride: int) -> tuple[float, int, int]:
    """Uniform steps reaching ``t_final`` exactly with a sample every ``stride`` steps.

    The stride shrinks so that a run has at least three samples.

    Returns:
        tuple: The step size, the number of steps and the effective stride.
    """
    steps = max(2, math.ceil(t_final / dt))
    stride = max(1, min(stride, steps // 2))
    steps = math.ceil(steps / stride) * stride
    return t_final / steps, steps, stride


@dataclass
class _Series:
    """Time series accumulated at the diagnostic samples of a run."""

    times: list[float] = field(default_factory=list)
    vertical_velocity: list[float] = field(default_factory=list)
    columnarity: list[float] = field(default_factory=list)
    trace_gap: list[float] = field(default_factory=list)
    mean_velocity: list[float] = field(default_factory=list)
    dirichlet: list[float] = field(default_factory=list)
    limit_error: list[float] = field(default_factory=list)
    perturbation_sup: float = 0.0

    def add(self, state: State3D, record: DiagnosticsRecord, limit: State2D | None) -> None:
        self.times.append(state.t)
        self.vertical_velocity.append(record.residuals["u3_bar_norm"] ** 2)
        self.columnarity.append(poincare_defect(state.u).lhs)
        self.trace_gap.append(0.5 * (record.traces["trace_gap_top"] ** 2 + record.traces["trace_gap_bottom"] ** 2))
        self.mean_velocity.append(record.norms["velocity"].norm_of_average ** 2)
        self.dirichlet.append(dirichlet_energy(state.u))
        if limit is not None:
            u_bar = vertical_average(state.u.horizontal_part())
            self.limit_error.append((u_bar - limit.velocity()).norm() ** 2)

    def integral(self, values: list[float]) -> float:
        return float(integrate.trapezoid(values, self.times))

    def quantities(self, regime: RegimeParams) -> dict[str, float]:
        """L^2-in-time norms and the measured constants of the bounds."""
        vertical = self.integral(self.vertical_velocity)
        trace = self.integral(self.trace_gap)
        mean = math.sqrt(self.integral(self.mean_velocity))
        gradient = self.integral(self.dirichlet)
        quantities = {
            "vertical_velocity": math.sqrt(vertical),
            "columnarity": math.sqrt(self.integral(self.columnarity)),
            "trace_gap": math.sqrt(trace),
            "mean_velocity": mean,
        }
        if self.limit_error:
            quantities["limit_error"] = math.sqrt(self.integral(self.limit_error))
        if gradient > 0:
            quantities["vertical_velocity_constant"] = vertical / (regime.ell * gradient)
            quantities["trace_constant"] = trace / (regime.ell * gradient)
        if regime.alpha > 0:
            quantities["degenerate_constant"] = mean / (regime.ell + math.sqrt(regime.ell / regime.alpha))
        return quantities


@dataclass
class RunResult:
    """Everything a single 3-D run produced."""

    regime: RegimeParams
    rho0: Field2D
    final: State3D
    ledger: list[LedgerRow]
    records: list[DiagnosticsRecord]
    limit_rows: list[LimitRow]
    trajectory: Trajectory
    quantities: dict[str, float]
    steps: int

    def sweep_row(self, n: int) -> SweepRow:
        """The row of this run in a sweep table.

        Returns:
            SweepRow: The row.
        """
        regime = self.regime
        return SweepRow(n=n, epsilon=regime.epsilon, ell=regime.ell, alpha=regime.alpha, quantities=self.quantities)


def _trajectory_quantities(trajectory: Trajectory, rho0: Field2D, levels: list[int]) -> dict[str, float]:
    quantities: dict[str, float] = {}
    try:
        for level in levels:
            residual = wave_residual(trajectory, level, rho0)
            quantities[f"wave_sigma_residual_m{level}"] = max(residual.sigma)
            quantities[f"wave_eta_residual_m{level}"] = max(residual.eta)
        quantities["vorticity_residual"] = max(vorticity_eq_residual(trajectory).values)
        quantities["sigma_equation_residual"] = max(sigma_equation_residual(trajectory).values)
    except TrajectoryError as exc:
        logger.warning("trajectory residuals skipped reason=%s", exc)
        return quantities
    if len(trajectory) < 2 * max(RESIDUAL_ORDER_STRIDES) + 1:
        logger.info("residual orders skipped samples=%d", len(trajectory))
        return quantities
    orders = residual_orders(trajectory, max(levels), rho0)
    if orders.wave_order is not None:
        quantities["wave_residual_order"] = orders.wave_order
    if orders.vorticity_order is not None:
        quantities["vorticity_residual_order"] = orders.vorticity_order
    return quantities


def run_single(config: RunConfig, regime: RegimeParams, directory: Path | None = None) -> RunResult:  # noqa: PLR0914
    """Advance the slab system to ``t_final`` and collect diagnostics at the configured cadence.

    With a constant reference density the limit system is advanced in lockstep from the matched averaged data.

    Args:
        config: The run configuration.
        regime: The family member to run.
        directory: Where to write ``ledger.csv``, ``diagnostics.csv``, ``limit2d.csv`` and checkpoints.

    Returns:
        RunResult: Ledger, records, samples and the sweep quantities.

    Raises:
        AdmissibilityError: If the initial data are rejected.
        RunFailedError: If the solver fails, with the step at failure.
    """
    solver = config.solver
    initial = gen_initial_data(config.data, regime, slab_geometry(config, regime))
    state = initial.state()
    rho0 = initial.rho0
    ledger = EnergyLedger.start(state)
    options = StepOptions.from_config(solver)
    dt, steps, stride = time_grid(stable_time_step(state, solver), solver.t_final, solver.diag_stride)

    quasi_homogeneous = grad_h(rho0).sup() == 0
    limit = initial.limit_data() if quasi_homogeneous else None
    limit_stepper = LimitStepper(rho0.grid, regime.lam, solver.max_courant) if quasi_homogeneous else None
    balance = None
    if limit is not None:
        balance = initial_vorticity_balance(initial.rho_in, initial.m_in, rho0, limit, regime.epsilon)

    trajectory = Trajectory(state.geometry, regime)
    records: list[DiagnosticsRecord] = []
    limit_rows: list[LimitRow] = []
    series = _Series()
    snapshot_every = config.output.snapshot_every

    def sample(current: State3D, limit_state: State2D | None) -> None:
        """Record diagnostics, trajectory and limit row of one sampled time."""
        record = diagnostics_record(
            current, rho0, ledger.initial_energy, solver.cutoff_levels, solver.theta, config.data.vacuum_delta
        )
        records.append(record)
        trajectory.append(current)
        series.add(current, record, limit_state)
        perturbation = perturbation_field(current, rho0)
        series.perturbation_sup = max(series.perturbation_sup, -perturbation.minimum, perturbation.maximum)
        if limit_state is not None:
            limit_rows.append(limit_state.limit_row())

    logger.info(
        "run started eps=%.6g ell=%.6g alpha=%.6g dt=%.3e steps=%d", regime.epsilon, regime.ell, regime.alpha, dt, steps
    )
    sample(state, limit)
    for step in range(1, steps + 1):
        try:
            state, increment = step_imex(state, dt, options)
            if limit is not None and limit_stepper is not None:
                limit = limit_stepper.step(limit, dt)
        except SOLVER_ERRORS as exc:
            if isinstance(exc, DensityBoundError) and directory is not None and exc.state is not None:
                exc.state.save(directory / "failure")
            raise RunFailedError(regime.epsilon, step, exc) from exc
        ledger.record(state, increment)
        if step % stride == 0:
            sample(state, limit)
        if directory is not None and snapshot_every and step % snapshot_every == 0:
            state.save(directory / f"step_{step:06d}")

    quantities = series.quantities(regime)
    quantities["energy_slack_min"] = min(row.budget_slack for row in ledger.rows)
    quantities["energy_fraction_max"] = max(record.residuals["energy_fraction"] for record in records)
    quantities["perturbation_sup"] = series.perturbation_sup
    if balance is not None:
        quantities["initial_vorticity_balance"] = balance
    if solver.wave_diagnostics:
        quantities.update(_trajectory_quantities(trajectory, rho0, solver.cutoff_levels))

    if directory is not None:
        ledger.write_csv(directory / LEDGER_FILE)
        write_records(directory / DIAGNOSTICS_FILE, records)
        if limit_rows:
            write_csv(directory / LIMIT_FILE, limit_rows)
    logger.info("run finished eps=%.6g steps=%d ledger_holds=%s", regime.epsilon, steps, ledger.holds)
    return RunResult(regime, rho0, state, ledger.rows, records, limit_rows, trajectory, quantities, steps)


def run_limit(config: RunConfig, directory: Path | None = None) -> tuple[State2D, list[LimitRow]]:
    """Integrate the limit system alone from the matched data of the finest regime.

    Returns:
        tuple: The final limit state and its log rows.
    """
    solver = config.solver
    regime = regime_sequence(config).regimes[-1]
    state = gen_initial_data(config.data, regime, slab_geometry(config, regime)).limit_data()
    stepper = LimitStepper(state.grid, state.lam, solver.max_courant)
    dt, steps, stride = time_grid(stable_time_step_2d(state, solver), solver.t_final, solver.diag_stride)
    rows = [state.limit_row()]
    logger.info("limit run started lam=%.6g dt=%.3e steps=%d", state.lam, dt, steps)
    for step in range(1, steps + 1):
        try:
            state = stepper.step(state, dt)
        except TimeStepRejectedError as exc:
            raise RunFailedError(regime.epsilon, step, exc) from exc
        if step % stride == 0:
            rows.append(state.limit_row())
    if directory is not None:
        write_csv(directory / LIMIT_FILE, rows)
        state.save(directory / "final")
    logger.info("limit run finished energy=%.6g enstrophy=%.6g", state.energy(), state.enstrophy())
    return state, rows


def _sweep_member(config: RunConfig, regime: RegimeParams, n: int, directory: Path | None) -> tuple[SweepRow, int]:
    target = directory / f"n_{n:03d}" if directory is not None else None
    result = run_single(config, regime, target)
    return result.sweep_row(n), result.steps


class Service:
    """Service of the Ekman slab laboratory."""

    _settings: Settings

    def __init__(self, settings: Settings | None = None) -> None:
        """Initialize service."""
        self._settings = settings or Settings()  # pyright: ignore[reportCallIssue] - false positive

    def info(self) -> str:
        """Get the effective settings.

        Returns:
            str: Settings as JSON.
        """
        return self._settings.model_dump_json()

    @staticmethod
    def run_single(config: RunConfig, n: int | None = None) -> RunResult:
        """Run one member of the configured sequence, the finest one unless ``n`` is given.

        Returns:
            RunResult: The outcome of the run.

        Raises:
            ParameterError: If ``n`` is not in the configured range.
        """
        sequence = regime_sequence(config)
        if n is None:
            regime = sequence.regimes[-1]
        elif n in sequence.indices:
            regime = sequence.regimes[sequence.indices.index(n)]
        else:
            msg = f"n={n} is not in {sequence.indices[0]}..{sequence.indices[-1]}"
            raise ParameterError(msg)
        return run_single(config, regime, config.output.directory)

    @staticmethod
    def run_limit(config: RunConfig) -> tuple[State2D, list[LimitRow]]:
        """Run the limit system alone.

        Returns:
            tuple: The final state and the log rows.
        """
        return run_limit(config, config.output.directory)

    def run_sweep(self, config: RunConfig) -> SweepReport:
        """Run every member of the sequence on a process pool and reduce the rows to a report.

        Rows are sorted by ``n`` before fitting, so the report does not depend on completion order. The checks of the
        ``checks`` block run once in this process.

        Returns:
            SweepReport: Table, fits, constants and verdicts.
        """
        sequence = regime_sequence(config)
        directory = config.output.directory
        workers = min(self._settings.effective_workers, len(sequence.regimes))
        logger.info("sweep started runs=%d workers=%d", len(sequence.regimes), workers)
        members = list(zip(sequence.indices, sequence.regimes, strict=True))
        if workers == 1:
            outcomes = [_sweep_member(config, regime, n, directory) for n, regime in members]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_sweep_member, config, regime, n, directory) for n, regime in members]
                outcomes = [future.result() for future in futures]
        rows = [row for row, _ in outcomes]
        steps = sum(count for _, count in outcomes)
        checks = run_checks(config)
        return assemble_report(sequence, rows, steps, checks.fits, checks.damping)

    @staticmethod
    def check_data(config: RunConfig) -> dict[int, AdmissibilityReport]:
        """Run the admissibility suite on the data of every member of the sequence.

        Returns:
            dict: Report per ``n``.
        """
        sequence = regime_sequence(config)
        return {
            n: build_initial_data(config.data, regime, slab_geometry(config, regime)).report
            for n, regime in zip(sequence.indices, sequence.regimes, strict=True)
        }
