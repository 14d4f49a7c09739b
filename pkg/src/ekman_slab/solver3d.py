"""Time integration of the rotating non-homogeneous slab system with Navier-slip walls.

One step of :func:`step_imex` advances

    d_t rho + div(rho u) = 0,
    d_t (rho u) + div(rho u (x) u) - lap u + (1 / eps) (grad pi + e3 x rho u) = 0,
    div u = 0,   u3 = 0 and d3 u_h = -+ 2 alpha u_h at x3 = +-ell.

A predictor transports the density with the start velocity and fixes the midpoint density ``rho_mid``. The
velocity then solves a Crank-Nicolson viscous problem around the constant density
``rho_ref = (max rho_mid + min rho_mid) / 2`` in the space of divergence-free fields, where the slip law enters as the
natural boundary term. Convection, the Coriolis term and the remainder ``(rho_mid - rho_ref) d_t u`` are evaluated at
the midpoint velocity inside a damped fixed-point loop. The density is finally transported from the start of the step
with the midpoint velocity, so both unknowns are second order in time.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Self

import numpy as np
from scipy import integrate

from .constants import (
    DENSITY_BOUND_TOL,
    ENERGY_TOL,
    INNER_DAMPING,
    INNER_MAX_ITERATIONS,
    INNER_TOL,
)
from .errors import (
    ConvergenceError,
    DensityBoundError,
    GeometryError,
    ParameterError,
    SnapshotFormatError,
    TrajectoryError,
)
from .geometry import Field3D, SlabGeometry, exact_inner
from .models import LedgerRow, RegimeParams, SolverConfig
from .snapshots import read_checkpoint, write_checkpoint, write_csv
from .spectral import ConstrainedSolver, Dealiaser, dirichlet_energy, div_3d, grad_3d, projector_for
from .transport import SemiLagrangian

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable
    from pathlib import Path

    from numpy.typing import NDArray

    FloatArray = NDArray[np.float64]
    ComplexArray = NDArray[np.complex128]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class State3D:
    """Density and velocity of one member of the family at time ``t``."""

    rho: Field3D
    u: Field3D
    t: float
    regime: RegimeParams

    def __post_init__(self) -> None:
        """Check shapes.

        Raises:
            GeometryError: If ``rho`` is not a scalar, ``u`` not a vector or the geometries differ.
        """
        if self.rho.components != 1 or self.u.components != 3:  # noqa: PLR2004
            msg = f"expected scalar density and vector velocity, got {self.rho.components} and {self.u.components}"
            raise GeometryError(msg)
        if self.rho.geometry != self.u.geometry:
            msg = "density and velocity live on different geometries"
            raise GeometryError(msg)

    @property
    def geometry(self) -> SlabGeometry:
        """The slab geometry."""
        return self.rho.geometry

    def momentum(self) -> Field3D:
        """``m = rho u``.

        Returns:
            Field3D: The momentum.
        """
        return self.u * self.rho

    def kinetic_energy(self) -> float:
        """``(1/2) (1 / 2 ell) * integral of rho |u|^2``.

        Returns:
            float: The averaged kinetic energy.
        """
        weighted = self.u * Field3D(self.geometry, np.sqrt(np.clip(self.rho.physical, 0.0, None)))
        return 0.5 * exact_inner(weighted, weighted)

    def save(self, directory: Path) -> None:
        """Write a checkpoint: ``rho.eksl``, ``u.eksl`` and ``checkpoint.json``."""
        write_checkpoint(directory, {"rho": self.rho, "u": self.u}, {"t": self.t, "regime": self.regime.model_dump()})

    @classmethod
    def load(cls, directory: Path) -> Self:
        """Read a checkpoint written by :meth:`save`.

        Returns:
            State3D: The state.
        """
        fields, metadata = read_checkpoint(directory)
        rho, u = fields["rho"], fields["u"]
        if not isinstance(rho, Field3D) or not isinstance(u, Field3D):
            msg = f"checkpoint {directory} does not hold slab fields"
            raise SnapshotFormatError(msg)
        return cls(rho, u, float(metadata["t"]), RegimeParams.model_validate(metadata["regime"]))


@dataclass(frozen=True)
class LedgerIncrement:
    """What one step adds to the energy ledger, plus inner-loop statistics."""

    dissipation: float = 0.0
    boundary: float = 0.0
    iterations: int = 0
    residual: float = 0.0


@dataclass
class EnergyLedger:
    """Running discrete energy inequality ``kinetic + dissipation + boundary <= initial_energy``."""

    initial_energy: float
    tolerance: float = ENERGY_TOL
    dissipation: float = 0.0
    boundary: float = 0.0
    rows: list[LedgerRow] = field(default_factory=list)

    @classmethod
    def start(cls, state: State3D, tolerance: float = ENERGY_TOL) -> Self:
        """Open a ledger at the initial state; the initial energy is ``(1 / 2 ell) * integral |m|^2 / rho``.

        Returns:
            EnergyLedger: The ledger with its first row.
        """
        ledger = cls(initial_energy=2.0 * state.kinetic_energy(), tolerance=tolerance)
        ledger.record(state, LedgerIncrement())
        return ledger

    def record(self, state: State3D, increment: LedgerIncrement) -> LedgerRow:
        """Add a step and append its row.

        Returns:
            LedgerRow: The new row.
        """
        self.dissipation += increment.dissipation
        self.boundary += increment.boundary
        kinetic = state.kinetic_energy()
        slack = self.initial_energy * (1.0 + self.tolerance) - (kinetic + self.dissipation + self.boundary)
        row = LedgerRow(
            t=state.t, kinetic=kinetic, dissipation=self.dissipation, boundary=self.boundary, budget_slack=slack
        )
        self.rows.append(row)
        if slack < 0:
            logger.warning("energy inequality violated t=%.6g slack=%.3e", state.t, slack)
        return row

    @property
    def holds(self) -> bool:
        """Whether every recorded row satisfies the inequality."""
        return all(row.budget_slack >= 0 for row in self.rows)

    def write_csv(self, path: Path) -> None:
        """Write ``t,kinetic,dissipation,boundary,budget_slack`` rows."""
        write_csv(path, self.rows)


def _coriolis_values(rho: FloatArray, u: FloatArray) -> FloatArray:
    return np.stack([-rho * u[1], rho * u[0], np.zeros_like(rho)])


def coriolis_term(rho: Field3D, u: Field3D) -> Field3D:
    """``e3 x (rho u) = (-rho u2, rho u1, 0)`` pointwise, without the ``1 / eps`` factor.

    Returns:
        Field3D: The Coriolis vector.
    """
    rho._check(u)  # noqa: SLF001
    return Field3D(rho.geometry, _coriolis_values(rho.physical[0], u.physical))


def _robin_rows(geometry: SlabGeometry, alpha: float) -> tuple[FloatArray, FloatArray]:
    top = geometry.d1[0].copy()
    bottom = geometry.d1[-1].copy()
    top[0] += 2 * alpha
    bottom[-1] -= 2 * alpha
    return top, bottom


def apply_robin_bc(u_h: Field3D, alpha: float) -> Field3D:
    """Enforce ``d3 u_h + 2 alpha u_h = 0`` at the top and ``d3 u_h - 2 alpha u_h = 0`` at the bottom.

    The two boundary rows are solved for the endpoint values, the interior values stay as they are. A third
    component is passed through untouched.

    Returns:
        Field3D: The corrected field.

    Raises:
        ParameterError: For negative ``alpha``.
    """
    if alpha < 0:
        msg = f"slip coefficient must be non-negative, got {alpha}"
        raise ParameterError(msg)
    top, bottom = _robin_rows(u_h.geometry, alpha)
    values = np.array(u_h.physical)
    horizontal = values[:2]
    interior = horizontal[..., 1:-1]
    rhs = -np.stack([interior @ top[1:-1], interior @ bottom[1:-1]])
    system = np.array([[top[0], top[-1]], [bottom[0], bottom[-1]]])
    ends = np.einsum("ij,j...->i...", np.linalg.inv(system), rhs)
    horizontal[..., 0], horizontal[..., -1] = ends[0], ends[1]
    return Field3D(u_h.geometry, values)


def robin_residual(u_h: Field3D, alpha: float) -> float:
    """Largest residual of the two slip rows over the horizontal grid.

    Returns:
        float: ``max |d3 u_h -+ 2 alpha u_h|`` at the walls.
    """
    top, bottom = _robin_rows(u_h.geometry, alpha)
    horizontal = u_h.physical[:2]
    return float(max(np.abs(horizontal @ top).max(), np.abs(horizontal @ bottom).max()))


def advect_density(rho: Field3D, u: Field3D, dt: float, max_courant: float = 1.0) -> Field3D:
    """Transport ``rho`` by the divergence-free ``u`` over ``dt``.

    Global bounds and total mass are preserved.

    Returns:
        Field3D: The transported density.

    Raises:
        TimeStepRejectedError: If ``dt`` violates the advective CFL limit.
    """
    transported = SemiLagrangian(rho.geometry, max_courant).advect(rho.physical[0], u.physical, dt)
    return Field3D(rho.geometry, transported)


def momentum_flux_divergence(
    rho: Field3D, u: Field3D, dealiaser: Dealiaser | None = None
) -> tuple[FloatArray, FloatArray]:
    """``div(rho u (x) u)`` and ``div(rho u)`` with dealiased products.

    Returns:
        tuple: Physical values ``(3, nh, nh, nv)`` of the momentum flux divergence and ``(1, nh, nh, nv)`` of the
        mass flux divergence.
    """
    geometry = rho.geometry
    dealiaser = dealiaser or Dealiaser(geometry)
    velocity = u.physical
    momentum = dealiaser.product(rho.physical, velocity)
    flux = dealiaser.product(momentum[:, None], velocity[None, :])
    divergence = np.concatenate([div_3d(Field3D(geometry, row)).physical for row in flux])
    return divergence, div_3d(Field3D(geometry, momentum)).physical


def convection(rho: Field3D, u: Field3D, dealiaser: Dealiaser | None = None) -> FloatArray:
    """``div(rho u (x) u) - u div(rho u)`` with dealiased products.

    Returns:
        FloatArray: Physical values ``(3, nh, nh, nv)``.
    """
    dealiaser = dealiaser or Dealiaser(rho.geometry)
    divergence, mass_flux = momentum_flux_divergence(rho, u, dealiaser)
    return divergence - dealiaser.product(u.physical, mass_flux)


@dataclass(frozen=True)
class StepOptions:
    """Knobs of :func:`step_imex`."""

    coriolis: bool = True
    damping: float = INNER_DAMPING
    max_iterations: int = INNER_MAX_ITERATIONS
    tolerance: float = INNER_TOL
    max_courant: float = 1.0

    @classmethod
    def from_config(cls, config: SolverConfig) -> Self:
        """Options of a solver configuration.

        Returns:
            StepOptions: The options.
        """
        return cls(
            coriolis=config.coriolis,
            damping=config.damping,
            max_iterations=config.max_iterations,
            tolerance=config.tolerance,
            max_courant=config.max_courant,
        )


@functools.lru_cache(maxsize=8)
def _viscous_solver(geometry: SlabGeometry, shift: float, alpha: float) -> ConstrainedSolver:
    return ConstrainedSolver(geometry, shift=shift, diffusivity=0.5, alpha=alpha)


class ImexStepper:
    """Reusable operators of :func:`step_imex` for one geometry and regime."""

    def __init__(self, geometry: SlabGeometry, regime: RegimeParams, options: StepOptions | None = None) -> None:
        """Prepare dealiasing, transport and the vertical matrices.

        Args:
            geometry: The slab geometry.
            regime: Rossby number, thickness and slip of the run.
            options: Inner-loop and CFL settings.

        Raises:
            GeometryError: If the geometry thickness differs from the regime's.
        """
        if not math.isclose(geometry.ell, regime.ell, rel_tol=1e-12):
            msg = f"geometry ell={geometry.ell} does not match regime ell={regime.ell}"
            raise GeometryError(msg)
        self.geometry = geometry
        self.regime = regime
        self.options = options or StepOptions()
        self.dealiaser = Dealiaser(geometry)
        self.transport = SemiLagrangian(geometry, self.options.max_courant)
        self._stiffness = geometry.d1.T @ geometry.gram @ geometry.d1
        self._k_squared = geometry.horizontal.k_squared[..., None]

    def _forward(self, values: FloatArray) -> ComplexArray:
        return self.geometry.horizontal.forward(values, axes=(-3, -2))

    def _backward(self, spectrum: ComplexArray) -> FloatArray:
        return self.geometry.horizontal.backward(spectrum, axes=(-3, -2))

    def _mass(self, spectrum: ComplexArray) -> ComplexArray:
        return self.geometry.vertical_matmul(self.geometry.gram, spectrum)

    def _stiffness_loads(self, spectrum: ComplexArray) -> ComplexArray:
        loads = self._k_squared * self._mass(spectrum) + self.geometry.vertical_matmul(self._stiffness, spectrum)
        slip = self.regime.alpha / self.geometry.ell
        loads[:2, ..., 0] += slip * spectrum[:2, ..., 0]
        loads[:2, ..., -1] += slip * spectrum[:2, ..., -1]
        return loads

    def increment(self, u: Field3D, dt: float) -> LedgerIncrement:
        """Dissipation and boundary work of the velocity ``u`` over ``dt``.

        Returns:
            LedgerIncrement: The two ledger terms.
        """
        dissipation = dirichlet_energy(u)
        cell_area = self.geometry.horizontal.cell_area
        traces = float(np.sum(u.physical[:2, ..., 0] ** 2) + np.sum(u.physical[:2, ..., -1] ** 2)) * cell_area
        return LedgerIncrement(dissipation=dt * dissipation, boundary=dt * self.regime.lam * traces)

    def _check_bounds(self, state: State3D, transported: FloatArray) -> None:
        lower, upper = float(state.rho.physical.min()), float(state.rho.physical.max())
        slack = DENSITY_BOUND_TOL * max(1.0, abs(upper))
        if transported.min() < lower - slack or transported.max() > upper + slack:
            msg = (
                f"density left [{lower:.12g}, {upper:.12g}] at t={state.t:.6g}: "
                f"min={transported.min():.12g} max={transported.max():.12g}"
            )
            raise DensityBoundError(msg, state)

    def step(self, state: State3D, dt: float) -> tuple[State3D, LedgerIncrement]:
        """Advance ``state`` by ``dt``.

        Returns:
            tuple: The new state and its ledger increment.

        Raises:
            ConvergenceError: If the fixed-point loop hits its iteration cap.
        """
        geometry, options = self.geometry, self.options
        rho, velocity = state.rho.physical[0], state.u.physical
        if not np.any(velocity):
            return State3D(state.rho, state.u, state.t + dt, state.regime), LedgerIncrement()

        predicted = self.transport.advect(rho, velocity, dt)
        rho_mid = 0.5 * (rho + predicted)
        density = Field3D(geometry, rho_mid)
        reference = 0.5 * float(rho_mid.max() + rho_mid.min())
        variation = rho_mid - reference
        solver = _viscous_solver(geometry, reference / dt, self.regime.alpha)
        explicit = reference / dt * velocity
        base = self._mass(self._forward(explicit)) - 0.5 * self._stiffness_loads(np.array(state.u.horizontal_spectrum))

        iterate, residual = velocity, math.inf
        for iteration in range(1, options.max_iterations + 1):
            midpoint_values = 0.5 * (velocity + iterate)
            remainder = -variation * (iterate - velocity) / dt
            remainder -= convection(density, Field3D(geometry, midpoint_values), self.dealiaser)
            if options.coriolis:
                remainder -= _coriolis_values(rho_mid, midpoint_values) / self.regime.epsilon
            candidate = self._backward(solver.solve(base + self._mass(self._forward(remainder))))
            update = candidate if iteration == 1 else iterate + options.damping * (candidate - iterate)
            scale = float(np.abs(update).max())
            residual = float(np.abs(update - iterate).max()) / scale if scale > 0 else 0.0
            iterate = update
            if iteration > 1 and residual <= options.tolerance:
                break
        else:
            raise ConvergenceError(residual, options.max_iterations)

        projected = projector_for(geometry).project(self._forward(iterate))
        u_next = Field3D(geometry, horizontal_spectrum=projected)
        midpoint = Field3D(geometry, 0.5 * (velocity + u_next.physical))
        transported = self.transport.advect(rho, midpoint.physical, dt)
        self._check_bounds(state, transported)
        rho_next = Field3D(geometry, transported)
        measured = self.increment(midpoint, dt)
        logger.debug("imex step t=%.6g dt=%.3e iterations=%d residual=%.3e", state.t, dt, iteration, residual)
        return (
            State3D(rho_next, u_next, state.t + dt, state.regime),
            LedgerIncrement(measured.dissipation, measured.boundary, iteration, residual),
        )


@functools.lru_cache(maxsize=8)
def _stepper_for(geometry: SlabGeometry, regime: RegimeParams, options: StepOptions) -> ImexStepper:
    return ImexStepper(geometry, regime, options)


def step_imex(state: State3D, dt: float, options: StepOptions | None = None) -> tuple[State3D, LedgerIncrement]:
    """Advance ``state`` by one implicit-explicit step of size ``dt``.

    Returns:
        tuple: The new state and the energy-ledger increment of the step.

    Raises:
        TimeStepRejectedError: If ``dt`` violates the advective CFL limit.
        ConvergenceError: If the rotation-projection loop does not converge.
        DensityBoundError: If the density leaves its bounds.
    """
    return _stepper_for(state.geometry, state.regime, options or StepOptions()).step(state, dt)


def stable_time_step(state: State3D, config: SolverConfig) -> float:
    """``min(dt_max, cfl * dx / max|u_h|, c * eps)``.

    Returns:
        float: The time step.
    """
    speed = float(np.sqrt(state.u.physical[0] ** 2 + state.u.physical[1] ** 2).max())
    advective = config.cfl_number * state.geometry.horizontal.dx / speed if speed > 0 else math.inf
    return min(config.dt_max, advective, config.epsilon_factor * state.regime.epsilon)


@dataclass
class Trajectory:
    """Time-ordered samples of a 3-D run."""

    geometry: SlabGeometry
    regime: RegimeParams
    times: list[float] = field(default_factory=list)
    rho: list[FloatArray] = field(default_factory=list)
    u: list[FloatArray] = field(default_factory=list)

    @classmethod
    def from_states(cls, states: Iterable[State3D]) -> Self:
        """Collect states into a trajectory.

        Returns:
            Trajectory: The samples.

        Raises:
            TrajectoryError: If no state is given.
        """
        materialized = list(states)
        if not materialized:
            msg = "a trajectory needs at least one state"
            raise TrajectoryError(msg)
        trajectory = cls(materialized[0].geometry, materialized[0].regime)
        for state in materialized:
            trajectory.append(state)
        return trajectory

    def append(self, state: State3D) -> None:
        """Add a sample.

        Raises:
            TrajectoryError: If the sample is not later than the last one.
        """
        if self.times and state.t <= self.times[-1]:
            msg = f"sample at t={state.t} does not follow t={self.times[-1]}"
            raise TrajectoryError(msg)
        self.times.append(state.t)
        self.rho.append(state.rho.physical[0])
        self.u.append(state.u.physical)

    def __len__(self) -> int:
        """Number of samples."""
        return len(self.times)

    def subsample(self, stride: int) -> Trajectory:
        """Every ``stride``-th sample, starting with the first.

        Returns:
            Trajectory: The coarser trajectory.

        Raises:
            TrajectoryError: For a stride below one.
        """
        if stride < 1:
            msg = f"stride must be at least 1, got {stride}"
            raise TrajectoryError(msg)
        return Trajectory(self.geometry, self.regime, self.times[::stride], self.rho[::stride], self.u[::stride])

    def state(self, index: int) -> State3D:
        """The sample ``index`` as a state.

        Returns:
            State3D: The state.
        """
        return State3D(
            Field3D(self.geometry, self.rho[index]),
            Field3D(self.geometry, self.u[index]),
            self.times[index],
            self.regime,
        )

    def spacing(self) -> float:
        """The uniform sampling interval.

        Returns:
            float: The interval.

        Raises:
            TrajectoryError: With fewer than two samples or a non-uniform sampling.
        """
        if len(self) < 2:  # noqa: PLR2004
            msg = "at least two samples are needed"
            raise TrajectoryError(msg)
        steps = np.diff(self.times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            msg = "samples are not uniformly spaced"
            raise TrajectoryError(msg)
        return float(steps[0])


@dataclass(frozen=True)
class SeparableTestFunction:
    """Space-time test function ``phi(t, x) = theta(t) Phi(x)``."""

    spatial: Field3D
    theta: Callable[[FloatArray], FloatArray]
    theta_dot: Callable[[FloatArray], FloatArray]

    @classmethod
    def bump(cls, spatial: Field3D, start: float, end: float) -> Self:
        """``theta(t) = cos^2(pi (t - start) / (2 (end - start)))``, which vanishes at ``end``.

        Returns:
            SeparableTestFunction: The test function.

        Raises:
            ParameterError: If the window is empty.
        """
        if end <= start:
            msg = f"empty time window [{start}, {end}]"
            raise ParameterError(msg)
        width = end - start

        def theta(t: FloatArray) -> FloatArray:
            return np.cos(0.5 * np.pi * (np.asarray(t) - start) / width) ** 2

        def theta_dot(t: FloatArray) -> FloatArray:
            return -0.5 * np.pi / width * np.sin(np.pi * (np.asarray(t) - start) / width)

        return cls(spatial, theta, theta_dot)


def _window(trajectory: Trajectory, test: SeparableTestFunction) -> tuple[FloatArray, FloatArray, FloatArray]:
    if len(trajectory) < 2:  # noqa: PLR2004
        msg = "weak residuals need at least two samples"
        raise TrajectoryError(msg)
    if test.spatial.geometry != trajectory.geometry:
        msg = "test function and trajectory live on different geometries"
        raise GeometryError(msg)
    times = np.asarray(trajectory.times)
    theta = test.theta(times)
    if abs(float(theta[-1])) > 1e-12 * max(1.0, float(np.abs(theta).max())):
        msg = f"test function does not vanish at the window end t={times[-1]}"
        raise TrajectoryError(msg)
    return times, theta, test.theta_dot(times)


def _integral(geometry: SlabGeometry, values: FloatArray) -> float:
    return float(np.einsum("...ijk,k->", values, geometry.average_weights)) * geometry.cell_volume


def weak_residual_mass(trajectory: Trajectory, test: SeparableTestFunction) -> float:
    """``-int int rho (d_t phi + u . grad phi) - int rho_in phi(0)`` by the trapezoid rule in time.

    Returns:
        float: The residual.

    Raises:
        TrajectoryError: For fewer than two samples or a test function not vanishing at the last sample.
    """
    times, theta, theta_dot = _window(trajectory, test)
    geometry = trajectory.geometry
    phi = test.spatial.physical[0]
    gradient = grad_3d(test.spatial).physical
    mass = np.array([_integral(geometry, rho * phi) for rho in trajectory.rho])
    flux = np.array([
        _integral(geometry, rho * np.einsum("c...,c...->...", u, gradient))
        for rho, u in zip(trajectory.rho, trajectory.u, strict=True)
    ])
    integrand = theta_dot * mass + theta * flux
    return float(-integrate.trapezoid(integrand, times) - theta[0] * mass[0])


def weak_residual_momentum(trajectory: Trajectory, test: SeparableTestFunction) -> float:
    """Weak momentum residual against a divergence-free ``psi`` with ``psi . n = 0``.

    The residual is

        -int int rho u . d_t psi - int m_in . psi(0) - int int rho u (x) u : grad psi
        + int int grad u : grad psi + 2 alpha int int_walls u . psi + (1 / eps) int int (e3 x rho u) . psi

    with the pressure dropping out against ``psi``.

    Returns:
        float: The residual.

    Raises:
        TrajectoryError: For fewer than two samples or a test function not vanishing at the last sample.
    """
    times, theta, theta_dot = _window(trajectory, test)
    geometry, regime = trajectory.geometry, trajectory.regime
    psi = test.spatial.physical
    psi_gradient = np.stack([grad_3d(test.spatial.component(i)).physical for i in range(3)])
    cell_area = geometry.horizontal.cell_area

    momentum, convective, viscous = [], [], []
    for rho, u in zip(trajectory.rho, trajectory.u, strict=True):
        field_u = Field3D(geometry, u)
        u_gradient = np.stack([grad_3d(field_u.component(i)).physical for i in range(3)])
        momentum.append(_integral(geometry, rho * np.einsum("c...,c...->...", u, psi)))
        convective.append(_integral(geometry, rho * np.einsum("i...,j...,ij...->...", u, u, psi_gradient)))
        walls = float(np.sum(u[:2, ..., 0] * psi[:2, ..., 0]) + np.sum(u[:2, ..., -1] * psi[:2, ..., -1]))
        rotation = _integral(geometry, np.einsum("c...,c...->...", _coriolis_values(rho, u), psi))
        viscous.append(
            _integral(geometry, np.einsum("ij...,ij...->...", u_gradient, psi_gradient))
            + 2 * regime.alpha * walls * cell_area
            + rotation / regime.epsilon
        )
    p, c, v = np.array(momentum), np.array(convective), np.array(viscous)
    return float(integrate.trapezoid(-theta_dot * p - theta * c + theta * v, times) - theta[0] * p[0])
