"""Quasi-homogeneous limit system on the torus in vorticity form.

    d_t r0 + div_h(r0 u) = 0,
    d_t w + u . grad_h w - lap_h w + 2 lam w + curl_h(r0 u_perp) = 0,   u = U + perp_grad_h psi,  lap_h psi = w.

The viscosity is 1. The mean flow ``U`` is invisible to the vorticity and is carried as a constant of the state.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Self

import numpy as np

from .errors import ParameterError, SnapshotFormatError
from .geometry import Field2D, HorizontalGrid
from .models import LimitRow, SolverConfig
from .snapshots import read_checkpoint, write_checkpoint
from .spectral import Dealiaser, curl_h, div_h, grad_h, laplacian_h, leray_project_2d, perp_grad_h
from .transport import SemiLagrangian

if TYPE_CHECKING:
    from pathlib import Path

    from numpy.typing import NDArray

    FloatArray = NDArray[np.float64]
    ComplexArray = NDArray[np.complex128]

logger = logging.getLogger(__name__)

VISCOSITY = 1.0
MEAN_VORTICITY_TOL = 1e-12


@dataclass(frozen=True)
class State2D:
    """Density perturbation ``r0`` and vorticity ``omega`` of the limit flow."""

    r0: Field2D
    omega: Field2D
    lam: float
    t: float = 0.0
    mean_flow: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        """Validate.

        Raises:
            ParameterError: For negative damping, a non-scalar field or a vorticity with nonzero mean.
        """
        if self.lam < 0:
            msg = f"Ekman coefficient must be non-negative, got {self.lam}"
            raise ParameterError(msg)
        if self.r0.components != 1 or self.omega.components != 1:
            msg = "r0 and omega must be scalar fields"
            raise ParameterError(msg)
        _require_zero_mean(self.omega)

    @classmethod
    def from_velocity(cls, r0: Field2D, u: Field2D, lam: float, t: float = 0.0) -> Self:
        """Limit data from a horizontal velocity; ``u`` is Leray-projected first.

        Returns:
            State2D: The state with ``omega = curl_h(P u)`` and the mean of ``u`` as mean flow.
        """
        projected = leray_project_2d(u)
        mean = projected.integral() / u.grid.area
        return cls(r0, curl_h(projected), lam, t, (float(mean[0]), float(mean[1])))

    @property
    def grid(self) -> HorizontalGrid:
        """The horizontal grid."""
        return self.omega.grid

    def velocity(self) -> Field2D:
        """The velocity of :attr:`omega` plus the mean flow.

        Returns:
            Field2D: ``u``.
        """
        return velocity_from_vorticity(self.omega, self.mean_flow)

    def energy(self) -> float:
        """``(1/2) * integral |u|^2``.

        Returns:
            float: The kinetic energy.
        """
        return 0.5 * self.velocity().norm() ** 2

    def enstrophy(self) -> float:
        """``(1/2) * integral omega^2``.

        Returns:
            float: The enstrophy.
        """
        return 0.5 * self.omega.norm() ** 2

    def limit_row(self) -> LimitRow:
        """CSV row of the limit log.

        Returns:
            LimitRow: Energy, enstrophy and the range of ``r0``.
        """
        values = self.r0.physical
        return LimitRow(
            t=self.t,
            energy=self.energy(),
            enstrophy=self.enstrophy(),
            r0_min=float(values.min()),
            r0_max=float(values.max()),
        )

    def save(self, directory: Path) -> None:
        """Write ``r0.eksl``, ``omega.eksl`` and ``checkpoint.json``."""
        write_checkpoint(
            directory,
            {"r0": self.r0, "omega": self.omega},
            {"t": self.t, "lam": self.lam, "mean_flow": list(self.mean_flow)},
        )

    @classmethod
    def load(cls, directory: Path) -> Self:
        """Read a checkpoint written by :meth:`save`.

        Returns:
            State2D: The state.

        Raises:
            SnapshotFormatError: If the checkpoint does not hold horizontal fields.
        """
        fields, metadata = read_checkpoint(directory)
        r0, omega = fields["r0"], fields["omega"]
        if not isinstance(r0, Field2D) or not isinstance(omega, Field2D):
            msg = f"checkpoint {directory} does not hold horizontal fields"
            raise SnapshotFormatError(msg)
        u1, u2 = metadata["mean_flow"]
        return cls(r0, omega, float(metadata["lam"]), float(metadata["t"]), (float(u1), float(u2)))


def _require_zero_mean(omega: Field2D) -> None:
    mean = float(omega.spectral[0, 0, 0].real) / omega.grid.nh**2
    if abs(mean) > MEAN_VORTICITY_TOL * max(1.0, omega.sup()):
        msg = f"vorticity must have zero mean, got {mean:.3e}"
        raise ParameterError(msg)


def velocity_from_vorticity(omega: Field2D, mean_flow: tuple[float, float] = (0.0, 0.0)) -> Field2D:
    """Biot-Savart on the torus: ``u = U + perp_grad_h psi`` with ``lap_h psi = omega``.

    With this convention ``omega = sin(x1)`` gives ``u = (0, -cos(x1))`` and ``curl_h u = omega``.

    Returns:
        Field2D: The divergence-free velocity.

    Raises:
        ParameterError: If ``omega`` has a nonzero mean.
    """
    _require_zero_mean(omega)
    k1, k2 = omega.grid.derivative_wavenumbers
    k_squared = k1**2 + k2**2
    inverse = np.divide(1.0, k_squared, out=np.zeros_like(k_squared), where=k_squared > 0)
    psi = Field2D(omega.grid, spectral=-omega.spectral * inverse)
    u = perp_grad_h(psi)
    if mean_flow == (0.0, 0.0):
        return u
    spectrum = np.array(u.spectral)
    spectrum[:, 0, 0] += np.asarray(mean_flow) * omega.grid.nh**2
    return Field2D(omega.grid, spectral=spectrum)


def _rotated(u: FloatArray) -> FloatArray:
    return np.stack([-u[1], u[0]])


def _nonlinear(state: State2D, r0: Field2D, dealiaser: Dealiaser) -> Field2D:
    """``-u . grad_h omega - curl_h(r0 u_perp)``."""
    u = state.velocity()
    grid = state.grid
    advection = dealiaser.product(u.physical, grad_h(state.omega).physical).sum(axis=0)
    buoyancy = curl_h(Field2D(grid, dealiaser.product(r0.physical, _rotated(u.physical))))
    return Field2D(grid, -advection) - buoyancy


def limit_rhs(state: State2D, dealiaser: Dealiaser | None = None) -> tuple[Field2D, Field2D]:
    """Time derivatives of ``r0`` and ``omega``, with dealiased products.

    Returns:
        tuple: ``(d_t r0, d_t omega)``.
    """
    dealiaser = dealiaser or Dealiaser(state.grid)
    u = state.velocity()
    dr0 = -div_h(Field2D(state.grid, dealiaser.product(state.r0.physical, u.physical)))
    linear = laplacian_h(state.omega) * VISCOSITY - state.omega * (2 * state.lam)
    return dr0, _nonlinear(state, state.r0, dealiaser) + linear


def momentum_rhs(state: State2D, dealiaser: Dealiaser | None = None) -> Field2D:
    """``-div_h(u (x) u) + lap_h u - r0 u_perp - 2 lam u`` with the pressure gradient kept out.

    Its curl equals the vorticity tendency of :func:`limit_rhs`.

    Returns:
        Field2D: The momentum tendency.
    """
    grid = state.grid
    dealiaser = dealiaser or Dealiaser(grid)
    u = state.velocity()
    flux = dealiaser.product(u.physical[:, None], u.physical[None, :])
    convection = np.concatenate([div_h(Field2D(grid, row)).physical for row in flux])
    buoyancy = dealiaser.product(state.r0.physical, _rotated(u.physical))
    return Field2D(grid, -convection - buoyancy) + laplacian_h(u) * VISCOSITY - u * (2 * state.lam)


class LimitStepper:
    """Integrating-factor Heun steps of the limit system on one grid."""

    def __init__(self, grid: HorizontalGrid, lam: float, max_courant: float = 1.0) -> None:
        """Prepare dealiasing and transport.

        Args:
            grid: The horizontal grid.
            lam: Ekman coefficient.
            max_courant: Largest admitted Courant number of the transport of ``r0``.
        """
        self.grid = grid
        self.lam = lam
        self.dealiaser = Dealiaser(grid)
        self.transport = SemiLagrangian(grid, max_courant)
        self._decay = VISCOSITY * grid.k_squared + 2 * lam

    def step(self, state: State2D, dt: float) -> State2D:
        """Advance ``state`` by ``dt``.

        Returns:
            State2D: The new state.

        Raises:
            TimeStepRejectedError: If ``dt`` violates the advective CFL limit.
        """
        factor = np.exp(-self._decay * dt)
        velocity = state.velocity().physical
        r0_next = Field2D(self.grid, self.transport.advect(state.r0.physical[0], velocity, dt))
        start = _nonlinear(state, state.r0, self.dealiaser).spectral
        predicted = factor * (state.omega.spectral + dt * start)
        predictor = replace(state, omega=Field2D(self.grid, spectral=predicted))
        end = _nonlinear(predictor, r0_next, self.dealiaser).spectral
        omega_next = factor * state.omega.spectral + 0.5 * dt * (factor * start + end)
        omega_next[0, 0, 0] = 0.0
        return replace(state, r0=r0_next, omega=Field2D(self.grid, spectral=omega_next), t=state.t + dt)


def step2d(state: State2D, dt: float, max_courant: float = 1.0) -> State2D:
    """Advance the limit system by one step of size ``dt``.

    The linear part ``lap_h - 2 lam`` is integrated exactly, convection and the ``r0`` coupling by Heun's method,
    and ``r0`` is transported with the bounded semi-Lagrangian scheme.

    Returns:
        State2D: The new state.

    Raises:
        TimeStepRejectedError: If ``dt`` violates the advective CFL limit.
    """
    return LimitStepper(state.grid, state.lam, max_courant).step(state, dt)


def stable_time_step_2d(state: State2D, config: SolverConfig) -> float:
    """``min(dt_max, cfl * dx / max|u|)``.

    Returns:
        float: The time step.
    """
    speed = state.velocity().sup()
    advective = config.cfl_number * state.grid.dx / speed if speed > 0 else math.inf
    return min(config.dt_max, advective)
