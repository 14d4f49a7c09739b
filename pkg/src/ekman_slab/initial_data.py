"""Initial data of the slab family and the admissibility suite they must pass.

The density is ``rho_in = rho0(x_h) + eps * r_in`` and the momentum ``m_in = rho_in * u_in`` with ``u_in``
divergence-free, impermeable at the walls and compatible with the slip law.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .constants import PROJECTION_TOL
from .diagnostics import nondegeneracy_measure
from .errors import AdmissibilityError
from .geometry import Field2D, Field3D, SlabGeometry, lift, vertical_average
from .models import (
    AdmissibilityReport,
    DataConfig,
    DensityProfile,
    DensitySpec,
    HypothesisCheck,
    PerturbationProfile,
    PerturbationSpec,
    RegimeParams,
    VelocityProfile,
    VelocitySpec,
)
from .solver2d import State2D
from .solver3d import State3D, apply_robin_bc
from .spectral import div_3d, grad_h, perp_grad_h

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import NDArray

    from .geometry import HorizontalGrid

    FloatArray = NDArray[np.float64]

logger = logging.getLogger(__name__)

NONDEGENERACY_LEVELS = (0.2, 0.1, 0.05, 0.025)


def _wavenumber(period: float) -> float:
    return 2 * math.pi / period


def _constant_density(grid: HorizontalGrid, spec: DensitySpec) -> Field2D:
    return Field2D(grid, np.full((grid.nh, grid.nh), spec.value))


def _product_sine_density(grid: HorizontalGrid, spec: DensitySpec) -> Field2D:
    k = _wavenumber(grid.horizontal_period)
    return Field2D.from_function(grid, lambda x1, x2: spec.value + spec.amplitude * np.sin(k * x1) * np.sin(k * x2))


DENSITY_PROFILES: dict[DensityProfile, Callable[[HorizontalGrid, DensitySpec], Field2D]] = {
    DensityProfile.CONSTANT: _constant_density,
    DensityProfile.PRODUCT_SINE: _product_sine_density,
}


def _layer(geometry: SlabGeometry, layering: float) -> FloatArray:
    """``1 + layering * cos(pi x3 / ell)``, whose vertical average is 1."""
    return 1.0 + layering * np.cos(np.pi * geometry.mesh[2] / geometry.ell)


def _perturbation(geometry: SlabGeometry, spec: PerturbationSpec) -> Field3D:
    x1 = geometry.mesh[0]
    k = _wavenumber(geometry.horizontal_period)
    match spec.profile:
        case PerturbationProfile.ZERO:
            values = np.zeros_like(x1)
        case PerturbationProfile.CONSTANT:
            values = np.full_like(x1, spec.amplitude)
        case PerturbationProfile.SINE:
            values = spec.amplitude * np.sin(k * x1)
        case PerturbationProfile.LAYERED_SINE:
            values = spec.amplitude * np.sin(k * x1) * _layer(geometry, spec.layering)
    return Field3D(geometry, values)


def _random_stream(grid: HorizontalGrid, modes: int, seed: int) -> Field2D:
    rng = np.random.default_rng(seed)
    k1, k2 = grid.wavenumbers
    scale = _wavenumber(grid.horizontal_period)
    band = (np.abs(k1) <= modes * scale) & (np.abs(k2) <= modes * scale) & (grid.k_squared > 0)
    coefficients = rng.standard_normal(grid.spectral_shape) + 1j * rng.standard_normal(grid.spectral_shape)
    coefficients = np.where(band, coefficients / np.maximum(grid.k_squared, 1.0), 0.0)
    return Field2D(grid, grid.backward(coefficients))


def random_phase_field(grid: HorizontalGrid, seed: int, decay: float = 1.0) -> Field2D:
    """Zero-mean field with seeded random phases and ``|f_k| = |k|**-decay`` inside the largest resolved circle.

    For ``decay = 1`` every dyadic shell of wavenumbers carries the same energy.

    Returns:
        Field2D: The field.
    """
    rng = np.random.default_rng(seed)
    noise = grid.forward(rng.standard_normal((grid.nh, grid.nh)))
    magnitude = np.sqrt(grid.k_squared)
    band = (magnitude > 0) & (magnitude < _wavenumber(grid.horizontal_period) * (grid.nh // 2))
    phases = noise / np.maximum(np.abs(noise), np.finfo(float).tiny)
    amplitude = np.where(band, np.maximum(magnitude, np.finfo(float).tiny) ** -decay, 0.0)
    return Field2D(grid, grid.backward(phases * amplitude))


def _velocity(geometry: SlabGeometry, spec: VelocitySpec, seed: int) -> Field3D:
    grid = geometry.horizontal
    x1, x2, _ = geometry.mesh
    k = _wavenumber(geometry.horizontal_period)
    zeros = np.zeros_like(x1)
    match spec.profile:
        case VelocityProfile.REST:
            return Field3D.zeros(geometry, 3)
        case VelocityProfile.SHEAR:
            values = np.stack([np.sin(k * x2), zeros, zeros])
        case VelocityProfile.LAYERED_SHEAR:
            values = np.stack([np.sin(k * x2) * _layer(geometry, spec.layering), zeros, zeros])
        case VelocityProfile.TAYLOR_GREEN:
            layer = _layer(geometry, spec.layering)
            values = np.stack([np.sin(k * x1) * np.cos(k * x2), -np.cos(k * x1) * np.sin(k * x2), zeros]) * layer
        case VelocityProfile.RANDOM:
            horizontal = perp_grad_h(_random_stream(grid, spec.modes, seed)).physical
            horizontal = horizontal / max(float(np.abs(horizontal).max()), np.finfo(float).tiny)
            values = np.concatenate([horizontal[..., None] * _layer(geometry, spec.layering)[None], zeros[None]])
    return Field3D(geometry, spec.amplitude * values)


def reference_density(data: DataConfig, geometry: SlabGeometry) -> Field2D:
    """The reference density ``rho0`` of the data block.

    Returns:
        Field2D: ``rho0``.
    """
    return DENSITY_PROFILES[data.rho0.profile](geometry.horizontal, data.rho0)


@dataclass(frozen=True)
class InitialData:
    """Generated data of one regime, with the outcome of the admissibility suite."""

    regime: RegimeParams
    rho0: Field2D
    r_in: Field3D
    rho_in: Field3D
    u_in: Field3D
    m_in: Field3D
    report: AdmissibilityReport

    def state(self) -> State3D:
        """The initial slab state.

        Returns:
            State3D: ``(rho_in, u_in)`` at ``t = 0``.
        """
        return State3D(self.rho_in, self.u_in, 0.0, self.regime)

    def limit_data(self) -> State2D:
        """Matched limit data ``r0 = avg(r_in)`` and ``u = P(avg(m_in_h) / rho0)``.

        Returns:
            State2D: The limit state at ``t = 0``.
        """
        grid = self.rho0.grid
        averaged = vertical_average(self.m_in.horizontal_part())
        velocity = Field2D(grid, averaged.physical / self.rho0.physical)
        return State2D.from_velocity(vertical_average(self.r_in), velocity, self.regime.lam)


def velocity_from_momentum(rho: Field3D, m: Field3D) -> Field3D:
    """``u = m / rho`` where ``rho > 0`` and 0 in vacuum.

    Returns:
        Field3D: The velocity.
    """
    density = rho.physical
    safe = np.where(density > 0, density, 1.0)
    return Field3D(rho.geometry, np.where(density > 0, m.physical / safe, 0.0))


def _negative_sobolev_norm(f: Field2D) -> float:
    """``||(1 - lap_h)^-1 f||``, the ``H^-2`` norm over the discrete spectrum."""
    return Field2D(f.grid, spectral=f.spectral / (1.0 + f.grid.k_squared)).norm()


def _energy(rho: Field3D, m: Field3D) -> float:
    density = rho.physical[0]
    squared = np.sum(m.physical**2, axis=0)
    safe = np.where(density > 0, density, 1.0)
    vacuum = np.where(squared > 0, np.inf, 0.0)
    density_part = np.where(density > 0, squared / safe, vacuum)
    geometry = rho.geometry
    return float(np.sum(density_part @ geometry.average_weights)) * geometry.horizontal.cell_area


def check_initial_data(
    data: DataConfig,
    rho0: Field2D,
    r_in: Field3D,
    rho_in: Field3D,
    m_in: Field3D,
) -> AdmissibilityReport:
    """Run the admissibility suite.

    Returns:
        AdmissibilityReport: One check per named hypothesis and the non-degeneracy fractions.
    """
    geometry = rho_in.geometry
    rho_star = data.rho_star or float(rho0.physical.max())
    density = rho_in.physical
    checks = [
        HypothesisCheck(
            name="density_bounds",
            passed=bool(density.min() >= 0 and density.max() <= 2 * rho_star),
            value=float(density.min()),
            threshold=2 * rho_star,
            detail=f"min={density.min():.6g} max={density.max():.6g} rho_star={rho_star:.6g}",
        )
    ]

    energy = _energy(rho_in, m_in)
    checks.append(
        HypothesisCheck(name="energy_bound", passed=energy <= data.energy_cap, value=energy, threshold=data.energy_cap)
    )

    r_bar = vertical_average(r_in)
    size = max(r_bar.sup(), _negative_sobolev_norm(r_bar))
    checks.append(
        HypothesisCheck(
            name="perturbation_bound",
            passed=size <= data.perturbation_cap,
            value=size,
            threshold=data.perturbation_cap,
            detail=f"sup={r_bar.sup():.6g} h_minus_2={_negative_sobolev_norm(r_bar):.6g}",
        )
    )

    safe = np.where(density > 0, density, np.inf)
    near_vacuum = Field3D(geometry, np.where(density <= data.vacuum_delta, 1.0 / safe, 0.0))
    vacuum = float(near_vacuum.integral()[0]) / (2 * geometry.ell)
    checks.append(
        HypothesisCheck(
            name="vacuum_integrability", passed=vacuum <= data.vacuum_cap, value=vacuum, threshold=data.vacuum_cap
        )
    )

    fractions: dict[float, float] = {}
    if grad_h(rho0).sup() > 0:
        fractions = {delta: nondegeneracy_measure(rho0, delta, refine=4) for delta in NONDEGENERACY_LEVELS}
        values = list(fractions.values())
        decreasing = all(later <= earlier for earlier, later in zip(values, values[1:], strict=False))
        smallest = values[-1]
        checks.append(
            HypothesisCheck(
                name="nondegeneracy",
                passed=decreasing and smallest <= data.nondegeneracy_threshold,
                value=smallest,
                threshold=data.nondegeneracy_threshold,
                detail=", ".join(f"{delta:g}:{fraction:.4f}" for delta, fraction in fractions.items()),
            )
        )
    else:
        checks.append(HypothesisCheck(name="nondegeneracy", passed=True, detail="constant reference density"))

    u_in = velocity_from_momentum(rho_in, m_in)
    divergence = div_3d(u_in).sup()
    walls = float(np.abs(u_in.physical[2][..., [0, -1]]).max())
    tolerance = PROJECTION_TOL * max(1.0, u_in.sup())
    checks.append(
        HypothesisCheck(
            name="solenoidal_momentum",
            passed=divergence <= tolerance and walls <= tolerance,
            value=max(divergence, walls),
            threshold=tolerance,
            detail=f"div={divergence:.3e} u3_walls={walls:.3e}",
        )
    )
    return AdmissibilityReport(checks=checks, nondegeneracy_fractions=fractions)


def build_initial_data(data: DataConfig, regime: RegimeParams, geometry: SlabGeometry) -> InitialData:
    """Build ``(rho_in, m_in)`` from the registries and run the admissibility suite without judging it.

    Returns:
        InitialData: The data and their admissibility report.
    """
    geometry = geometry.with_ell(regime.ell)
    rho0 = reference_density(data, geometry)
    r_in = _perturbation(geometry, data.perturbation)
    rho_in = lift(rho0, geometry) + r_in * regime.epsilon
    u_in = _velocity(geometry, data.velocity, data.seed)
    if data.velocity.profile != VelocityProfile.REST:
        u_in = apply_robin_bc(u_in, regime.alpha)
    m_in = u_in * rho_in
    report = check_initial_data(data, rho0, r_in, rho_in, m_in)
    return InitialData(regime, rho0, r_in, rho_in, velocity_from_momentum(rho_in, m_in), m_in, report)


def gen_initial_data(data: DataConfig, regime: RegimeParams, geometry: SlabGeometry) -> InitialData:
    """Build ``(rho_in, m_in)`` from the registries and reject them unless every hypothesis holds.

    Args:
        data: Data block of the run configuration.
        regime: Parameters of the family member.
        geometry: The slab grid; its thickness is replaced by the regime's.

    Returns:
        InitialData: The admitted data.

    Raises:
        AdmissibilityError: Naming every violated hypothesis.
    """
    initial = build_initial_data(data, regime, geometry)
    report = initial.report
    if not report.accepted:
        logger.warning(
            "initial data rejected eps=%.6g violations=%s", regime.epsilon, ",".join(c.name for c in report.violations)
        )
        raise AdmissibilityError(report.violations)
    logger.debug("initial data accepted eps=%.6g", regime.epsilon)
    return initial
