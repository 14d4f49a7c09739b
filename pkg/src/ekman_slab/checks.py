"""Checks on closed-form data that a sweep runs next to its members.

They measure the Ekman damping rate of the limit system, the thin-domain Poincare and averaging-defect scaling in
the half thickness, and the decay of the commutator of the cutoff with the reference density.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .diagnostics import averaging_product_defect, poincare_defect
from .geometry import Field2D, Field3D, HorizontalGrid, SlabGeometry
from .initial_data import DENSITY_PROFILES, random_phase_field
from .models import DampingRate
from .rates import fit_rate
from .solver2d import LimitStepper, State2D
from .spectral import commutator_slope

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import NDArray

    from .models import DataConfig, FitResult, GeometryConfig, RunConfig

    FloatArray = NDArray[np.float64]

logger = logging.getLogger(__name__)

DAMPING_GRID = 16


def damping_rates(
    lams: Sequence[float], dt: float, t_final: float, grid: HorizontalGrid | None = None
) -> list[DampingRate]:
    """Energy decay rate of the vorticity ``sin(k (x1 + x2))`` against ``2 (|k|^2 + 2 lam)``.

    A single mode is a steady shape of the nonlinear flow, so only viscosity and Ekman friction act on it.

    Returns:
        list: One rate per ``lam``.
    """
    grid = grid or HorizontalGrid(nh=DAMPING_GRID)
    k = 2 * math.pi / grid.horizontal_period
    omega = Field2D.from_function(grid, lambda x1, x2: np.sin(k * (x1 + x2)))
    steps = max(1, round(t_final / dt))
    dt = t_final / steps
    rates = []
    for lam in lams:
        state = State2D(Field2D.zeros(grid), omega, lam)
        stepper = LimitStepper(grid, lam)
        initial = state.energy()
        for _ in range(steps):
            state = stepper.step(state, dt)
        measured = -math.log(state.energy() / initial) / t_final
        rates.append(DampingRate(lam=lam, measured=measured, expected=2 * (2 * k**2 + 2 * lam)))
        logger.debug("damping rate lam=%.6g measured=%.8g expected=%.8g", lam, measured, rates[-1].expected)
    return rates


def _slabs(config: GeometryConfig, ells: Sequence[float]) -> list[SlabGeometry]:
    return [SlabGeometry(config.horizontal_period, config.nh, config.nv, ell) for ell in sorted(set(ells))]


def _columnar_velocity(geometry: SlabGeometry, vertical: FloatArray) -> Field3D:
    """``(cos(k x2) sin(x3), sin(k x1) vertical, 0)`` with ``k`` the lowest wavenumber of the torus."""
    x1, x2, x3 = geometry.mesh
    k = 2 * math.pi / geometry.horizontal_period
    return Field3D(geometry, np.stack([np.cos(k * x2) * np.sin(x3), np.sin(k * x1) * vertical, np.zeros_like(x1)]))


def poincare_scaling(config: GeometryConfig, ells: Sequence[float]) -> FitResult:
    """Fit ``||u - u_bar||`` against ``ell`` for a velocity whose vertical profile does not depend on ``ell``.

    Returns:
        FitResult: The fit; its exponent is 1 for a smooth profile.
    """
    pairs = []
    for geometry in _slabs(config, ells):
        x3 = geometry.mesh[2]
        u = _columnar_velocity(geometry, x3 + x3**2)
        pairs.append((geometry.ell, math.sqrt(poincare_defect(u).lhs)))
    return fit_rate(pairs)


def averaging_scaling(config: GeometryConfig, ells: Sequence[float]) -> FitResult:
    """Fit ``||avg(f u) - avg(f) avg(u)||`` against ``ell``.

    The multiplier ``f`` is layered across the whole slab, the velocity ``u`` has a profile in ``x3`` that does not
    depend on ``ell``.

    Returns:
        FitResult: The fit; its exponent is 1.
    """
    pairs = []
    for geometry in _slabs(config, ells):
        x1, _, x3 = geometry.mesh
        k = 2 * math.pi / geometry.horizontal_period
        f = Field3D(geometry, 1 + 0.5 * np.sin(k * x1) * np.sin(0.5 * np.pi * x3 / geometry.ell))
        u = _columnar_velocity(geometry, np.sin(x3))
        pairs.append((geometry.ell, averaging_product_defect(f, u).defect_norm))
    return fit_rate(pairs)


def commutator_scaling(data: DataConfig, grid: HorizontalGrid, levels: Sequence[int], seed: int) -> FitResult | None:
    """Fit ``||S_M(rho0 f) - rho0 S_M f||`` against ``2**M`` for a random-phase ``f`` with flat dyadic shells.

    Returns:
        FitResult | None: The fit, whose exponent is the slope of ``log2`` of the norm against ``M``; ``None`` for a
        constant reference density, where the commutator vanishes.
    """
    rho0 = DENSITY_PROFILES[data.rho0.profile](grid, data.rho0)
    if np.ptp(rho0.physical) == 0:
        return None
    f = random_phase_field(grid, seed)
    ordered = sorted(set(levels))
    _, norms = commutator_slope(rho0, f, ordered)
    return fit_rate((2.0**level, norm) for level, norm in zip(ordered, norms, strict=True))


@dataclass
class CheckResults:
    """Fits and damping rates of :func:`run_checks`."""

    fits: dict[str, FitResult] = field(default_factory=dict)
    damping: list[DampingRate] = field(default_factory=list)


def run_checks(config: RunConfig) -> CheckResults:
    """Run every check of the ``checks`` block; nothing when it is disabled.

    Returns:
        CheckResults: Fits keyed ``poincare_scaling``, ``averaging_defect`` and ``commutator``, plus the damping rates.
    """
    block = config.checks
    results = CheckResults()
    if not block.enabled:
        return results
    results.damping = damping_rates(block.lams, block.damping_dt, block.damping_t_final)
    results.fits["poincare_scaling"] = poincare_scaling(config.geometry, block.ells)
    results.fits["averaging_defect"] = averaging_scaling(config.geometry, block.ells)
    grid = HorizontalGrid(config.geometry.horizontal_period, block.commutator_nh)
    commutator = commutator_scaling(config.data, grid, block.commutator_levels, config.data.seed)
    if commutator is not None:
        results.fits["commutator"] = commutator
    logger.info("checks finished fits=%s damping=%d", sorted(results.fits), len(results.damping))
    return results
