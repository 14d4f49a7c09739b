"""Derived fields, functional inequalities and exact-identity residuals of slab states and trajectories.

Norms on the torus are ``L^2(T^2)`` norms. Vertical averages and averaged norms use the Clenshaw-Curtis weights of
the geometry, so every norm-of-the-average is bounded by the matching average-of-the-norm in exact arithmetic.
"""

from __future__ import annotations

import csv
import functools
import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from scipy import ndimage, signal, stats

from .constants import RESIDUAL_ORDER_STRIDES
from .errors import FitError, GeometryError, ParameterError, TrajectoryError
from .geometry import Field2D, Field3D, Side, boundary_trace, exact_inner, lift, vertical_average
from .models import DiagnosticsRecord, NormPair
from .rates import fit_rate
from .solver3d import momentum_flux_divergence, robin_residual
from .spectral import (
    CutoffKernel,
    Dealiaser,
    curl_h,
    d3,
    dirichlet_energy,
    div_h,
    grad_h,
    laplacian_h,
    leray_project_2d,
    perp_grad_h,
    spectral_cutoff,
)

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence
    from pathlib import Path

    from numpy.typing import NDArray

    from .geometry import SlabGeometry
    from .solver2d import State2D
    from .solver3d import State3D, Trajectory

    FloatArray = NDArray[np.float64]

logger = logging.getLogger(__name__)


class Inequality(NamedTuple):
    """Both sides of an inequality ``lhs <= C rhs`` and their ratio."""

    lhs: float
    rhs: float
    ratio: float


class DefectBound(NamedTuple):
    """A defect norm next to its a-priori bound."""

    defect_norm: float
    bound: float


class Vorticities(NamedTuple):
    """Averaged and boundary vorticities of a slab state."""

    eta_bar: Field2D
    omega_bar: Field2D
    omega_plus: Field2D
    omega_minus: Field2D


class ConstraintNorms(NamedTuple):
    """Norms of ``div_h u`` and ``div_h(rho0 u)``."""

    div_u: float
    div_rho0u: float


class Perturbation(NamedTuple):
    """Scaled density perturbation and its range."""

    field: Field3D
    minimum: float
    maximum: float


@dataclass(frozen=True)
class Series:
    """Values at the interior samples of a trajectory."""

    times: list[float]
    values: list[float]


@dataclass(frozen=True)
class WaveResidual:
    """Residual norms of the filtered wave system, and the norm of its forcing."""

    times: list[float]
    sigma: list[float]
    eta: list[float]
    forcing: list[float]


@dataclass(frozen=True)
class Decomposition:
    """Norms of the pieces of the filtered averaged momentum, one entry per cutoff level."""

    levels: list[int]
    h: list[float]
    zeta: list[float]
    zeta_sup: list[float]
    g: list[float]
    identity_residual: list[float]
    slope: float | None


@dataclass(frozen=True)
class UniformBounds:
    """Jensen pairs of the averaged bounds, the energy fraction and the near-vacuum integral."""

    pairs: dict[str, NormPair]
    energy_fraction: float
    vacuum: float


def _ratio(lhs: float, rhs: float) -> float:
    if rhs == 0:
        return 0.0 if lhs == 0 else math.inf
    return lhs / rhs


def _average(geometry: SlabGeometry, values: FloatArray) -> FloatArray:
    return values @ geometry.average_weights


def _l2(grid_area: float, values: FloatArray) -> float:
    return math.sqrt(float(np.sum(values**2)) * grid_area)


def sigma_field(state: State3D, rho0: Field2D) -> Field2D:
    """Vertical average of ``(rho - rho0) / eps``.

    Returns:
        Field2D: ``sigma_bar``.

    Raises:
        ParameterError: For ``eps = 0``.
    """
    epsilon = state.regime.epsilon
    if epsilon <= 0:
        msg = f"epsilon must be positive, got {epsilon}"
        raise ParameterError(msg)
    return vertical_average((state.rho - lift(rho0, state.geometry)) * (1.0 / epsilon))


def eta_omega_fields(state: State3D) -> Vorticities:
    """Averages of ``curl_h(rho u_h)`` and ``curl_h(u_h)`` and the vorticities at both walls.

    Returns:
        Vorticities: ``eta_bar``, ``omega_bar``, ``omega_plus`` and ``omega_minus``.
    """
    u_h = state.u.horizontal_part()
    momentum = u_h * state.rho
    return Vorticities(
        eta_bar=curl_h(vertical_average(momentum)),
        omega_bar=curl_h(vertical_average(u_h)),
        omega_plus=curl_h(boundary_trace(u_h, Side.TOP)),
        omega_minus=curl_h(boundary_trace(u_h, Side.BOTTOM)),
    )


def _fluctuation(u: Field3D) -> Field3D:
    values = u.physical
    mean = _average(u.geometry, values)
    return Field3D(u.geometry, values - mean[..., None])


def poincare_defect(u: Field3D) -> Inequality:
    """Thin-domain Poincare inequality ``(1 / 2 ell) int |u - u_bar|^2 <= C ell int |Du|^2``.

    Returns:
        Inequality: Left side, ``ell`` times the full gradient mass, and their ratio (0 when both vanish).
    """
    geometry = u.geometry
    fluctuation = _fluctuation(u)
    lhs = exact_inner(fluctuation, fluctuation)
    rhs = geometry.ell * 2 * geometry.ell * dirichlet_energy(u)
    return Inequality(lhs, rhs, _ratio(lhs, rhs))


def averaging_product_defect(f: Field3D, u: Field3D) -> DefectBound:
    """``||avg(f u) - avg(f) avg(u)||`` and the bound ``(2 / pi) ell ||f||_inf (avg ||Du||^2)^(1/2)``.

    The constant ``2 ell / pi`` is the sharp Poincare constant of the interval ``[-ell, ell]``.

    Returns:
        DefectBound: The defect norm and its bound.

    Raises:
        GeometryError: If ``f`` is not a scalar.
    """
    if f.components != 1:
        msg = "the multiplier must be a scalar field"
        raise GeometryError(msg)
    f._check(u)  # noqa: SLF001
    geometry = u.geometry
    product = _average(geometry, f.physical * u.physical)
    split = _average(geometry, f.physical) * _average(geometry, u.physical)
    defect = _l2(geometry.horizontal.cell_area, product - split)
    bound = 2 / math.pi * geometry.ell * float(np.abs(f.physical).max()) * math.sqrt(dirichlet_energy(u))
    return DefectBound(defect, bound)


def sobolev_defect(u: Field3D) -> Inequality:
    """Thin-domain ``L^6`` inequality: ``(avg int |u|^6)^(1/6)`` against ``(avg int |u|^2 + |Du|^2)^(1/2)``.

    Returns:
        Inequality: Both sides and their ratio.
    """
    geometry = u.geometry
    sixth = np.sum(u.physical**2, axis=0) ** 3
    lhs = (float(np.sum(_average(geometry, sixth))) * geometry.horizontal.cell_area) ** (1 / 6)
    rhs = math.sqrt(exact_inner(u, u) + dirichlet_energy(u))
    return Inequality(lhs, rhs, _ratio(lhs, rhs))


def vertical_velocity_bound(u: Field3D) -> Inequality:
    """``max_x3 ||u3(., x3)||^2 <= 4 ell^2 avg ||d3 u3||^2``, which holds because ``u3`` vanishes at the walls.

    Returns:
        Inequality: Both sides and their ratio, at most 1.
    """
    geometry = u.geometry
    u3 = u.component(2)
    cell_area = geometry.horizontal.cell_area
    lhs = float(np.max(np.sum(u3.physical[0] ** 2, axis=(0, 1)))) * cell_area
    derivative = d3(u3)
    rhs = 4 * geometry.ell**2 * exact_inner(derivative, derivative)
    return Inequality(lhs, rhs, _ratio(lhs, rhs))


def _pair(geometry: SlabGeometry, values: FloatArray) -> NormPair:
    """``||f_bar||`` and ``(avg ||f||^2)^(1/2)`` of component-leading values."""
    cell_area = geometry.horizontal.cell_area
    mean = _average(geometry, values)
    slices = np.sum(values**2, axis=tuple(range(values.ndim - 1))) * cell_area
    return NormPair(
        norm_of_average=_l2(cell_area, mean),
        average_of_norm=math.sqrt(float(slices @ geometry.average_weights)),
    )


def uniform_bounds_record(state: State3D, initial_energy: float, delta: float) -> UniformBounds:
    """Averaged bounds of the density, ``sqrt(rho) u``, ``u`` and ``Du`` with the near-vacuum proxy.

    Args:
        state: The slab state.
        initial_energy: Initial energy of the run.
        delta: Level of the near-vacuum set ``{rho <= delta}``.

    Returns:
        UniformBounds: Jensen pairs, the energy fraction ``avg ||sqrt(rho) u||^2 / initial_energy``
            and the vacuum integral ``avg int (1 / rho) 1{rho <= delta}``.

    Raises:
        ParameterError: If ``delta`` is not positive.
    """
    if delta <= 0:
        msg = f"vacuum level must be positive, got {delta}"
        raise ParameterError(msg)
    geometry = state.geometry
    rho = state.rho.physical[0]
    u = state.u.physical
    weighted = np.sqrt(np.clip(rho, 0.0, None)) * u
    gradient = np.concatenate([
        np.stack([*grad_h(state.u.component(i)).physical, d3(state.u.component(i)).physical[0]])
        for i in range(3)
    ])
    density_sup = NormPair(
        norm_of_average=float(np.abs(_average(geometry, rho)).max()),
        average_of_norm=float(np.abs(rho).max(axis=(0, 1)) @ geometry.average_weights),
    )
    momentum = _pair(geometry, weighted)
    near_vacuum = np.where(rho <= delta, 1.0 / np.where(rho > 0, rho, np.inf), 0.0)
    vacuum = float(np.sum(_average(geometry, near_vacuum))) * geometry.horizontal.cell_area
    return UniformBounds(
        pairs={
            "density_sup": density_sup,
            "momentum": momentum,
            "velocity": _pair(geometry, u),
            "gradient": _pair(geometry, gradient),
            "vacuum": NormPair(norm_of_average=vacuum, average_of_norm=vacuum),
        },
        energy_fraction=_ratio(momentum.average_of_norm**2, initial_energy),
        vacuum=vacuum,
    )


def perturbation_field(state: State3D, rho0: Field2D) -> Perturbation:
    """``r = (rho - rho0) / eps`` on the slab, not averaged.

    Returns:
        Perturbation: The field and its range.
    """
    field = (state.rho - lift(rho0, state.geometry)) * (1.0 / state.regime.epsilon)
    return Perturbation(field, float(field.physical.min()), float(field.physical.max()))


def projected_momentum_defect(state: State3D) -> float:
    """``||P avg(rho u_h) - avg(u_h)||``.

    Returns:
        float: The defect norm.
    """
    u_h = state.u.horizontal_part()
    return (leray_project_2d(vertical_average(u_h * state.rho)) - vertical_average(u_h)).norm()


def initial_vorticity_balance(
    rho_in: Field3D,
    m_in: Field3D,
    rho0: Field2D,
    limit: State2D,
    epsilon: float,
) -> float:
    """Mismatch of ``curl_h(m_bar_h) - sigma_bar`` at ``t = 0`` against ``curl_h(rho0 u) - r0`` of the limit data.

    Returns:
        float: The norm of the difference.
    """
    geometry = rho_in.geometry
    sigma = vertical_average((rho_in - lift(rho0, geometry)) * (1.0 / epsilon))
    averaged = curl_h(vertical_average(m_in.horizontal_part())) - sigma
    matched = curl_h(limit.velocity() * rho0) - limit.r0
    return (averaged - matched).norm()


def theta_field(rho0: Field2D, u_bar: Field2D) -> Field2D:
    """``-(perp_grad rho0 . u) u_perp + (grad rho0 . u) u``.

    Returns:
        Field2D: The vector field, equal to ``|u|^2 grad rho0`` pointwise.
    """
    gradient = grad_h(rho0).physical
    rotated_gradient = perp_grad_h(rho0).physical
    u = u_bar.physical
    u_perp = np.stack([-u[1], u[0]])
    along = np.sum(gradient * u, axis=0)
    across = np.sum(rotated_gradient * u, axis=0)
    return Field2D(u_bar.grid, -across * u_perp + along * u)


def nondegeneracy_measure(rho0: Field2D, delta: float, refine: int = 1) -> float:
    """Area fraction of ``{|grad_h rho0| <= delta}`` by grid-cell counting.

    Args:
        rho0: Reference density.
        delta: Level of the set.
        refine: Factor of the Fourier-interpolated counting grid.

    Returns:
        float: The fraction in ``[0, 1]``.

    Raises:
        ParameterError: If ``delta`` or ``refine`` is not positive.
    """
    if delta <= 0 or refine < 1:
        msg = f"invalid level delta={delta} refine={refine}"
        raise ParameterError(msg)
    gradient = grad_h(rho0).physical
    if refine > 1:
        size = rho0.grid.nh * refine
        gradient = signal.resample(signal.resample(gradient, size, axis=1), size, axis=2)
    magnitude = np.sqrt(np.sum(gradient**2, axis=0))
    return float(np.mean(magnitude <= delta))


def nondegeneracy_monte_carlo(rho0: Field2D, delta: float, samples: int = 100_000, seed: int = 0) -> float:
    """Random-point estimate of :func:`nondegeneracy_measure`, with cubic interpolation of the gradient.

    Returns:
        float: The estimated fraction.

    Raises:
        ParameterError: If ``delta`` or ``samples`` is not positive.
    """
    if delta <= 0 or samples < 1:
        msg = f"invalid level delta={delta} samples={samples}"
        raise ParameterError(msg)
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.0, rho0.grid.nh, size=(2, samples))
    gradient = grad_h(rho0).physical
    values = np.stack([ndimage.map_coordinates(g, points, order=3, mode="grid-wrap") for g in gradient])
    return float(np.mean(np.sqrt(np.sum(values**2, axis=0)) <= delta))


def constraint_check(u_bar: Field2D, rho0: Field2D) -> ConstraintNorms:
    """Norms of ``div_h u`` and ``div_h(rho0 u)``.

    Returns:
        ConstraintNorms: Both norms.
    """
    return ConstraintNorms(div_h(u_bar).norm(), div_h(u_bar * rho0).norm())


def decomposition_check(state: State3D, rho0: Field2D, levels: Sequence[int], theta: float) -> Decomposition:
    """Split ``S_M avg(rho u_h) = rho0 S_M u_bar + H + eps^theta zeta + ell G`` for each level ``M``.

    ``H = S_M(rho0 u_bar) - rho0 S_M u_bar``, ``zeta = S_M(((rho_bar - rho0) / eps^theta) u_bar)`` and
    ``G = S_M(avg(rho (u - u_bar))) / ell``. With at least three levels the slope of ``log2 ||H||`` against ``M`` is
    fitted.

    Returns:
        Decomposition: Norms per level, the identity residual and the slope.

    Raises:
        ParameterError: If ``theta`` is not in ``(0, 1)`` or no level is given.
    """
    if not 0 < theta < 1:
        msg = f"theta must lie in (0, 1), got {theta}"
        raise ParameterError(msg)
    if not levels:
        msg = "at least one cutoff level is needed"
        raise ParameterError(msg)
    geometry = state.geometry
    grid = geometry.horizontal
    regime = state.regime
    u_h = state.u.horizontal_part()
    u_bar = vertical_average(u_h)
    rho_bar = vertical_average(state.rho)
    v_bar = vertical_average(u_h * state.rho)
    scale = regime.epsilon**theta
    vertical_defect = v_bar - u_bar * rho_bar
    density_gap = Field2D(grid, (rho_bar.physical - rho0.physical) / scale)

    h_norms, zeta_norms, zeta_sups, g_norms, residuals = [], [], [], [], []
    for level in levels:
        kernel = CutoffKernel(level)
        filtered_u = spectral_cutoff(u_bar, kernel)
        h = spectral_cutoff(u_bar * rho0, kernel) - filtered_u * rho0
        zeta = spectral_cutoff(u_bar * density_gap, kernel)
        g = spectral_cutoff(vertical_defect, kernel) * (1.0 / regime.ell)
        assembled = filtered_u * rho0 + h + zeta * scale + g * regime.ell
        residuals.append((spectral_cutoff(v_bar, kernel) - assembled).norm())
        h_norms.append(h.norm())
        zeta_norms.append(zeta.norm())
        zeta_sups.append(zeta.sup())
        g_norms.append(g.norm())

    slope = None
    if len(levels) >= 3 and min(h_norms) > 0:  # noqa: PLR2004
        slope = float(stats.linregress(np.asarray(levels, dtype=float), np.log2(h_norms)).slope)
    logger.debug("decomposition levels=%s slope=%s", list(levels), slope)
    return Decomposition(list(levels), h_norms, zeta_norms, zeta_sups, g_norms, residuals, slope)


@dataclass(frozen=True)
class _Averaged:
    """Averaged quantities of one trajectory sample."""

    rho_bar: FloatArray
    flux_divergence: Field2D
    eta_bar: Field2D
    forcing: Field2D


@functools.lru_cache(maxsize=4)
def _dealiaser(geometry: SlabGeometry) -> Dealiaser:
    return Dealiaser(geometry)


def _averaged(trajectory: Trajectory, index: int) -> _Averaged:
    geometry = trajectory.geometry
    grid = geometry.horizontal
    rho, u = trajectory.rho[index], trajectory.u[index]
    u_h = u[:2]
    v_bar = Field2D(grid, _average(geometry, rho * u_h))
    flux_divergence, _ = momentum_flux_divergence(Field3D(geometry, rho), Field3D(geometry, u), _dealiaser(geometry))
    stress_divergence = Field2D(grid, _average(geometry, flux_divergence[:2]))
    omega_bar = curl_h(Field2D(grid, _average(geometry, u_h)))
    walls = curl_h(Field2D(grid, u_h[..., 0])) + curl_h(Field2D(grid, u_h[..., -1]))
    forcing = laplacian_h(omega_bar) - curl_h(stress_divergence) - walls * trajectory.regime.lam
    return _Averaged(_average(geometry, rho), div_h(v_bar), curl_h(v_bar), forcing)


def _interior(trajectory: Trajectory) -> tuple[float, list[_Averaged]]:
    if len(trajectory) < 3:  # noqa: PLR2004
        msg = f"residuals need at least three samples, got {len(trajectory)}"
        raise TrajectoryError(msg)
    spacing = trajectory.spacing()
    return spacing, [_averaged(trajectory, index) for index in range(len(trajectory))]


def _filtered(f: Field2D, kernel: CutoffKernel | None) -> Field2D:
    return f if kernel is None else spectral_cutoff(f, kernel)


def wave_residual(trajectory: Trajectory, level: int, rho0: Field2D) -> WaveResidual:
    """Residuals of ``eps d_t sigma_bar + div_h V_bar = 0`` and ``eps d_t eta_bar + div_h V_bar = eps f_bar``.

    Both identities are filtered by ``S_M``. ``V = rho u_h`` and
    ``f_bar = -curl_h avg(div(rho u (x) u))_h - (alpha / ell)(omega_plus + omega_minus) + lap_h omega_bar``, with
    the flux divergence dealiased as in the solver. Time derivatives are centered differences, so values are reported
    at the interior samples.

    Returns:
        WaveResidual: Residual norms and the norm of ``S_M f_bar``.

    Raises:
        TrajectoryError: With fewer than three samples or a non-uniform sampling.
    """
    spacing, samples = _interior(trajectory)
    grid = trajectory.geometry.horizontal
    epsilon = trajectory.regime.epsilon
    kernel = CutoffKernel(level)
    sigma = [Field2D(grid, (s.rho_bar - rho0.physical[0]) / epsilon) for s in samples]
    times, sigma_norms, eta_norms, forcing_norms = [], [], [], []
    for k in range(1, len(samples) - 1):
        current = samples[k]
        rate = 0.5 * epsilon / spacing
        sigma_defect = (sigma[k + 1] - sigma[k - 1]) * rate + current.flux_divergence
        eta_defect = (samples[k + 1].eta_bar - samples[k - 1].eta_bar) * rate + current.flux_divergence
        eta_defect = eta_defect - current.forcing * epsilon
        times.append(trajectory.times[k])
        sigma_norms.append(_filtered(sigma_defect, kernel).norm())
        eta_norms.append(_filtered(eta_defect, kernel).norm())
        forcing_norms.append(_filtered(current.forcing, kernel).norm())
    return WaveResidual(times, sigma_norms, eta_norms, forcing_norms)


def sigma_equation_residual(trajectory: Trajectory, kernel: CutoffKernel | None = None) -> Series:
    """Residual of ``d_t rho_bar + div_h V_bar = 0``, i.e. the sigma equation multiplied by ``eps``.

    Returns:
        Series: The residual norms at the interior samples, filtered by ``kernel`` when given.

    Raises:
        TrajectoryError: With fewer than three samples or a non-uniform sampling.
    """
    spacing, samples = _interior(trajectory)
    grid = trajectory.geometry.horizontal
    times, values = [], []
    for k in range(1, len(samples) - 1):
        rate = Field2D(grid, (samples[k + 1].rho_bar - samples[k - 1].rho_bar) / (2 * spacing))
        times.append(trajectory.times[k])
        values.append(_filtered(rate + samples[k].flux_divergence, kernel).norm())
    return Series(times, values)


def vorticity_eq_residual(trajectory: Trajectory) -> Series:
    """Residual of ``d_t(eta_bar - sigma_bar) = f_bar``, the balance free of fast oscillations.

    Returns:
        Series: The residual norms at the interior samples.

    Raises:
        TrajectoryError: With fewer than three samples or a non-uniform sampling.
    """
    spacing, samples = _interior(trajectory)
    grid = trajectory.geometry.horizontal
    epsilon = trajectory.regime.epsilon
    balance = [s.eta_bar - Field2D(grid, s.rho_bar / epsilon) for s in samples]
    times, values = [], []
    for k in range(1, len(samples) - 1):
        rate = (balance[k + 1] - balance[k - 1]) * (0.5 / spacing)
        times.append(trajectory.times[k])
        values.append((rate - samples[k].forcing).norm())
    return Series(times, values)


class ResidualOrders(NamedTuple):
    """Largest residuals per sampling interval and their fitted convergence orders."""

    spacings: list[float]
    wave: list[float]
    vorticity: list[float]
    wave_order: float | None
    vorticity_order: float | None


def _largest_at(values: Sequence[float], stride: int, indices: Iterable[int]) -> float:
    return max(values[index // stride - 1] for index in indices)


def _order(spacings: Sequence[float], residuals: Sequence[float]) -> float | None:
    try:
        return fit_rate(zip(spacings, residuals, strict=True)).exponent
    except FitError as exc:
        logger.debug("residual order skipped reason=%s", exc)
        return None


def residual_orders(
    trajectory: Trajectory, level: int, rho0: Field2D, strides: Sequence[int] = RESIDUAL_ORDER_STRIDES
) -> ResidualOrders:
    """Orders of the filtered wave ``eta`` residual and of the vorticity residual as the sampling is refined.

    The trajectory is subsampled with every stride. Both residuals are compared at the samples interior to the
    coarsest subsampling, and the largest value per stride is fitted against the sampling interval. An order is
    ``None`` when a residual vanishes. The ``sigma`` residual is left out: it sits at roundoff for a
    quasi-homogeneous density.

    Returns:
        ResidualOrders: Residuals per interval and both orders.

    Raises:
        ParameterError: If a stride is below one or does not divide the largest.
        TrajectoryError: With fewer than ``2 * max(strides) + 1`` samples or a non-uniform sampling.
    """
    coarsest = max(strides)
    if min(strides) < 1 or any(coarsest % stride for stride in strides):
        msg = f"strides {list(strides)} must be positive divisors of {coarsest}"
        raise ParameterError(msg)
    if len(trajectory) < 2 * coarsest + 1:
        msg = f"residual orders need at least {2 * coarsest + 1} samples, got {len(trajectory)}"
        raise TrajectoryError(msg)
    spacing = trajectory.spacing()
    last = (len(trajectory) - 1) // coarsest * coarsest
    common = range(coarsest, last, coarsest)
    spacings, wave, vorticity = [], [], []
    for stride in sorted(set(strides)):
        coarse = trajectory.subsample(stride)
        spacings.append(stride * spacing)
        wave.append(_largest_at(wave_residual(coarse, level, rho0).eta, stride, common))
        vorticity.append(_largest_at(vorticity_eq_residual(coarse).values, stride, common))
    orders = ResidualOrders(spacings, wave, vorticity, _order(spacings, wave), _order(spacings, vorticity))
    logger.debug("residual orders wave=%s vorticity=%s", orders.wave_order, orders.vorticity_order)
    return orders


def diagnostics_record(
    state: State3D,
    rho0: Field2D,
    initial_energy: float,
    levels: Sequence[int],
    theta: float,
    delta: float,
) -> DiagnosticsRecord:
    """Pointwise-in-time diagnostics of one state.

    Returns:
        DiagnosticsRecord: Jensen pairs, inequality ratios and residuals, and boundary quantities.
    """
    bounds = uniform_bounds_record(state, initial_energy, delta)
    u_h = state.u.horizontal_part()
    u_bar = vertical_average(u_h)
    vorticities = eta_omega_fields(state)
    constraints = constraint_check(u_bar, rho0)
    residuals = {
        "poincare_ratio": poincare_defect(state.u).ratio,
        "sobolev_ratio": sobolev_defect(state.u).ratio,
        "vertical_velocity_ratio": vertical_velocity_bound(state.u).ratio,
        "projected_momentum_defect": projected_momentum_defect(state),
        "div_u_bar": constraints.div_u,
        "div_rho0_u_bar": constraints.div_rho0u,
        "energy_fraction": bounds.energy_fraction,
        "sigma_norm": sigma_field(state, rho0).norm(),
        "u3_bar_norm": vertical_average(state.u.component(2)).norm(),
    }
    if state.u.sup() > 0:
        decomposition = decomposition_check(state, rho0, levels, theta)
        for level, h, g in zip(decomposition.levels, decomposition.h, decomposition.g, strict=True):
            residuals[f"h_norm_m{level}"] = h
            residuals[f"g_norm_m{level}"] = g
    top, bottom = boundary_trace(u_h, Side.TOP), boundary_trace(u_h, Side.BOTTOM)
    traces = {
        "slip_energy": state.regime.lam * (top.norm() ** 2 + bottom.norm() ** 2),
        "trace_gap_top": (u_bar - top).norm(),
        "trace_gap_bottom": (u_bar - bottom).norm(),
        "omega_plus": vorticities.omega_plus.norm(),
        "omega_minus": vorticities.omega_minus.norm(),
        "robin_residual": robin_residual(u_h, state.regime.alpha),
        "u3_walls": float(np.abs(state.u.physical[2][..., [0, -1]]).max()),
    }
    return DiagnosticsRecord(t=state.t, norms=bounds.pairs, residuals=residuals, traces=traces)


def flatten_record(record: DiagnosticsRecord) -> dict[str, float]:
    """One flat CSV row of a record: ``t``, ``<pair>.norm_of_average``, ``<pair>.average_of_norm`` and the rest.

    Returns:
        dict: Column name to value.
    """
    row: dict[str, float] = {"t": record.t}
    for name, pair in record.norms.items():
        row[f"{name}.norm_of_average"] = pair.norm_of_average
        row[f"{name}.average_of_norm"] = pair.average_of_norm
    row.update({f"residual.{name}": value for name, value in record.residuals.items()})
    row.update({f"trace.{name}": value for name, value in record.traces.items()})
    return row


def write_records(path: Path, records: Iterable[DiagnosticsRecord]) -> None:
    """Write records as CSV, one row per sampled time.

    Columns are ``t``, then ``<pair>.norm_of_average`` and ``<pair>.average_of_norm`` for every Jensen pair, then
    ``residual.<name>`` and ``trace.<name>``, as laid out by :func:`flatten_record`. The header is the union over all
    records in order of first appearance, so a column that only shows up in a later record (the ``h_norm_m*`` and
    ``g_norm_m*`` residuals once the flow starts moving) is appended at the end and left empty in earlier rows.
    """
    rows = [flatten_record(record) for record in records]
    path.parent.mkdir(parents=True, exist_ok=True)
    header: list[str] = []
    for row in rows:
        header.extend(key for key in row if key not in header)
    with path.open("w", newline="", encoding="utf-8") as stream:
        writer = csv.DictWriter(stream, fieldnames=header, restval="")
        writer.writeheader()
        writer.writerows(rows)
    logger.debug("diagnostics written path=%s rows=%d", path, len(rows))
