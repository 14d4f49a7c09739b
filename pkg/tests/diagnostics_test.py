"""Tests of the functional inequalities, derived fields and residuals."""

import math
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from ekman_slab.diagnostics import (
    averaging_product_defect,
    constraint_check,
    decomposition_check,
    diagnostics_record,
    eta_omega_fields,
    flatten_record,
    initial_vorticity_balance,
    nondegeneracy_measure,
    nondegeneracy_monte_carlo,
    perturbation_field,
    poincare_defect,
    residual_orders,
    sigma_equation_residual,
    sigma_field,
    theta_field,
    uniform_bounds_record,
    vertical_velocity_bound,
    vorticity_eq_residual,
    wave_residual,
    write_records,
)
from ekman_slab.errors import ParameterError, TrajectoryError
from ekman_slab.geometry import Field2D, Field3D, HorizontalGrid, SlabGeometry
from ekman_slab.initial_data import gen_initial_data
from ekman_slab.models import DataConfig, DiagnosticsRecord, NormPair, RegimeParams
from ekman_slab.solver3d import State3D, Trajectory
from ekman_slab.spectral import CutoffKernel


Profile = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _horizontal_profile(geometry: SlabGeometry, profile: Profile) -> Field3D:
    return Field3D.from_function(
        geometry,
        profile,
        lambda x1, _x2, _x3: np.zeros_like(x1),
        lambda x1, _x2, _x3: np.zeros_like(x1),
    )


def _density(geometry: SlabGeometry) -> Field3D:
    return Field3D.from_function(geometry, lambda x1, x2, _x3: 1 + 0.3 * np.sin(x1) * np.sin(x2))


def test_poincare_ratio_of_linear_profile(geometry: SlabGeometry) -> None:
    """u1 = x3 gives the ratio 1/6."""
    u = _horizontal_profile(geometry, lambda _x1, _x2, x3: x3)
    assert poincare_defect(u).ratio == pytest.approx(1 / 6, rel=1e-12)


def test_poincare_ratio_of_sine_profile() -> None:
    """u1 = sin(pi x3 / ell) gives the ratio 1 / (2 pi^2)."""
    geometry = SlabGeometry(nh=8, nv=21, ell=0.5)
    u = _horizontal_profile(geometry, lambda _x1, _x2, x3: np.sin(np.pi * x3 / geometry.ell))
    assert poincare_defect(u).ratio == pytest.approx(1 / (2 * math.pi**2), rel=1e-6)


def test_poincare_at_rest(geometry: SlabGeometry) -> None:
    """A field at rest has both sides zero and ratio zero."""
    u = Field3D.zeros(geometry, 3)
    assert poincare_defect(u) == (0.0, 0.0, 0.0)


def test_averaging_defect_example(geometry: SlabGeometry) -> None:
    """avg(f u) - avg(f) avg(u) for f = 1 + x3 and u1 = x3 is ell^2 / 3 and obeys its bound."""
    f = Field3D.from_function(geometry, lambda _x1, _x2, x3: 1 + x3)
    u = _horizontal_profile(geometry, lambda _x1, _x2, x3: x3).horizontal_part()
    defect = averaging_product_defect(f, u)
    assert defect.defect_norm == pytest.approx(geometry.ell**2 / 3 * 2 * math.pi, rel=1e-12)
    assert defect.defect_norm <= defect.bound


def test_vertical_velocity_bound_holds(geometry: SlabGeometry) -> None:
    """u3 vanishing at the walls is bounded by its vertical derivative."""
    u = Field3D.from_function(
        geometry,
        lambda x1, _x2, _x3: np.zeros_like(x1),
        lambda x1, _x2, _x3: np.zeros_like(x1),
        lambda x1, _x2, x3: np.cos(x1) * (geometry.ell**2 - x3**2),
    )
    bound = vertical_velocity_bound(u)
    assert 0 < bound.ratio <= 1


def test_jensen_pairs_are_ordered(geometry: SlabGeometry) -> None:
    """Norms of averages never exceed averages of norms."""
    regime = RegimeParams(epsilon=0.5, ell=geometry.ell, alpha=0.5)
    u = Field3D.from_function(
        geometry,
        lambda x1, x2, x3: np.sin(x1) * np.cos(x2) * (1 + x3),
        lambda x1, x2, x3: -np.cos(x1) * np.sin(x2) * (1 + x3),
        lambda x1, _x2, _x3: np.zeros_like(x1),
    )
    state = State3D(_density(geometry), u, 0.0, regime)
    bounds = uniform_bounds_record(state, initial_energy=10.0, delta=0.1)
    for pair in bounds.pairs.values():
        assert pair.norm_of_average <= pair.average_of_norm * (1 + 1e-12)
    assert bounds.vacuum == 0.0
    with pytest.raises(ParameterError):
        uniform_bounds_record(state, initial_energy=10.0, delta=0.0)


def test_norm_pair_rejects_jensen_violations() -> None:
    """A pair with the norm of the average above the average of the norm is invalid."""
    with pytest.raises(ValidationError):
        NormPair(norm_of_average=2.0, average_of_norm=1.0)


def test_sigma_of_matched_density(geometry: SlabGeometry) -> None:
    """sigma is the averaged perturbation divided by epsilon."""
    regime = RegimeParams(epsilon=0.25, ell=geometry.ell, alpha=0.0)
    rho0 = Field2D(geometry.horizontal, np.ones((geometry.nh, geometry.nh)))
    rho = Field3D.from_function(geometry, lambda x1, _x2, _x3: 1 + 0.25 * np.cos(x1))
    state = State3D(rho, Field3D.zeros(geometry, 3), 0.0, regime)
    sigma = sigma_field(state, rho0)
    assert np.allclose(sigma.physical[0], np.cos(geometry.horizontal.mesh[0]), atol=1e-12)


def test_vorticities_of_layered_flow(geometry: SlabGeometry) -> None:
    """Wall vorticities follow the layer profile at each wall."""
    regime = RegimeParams(epsilon=1.0, ell=geometry.ell, alpha=0.0)
    u = Field3D.from_function(
        geometry,
        lambda x1, x2, x3: np.zeros_like(x1),
        lambda x1, _x2, x3: -np.cos(x1) * (1 + x3),
        lambda x1, _x2, _x3: np.zeros_like(x1),
    )
    rho = Field3D(geometry, np.ones((geometry.nh, geometry.nh, geometry.nv)))
    vorticities = eta_omega_fields(State3D(rho, u, 0.0, regime))
    x1 = geometry.horizontal.mesh[0]
    assert np.allclose(vorticities.omega_bar.physical[0], np.sin(x1), atol=1e-12)
    assert np.allclose(vorticities.omega_plus.physical[0], (1 + geometry.ell) * np.sin(x1), atol=1e-12)
    assert np.allclose(vorticities.omega_minus.physical[0], (1 - geometry.ell) * np.sin(x1), atol=1e-12)
    assert np.allclose(vorticities.eta_bar.physical, vorticities.omega_bar.physical, atol=1e-12)


def test_theta_field_is_speed_times_gradient(grid: HorizontalGrid) -> None:
    """theta equals |u|^2 grad rho0 pointwise."""
    rho0 = Field2D.from_function(grid, lambda x1, x2: 1 + 0.5 * np.sin(x1) * np.sin(x2))
    u = Field2D.from_function(grid, lambda x1, x2: np.cos(x2), lambda x1, x2: np.sin(x1))
    theta = theta_field(rho0, u)
    speed = np.sum(u.physical**2, axis=0)
    x1, x2 = grid.mesh
    gradient = 0.5 * np.stack([np.cos(x1) * np.sin(x2), np.sin(x1) * np.cos(x2)])
    assert np.allclose(theta.physical, speed * gradient, atol=1e-12)


def test_constraints_of_a_stream_function_flow(grid: HorizontalGrid) -> None:
    """A flow along the level sets of rho0 satisfies both constraints."""
    rho0 = Field2D.from_function(grid, lambda x1, _x2: 1 + 0.5 * np.sin(x1))
    u = Field2D.from_function(grid, lambda x1, _x2: np.zeros_like(x1), lambda x1, _x2: np.cos(x1))
    norms = constraint_check(u, rho0)
    assert norms.div_u < 1e-12
    assert norms.div_rho0u < 1e-12


def test_nondegeneracy_measure_matches_monte_carlo(grid: HorizontalGrid) -> None:
    """Grid counting and random sampling agree on the small-gradient set."""
    rho0 = Field2D.from_function(grid, lambda x1, x2: 1 + 0.5 * np.sin(x1) * np.sin(x2))
    for delta in (0.1, 0.2):
        counted = nondegeneracy_measure(rho0, delta, refine=4)
        sampled = nondegeneracy_monte_carlo(rho0, delta, samples=200_000, seed=3)
        assert counted == pytest.approx(sampled, abs=0.01)
    assert nondegeneracy_measure(rho0, 0.05, refine=4) <= nondegeneracy_measure(rho0, 0.1, refine=4)
    with pytest.raises(ParameterError):
        nondegeneracy_measure(rho0, 0.0)


def test_constant_density_is_degenerate_everywhere(grid: HorizontalGrid) -> None:
    """A flat reference density has no region of non-degenerate gradient."""
    rho0 = Field2D(grid, np.ones((grid.nh, grid.nh)))
    assert nondegeneracy_measure(rho0, 0.01) == 1.0


def test_decomposition_identity(geometry: SlabGeometry) -> None:
    """The pieces of the filtered averaged momentum add up to the whole."""
    regime = RegimeParams(epsilon=0.25, ell=geometry.ell, alpha=0.25)
    u = Field3D.from_function(
        geometry,
        lambda x1, x2, x3: np.sin(x2) * (1 + x3**2) + np.cos(x1 + x2),
        lambda x1, x2, x3: np.cos(x1) * (1 - x3),
        lambda x1, _x2, _x3: np.zeros_like(x1),
    )
    rho = Field3D.from_function(geometry, lambda x1, x2, x3: 1 + 0.3 * np.cos(x1) + 0.1 * np.sin(x2) * x3)
    rho0 = Field2D.from_function(geometry.horizontal, lambda x1, _x2: 1 + 0.3 * np.cos(x1))
    decomposition = decomposition_check(State3D(rho, u, 0.0, regime), rho0, [0, 1, 2], theta=0.5)
    assert max(decomposition.identity_residual) < 1e-10
    assert len(decomposition.h) == len(decomposition.g) == 3
    with pytest.raises(ParameterError):
        decomposition_check(State3D(rho, u, 0.0, regime), rho0, [1], theta=1.0)


def _steady_trajectory(geometry: SlabGeometry, samples: int) -> tuple[Trajectory, Field2D]:
    regime = RegimeParams(epsilon=0.5, ell=geometry.ell, alpha=0.0)
    rho = Field3D(geometry, np.ones((geometry.nh, geometry.nh, geometry.nv)))
    states = [State3D(rho, Field3D.zeros(geometry, 3), 0.1 * k, regime) for k in range(samples)]
    rho0 = Field2D(geometry.horizontal, np.ones((geometry.nh, geometry.nh)))
    return Trajectory.from_states(states), rho0


def test_residuals_of_a_state_at_rest(geometry: SlabGeometry) -> None:
    """Rest solves the wave system and the vorticity balance exactly."""
    trajectory, rho0 = _steady_trajectory(geometry, 5)
    residual = wave_residual(trajectory, 2, rho0)
    assert len(residual.times) == 3
    assert max(residual.sigma) == 0.0
    assert max(residual.eta) == 0.0
    assert max(vorticity_eq_residual(trajectory).values) < 1e-12
    assert max(sigma_equation_residual(trajectory).values) == 0.0


def test_residuals_need_three_samples(geometry: SlabGeometry) -> None:
    """Centered differences need an interior sample."""
    trajectory, rho0 = _steady_trajectory(geometry, 2)
    with pytest.raises(TrajectoryError):
        wave_residual(trajectory, 1, rho0)


def test_record_is_flattened_and_written(geometry: SlabGeometry, tmp_path: Path) -> None:
    """A diagnostics record becomes one CSV row with prefixed columns."""
    regime = RegimeParams(epsilon=0.5, ell=geometry.ell, alpha=0.5)
    u = Field3D.from_function(
        geometry,
        lambda _x1, x2, _x3: np.sin(x2),
        lambda x1, _x2, _x3: np.zeros_like(x1),
        lambda x1, _x2, _x3: np.zeros_like(x1),
    )
    state = State3D(_density(geometry), u, 0.0, regime)
    rho0 = Field2D.from_function(geometry.horizontal, lambda x1, x2: 1 + 0.3 * np.sin(x1) * np.sin(x2))
    record = diagnostics_record(state, rho0, initial_energy=20.0, levels=[1, 2], theta=0.5, delta=0.1)
    row = flatten_record(record)
    assert row["t"] == 0.0
    assert "momentum.norm_of_average" in row
    assert "residual.poincare_ratio" in row
    assert "trace.robin_residual" in row
    assert "residual.h_norm_m2" in row
    path = tmp_path / "diagnostics.csv"
    write_records(path, [record])
    header = path.read_text(encoding="utf-8").splitlines()[0].split(",")
    assert header[0] == "t"


def test_columns_follow_first_appearance(tmp_path: Path) -> None:
    """Pairs come before residuals and traces; a column first seen in a later record is appended."""
    pair = NormPair(norm_of_average=1.0, average_of_norm=2.0)
    first = DiagnosticsRecord(t=0.0, norms={"momentum": pair}, residuals={"a": 1.0}, traces={"b": 2.0})
    second = DiagnosticsRecord(t=0.1, norms={"momentum": pair}, residuals={"a": 1.0, "c": 3.0}, traces={"b": 2.0})
    path = tmp_path / "diagnostics.csv"
    write_records(path, [first, second])
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].split(",") == [
        "t",
        "momentum.norm_of_average",
        "momentum.average_of_norm",
        "residual.a",
        "trace.b",
        "residual.c",
    ]
    assert lines[1].endswith(",")


def test_perturbation_range(geometry: SlabGeometry) -> None:
    """(rho - rho0) / eps recovers the unscaled perturbation."""
    regime = RegimeParams(epsilon=0.5, ell=geometry.ell, alpha=0.0)
    rho = Field3D.from_function(geometry, lambda x1, _x2, _x3: 1 + 0.5 * 0.4 * np.cos(x1))
    rho0 = Field2D(geometry.horizontal, np.ones((geometry.nh, geometry.nh)))
    perturbation = perturbation_field(State3D(rho, Field3D.zeros(geometry, 3), 0.0, regime), rho0)
    assert perturbation.minimum == pytest.approx(-0.4, abs=1e-12)
    assert perturbation.maximum == pytest.approx(0.4, abs=1e-12)


def test_matched_limit_data_balance_the_initial_vorticity(geometry: SlabGeometry) -> None:
    """With a constant reference density the matched limit data reproduce curl(m_bar) - sigma_bar."""
    regime = RegimeParams(epsilon=0.5, ell=geometry.ell, alpha=0.5)
    initial = gen_initial_data(DataConfig(), regime, geometry)
    balance = initial_vorticity_balance(initial.rho_in, initial.m_in, initial.rho0, initial.limit_data(), 0.5)
    assert balance < 1e-10


def _moving_trajectory(geometry: SlabGeometry, samples: int) -> tuple[Trajectory, Field2D]:
    """A density wave drifting in x1 under a sheared velocity; not a solution, so every residual is nonzero."""
    regime = RegimeParams(epsilon=0.5, ell=geometry.ell, alpha=0.0)
    x1, x2, x3 = geometry.mesh
    states = []
    for k in range(samples):
        t = 0.01 * k
        rho = Field3D(geometry, 1 + 0.3 * np.sin(x1 - t) * np.cos(x2) + 0.05 * t * x3)
        u = Field3D(geometry, np.stack([np.cos(x2) * (1 + t), 0.4 * np.sin(x1) * np.cos(x3), np.zeros_like(x1)]))
        states.append(State3D(rho, u, t, regime))
    rho0 = Field2D.from_function(geometry.horizontal, lambda x1, x2: 1 + 0.3 * np.sin(x1) * np.cos(x2))
    return Trajectory.from_states(states), rho0


def test_sigma_residual_of_the_wave_system_is_the_mass_balance(geometry: SlabGeometry) -> None:
    """Filtered by the same cutoff, the sigma part of the wave residual equals the averaged mass balance."""
    trajectory, rho0 = _moving_trajectory(geometry, 6)
    wave = wave_residual(trajectory, 2, rho0)
    mass = sigma_equation_residual(trajectory, CutoffKernel(2))
    assert wave.times == mass.times
    assert min(mass.values) > 0
    assert wave.sigma == pytest.approx(mass.values, rel=1e-10)


def test_residual_orders_refuse_bad_strides(geometry: SlabGeometry) -> None:
    trajectory, rho0 = _steady_trajectory(geometry, 13)
    with pytest.raises(ParameterError, match="divisors"):
        residual_orders(trajectory, 2, rho0, strides=(1, 3, 4))
    with pytest.raises(ParameterError):
        residual_orders(trajectory, 2, rho0, strides=(0, 2))


def test_residual_orders_need_enough_samples(geometry: SlabGeometry) -> None:
    trajectory, rho0 = _steady_trajectory(geometry, 8)
    with pytest.raises(TrajectoryError, match="at least 9 samples"):
        residual_orders(trajectory, 2, rho0)


def test_residual_orders_of_rest_are_undefined(geometry: SlabGeometry) -> None:
    """Rest has no residual to fit, so no order is reported."""
    trajectory, rho0 = _steady_trajectory(geometry, 9)
    orders = residual_orders(trajectory, 2, rho0)
    assert orders.spacings == pytest.approx([0.1, 0.2, 0.4])
    assert orders.wave == [0.0, 0.0, 0.0]
    assert orders.wave_order is None
