"""Tests of the limit system with Ekman damping."""

import math
from pathlib import Path

import numpy as np
import pytest

from ekman_slab.errors import ParameterError
from ekman_slab.geometry import Field2D, HorizontalGrid
from ekman_slab.solver2d import (
    LimitStepper,
    State2D,
    limit_rhs,
    momentum_rhs,
    step2d,
    velocity_from_vorticity,
)
from ekman_slab.spectral import curl_h, div_h


def _zero(grid: HorizontalGrid) -> Field2D:
    return Field2D.zeros(grid)


def test_biot_savart_convention(grid: HorizontalGrid) -> None:
    """omega = sin x1 gives u = (0, -cos x1) and the curl returns omega."""
    omega = Field2D.from_function(grid, lambda x1, _x2: np.sin(x1))
    u = velocity_from_vorticity(omega)
    x1, _ = grid.mesh
    assert np.allclose(u.physical[0], 0.0, atol=1e-13)
    assert np.allclose(u.physical[1], -np.cos(x1), atol=1e-13)
    assert np.allclose(curl_h(u).physical, omega.physical, atol=1e-12)
    assert div_h(u).sup() < 1e-12


def test_vorticity_with_mean_is_refused(grid: HorizontalGrid) -> None:
    """Vorticity on the torus has zero mean."""
    with pytest.raises(ParameterError):
        velocity_from_vorticity(Field2D(grid, np.ones((grid.nh, grid.nh))))
    with pytest.raises(ParameterError):
        State2D(_zero(grid), _zero(grid), lam=-1.0)


@pytest.mark.parametrize("lam", [0.0, 0.5, 2.0])
def test_single_mode_decays_at_the_ekman_rate(grid: HorizontalGrid, lam: float) -> None:
    """A one-mode vorticity is a nonlinear steady shape; the enstrophy decays like exp(-2 (|k|^2 + 2 lam) t)."""
    omega = Field2D.from_function(grid, lambda x1, _x2: np.sin(x1))
    state = State2D(_zero(grid), omega, lam)
    stepper = LimitStepper(grid, lam)
    for _ in range(10):
        state = stepper.step(state, 0.01)
    expected = math.exp(-2 * (1 + 2 * lam) * 0.1)
    assert state.t == pytest.approx(0.1)
    assert state.enstrophy() / (0.5 * omega.norm() ** 2) == pytest.approx(expected, rel=1e-10)


def test_mean_flow_is_kept(grid: HorizontalGrid) -> None:
    """The Leray projection keeps the mean, which the vorticity cannot see."""
    u = Field2D.from_function(grid, lambda _x1, x2: 0.3 + np.sin(x2), lambda x1, _x2: np.full_like(x1, -0.2))
    state = State2D.from_velocity(_zero(grid), u, lam=1.0)
    assert state.mean_flow == pytest.approx((0.3, -0.2))
    assert np.allclose(state.velocity().physical, u.physical, atol=1e-12)
    assert state.energy() == pytest.approx(0.5 * u.norm() ** 2)


def test_momentum_and_vorticity_forms_agree(grid: HorizontalGrid) -> None:
    """The curl of the momentum tendency is the vorticity tendency."""
    omega = Field2D.from_function(grid, lambda x1, x2: np.sin(x1) * np.cos(x2) + 0.5 * np.cos(2 * x2))
    r0 = Field2D.from_function(grid, lambda x1, x2: 0.3 * np.cos(x1 + x2))
    state = State2D(r0, omega, lam=0.7)
    _, vorticity_tendency = limit_rhs(state)
    assert np.allclose(curl_h(momentum_rhs(state)).physical, vorticity_tendency.physical, atol=1e-10)


def test_density_is_transported_within_bounds(grid: HorizontalGrid) -> None:
    """r0 keeps its range and its mean under the limit flow."""
    omega = Field2D.from_function(grid, lambda x1, x2: np.sin(x1) * np.sin(x2))
    r0 = Field2D.from_function(grid, lambda x1, _x2: np.cos(x1))
    state = State2D(r0, omega, lam=1.0)
    for _ in range(5):
        state = step2d(state, 0.05)
    assert state.r0.physical.min() >= -1.0 - 1e-12
    assert state.r0.physical.max() <= 1.0 + 1e-12
    assert state.r0.integral()[0] == pytest.approx(r0.integral()[0], abs=1e-10)
    row = state.limit_row()
    assert row.t == pytest.approx(0.25)
    assert row.enstrophy == pytest.approx(state.enstrophy())


def test_limit_checkpoint_round_trip(grid: HorizontalGrid, tmp_path: Path) -> None:
    """A saved limit state loads back unchanged."""
    omega = Field2D.from_function(grid, lambda x1, _x2: np.cos(2 * x1))
    state = State2D(_zero(grid), omega, lam=0.5, t=1.5, mean_flow=(0.1, 0.0))
    state.save(tmp_path / "limit")
    loaded = State2D.load(tmp_path / "limit")
    assert loaded.lam == 0.5
    assert loaded.t == 1.5
    assert loaded.mean_flow == (0.1, 0.0)
    assert np.array_equal(loaded.omega.physical, state.omega.physical)
