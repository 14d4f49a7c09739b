"""Tests of the bounded semi-Lagrangian transport."""

import numpy as np
import pytest

from ekman_slab.errors import TimeStepRejectedError
from ekman_slab.geometry import HorizontalGrid, SlabGeometry
from ekman_slab.transport import SemiLagrangian


def _bumpy(grid: HorizontalGrid) -> np.ndarray:
    x1, x2 = grid.mesh
    return 1.0 + 0.5 * np.sin(x1) * np.cos(x2) + 0.2 * np.cos(3 * x1)


def test_shift_by_one_cell(grid: HorizontalGrid) -> None:
    """A constant velocity of one cell per step rolls the values by one cell."""
    dt = 0.1
    values = _bumpy(grid)
    velocity = np.stack([np.full(values.shape, grid.dx / dt), np.zeros(values.shape)])
    transported = SemiLagrangian(grid, max_courant=1.5).advect(values, velocity, dt)
    assert np.allclose(transported, np.roll(values, 1, axis=0), atol=1e-12)


def test_bounds_and_mass_are_kept(grid: HorizontalGrid) -> None:
    """A rotating flow keeps the values within their range and keeps the total."""
    values = _bumpy(grid)
    x1, x2 = grid.mesh
    velocity = np.stack([np.sin(x2), -np.sin(x1)])
    transport = SemiLagrangian(grid)
    result = values
    for _ in range(10):
        result = transport.advect(result, velocity, 0.1)
    assert result.min() >= values.min() - 1e-12
    assert result.max() <= values.max() + 1e-12
    assert result.sum() == pytest.approx(values.sum(), rel=1e-12)


def test_slab_transport_keeps_bounds(geometry: SlabGeometry) -> None:
    """Vertical motion toward a wall stays inside the slab and within the bounds."""
    x1, _, x3 = geometry.mesh
    values = 1.0 + 0.3 * np.cos(x1) * (1 + x3)
    velocity = np.stack([np.full(x1.shape, 0.5), np.zeros(x1.shape), 0.2 * (geometry.ell**2 - x3**2)])
    transported = SemiLagrangian(geometry).advect(values, velocity, 0.05)
    weights = geometry.average_weights
    assert transported.min() >= values.min() - 1e-12
    assert transported.max() <= values.max() + 1e-12
    assert np.sum(transported @ weights) == pytest.approx(np.sum(values @ weights), rel=1e-12)


def test_rest_is_a_no_op(grid: HorizontalGrid) -> None:
    """Without velocity nothing moves."""
    values = _bumpy(grid)
    transported = SemiLagrangian(grid).advect(values, np.zeros((2, *values.shape)), 0.3)
    assert np.array_equal(transported, values)


def test_cfl_violation_is_rejected(grid: HorizontalGrid) -> None:
    """A step of twice the admissible size is refused with the admissible size."""
    values = _bumpy(grid)
    dt = 0.1
    velocity = np.stack([np.full(values.shape, 2 * grid.dx / dt), np.zeros(values.shape)])
    with pytest.raises(TimeStepRejectedError) as info:
        SemiLagrangian(grid, max_courant=1.0).advect(values, velocity, dt)
    assert info.value.courant == pytest.approx(2.0)
    assert info.value.admissible_dt == pytest.approx(dt / 2)
