"""Tests of the slab grid, the regime sequences and the vertical average."""

import math

import numpy as np
import pytest

from ekman_slab.errors import GeometryError, ParameterError, ScalingLawError
from ekman_slab.geometry import (
    Field2D,
    Field3D,
    HorizontalGrid,
    Side,
    SlabGeometry,
    boundary_trace,
    chebyshev_nodes,
    clenshaw_curtis_weights,
    exact_inner,
    lift,
    make_regime_sequence,
    quadrature_inner,
    vertical_average,
)
from ekman_slab.models import LambdaRegime, ScalingLaw


def test_nodes_run_from_top_to_bottom() -> None:
    """Node 0 is the top wall."""
    nodes = chebyshev_nodes(8)
    assert nodes[0] == pytest.approx(1.0)
    assert nodes[-1] == pytest.approx(-1.0)
    assert np.all(np.diff(nodes) < 0)


@pytest.mark.parametrize("order", [4, 7, 8, 16])
def test_clenshaw_curtis_integrates_polynomials(order: int) -> None:
    """Weights sum to 2 and integrate x^2 to 2/3."""
    weights = clenshaw_curtis_weights(order)
    nodes = chebyshev_nodes(order)
    assert np.all(weights > 0)
    assert weights.sum() == pytest.approx(2.0, abs=1e-13)
    assert weights @ nodes**2 == pytest.approx(2.0 / 3.0, abs=1e-13)


def test_vertical_average_of_quadratic(geometry: SlabGeometry) -> None:
    """The average of x3^2 over [-ell, ell] is ell^2 / 3."""
    f = Field3D.from_function(geometry, lambda _x1, _x2, x3: x3**2)
    average = vertical_average(f)
    assert np.allclose(average.physical, geometry.ell**2 / 3, atol=1e-14)


def test_vertical_average_in_spectral_form(geometry: SlabGeometry) -> None:
    """Averaging a spectral field matches averaging its physical values."""
    f = Field3D.from_function(geometry, lambda x1, _x2, x3: np.sin(x1) * (1 + x3))
    spectral = Field3D(geometry, horizontal_spectrum=f.horizontal_spectrum)
    assert np.allclose(vertical_average(spectral).physical, vertical_average(f).physical, atol=1e-13)
    assert np.allclose(vertical_average(f).physical[0], np.sin(geometry.horizontal.mesh[0]), atol=1e-13)


def test_lift_then_average_is_identity(geometry: SlabGeometry) -> None:
    """A lifted field is constant in x3 and averages back to itself."""
    f = Field2D.from_function(geometry.horizontal, lambda x1, x2: np.cos(x1) + np.sin(2 * x2))
    lifted = lift(f, geometry)
    assert np.allclose(vertical_average(lifted).physical, f.physical, atol=1e-14)
    assert np.allclose(boundary_trace(lifted, Side.TOP).physical, f.physical)
    assert np.allclose(boundary_trace(lifted, Side.BOTTOM).physical, f.physical)


def test_vector_fields_must_be_split_before_averaging(geometry: SlabGeometry) -> None:
    """Averaging a three-component field is refused."""
    with pytest.raises(GeometryError):
        vertical_average(Field3D.zeros(geometry, 3))


def test_integral_and_exact_inner(geometry: SlabGeometry) -> None:
    """The integral of 1 is the slab volume and exact_inner averages in x3."""
    one = Field3D.from_function(geometry, lambda x1, _x2, _x3: np.ones_like(x1))
    volume = geometry.horizontal.area * 2 * geometry.ell
    assert one.integral()[0] == pytest.approx(volume)
    x3 = Field3D.from_function(geometry, lambda _x1, _x2, x3: x3)
    assert exact_inner(x3, x3) == pytest.approx(geometry.horizontal.area * geometry.ell**2 / 3)
    assert quadrature_inner(x3, x3) == pytest.approx(exact_inner(x3, x3))


def test_invalid_grids_are_rejected() -> None:
    """Odd or tiny horizontal grids, even vertical grids and non-positive thickness are errors."""
    with pytest.raises(GeometryError):
        HorizontalGrid(nh=15)
    with pytest.raises(GeometryError):
        HorizontalGrid(nh=4)
    with pytest.raises(GeometryError):
        SlabGeometry(nh=16, nv=8)
    with pytest.raises(GeometryError):
        SlabGeometry(nh=16, nv=9, ell=0.0)


def test_field_shapes_are_checked(grid: HorizontalGrid) -> None:
    """Arrays of the wrong size cannot become fields."""
    with pytest.raises(GeometryError):
        Field2D(grid, np.zeros((3, grid.nh, grid.nh)))
    with pytest.raises(GeometryError):
        Field2D(grid)


def test_field_round_trip_between_representations(grid: HorizontalGrid) -> None:
    """Physical values survive the way through the spectrum."""
    f = Field2D.from_function(grid, lambda x1, x2: np.sin(x1) * np.cos(3 * x2))
    again = Field2D(grid, spectral=f.spectral)
    assert np.allclose(again.physical, f.physical, atol=1e-14)
    assert f.norm() == pytest.approx(math.pi)


def test_finite_lambda_sequence() -> None:
    """ell = alpha = eps gives the Ekman ratio 1."""
    sequence = make_regime_sequence(2, 5, ScalingLaw(), ScalingLaw())
    assert sequence.lambda_regime == LambdaRegime.FINITE
    assert sequence.lambda_limit == pytest.approx(1.0)
    assert sequence.indices == [2, 3, 4, 5]
    assert [regime.epsilon for regime in sequence.regimes] == pytest.approx([1 / 2, 1 / 3, 1 / 4, 1 / 5])
    assert all(regime.lam == pytest.approx(1.0) for regime in sequence.regimes)


def test_zero_and_divergent_sequences() -> None:
    """Slip vanishing faster than the thickness sends lambda to 0, slower to infinity."""
    zero = make_regime_sequence(2, 4, ScalingLaw(exponent=1.0), ScalingLaw(exponent=2.0))
    assert zero.lambda_regime == LambdaRegime.ZERO
    assert zero.lambda_limit == 0.0
    no_slip = make_regime_sequence(2, 4, ScalingLaw(), ScalingLaw(coefficient=0.0))
    assert no_slip.lambda_regime == LambdaRegime.ZERO
    divergent = make_regime_sequence(2, 4, ScalingLaw(exponent=2.0), ScalingLaw(exponent=1.0))
    assert divergent.lambda_regime == LambdaRegime.DIVERGENT
    assert divergent.lambda_limit is None


def test_sequence_errors() -> None:
    """Empty ranges and non-thinning laws are refused."""
    with pytest.raises(ParameterError):
        make_regime_sequence(5, 2, ScalingLaw(), ScalingLaw())
    with pytest.raises(ScalingLawError):
        make_regime_sequence(2, 5, ScalingLaw(exponent=0.0), ScalingLaw())
    with pytest.raises(ScalingLawError):
        make_regime_sequence(2, 5, ScalingLaw(exponent=-1.0), ScalingLaw())
