"""Shared fixtures of the Ekman slab laboratory tests."""

import pytest

from ekman_slab.geometry import HorizontalGrid, SlabGeometry
from ekman_slab.models import RegimeParams

HALF_THICKNESS = 0.5


@pytest.fixture
def geometry() -> SlabGeometry:
    """Provide a small slab of half thickness 0.5."""
    return SlabGeometry(nh=16, nv=9, ell=HALF_THICKNESS)


@pytest.fixture
def grid() -> HorizontalGrid:
    """Provide the horizontal grid of the small slab."""
    return HorizontalGrid(nh=16)


@pytest.fixture
def regime() -> RegimeParams:
    """Provide a regime matching the small slab, without slip."""
    return RegimeParams(epsilon=1.0, ell=HALF_THICKNESS, alpha=0.0)
