"""Bounded, mass-conserving semi-Lagrangian transport of scalars.

Departure points are traced back with the midpoint rule and the transported field is interpolated there with cubic
splines in index space. Horizontally the grid is periodic. Vertically the Chebyshev nodes are uniform in
``theta = arccos(x3 / ell)``, and any function of ``x3`` is even and ``2 pi``-periodic in ``theta``, so the nodal
values are mirrored into a periodic array of length ``2 (nv - 1)``. The interpolated value is clamped to the values
at the surrounding nodes and the mass lost by the clamp is redistributed proportionally to the room left to the
bounds.
"""

from __future__ import annotations

import itertools
import logging
from typing import TYPE_CHECKING

import numpy as np
from scipy import ndimage

from .errors import TimeStepRejectedError
from .geometry import HorizontalGrid, SlabGeometry

if TYPE_CHECKING:
    from numpy.typing import NDArray

    FloatArray = NDArray[np.float64]

logger = logging.getLogger(__name__)


class SemiLagrangian:
    """Semi-Lagrangian transport on a horizontal grid or on the slab."""

    def __init__(self, domain: SlabGeometry | HorizontalGrid, max_courant: float = 1.0) -> None:
        """Prepare the index-space grid.

        Args:
            domain: The slab geometry for 3-D fields or the horizontal grid for 2-D ones.
            max_courant: Largest admitted horizontal Courant number ``dt * max|u_h| / dx``.
        """
        self.geometry = domain if isinstance(domain, SlabGeometry) else None
        self.grid = domain.horizontal if isinstance(domain, SlabGeometry) else domain
        self.max_courant = max_courant
        nh = self.grid.nh
        i1, i2 = np.meshgrid(np.arange(nh, dtype=float), np.arange(nh, dtype=float), indexing="ij")
        if self.geometry is None:
            self._index = np.stack([i1, i2])
            self._weights = np.ones((nh, nh))
        else:
            nv = self.geometry.nv
            shape = (nh, nh, nv)
            self._index = np.stack([
                np.broadcast_to(i1[..., None], shape),
                np.broadcast_to(i2[..., None], shape),
                np.broadcast_to(np.arange(nv, dtype=float), shape),
            ])
            self._weights = np.broadcast_to(self.geometry.average_weights, shape)

    def _extended(self, values: FloatArray) -> FloatArray:
        if self.geometry is None:
            return values
        return np.concatenate([values, values[..., -2:0:-1]], axis=-1)

    def _vertical_index(self, x3: FloatArray) -> FloatArray:
        assert self.geometry is not None  # noqa: S101
        ell, order = self.geometry.ell, self.geometry.order
        return order * np.arccos(np.clip(x3 / ell, -1.0, 1.0)) / np.pi

    def courant(self, velocity: FloatArray, dt: float) -> float:
        """Horizontal Courant number of ``velocity`` (component-leading physical values).

        Returns:
            float: ``dt * max|u_h| / dx``.
        """
        speed = float(np.sqrt(velocity[0] ** 2 + velocity[1] ** 2).max())
        return dt * speed / self.grid.dx

    def interpolate(self, values: FloatArray, coordinates: FloatArray) -> FloatArray:
        """Cubic spline values of a scalar array at index-space ``coordinates``.

        Returns:
            FloatArray: The interpolated values.
        """
        return ndimage.map_coordinates(self._extended(values), coordinates, order=3, mode="grid-wrap")

    def departure_points(self, velocity: FloatArray, dt: float) -> FloatArray:
        """Index-space feet of the characteristics through the grid points, by the midpoint rule.

        Returns:
            FloatArray: Coordinates of shape ``(ndim, *grid)``.
        """
        half = self._trace(velocity, 0.5 * dt, self._index)
        midpoint_velocity = np.stack([self.interpolate(component, half) for component in velocity])
        return self._trace(midpoint_velocity, dt, self._index)

    def _trace(self, velocity: FloatArray, dt: float, index: FloatArray) -> FloatArray:
        dx = self.grid.dx
        horizontal = [index[0] - dt * velocity[0] / dx, index[1] - dt * velocity[1] / dx]
        if self.geometry is None:
            return np.stack(horizontal)
        x3 = self.geometry.nodes[None, None, :] - dt * velocity[2]
        return np.stack([*horizontal, self._vertical_index(x3)])

    def _neighbour_bounds(self, values: FloatArray, coordinates: FloatArray) -> tuple[FloatArray, FloatArray]:
        extended = self._extended(values)
        base = [np.floor(c).astype(int) for c in coordinates]
        lower = np.full(coordinates.shape[1:], np.inf)
        upper = np.full(coordinates.shape[1:], -np.inf)
        for offsets in itertools.product((0, 1), repeat=len(base)):
            index = tuple((b + o) % n for b, o, n in zip(base, offsets, extended.shape, strict=True))
            corner = extended[index]
            lower, upper = np.minimum(lower, corner), np.maximum(upper, corner)
        return lower, upper

    def _restore_mass(self, values: FloatArray, mass: float, lower: float, upper: float) -> FloatArray:
        deficit = mass - float(np.sum(self._weights * values))
        room = upper - values if deficit > 0 else values - lower
        capacity = float(np.sum(self._weights * room))
        if deficit == 0 or capacity <= 0:
            return values
        fraction = abs(deficit) / capacity
        if fraction > 1:
            logger.warning("mass fix saturated deficit=%.3e capacity=%.3e", deficit, capacity)
            fraction = 1.0
        return values + np.sign(deficit) * fraction * room

    def advect(self, values: FloatArray, velocity: FloatArray, dt: float) -> FloatArray:
        """Transport a scalar array by ``velocity`` over ``dt``.

        The result stays within the bounds of ``values`` and keeps its weighted total.

        Args:
            values: Scalar physical values ``(nh, nh[, nv])``.
            velocity: Component-leading physical velocity, two components on the torus and three on the slab.
            dt: Time step.

        Returns:
            FloatArray: The transported values.

        Raises:
            TimeStepRejectedError: If the horizontal Courant number exceeds ``max_courant``.
        """
        courant = self.courant(velocity, dt)
        if courant > self.max_courant:
            admissible = dt * self.max_courant / courant
            raise TimeStepRejectedError(dt, admissible, courant)
        if not np.any(velocity):
            return np.array(values)
        coordinates = self.departure_points(velocity, dt)
        interpolated = self.interpolate(values, coordinates)
        lower, upper = self._neighbour_bounds(values, coordinates)
        clamped = np.clip(interpolated, lower, upper)
        mass = float(np.sum(self._weights * values))
        return self._restore_mass(clamped, mass, float(values.min()), float(values.max()))
