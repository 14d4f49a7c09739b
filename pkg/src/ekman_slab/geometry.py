"""Slab geometry, regime sequences, field containers and the vertical average.

The slab is ``T^2 x [-ell, ell]``. Horizontally the grid is uniform and periodic, vertically it is the
Chebyshev-Gauss-Lobatto grid of ``[-1, 1]`` stretched by ``ell``. Node 0 is the top boundary ``x3 = +ell``,
node ``nv - 1`` the bottom boundary ``x3 = -ell``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
from numpy.polynomial import chebyshev
from scipy import fft

from .errors import GeometryError, ParameterError, ScalingLawError
from .models import LambdaRegime, RegimeParams, RegimeSequence, ScalingLaw

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import NDArray

    FloatArray = NDArray[np.float64]
    ComplexArray = NDArray[np.complex128]

logger = logging.getLogger(__name__)


def chebyshev_nodes(n: int) -> FloatArray:
    """Chebyshev-Gauss-Lobatto nodes ``cos(pi j / n)``, ordered from +1 down to -1.

    Returns:
        FloatArray: The ``n + 1`` nodes.
    """
    return np.cos(np.pi * np.arange(n + 1) / n)


def chebyshev_differentiation_matrix(n: int) -> FloatArray:
    """Collocation derivative on the nodes of :func:`chebyshev_nodes`.

    Returns:
        FloatArray: ``(n + 1, n + 1)`` matrix acting on nodal values.
    """
    x = chebyshev_nodes(n)
    c = np.ones(n + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n + 1)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    return d


def clenshaw_curtis_weights(n: int) -> FloatArray:
    """Clenshaw-Curtis weights on ``[-1, 1]`` for the nodes of :func:`chebyshev_nodes`.

    The rule integrates the degree-``n`` interpolant exactly; the weights are positive and sum to 2.

    Returns:
        FloatArray: The ``n + 1`` weights.
    """
    theta = np.pi * np.arange(n + 1) / n
    weights = np.zeros(n + 1)
    interior = np.ones(n - 1)
    if n % 2 == 0:
        weights[0] = weights[n] = 1.0 / (n**2 - 1)
        for k in range(1, n // 2):
            interior -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k**2 - 1)
        interior -= np.cos(n * theta[1:-1]) / (n**2 - 1)
    else:
        weights[0] = weights[n] = 1.0 / n**2
        for k in range(1, (n - 1) // 2 + 1):
            interior -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k**2 - 1)
    weights[1:-1] = 2.0 * interior / n
    return weights


def _modal_matrix(n: int) -> FloatArray:
    """Nodal to Chebyshev-modal map (discrete cosine transform of type I)."""
    j = np.arange(n + 1)
    c = np.ones(n + 1)
    c[0] = c[-1] = 2.0
    cosines = np.cos(np.pi * np.outer(j, j) / n)
    return (2.0 / n) * cosines / np.outer(c, c)


def _chebyshev_gram(n: int) -> FloatArray:
    """Exact integrals of ``T_k T_l`` over ``[-1, 1]``."""

    def integral(m: NDArray[np.int_]) -> FloatArray:
        out = np.zeros(m.shape)
        even = m % 2 == 0
        out[even] = 2.0 / (1.0 - m[even].astype(float) ** 2)
        return out

    k = np.arange(n + 1)
    return 0.5 * (integral(k[:, None] + k[None, :]) + integral(np.abs(k[:, None] - k[None, :])))


@dataclass(frozen=True)
class HorizontalGrid:
    """Uniform periodic grid of the torus of side ``horizontal_period``."""

    horizontal_period: float = 2 * math.pi
    nh: int = 32

    def __post_init__(self) -> None:
        """Validate the grid.

        Raises:
            GeometryError: If the grid is not an even size of at least 8 or the period is not positive.
        """
        if self.nh < 8 or self.nh % 2:  # noqa: PLR2004
            msg = f"nh must be an even integer >= 8, got {self.nh}"
            raise GeometryError(msg)
        if self.horizontal_period <= 0:
            msg = f"horizontal period must be positive, got {self.horizontal_period}"
            raise GeometryError(msg)

    @cached_property
    def dx(self) -> float:
        """Grid spacing."""
        return self.horizontal_period / self.nh

    @cached_property
    def cell_area(self) -> float:
        """Area of one grid cell."""
        return self.dx**2

    @cached_property
    def area(self) -> float:
        """Area of the torus."""
        return self.horizontal_period**2

    @cached_property
    def mesh(self) -> tuple[FloatArray, FloatArray]:
        """Coordinates ``(x1, x2)`` of shape ``(nh, nh)``."""
        x = np.arange(self.nh) * self.dx
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        return x1, x2

    @cached_property
    def spectral_shape(self) -> tuple[int, int]:
        """Shape of the real-to-complex spectrum."""
        return self.nh, self.nh // 2 + 1

    @cached_property
    def wavenumbers(self) -> tuple[FloatArray, FloatArray]:
        """Wavenumbers ``(k1, k2)`` broadcastable to :attr:`spectral_shape`."""
        scale = 2 * math.pi / self.horizontal_period
        k1 = scale * fft.fftfreq(self.nh, 1.0 / self.nh)
        k2 = scale * fft.rfftfreq(self.nh, 1.0 / self.nh)
        return k1[:, None], k2[None, :]

    @cached_property
    def derivative_wavenumbers(self) -> tuple[FloatArray, FloatArray]:
        """Wavenumbers of first derivatives; the Nyquist modes are dropped."""
        k1, k2 = (k.copy() for k in self.wavenumbers)
        k1[self.nh // 2, 0] = 0.0
        k2[0, -1] = 0.0
        return k1, k2

    @cached_property
    def k_squared(self) -> FloatArray:
        """``|k|^2`` of the Laplacian."""
        k1, k2 = self.wavenumbers
        return k1**2 + k2**2

    @cached_property
    def dealias_mask(self) -> NDArray[np.bool_]:
        """Modes kept by the two-thirds rule."""
        n1 = np.abs(fft.fftfreq(self.nh, 1.0 / self.nh))[:, None]
        n2 = fft.rfftfreq(self.nh, 1.0 / self.nh)[None, :]
        return (n1 < self.nh / 3) & (n2 < self.nh / 3)

    def forward(self, values: FloatArray, axes: tuple[int, int] = (-2, -1)) -> ComplexArray:
        """Real-to-complex transform over the horizontal axes.

        Returns:
            ComplexArray: The spectrum.
        """
        return fft.rfft2(values, axes=axes)

    def backward(self, spectrum: ComplexArray, axes: tuple[int, int] = (-2, -1)) -> FloatArray:
        """Inverse of :meth:`forward`.

        Returns:
            FloatArray: The physical values.
        """
        return fft.irfft2(spectrum, s=(self.nh, self.nh), axes=axes)


@dataclass(frozen=True)
class SlabGeometry:
    """Periodic square times ``[-ell, ell]`` discretized by Fourier x Chebyshev collocation."""

    horizontal_period: float = 2 * math.pi
    nh: int = 32
    nv: int = 17
    ell: float = 1.0

    def __post_init__(self) -> None:
        """Validate the vertical grid.

        Raises:
            GeometryError: If ``nv`` is not odd and at least 5 or ``ell`` is not positive.
        """
        if self.nv < 5 or self.nv % 2 == 0:  # noqa: PLR2004
            msg = f"nv must be an odd integer >= 5, got {self.nv}"
            raise GeometryError(msg)
        if self.ell <= 0:
            msg = f"half thickness must be positive, got {self.ell}"
            raise GeometryError(msg)
        _ = self.horizontal

    def with_ell(self, ell: float) -> SlabGeometry:
        """Same grid, other thickness.

        Returns:
            SlabGeometry: The rescaled geometry.
        """
        return SlabGeometry(self.horizontal_period, self.nh, self.nv, ell)

    @cached_property
    def horizontal(self) -> HorizontalGrid:
        """The horizontal grid."""
        return HorizontalGrid(self.horizontal_period, self.nh)

    @cached_property
    def order(self) -> int:
        """Polynomial degree ``nv - 1`` of the vertical interpolant."""
        return self.nv - 1

    @cached_property
    def reference_nodes(self) -> FloatArray:
        """Nodes on ``[-1, 1]``."""
        return chebyshev_nodes(self.order)

    @cached_property
    def nodes(self) -> FloatArray:
        """Nodes on ``[-ell, ell]``."""
        return self.ell * self.reference_nodes

    @cached_property
    def mesh(self) -> tuple[FloatArray, FloatArray, FloatArray]:
        """Coordinates ``(x1, x2, x3)`` of shape ``(nh, nh, nv)``."""
        x1, x2 = self.horizontal.mesh
        shape = (self.nh, self.nh, self.nv)
        return (
            np.broadcast_to(x1[:, :, None], shape),
            np.broadcast_to(x2[:, :, None], shape),
            np.broadcast_to(self.nodes[None, None, :], shape),
        )

    @cached_property
    def d1(self) -> FloatArray:
        """Vertical derivative ``d/dx3`` on nodal values."""
        return chebyshev_differentiation_matrix(self.order) / self.ell

    @cached_property
    def d2(self) -> FloatArray:
        """Second vertical derivative on nodal values."""
        return self.d1 @ self.d1

    @cached_property
    def average_weights(self) -> FloatArray:
        """Weights of ``(1 / 2 ell) * integral dx3``; they sum to one."""
        return 0.5 * clenshaw_curtis_weights(self.order)

    @cached_property
    def to_modal(self) -> FloatArray:
        """Nodal values to Chebyshev coefficients."""
        return _modal_matrix(self.order)

    @cached_property
    def from_modal(self) -> FloatArray:
        """Chebyshev coefficients to nodal values."""
        return chebyshev.chebvander(self.reference_nodes, self.order)

    @cached_property
    def gram(self) -> FloatArray:
        """Exact ``(1 / 2 ell) * integral`` of products of nodal interpolants."""
        return 0.5 * self.to_modal.T @ _chebyshev_gram(self.order) @ self.to_modal

    @cached_property
    def padded_order(self) -> int:
        """Degree of the padded grid used for alias-free vertical products."""
        return 3 * self.order // 2 + 1

    @cached_property
    def pad_up(self) -> FloatArray:
        """Nodal values to values on the padded grid."""
        padded = chebyshev.chebvander(chebyshev_nodes(self.padded_order), self.order)
        return padded @ self.to_modal

    @cached_property
    def pad_down(self) -> FloatArray:
        """Padded values to nodal values of the truncated interpolant."""
        return self.from_modal @ _modal_matrix(self.padded_order)[: self.nv, :]

    @cached_property
    def cell_volume(self) -> float:
        """Horizontal cell area times the slab thickness ``2 ell``."""
        return self.horizontal.cell_area * 2 * self.ell

    def vertical_matmul(self, matrix: FloatArray, values: NDArray[np.generic]) -> NDArray[np.generic]:
        """Apply a vertical operator along the last axis.

        Returns:
            The transformed array.
        """
        return np.einsum("ij,...j->...i", matrix, values)


def _frozen(array: NDArray[np.generic]) -> NDArray[np.generic]:
    array = np.array(array, order="C")
    array.flags.writeable = False
    return array


class Field2D:
    """Scalar or horizontal-vector field on the torus.

    Physical values have shape ``(components, nh, nh)``. Either representation may be stale; the missing one is
    computed on first access and cached. Arrays are read-only so that fields behave as values.
    """

    __slots__ = ("_physical", "_spectral", "grid")

    def __init__(
        self,
        grid: HorizontalGrid,
        physical: FloatArray | None = None,
        spectral: ComplexArray | None = None,
    ) -> None:
        """Create from either representation.

        Args:
            grid: The horizontal grid.
            physical: Real values ``(components, nh, nh)``; a 2-D array is taken as a scalar.
            spectral: Spectrum ``(components, nh, nh // 2 + 1)``.

        Raises:
            GeometryError: If no representation is given or the shapes do not fit the grid.
        """
        if physical is None and spectral is None:
            msg = "a field needs physical or spectral values"
            raise GeometryError(msg)
        self.grid = grid
        self._physical: FloatArray | None = None
        self._spectral: ComplexArray | None = None
        if physical is not None:
            values = np.asarray(physical, dtype=np.float64)
            if values.ndim == 2:  # noqa: PLR2004
                values = values[None]
            if values.shape[1:] != (grid.nh, grid.nh) or values.shape[0] not in {1, 2}:
                msg = f"physical shape {values.shape} does not fit grid nh={grid.nh}"
                raise GeometryError(msg)
            self._physical = _frozen(values)
        if spectral is not None:
            coefficients = np.asarray(spectral, dtype=np.complex128)
            if coefficients.ndim == 2:  # noqa: PLR2004
                coefficients = coefficients[None]
            if coefficients.shape[1:] != grid.spectral_shape or coefficients.shape[0] not in {1, 2}:
                msg = f"spectral shape {coefficients.shape} does not fit grid nh={grid.nh}"
                raise GeometryError(msg)
            self._spectral = _frozen(coefficients)

    @classmethod
    def from_function(cls, grid: HorizontalGrid, *functions: Callable[[FloatArray, FloatArray], FloatArray]) -> Field2D:
        """Sample one function per component on the grid.

        Returns:
            Field2D: The sampled field.
        """
        x1, x2 = grid.mesh
        return cls(grid, np.stack([np.broadcast_to(f(x1, x2), x1.shape) for f in functions]))

    @classmethod
    def zeros(cls, grid: HorizontalGrid, components: int = 1) -> Field2D:
        """Zero field.

        Returns:
            Field2D: The zero field.
        """
        return cls(grid, np.zeros((components, grid.nh, grid.nh)))

    @classmethod
    def stack(cls, *fields: Field2D) -> Field2D:
        """Concatenate the components of several fields.

        Returns:
            Field2D: The stacked field.
        """
        first = fields[0]
        for other in fields[1:]:
            first._check(other)
        return cls(first.grid, np.concatenate([f.physical for f in fields]))

    @property
    def components(self) -> int:
        """Number of components."""
        array = self._physical if self._physical is not None else self._spectral
        assert array is not None  # noqa: S101
        return int(array.shape[0])

    @property
    def physical(self) -> FloatArray:
        """Real values ``(components, nh, nh)``."""
        if self._physical is None:
            assert self._spectral is not None  # noqa: S101
            self._physical = _frozen(self.grid.backward(self._spectral))
        return self._physical

    @property
    def spectral(self) -> ComplexArray:
        """Spectrum ``(components, nh, nh // 2 + 1)``."""
        if self._spectral is None:
            self._spectral = _frozen(self.grid.forward(self.physical))
        return self._spectral

    def component(self, index: int) -> Field2D:
        """Single component as a scalar field.

        Returns:
            Field2D: The component.
        """
        if self._spectral is not None and self._physical is None:
            return Field2D(self.grid, spectral=self._spectral[index : index + 1])
        return Field2D(self.grid, self.physical[index : index + 1])

    def _check(self, other: Field2D) -> None:
        if other.grid != self.grid:
            msg = "fields live on different grids"
            raise GeometryError(msg)

    def __add__(self, other: Field2D) -> Field2D:
        """Pointwise sum.

        Returns:
            Field2D: The sum.
        """
        self._check(other)
        return Field2D(self.grid, self.physical + other.physical)

    def __sub__(self, other: Field2D) -> Field2D:
        """Pointwise difference.

        Returns:
            Field2D: The difference.
        """
        self._check(other)
        return Field2D(self.grid, self.physical - other.physical)

    def __mul__(self, other: float | Field2D) -> Field2D:
        """Multiply by a number or pointwise by a scalar field.

        Returns:
            Field2D: The product.
        """
        if isinstance(other, Field2D):
            self._check(other)
            return Field2D(self.grid, self.physical * other.physical[:1])
        return Field2D(self.grid, self.physical * other)

    __rmul__ = __mul__

    def __neg__(self) -> Field2D:
        """Negation.

        Returns:
            Field2D: The negated field.
        """
        return self * -1.0

    def integral(self) -> FloatArray:
        """Integral over the torus of each component.

        Returns:
            FloatArray: One integral per component.
        """
        return self.physical.sum(axis=(1, 2)) * self.grid.cell_area

    def norm(self) -> float:
        """``L^2`` norm over the torus.

        Returns:
            float: The norm.
        """
        return math.sqrt(float(np.sum(self.physical**2)) * self.grid.cell_area)

    def sup(self) -> float:
        """Largest absolute value (Euclidean over components).

        Returns:
            float: The sup norm.
        """
        return float(np.sqrt(np.sum(self.physical**2, axis=0)).max())


class Field3D:
    """Scalar, horizontal-pair or vector field on the slab.

    Physical values have shape ``(components, nh, nh, nv)`` with 1, 2 or 3 components. :attr:`spectral` holds
    horizontal Fourier coefficients times vertical Chebyshev coefficients; operators work on
    :attr:`horizontal_spectrum`, which keeps the vertical direction nodal.
    """

    __slots__ = ("_horizontal", "_physical", "geometry")

    def __init__(
        self,
        geometry: SlabGeometry,
        physical: FloatArray | None = None,
        horizontal_spectrum: ComplexArray | None = None,
    ) -> None:
        """Create from physical values or from the horizontal spectrum.

        Args:
            geometry: The slab geometry.
            physical: Real values ``(components, nh, nh, nv)``; a 3-D array is taken as a scalar.
            horizontal_spectrum: Horizontal spectrum ``(components, nh, nh // 2 + 1, nv)``.

        Raises:
            GeometryError: If no representation is given or the shapes do not fit the geometry.
        """
        if physical is None and horizontal_spectrum is None:
            msg = "a field needs physical or spectral values"
            raise GeometryError(msg)
        self.geometry = geometry
        self._physical: FloatArray | None = None
        self._horizontal: ComplexArray | None = None
        grid = geometry.horizontal
        if physical is not None:
            self._physical = _frozen(self._shaped(physical, np.float64, (grid.nh, grid.nh, geometry.nv)))
        if horizontal_spectrum is not None:
            shape = (*grid.spectral_shape, geometry.nv)
            self._horizontal = _frozen(self._shaped(horizontal_spectrum, np.complex128, shape))

    @staticmethod
    def _shaped(values: NDArray[np.generic], dtype: type, shape: tuple[int, ...]) -> NDArray[np.generic]:
        array = np.asarray(values, dtype=dtype)
        if array.ndim == len(shape):
            array = array[None]
        if array.shape[1:] != shape or array.shape[0] not in {1, 2, 3}:
            msg = f"array of shape {array.shape} does not fit {shape}"
            raise GeometryError(msg)
        return array

    @classmethod
    def from_spectral(cls, geometry: SlabGeometry, spectral: ComplexArray) -> Field3D:
        """Create from Fourier x Chebyshev coefficients.

        Returns:
            Field3D: The field.
        """
        return cls(geometry, horizontal_spectrum=geometry.vertical_matmul(geometry.from_modal, spectral))

    @classmethod
    def from_function(
        cls,
        geometry: SlabGeometry,
        *functions: Callable[[FloatArray, FloatArray, FloatArray], FloatArray],
    ) -> Field3D:
        """Sample one function of ``(x1, x2, x3)`` per component.

        Returns:
            Field3D: The sampled field.
        """
        x1, x2, x3 = geometry.mesh
        return cls(geometry, np.stack([np.broadcast_to(f(x1, x2, x3), x1.shape) for f in functions]))

    @classmethod
    def zeros(cls, geometry: SlabGeometry, components: int = 1) -> Field3D:
        """Zero field.

        Returns:
            Field3D: The zero field.
        """
        return cls(geometry, np.zeros((components, geometry.nh, geometry.nh, geometry.nv)))

    @classmethod
    def stack(cls, *fields: Field3D) -> Field3D:
        """Concatenate the components of several fields.

        Returns:
            Field3D: The stacked field.
        """
        first = fields[0]
        for other in fields[1:]:
            first._check(other)
        return cls(first.geometry, np.concatenate([f.physical for f in fields]))

    @property
    def components(self) -> int:
        """Number of components."""
        array = self._physical if self._physical is not None else self._horizontal
        assert array is not None  # noqa: S101
        return int(array.shape[0])

    @property
    def has_physical(self) -> bool:
        """Whether the physical representation is current."""
        return self._physical is not None

    @property
    def physical(self) -> FloatArray:
        """Real values ``(components, nh, nh, nv)``."""
        if self._physical is None:
            assert self._horizontal is not None  # noqa: S101
            self._physical = _frozen(self.geometry.horizontal.backward(self._horizontal, axes=(1, 2)))
        return self._physical

    @property
    def horizontal_spectrum(self) -> ComplexArray:
        """Horizontal Fourier coefficients at the vertical nodes."""
        if self._horizontal is None:
            self._horizontal = _frozen(self.geometry.horizontal.forward(self.physical, axes=(1, 2)))
        return self._horizontal

    @property
    def spectral(self) -> ComplexArray:
        """Horizontal Fourier coefficients times vertical Chebyshev coefficients."""
        return self.geometry.vertical_matmul(self.geometry.to_modal, self.horizontal_spectrum)

    def select(self, *indices: int) -> Field3D:
        """Subset of the components, in the given order.

        Returns:
            Field3D: The selected components.
        """
        picked = list(indices)
        if self._physical is None:
            return Field3D(self.geometry, horizontal_spectrum=self.horizontal_spectrum[picked])
        return Field3D(self.geometry, self.physical[picked])

    def component(self, index: int) -> Field3D:
        """Single component as a scalar field.

        Returns:
            Field3D: The component.
        """
        return self.select(index)

    def horizontal_part(self) -> Field3D:
        """The pair ``(f1, f2)`` of a vector field.

        Returns:
            Field3D: The horizontal components.
        """
        return self.select(0, 1)

    def _check(self, other: Field3D) -> None:
        if other.geometry != self.geometry:
            msg = "fields live on different geometries"
            raise GeometryError(msg)

    def __add__(self, other: Field3D) -> Field3D:
        """Pointwise sum.

        Returns:
            Field3D: The sum.
        """
        self._check(other)
        return Field3D(self.geometry, self.physical + other.physical)

    def __sub__(self, other: Field3D) -> Field3D:
        """Pointwise difference.

        Returns:
            Field3D: The difference.
        """
        self._check(other)
        return Field3D(self.geometry, self.physical - other.physical)

    def __mul__(self, other: float | Field3D) -> Field3D:
        """Multiply by a number or pointwise by a scalar field.

        Returns:
            Field3D: The product.
        """
        if isinstance(other, Field3D):
            self._check(other)
            return Field3D(self.geometry, self.physical * other.physical[:1])
        return Field3D(self.geometry, self.physical * other)

    __rmul__ = __mul__

    def __neg__(self) -> Field3D:
        """Negation.

        Returns:
            Field3D: The negated field.
        """
        return self * -1.0

    def integral(self) -> FloatArray:
        """Integral over the slab of each component (exact in x3 for the interpolant).

        Returns:
            FloatArray: One integral per component.
        """
        weights = self.geometry.average_weights
        return np.einsum("cijk,k->c", self.physical, weights) * self.geometry.cell_volume

    def sup(self) -> float:
        """Largest Euclidean norm over the grid.

        Returns:
            float: The sup norm.
        """
        return float(np.sqrt(np.sum(self.physical**2, axis=0)).max())


class Side(StrEnum):
    """Boundary of the slab."""

    TOP = "top"
    BOTTOM = "bottom"


def make_regime_sequence(
    n_min: int,
    n_max: int,
    ell_rule: ScalingLaw,
    alpha_rule: ScalingLaw,
) -> RegimeSequence:
    """Regimes ``eps_n = 1/n`` for ``n = n_min..n_max`` with power-law thickness and slip.

    Args:
        n_min: First index, at least 1.
        n_max: Last index, at least ``n_min``.
        ell_rule: Law ``ell = c * eps**a``; ``a`` must be positive.
        alpha_rule: Law ``alpha = c' * eps**b``; ``c'`` must be non-negative.

    Returns:
        RegimeSequence: The regimes, ordered by decreasing epsilon, and the behaviour of ``alpha / ell``.

    Raises:
        ParameterError: If the index range is empty or the slip would be negative.
        ScalingLawError: If the thickness does not decrease along the sequence.
    """
    if n_min < 1 or n_max < n_min:
        msg = f"invalid index range {n_min}..{n_max}"
        raise ParameterError(msg)
    if alpha_rule.coefficient < 0:
        msg = "negative slip coefficients are not supported"
        raise ParameterError(msg)
    if ell_rule.exponent <= 0 or ell_rule.coefficient <= 0:
        msg = f"thickness law {ell_rule} does not decrease to zero"
        raise ScalingLawError(msg)
    indices = list(range(n_min, n_max + 1))
    regimes = [RegimeParams(epsilon=1.0 / n, ell=ell_rule(1.0 / n), alpha=alpha_rule(1.0 / n)) for n in indices]
    ells = [regime.ell for regime in regimes]
    if any(later >= earlier for earlier, later in itertools.pairwise(ells)):
        msg = f"thickness law {ell_rule} gives a non-decreasing sequence"
        raise ScalingLawError(msg)

    gap = alpha_rule.exponent - ell_rule.exponent
    if alpha_rule.coefficient == 0:
        lambda_regime, limit = LambdaRegime.ZERO, 0.0
    elif math.isclose(gap, 0.0, abs_tol=1e-12):
        lambda_regime, limit = LambdaRegime.FINITE, alpha_rule.coefficient / ell_rule.coefficient
    elif gap > 0:
        lambda_regime, limit = LambdaRegime.ZERO, 0.0
    else:
        lambda_regime, limit = LambdaRegime.DIVERGENT, None
    logger.debug("regime sequence n=%d..%d lambda_regime=%s lambda_limit=%s", n_min, n_max, lambda_regime, limit)
    return RegimeSequence(regimes=regimes, lambda_regime=lambda_regime, lambda_limit=limit, indices=indices)


def _scalar_or_pair(f: Field3D) -> None:
    if f.components == 3:  # noqa: PLR2004
        msg = "split vector fields with horizontal_part() and component(2) first"
        raise GeometryError(msg)


def vertical_average(f: Field3D) -> Field2D:
    """``(1 / 2 ell) * integral of f dx3`` per component, exact for the vertical interpolant.

    Works on whichever representation is current, so averaging a spectral field needs no transform.

    Returns:
        Field2D: The average.
    """
    _scalar_or_pair(f)
    grid = f.geometry.horizontal
    weights = f.geometry.average_weights
    if not f.has_physical:
        return Field2D(grid, spectral=f.horizontal_spectrum @ weights)
    return Field2D(grid, f.physical @ weights)


def boundary_trace(f: Field3D, side: Side) -> Field2D:
    """Values at ``x3 = +ell`` (top) or ``x3 = -ell`` (bottom).

    Returns:
        Field2D: The trace.
    """
    _scalar_or_pair(f)
    index = 0 if side == Side.TOP else -1
    return Field2D(f.geometry.horizontal, f.physical[..., index])


def lift(f: Field2D, geometry: SlabGeometry) -> Field3D:
    """Extend a horizontal field constantly in x3.

    Returns:
        Field3D: The lifted field, with as many components as ``f``.

    Raises:
        GeometryError: If the grids differ.
    """
    if f.grid != geometry.horizontal:
        msg = "field and geometry have different horizontal grids"
        raise GeometryError(msg)
    return Field3D(geometry, np.repeat(f.physical[..., None], geometry.nv, axis=-1))


def quadrature_inner(f: Field3D, g: Field3D) -> float:
    """``(1 / 2 ell) * integral of f . g`` with the nodal Clenshaw-Curtis rule.

    The rule is diagonal, so pointwise orthogonality carries over exactly.

    Returns:
        float: The averaged inner product.
    """
    f._check(g)  # noqa: SLF001
    weights = f.geometry.average_weights
    return float(np.einsum("cijk,cijk,k->", f.physical, g.physical, weights)) * f.geometry.horizontal.cell_area


def exact_inner(f: Field3D, g: Field3D) -> float:
    """``(1 / 2 ell) * integral of f . g`` of the vertical interpolants, exactly.

    Returns:
        float: The averaged inner product.
    """
    f._check(g)  # noqa: SLF001
    gram = f.geometry.gram
    return float(np.einsum("cijk,kl,cijl->", f.physical, gram, g.physical)) * f.geometry.horizontal.cell_area
