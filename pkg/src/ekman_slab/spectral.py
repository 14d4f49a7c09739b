"""Horizontal spectral calculus, Leray projections, the low-pass cutoff and dealiased products.

Horizontal derivatives are Fourier multipliers on the real-to-complex spectrum, vertical derivatives are Chebyshev
collocation matrices. First derivatives drop the Nyquist modes, so ``curl_h(grad_h f)`` and ``div_h(perp_grad_h f)``
vanish in exact arithmetic and the discrete projections are exact projectors.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, overload

import numpy as np
from scipy import fft, linalg, stats

from .errors import GeometryError, ParameterError
from .geometry import Field2D, Field3D, HorizontalGrid, SlabGeometry, exact_inner

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from numpy.typing import NDArray

    FloatArray = NDArray[np.float64]
    ComplexArray = NDArray[np.complex128]

logger = logging.getLogger(__name__)

Field = Field2D | Field3D


def _spectrum(f: Field) -> ComplexArray:
    return f.spectral if isinstance(f, Field2D) else f.horizontal_spectrum


def _like(f: Field, spectrum: ComplexArray) -> Field:
    if isinstance(f, Field2D):
        return Field2D(f.grid, spectral=spectrum)
    return Field3D(f.geometry, horizontal_spectrum=spectrum)


def _grid(f: Field) -> HorizontalGrid:
    return f.grid if isinstance(f, Field2D) else f.geometry.horizontal


def _derivative_wavenumbers(f: Field) -> tuple[FloatArray, FloatArray]:
    k1, k2 = _grid(f).derivative_wavenumbers
    if isinstance(f, Field3D):
        return k1[..., None], k2[..., None]
    return k1, k2


def _k_squared(f: Field) -> FloatArray:
    k_squared = _grid(f).k_squared
    return k_squared[..., None] if isinstance(f, Field3D) else k_squared


def _require_scalar(f: Field) -> None:
    if f.components != 1:
        msg = f"expected a scalar field, got {f.components} components"
        raise GeometryError(msg)


def _require_pair(v: Field) -> None:
    if v.components < 2:  # noqa: PLR2004
        msg = f"expected a vector field, got {v.components} components"
        raise GeometryError(msg)


@overload
def grad_h(f: Field2D) -> Field2D: ...
@overload
def grad_h(f: Field3D) -> Field3D: ...
def grad_h(f: Field) -> Field:
    """Horizontal gradient ``(d1 f, d2 f)`` of a scalar.

    Returns:
        The two-component gradient, on the same grid as ``f``.
    """
    _require_scalar(f)
    k1, k2 = _derivative_wavenumbers(f)
    s = _spectrum(f)[0]
    return _like(f, np.stack([1j * k1 * s, 1j * k2 * s]))


@overload
def perp_grad_h(f: Field2D) -> Field2D: ...
@overload
def perp_grad_h(f: Field3D) -> Field3D: ...
def perp_grad_h(f: Field) -> Field:
    """Rotated gradient ``(-d2 f, d1 f)`` of a scalar.

    Returns:
        The two-component field.
    """
    _require_scalar(f)
    k1, k2 = _derivative_wavenumbers(f)
    s = _spectrum(f)[0]
    return _like(f, np.stack([-1j * k2 * s, 1j * k1 * s]))


@overload
def div_h(v: Field2D) -> Field2D: ...
@overload
def div_h(v: Field3D) -> Field3D: ...
def div_h(v: Field) -> Field:
    """``d1 v1 + d2 v2``; a third component is ignored.

    Returns:
        The scalar divergence.
    """
    _require_pair(v)
    k1, k2 = _derivative_wavenumbers(v)
    s = _spectrum(v)
    return _like(v, (1j * k1 * s[0] + 1j * k2 * s[1])[None])


@overload
def curl_h(v: Field2D) -> Field2D: ...
@overload
def curl_h(v: Field3D) -> Field3D: ...
def curl_h(v: Field) -> Field:
    """``d1 v2 - d2 v1``; a third component is ignored.

    Returns:
        The scalar curl.
    """
    _require_pair(v)
    k1, k2 = _derivative_wavenumbers(v)
    s = _spectrum(v)
    return _like(v, (1j * k1 * s[1] - 1j * k2 * s[0])[None])


@overload
def laplacian_h(f: Field2D) -> Field2D: ...
@overload
def laplacian_h(f: Field3D) -> Field3D: ...
def laplacian_h(f: Field) -> Field:
    """Horizontal Laplacian, componentwise.

    Returns:
        The Laplacian.
    """
    return _like(f, -_k_squared(f) * _spectrum(f))


def d3(f: Field3D) -> Field3D:
    """Vertical derivative, componentwise.

    Returns:
        Field3D: ``df/dx3``.
    """
    return Field3D(f.geometry, f.geometry.vertical_matmul(f.geometry.d1, f.physical))


def grad_3d(f: Field3D) -> Field3D:
    """Full gradient of a scalar slab field.

    Returns:
        Field3D: The three-component gradient.
    """
    return Field3D.stack(grad_h(f), d3(f))


def div_3d(v: Field3D) -> Field3D:
    """Full divergence of a three-component slab field.

    Returns:
        Field3D: The scalar divergence.
    """
    if v.components != 3:  # noqa: PLR2004
        msg = f"expected a three-component field, got {v.components}"
        raise GeometryError(msg)
    return div_h(v) + d3(v.component(2))


def dirichlet_energy(u: Field3D) -> float:
    """``(1 / 2 ell) * integral |grad u|^2``, summed over components and exact in x3.

    Returns:
        float: The averaged Dirichlet energy.
    """
    return sum((exact_inner(g, g) for g in (grad_3d(u.component(i)) for i in range(u.components))), 0.0)


def leray_project_2d(v: Field2D) -> Field2D:
    """Orthogonal projection of a horizontal vector field onto divergence-free fields.

    The mean passes through unchanged.

    Returns:
        Field2D: ``P v``.
    """
    _require_pair(v)
    k1, k2 = v.grid.derivative_wavenumbers
    s = v.spectral
    k_squared = k1**2 + k2**2
    inverse = np.divide(1.0, k_squared, out=np.zeros_like(k_squared), where=k_squared > 0)
    parallel = (k1 * s[0] + k2 * s[1]) * inverse
    return Field2D(v.grid, spectral=np.stack([s[0] - k1 * parallel, s[1] - k2 * parallel]))


class ConstrainedSolver:
    """Per-mode Galerkin solves in the space of divergence-free slab fields with ``w3 = 0`` at the walls.

    For a horizontal mode ``k`` the unknown splits into the part of ``w_h`` normal to ``k``, which is free, and the
    pair (``a``, ``w3``), ``a`` being the part along ``k``, tied by ``i |k| a + D w3 = 0``. Parametrizing the pair by
    the interior values of ``w3`` turns

        (shift G + diffusivity S(k)) w = F, tested against every admissible field,

    into a symmetric positive definite system per distinct ``(|k|^2, |k_d|^2)``, factorized once with Cholesky. ``G``
    is the exact vertical Gram matrix and ``S(k) = |k|^2 G + D^T G D``; on the horizontal components ``S`` also carries
    ``(alpha / ell) (e_top e_top^T + e_bottom e_bottom^T)``, the natural form of the Robin condition. With
    ``diffusivity = 0`` and loads ``F = G v`` the solution is the orthogonal Leray projection of ``v``.
    """

    def __init__(
        self,
        geometry: SlabGeometry,
        shift: float = 1.0,
        diffusivity: float = 0.0,
        alpha: float = 0.0,
    ) -> None:
        """Factorize the per-mode systems.

        Args:
            geometry: The slab geometry.
            shift: Coefficient of the mass term.
            diffusivity: Coefficient of the stiffness term.
            alpha: Slip coefficient of the Robin term.

        Raises:
            ParameterError: For negative coefficients, or a system that is not definite.
        """
        if min(shift, diffusivity, alpha) < 0 or (shift == 0 and (diffusivity == 0 or alpha == 0)):
            msg = f"indefinite slab system shift={shift} diffusivity={diffusivity} alpha={alpha}"
            raise ParameterError(msg)
        self.geometry = geometry
        self.shift, self.diffusivity, self.alpha = shift, diffusivity, alpha
        grid = geometry.horizontal
        nv = geometry.nv
        full_n1 = fft.fftfreq(grid.nh, 1.0 / grid.nh).round().astype(int)
        full_n2 = fft.rfftfreq(grid.nh, 1.0 / grid.nh).round().astype(int)
        n1, n2 = full_n1.copy(), full_n2.copy()
        n1[grid.nh // 2] = 0
        n2[-1] = 0
        full = full_n1[:, None] ** 2 + full_n2[None, :] ** 2
        derivative = n1[:, None] ** 2 + n2[None, :] ** 2
        levels, inverse = np.unique(np.stack([full.ravel(), derivative.ravel()], axis=1), axis=0, return_inverse=True)

        d1, gram = geometry.d1, geometry.gram
        interior = slice(1, nv - 1)
        de = d1[:, interior]
        stiffness = d1.T @ gram @ d1
        slip = np.zeros((nv, nv))
        slip[0, 0] = slip[-1, -1] = alpha / geometry.ell
        identity = np.eye(nv)
        scale = 2 * np.pi / geometry.horizontal_period
        normal = np.zeros((len(levels), nv, nv))
        blocks = np.zeros((len(levels), 2 * nv, 2 * nv))
        for index, (level, derivative_level) in enumerate(levels):
            laplacian = scale**2 * level * gram + stiffness
            horizontal = shift * gram + diffusivity * (laplacian + slip)
            normal[index] = linalg.cho_solve(linalg.cho_factor(horizontal), identity)
            if derivative_level == 0:
                continue
            kappa = scale * np.sqrt(derivative_level)
            vertical_operator = shift * gram + diffusivity * laplacian
            system = de.T @ horizontal @ de / kappa**2 + vertical_operator[interior, interior]
            factor = linalg.cho_factor(system)
            along = linalg.cho_solve(factor, de.T) / kappa
            vertical = linalg.cho_solve(factor, identity[interior, :])
            blocks[index, :nv, :nv] = de @ along / kappa
            blocks[index, :nv, nv:] = de @ vertical / kappa
            blocks[index, nv + 1 : 2 * nv - 1, :nv] = along
            blocks[index, nv + 1 : 2 * nv - 1, nv:] = vertical
        inverse = inverse.reshape(-1)
        self._normal = normal[inverse]
        self._blocks = blocks[inverse]
        k1, k2 = grid.derivative_wavenumbers
        kappa = np.sqrt(k1**2 + k2**2)
        self._unit = tuple(np.divide(k, kappa, out=np.zeros_like(kappa), where=kappa > 0)[..., None] for k in (k1, k2))
        logger.debug(
            "slab system factorized nh=%d nv=%d ell=%.6g shift=%.6g diffusivity=%.6g alpha=%.6g levels=%d",
            grid.nh,
            nv,
            geometry.ell,
            shift,
            diffusivity,
            alpha,
            len(levels),
        )

    def _constrained(self, along: ComplexArray, vertical: ComplexArray) -> tuple[ComplexArray, ComplexArray]:
        nv = self.geometry.nv
        stacked = np.concatenate([along, 1j * vertical], axis=-1).reshape(-1, 2 * nv)
        result = np.einsum("mij,mj->mi", self._blocks, stacked).reshape((*along.shape[:-1], 2 * nv))
        return result[..., :nv], -1j * result[..., nv:]

    def solve(self, loads: ComplexArray) -> ComplexArray:
        """Solve for loads of shape ``(3, nh, nh // 2 + 1, nv)``, one load vector per mode and component.

        Returns:
            ComplexArray: Horizontal spectrum of the solution.
        """
        nv = self.geometry.nv
        u1, u2 = self._unit
        along = u1 * loads[0] + u2 * loads[1]
        rest = loads[:2] - np.stack([along * u1, along * u2])
        shape = rest.shape
        rest = np.einsum("mij,cmj->cmi", self._normal, rest.reshape(2, -1, nv)).reshape(shape)
        a, w3 = self._constrained(along, loads[2])
        return np.stack([rest[0] + a * u1, rest[1] + a * u2, w3])

    def project(self, spectrum: ComplexArray) -> ComplexArray:
        """Leray projection of a horizontal spectrum with the mass-only system.

        The part of ``v_h`` normal to the wavevector passes through unchanged.

        Returns:
            ComplexArray: The projected spectrum.
        """
        gram = self.geometry.gram
        u1, u2 = self._unit
        along = u1 * spectrum[0] + u2 * spectrum[1]
        a, w3 = self._constrained(
            self.geometry.vertical_matmul(gram, along), self.geometry.vertical_matmul(gram, spectrum[2])
        )
        change = a - along
        return np.stack([spectrum[0] + change * u1, spectrum[1] + change * u2, w3])

    def potential(self, original: ComplexArray, projected: ComplexArray) -> ComplexArray:
        """Horizontal potential ``q`` with ``grad_h q = (original - projected)_h``.

        Returns:
            ComplexArray: Spectrum of ``q`` of shape ``(1, nh, nh // 2 + 1, nv)``; modes without horizontal
            wavenumber are set to zero.
        """
        k1, k2 = self.geometry.horizontal.derivative_wavenumbers
        kappa = np.sqrt(k1**2 + k2**2)[..., None]
        u1, u2 = self._unit
        gap = u1 * (original[0] - projected[0]) + u2 * (original[1] - projected[1])
        return np.divide(-1j * gap, kappa, out=np.zeros_like(gap), where=kappa > 0)[None]


@functools.lru_cache(maxsize=16)
def projector_for(geometry: SlabGeometry) -> ConstrainedSolver:
    """Shared mass-only system of a geometry.

    Returns:
        ConstrainedSolver: The system used for projections.
    """
    return ConstrainedSolver(geometry)


def leray_project_3d(v: Field3D) -> Field3D:
    """Orthogonal projection onto divergence-free slab fields with ``w3 = 0`` at ``x3 = +-ell``.

    The projection is orthogonal for :func:`~ekman_slab.geometry.exact_inner`. The divergence of the result vanishes
    at every collocation node. The mean-zero gauge of the eliminated pressure is implicit.

    Returns:
        Field3D: The projected field.

    Raises:
        GeometryError: If ``v`` is not a three-component field.
    """
    if v.components != 3:  # noqa: PLR2004
        msg = f"expected a three-component field, got {v.components}"
        raise GeometryError(msg)
    projected = projector_for(v.geometry).project(v.horizontal_spectrum)
    logger.debug("zero mode projected with mean-zero pressure gauge")
    return Field3D(v.geometry, horizontal_spectrum=projected)


def reconstruct_pressure(v: Field3D, w: Field3D) -> Field3D:
    """Debugging aid: the potential whose horizontal gradient is ``(v - w)_h`` for ``w = leray_project_3d(v)``.

    Returns:
        Field3D: The scalar potential.
    """
    v._check(w)  # noqa: SLF001
    potential = projector_for(v.geometry).potential(v.horizontal_spectrum, w.horizontal_spectrum)
    return Field3D(v.geometry, horizontal_spectrum=potential)


def smooth_bump(r: FloatArray) -> FloatArray:
    """Radial profile equal to 1 on ``[0, 1]`` and 0 on ``[2, inf)``, a quintic smoothstep in between.

    Returns:
        FloatArray: The profile values.
    """
    t = np.clip(np.asarray(r, dtype=np.float64) - 1.0, 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


@dataclass(frozen=True)
class CutoffKernel:
    """Low-pass multiplier ``chi(2**-M |k|)``."""

    level: int
    chi: Callable[[FloatArray], FloatArray] = field(default=smooth_bump)

    def __post_init__(self) -> None:
        """Validate the level.

        Raises:
            ParameterError: For negative levels.
        """
        if self.level < 0:
            msg = f"cutoff level must be non-negative, got {self.level}"
            raise ParameterError(msg)

    def multiplier(self, grid: HorizontalGrid) -> FloatArray:
        """Multiplier on the real-to-complex spectrum of ``grid``.

        Returns:
            FloatArray: ``chi(|k| / 2**M)``.
        """
        return self.chi(np.sqrt(grid.k_squared) / 2.0**self.level)


@overload
def spectral_cutoff(f: Field2D, kernel: CutoffKernel) -> Field2D: ...
@overload
def spectral_cutoff(f: Field3D, kernel: CutoffKernel) -> Field3D: ...
def spectral_cutoff(f: Field, kernel: CutoffKernel) -> Field:
    """Apply ``S_M``: multiply each horizontal mode ``k`` by ``chi(2**-M |k|)``.

    Returns:
        The filtered field.
    """
    multiplier = kernel.multiplier(_grid(f))
    if isinstance(f, Field3D):
        multiplier = multiplier[..., None]
    return _like(f, multiplier * _spectrum(f))


def smooth_step_bM(s: Field2D, m: float) -> Field2D:  # noqa: N802
    """Pointwise ``b(M s)`` with ``b`` the profile of :func:`smooth_bump`.

    Returns:
        Field2D: The values.

    Raises:
        ParameterError: If ``m`` is not positive.
    """
    if m <= 0:
        msg = f"M must be positive, got {m}"
        raise ParameterError(msg)
    return Field2D(s.grid, smooth_bump(m * s.physical))


class Dealiaser:
    """Alias-free pointwise products.

    Horizontally the two-thirds rule truncates both factors and the result. Vertically the factors are evaluated on
    a Chebyshev grid of degree ``3N/2 + 1`` and the product is interpolated back, which is exact for the retained
    coefficients.
    """

    def __init__(self, geometry: SlabGeometry | HorizontalGrid) -> None:
        """Prepare masks and padding matrices.

        Args:
            geometry: A slab geometry for 3-D products or a horizontal grid for 2-D ones.
        """
        self.geometry = geometry if isinstance(geometry, SlabGeometry) else None
        self.grid = geometry.horizontal if isinstance(geometry, SlabGeometry) else geometry
        mask = self.grid.dealias_mask
        self._mask = mask[..., None] if self.geometry is not None else mask
        self._axes = (-3, -2) if self.geometry is not None else (-2, -1)

    def truncate(self, spectrum: ComplexArray) -> ComplexArray:
        """Zero the modes outside the two-thirds band.

        Returns:
            ComplexArray: The truncated spectrum.
        """
        return spectrum * self._mask

    def filtered(self, values: FloatArray) -> FloatArray:
        """Truncate physical values of shape ``(..., nh, nh[, nv])``.

        Returns:
            FloatArray: The band-limited values.
        """
        return self.grid.backward(self.truncate(self.grid.forward(values, axes=self._axes)), axes=self._axes)

    def product(self, left: FloatArray, right: FloatArray) -> FloatArray:
        """Dealiased pointwise product of physical arrays, broadcast over the leading axes.

        Returns:
            FloatArray: The band-limited product.
        """
        a, b = self.filtered(left), self.filtered(right)
        if self.geometry is not None:
            up, down = self.geometry.pad_up, self.geometry.pad_down
            a, b = self.geometry.vertical_matmul(up, a), self.geometry.vertical_matmul(up, b)
            return self.filtered(self.geometry.vertical_matmul(down, a * b))
        return self.filtered(a * b)

    @overload
    def multiply(self, f: Field2D, g: Field2D) -> Field2D: ...
    @overload
    def multiply(self, f: Field3D, g: Field3D) -> Field3D: ...
    def multiply(self, f: Field, g: Field) -> Field:
        """Dealiased product of fields; a scalar factor multiplies every component of the other.

        Returns:
            The product field.
        """
        values = self.product(f.physical, g.physical)
        if isinstance(f, Field2D):
            return Field2D(f.grid, values)
        return Field3D(f.geometry, values)


def commutator_norm(a: Field2D, f: Field2D, kernel: CutoffKernel) -> float:
    """``||S_M(a f) - a S_M f||_{L^2}`` for a scalar multiplier ``a``.

    Returns:
        float: The commutator norm.
    """
    _require_scalar(a)
    product = Field2D(f.grid, a.physical * f.physical)
    commutator = spectral_cutoff(product, kernel) - Field2D(f.grid, a.physical * spectral_cutoff(f, kernel).physical)
    return commutator.norm()


def commutator_slope(a: Field2D, f: Field2D, levels: Sequence[int]) -> tuple[float, list[float]]:
    """Least-squares slope of ``log2`` of :func:`commutator_norm` against ``M``.

    Returns:
        tuple: The slope and the norms per level.

    Raises:
        ParameterError: With fewer than three levels.
    """
    if len(levels) < 3:  # noqa: PLR2004
        msg = "a commutator slope needs at least three levels"
        raise ParameterError(msg)
    norms = [commutator_norm(a, f, CutoffKernel(level)) for level in levels]
    fit = stats.linregress(np.asarray(levels, dtype=float), np.log2(norms))
    logger.debug("commutator slope=%.4f levels=%s", fit.slope, list(levels))
    return float(fit.slope), norms
