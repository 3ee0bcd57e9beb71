"""Bump profiles and the two-strip control operator.

The operator acts as ``G(u) = g2(y) G1(u) + g1(x) G2(u)`` where ``G1``
removes the x-average of ``u`` and scales by ``1/(2 pi)`` (``G2`` likewise in
y).  On the box it is represented by the matrix of entries
``(G psi_j, psi_k)_{L^2}`` which, acting on coefficient vectors, gives the
Galerkin truncation of ``G``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RadiusMismatchError
from .spectral import TWO_PI, SpectralField, lattice_flat, sobolev_weights

log = logging.getLogger(__name__)

DEFAULT_OMEGA = (0.5, 1.5)
DEFAULT_BUMP_GRID = 8192
DEFAULT_KMAX_MARGIN = 4
# aliasing of the sampled profile on the cross-check grid is |g_hat(n - 2N)|
DEFAULT_PHYSICAL_GRID = 1024


def _profile(x: np.ndarray, a: float, b: float) -> np.ndarray:
    z = (2.0 * np.asarray(x, float) - a - b) / (b - a)
    out = np.zeros_like(z)
    inside = np.abs(z) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


@dataclass(frozen=True, eq=False)
class BumpFunction:
    """Smooth non-negative profile supported in ``[a, b]`` with unit mass.

    ``fourier[k + k_max]`` holds ``g_hat(k) = (1/2pi) int g(x) exp(-ikx) dx``.
    """

    a: float
    b: float
    grid_size: int
    k_max: int
    scale: float
    fourier: np.ndarray = field(repr=False)
    quadrature_drift: float = 0.0

    def __call__(self, x) -> np.ndarray:
        """Evaluate ``g`` at points of the circle (taken mod 2 pi)."""
        return self.scale * _profile(np.mod(x, TWO_PI), self.a, self.b)

    def coef(self, k):
        """``g_hat(k)``; raises ``IndexError`` outside the cached range."""
        k = np.asarray(k)
        if np.any(np.abs(k) > self.k_max):
            raise IndexError(
                f"Fourier index {int(np.abs(k).max())} exceeds cached range k_max={self.k_max}"
            )
        return self.fourier[k + self.k_max]

    @property
    def support(self) -> tuple[float, float]:
        return (self.a, self.b)


def _bump_coefficients(a, b, grid_size, k_max):
    x = TWO_PI * np.arange(grid_size) / grid_size
    g = _profile(x, a, b)
    scale = 1.0 / (g.sum() * TWO_PI / grid_size)
    spec = np.fft.fft(g * scale) / grid_size
    k = np.arange(-k_max, k_max + 1)
    return scale, spec[k % grid_size]


def make_bump(
    a: float,
    b: float,
    grid_size: int = DEFAULT_BUMP_GRID,
    k_max: int = 64,
    check: bool = True,
) -> BumpFunction:
    """Build the normalized mollifier ``exp(-1/(1-z^2))`` on ``(a, b)``.

    Fourier coefficients come from the rectangle rule on ``grid_size``
    points.  With ``check`` the computation is repeated on a doubled grid and
    the largest coefficient change is stored as ``quadrature_drift``.
    """
    if not (0.0 < a < b < TWO_PI):
        raise ValueError(f"support ({a}, {b}) must satisfy 0 < a < b < 2 pi")
    if grid_size < 4 * k_max:
        raise ValueError(f"grid_size {grid_size} must be at least 4*k_max = {4 * k_max}")
    scale, coeffs = _bump_coefficients(a, b, grid_size, k_max)
    drift = 0.0
    if check:
        _, fine = _bump_coefficients(a, b, 2 * grid_size, k_max)
        drift = float(np.abs(fine - coeffs).max())
        if drift > 1e-12:
            log.warning("bump quadrature drift %.3e exceeds 1e-12; increase bump_grid", drift)
    coeffs.setflags(write=False)
    return BumpFunction(float(a), float(b), int(grid_size), int(k_max), scale, coeffs, drift)


def m_coefficient(n: int, j: int, k: int) -> float:
    """Fourier coefficient ``k`` of ``G_n(exp(i j .))``: ``1/(2pi)`` iff ``j == k != 0``."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    return 1.0 / TWO_PI if (j == k and j != 0) else 0.0


def apply_G1(u: SpectralField) -> SpectralField:
    """Remove the x-average and scale by ``1/(2pi)``."""
    c = u.coeffs / TWO_PI
    c[u.radius, :] = 0.0
    return u.replace(c)


def apply_G2(u: SpectralField) -> SpectralField:
    """Remove the y-average and scale by ``1/(2pi)``."""
    c = u.coeffs / TWO_PI
    c[:, u.radius] = 0.0
    return u.replace(c)


def _assemble(g1: BumpFunction, g2: BumpFunction, radius: int) -> np.ndarray:
    k1, k2 = lattice_flat(radius)
    # rows index the output mode k, columns the input mode j
    K1, J1 = k1[:, None], k1[None, :]
    K2, J2 = k2[:, None], k2[None, :]
    m1 = np.where((J1 == K1) & (K1 != 0), 1.0 / TWO_PI, 0.0)
    m2 = np.where((J2 == K2) & (K2 != 0), 1.0 / TWO_PI, 0.0)
    return g2.coef(K2 - J2) * m1 + g1.coef(K1 - J1) * m2


@dataclass(frozen=True, eq=False)
class ControlOperator:
    """Galerkin matrix of ``G`` on the box of radius ``N``.

    ``matrix[k, j] = (G psi_j, psi_k)_{L^2}`` with flat mode ordering, so
    ``matrix @ u.vector`` are the coefficients of ``G u`` inside the box.
    """

    g1: BumpFunction
    g2: BumpFunction
    radius: int
    matrix: np.ndarray = field(repr=False)
    physical_grid: int = DEFAULT_PHYSICAL_GRID

    def weighted(self, s: float) -> np.ndarray:
        """Matrix in coordinates ``w_k = (1+|k|)^s u_hat(k)``."""
        w = sobolev_weights(self.radius, s).ravel()
        return w[:, None] * self.matrix / w[None, :]

    def bound(self, s: float = 0.0) -> float:
        """Operator norm of the truncated ``G`` on ``H^s_p``."""
        return float(np.linalg.norm(self.weighted(s), 2))

    def resized(self, radius: int) -> "ControlOperator":
        return build_control_operator(
            radius,
            (self.g1.a, self.g1.b),
            (self.g2.a, self.g2.b),
            bump_grid=self.g1.grid_size,
            kmax_margin=max(self.g1.k_max - 4 * self.radius, 0),
            physical_grid=self.physical_grid,
        )


def build_control_operator(
    radius: int,
    omega1=DEFAULT_OMEGA,
    omega2=DEFAULT_OMEGA,
    bump_grid: int = DEFAULT_BUMP_GRID,
    kmax_margin: int = DEFAULT_KMAX_MARGIN,
    physical_grid: int | None = None,
) -> ControlOperator:
    """Construct ``g1, g2`` on ``omega1, omega2`` and the box matrix of ``G``.

    The cached Fourier range is ``k_max = 4N + kmax_margin``, enough for every
    index difference and the doubled indices ``2 k`` used in synthesis.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    k_max = 4 * radius + kmax_margin
    g1 = make_bump(*omega1, grid_size=bump_grid, k_max=k_max)
    g2 = make_bump(*omega2, grid_size=bump_grid, k_max=k_max)
    mat = _assemble(g1, g2, radius)
    mat.setflags(write=False)
    n_phys = max(physical_grid or DEFAULT_PHYSICAL_GRID, 2 * (k_max + radius) + 1)
    return ControlOperator(g1, g2, radius, mat, n_phys)


def g_matrix_entry(op: ControlOperator, j, k) -> complex:
    """``(G psi_j, psi_k) = g2_hat(k2-j2) m1^{j1,k1} + g1_hat(k1-j1) m2^{j2,k2}``."""
    (j1, j2), (k1, k2) = j, k
    return complex(
        op.g2.coef(k2 - j2) * m_coefficient(1, j1, k1)
        + op.g1.coef(k1 - j1) * m_coefficient(2, j2, k2)
    )


def apply_G(op: ControlOperator, u: SpectralField, method: str = "matrix") -> SpectralField:
    """Apply the truncated control operator.

    ``method="matrix"`` multiplies by the assembled matrix.  ``method="grid"``
    works in physical space: sample ``u`` on an ``n x n`` grid, form the
    partial averages, multiply by the sampled profiles ``g1(x)``, ``g2(y)``
    and take the rectangle-rule coefficients of the box modes.  The two paths differ by the
    aliasing of the sampled profiles, of order ``|g_hat(n - 2N)|``.
    """
    if u.radius != op.radius:
        raise RadiusMismatchError(f"field radius {u.radius} vs operator radius {op.radius}")
    if method == "matrix":
        return u.replace((op.matrix @ u.vector).reshape(u.coeffs.shape))
    if method != "grid":
        raise ValueError(f"unknown method {method!r}")
    n = op.physical_grid
    x = TWO_PI * np.arange(n) / n
    # only box modes enter and leave, so partial DFT matrices replace full 2D FFTs
    synth = np.exp(1j * np.outer(x, np.arange(-u.radius, u.radius + 1)))
    vals = synth @ u.coeffs @ synth.T
    g1u = (vals - vals.mean(axis=0, keepdims=True)) / TWO_PI
    g2u = (vals - vals.mean(axis=1, keepdims=True)) / TWO_PI
    prod = op.g2(x)[None, :] * g1u + op.g1(x)[:, None] * g2u
    return u.replace(synth.conj().T @ prod @ synth.conj() / n**2)


def determinant_margins(bump: BumpFunction, kmax: int) -> np.ndarray:
    """``1/pi^2 - |g_hat(2k)|^2`` for ``k = 1..kmax``."""
    k = np.arange(1, kmax + 1)
    return 1.0 / math.pi**2 - np.abs(bump.coef(2 * k)) ** 2
