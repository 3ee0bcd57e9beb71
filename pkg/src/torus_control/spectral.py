"""Truncated Fourier fields on the 2-torus.

A field of radius ``N`` stores the coefficients ``u_hat(k)`` of ``exp(i k.x)``
for every mode in the square box ``|k1| <= N, |k2| <= N`` as a dense
``(2N+1, 2N+1)`` complex array.  Axis 0 runs over ``k1``, axis 1 over ``k2``,
both starting at ``-N``.  Flattened vectors use row-major order of that array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .errors import RadiusMismatchError, RealValuednessError, UndersampledGridError

TWO_PI = 2.0 * math.pi
REAL_TOL = 1e-12


class ModeIndex(NamedTuple):
    """Lattice point ``(k1, k2)`` of Z^2."""

    k1: int
    k2: int

    @property
    def norm(self) -> float:
        return math.hypot(self.k1, self.k2)


def box_size(radius: int) -> int:
    return 2 * radius + 1


def lattice(radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer arrays ``(k1, k2)`` of shape ``(2N+1, 2N+1)`` over the box."""
    r = np.arange(-radius, radius + 1)
    return np.meshgrid(r, r, indexing="ij")


def lattice_flat(radius: int) -> tuple[np.ndarray, np.ndarray]:
    k1, k2 = lattice(radius)
    return k1.ravel(), k2.ravel()


def mode_norms(radius: int) -> np.ndarray:
    k1, k2 = lattice(radius)
    return np.hypot(k1, k2)


def sobolev_weights(radius: int, s: float) -> np.ndarray:
    """``(1 + |k|)^s`` over the box."""
    return (1.0 + mode_norms(radius)) ** s


def flat_index(radius: int, k1: int, k2: int) -> int:
    n = box_size(radius)
    return (k1 + radius) * n + (k2 + radius)


def mean_mode_index(radius: int) -> int:
    return flat_index(radius, 0, 0)


def modes(radius: int) -> list[ModeIndex]:
    """All box modes in flat order."""
    k1, k2 = lattice_flat(radius)
    return [ModeIndex(int(a), int(b)) for a, b in zip(k1, k2)]


def in_box(radius: int, k1: int, k2: int) -> bool:
    return abs(k1) <= radius and abs(k2) <= radius


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable truncated Fourier representation of a state on T^2.

    Parameters
    ----------
    radius : int
        Lattice radius ``N``.
    coeffs : ndarray, shape (2N+1, 2N+1)
        ``coeffs[k1 + N, k2 + N]`` is ``u_hat(k1, k2)``.
    sobolev_index : float
        Default Sobolev exponent used by norms of this field.
    real_valued : bool
        When set, conjugate symmetry ``u_hat(-k) = conj(u_hat(k))`` is
        checked on construction.
    """

    radius: int
    coeffs: np.ndarray
    sobolev_index: float = 0.0
    real_valued: bool = False

    def __post_init__(self):
        if int(self.radius) != self.radius or self.radius < 0:
            raise ValueError(f"radius must be a non-negative integer, got {self.radius}")
        n = box_size(self.radius)
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (n, n):
            raise ValueError(f"coeffs must have shape {(n, n)}, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.real_valued:
            scale = max(float(np.abs(c).max(initial=0.0)), 1e-300)
            defect = float(np.abs(c - np.conj(c[::-1, ::-1])).max(initial=0.0))
            if defect > REAL_TOL * scale:
                raise RealValuednessError(
                    f"field flagged real-valued has conjugate-symmetry defect {defect:.3e}"
                )

    # construction helpers
    @classmethod
    def zeros(cls, radius: int, sobolev_index: float = 0.0) -> "SpectralField":
        n = box_size(radius)
        return cls(radius, np.zeros((n, n), complex), sobolev_index)

    @classmethod
    def from_modes(
        cls,
        radius: int,
        values: Mapping[tuple[int, int], complex],
        sobolev_index: float = 0.0,
        real_valued: bool = False,
    ) -> "SpectralField":
        n = box_size(radius)
        c = np.zeros((n, n), complex)
        for (k1, k2), val in values.items():
            if not in_box(radius, k1, k2):
                raise ValueError(f"mode {(k1, k2)} outside box of radius {radius}")
            c[k1 + radius, k2 + radius] = val
        return cls(radius, c, sobolev_index, real_valued)

    @classmethod
    def from_vector(cls, radius: int, vec, sobolev_index: float = 0.0) -> "SpectralField":
        n = box_size(radius)
        return cls(radius, np.asarray(vec, complex).reshape(n, n), sobolev_index)

    @classmethod
    def constant(cls, radius: int, value: complex, sobolev_index: float = 0.0) -> "SpectralField":
        return cls.from_modes(radius, {(0, 0): value}, sobolev_index)

    # access
    def __getitem__(self, k) -> complex:
        k1, k2 = k
        if not in_box(self.radius, k1, k2):
            raise KeyError(f"mode {(k1, k2)} outside box of radius {self.radius}")
        return complex(self.coeffs[k1 + self.radius, k2 + self.radius])

    @property
    def vector(self) -> np.ndarray:
        return self.coeffs.ravel()

    @property
    def mean(self) -> complex:
        """Coefficient of the constant mode, ``u_hat(0, 0)``."""
        return complex(self.coeffs[self.radius, self.radius])

    def replace(self, coeffs=None, sobolev_index=None) -> "SpectralField":
        return SpectralField(
            self.radius,
            self.coeffs if coeffs is None else coeffs,
            self.sobolev_index if sobolev_index is None else sobolev_index,
        )

    def without_mean(self) -> "SpectralField":
        c = self.coeffs.copy()
        c[self.radius, self.radius] = 0.0
        return self.replace(c)

    def is_conjugate_symmetric(self, rtol: float = REAL_TOL) -> bool:
        c = self.coeffs
        scale = max(float(np.abs(c).max(initial=0.0)), 1e-300)
        return float(np.abs(c - np.conj(c[::-1, ::-1])).max(initial=0.0)) <= rtol * scale

    def resized(self, radius: int) -> "SpectralField":
        """Zero-pad to a larger box or truncate to a smaller one."""
        n_new = box_size(radius)
        out = np.zeros((n_new, n_new), complex)
        r = min(radius, self.radius)
        out[radius - r : radius + r + 1, radius - r : radius + r + 1] = self.coeffs[
            self.radius - r : self.radius + r + 1, self.radius - r : self.radius + r + 1
        ]
        return SpectralField(radius, out, self.sobolev_index)

    # arithmetic
    def _check(self, other: "SpectralField"):
        if other.radius != self.radius:
            raise RadiusMismatchError(f"radius {self.radius} vs {other.radius}")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return self.replace(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return self.replace(self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return self.replace(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self.replace(-self.coeffs)

    def __repr__(self) -> str:
        nnz = int(np.count_nonzero(self.coeffs))
        return f"SpectralField(radius={self.radius}, nonzero={nnz}, s={self.sobolev_index})"


def sobolev_norm(u: SpectralField, s: float | None = None) -> float:
    """H^s_p norm ``sqrt((2 pi)^2 sum (1+|k|)^{2s} |u_hat(k)|^2)``."""
    if s is None:
        s = u.sobolev_index
    w = sobolev_weights(u.radius, 2.0 * s)
    return TWO_PI * math.sqrt(float(np.sum(w * np.abs(u.coeffs) ** 2)))


def sobolev_inner(u: SpectralField, v: SpectralField, s: float) -> complex:
    if u.radius != v.radius:
        raise RadiusMismatchError(f"radius {u.radius} vs {v.radius}")
    w = sobolev_weights(u.radius, 2.0 * s)
    return TWO_PI**2 * complex(np.sum(w * u.coeffs * np.conj(v.coeffs)))


def l2_inner(u: SpectralField, v: SpectralField) -> complex:
    """L^2 inner product by Parseval, ``(2 pi)^2 sum u_hat conj(v_hat)``."""
    return sobolev_inner(u, v, 0.0)


def psi(radius: int, k1: int, k2: int) -> SpectralField:
    """Orthonormal exponential ``exp(i k.x) / (2 pi)`` as a field."""
    return SpectralField.from_modes(radius, {(k1, k2): 1.0 / TWO_PI})


@dataclass(frozen=True, eq=False)
class GridSamples:
    """Samples on the uniform grid ``x_i = 2 pi i / n_x``, ``y_j = 2 pi j / n_y``."""

    values: np.ndarray

    @property
    def n_x(self) -> int:
        return self.values.shape[0]

    @property
    def n_y(self) -> int:
        return self.values.shape[1]

    @property
    def x(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_x) / self.n_x

    @property
    def y(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_y) / self.n_y


def _check_sampling(radius: int, n_x: int, n_y: int):
    need = box_size(radius)
    if n_x < need or n_y < need:
        raise UndersampledGridError(
            f"grid {n_x}x{n_y} cannot resolve radius {radius}; need at least {need} per axis"
        )


def to_grid(u: SpectralField, n_x: int, n_y: int | None = None) -> GridSamples:
    """Evaluate ``sum u_hat(k) exp(i k.x)`` on the uniform grid."""
    n_y = n_x if n_y is None else n_y
    _check_sampling(u.radius, n_x, n_y)
    N = u.radius
    spec = np.zeros((n_x, n_y), complex)
    r = np.arange(-N, N + 1)
    spec[np.ix_(r % n_x, r % n_y)] = u.coeffs
    return GridSamples(np.fft.ifft2(spec) * (n_x * n_y))


def from_grid(g: GridSamples, radius: int, sobolev_index: float = 0.0) -> SpectralField:
    """Rectangle-rule Fourier coefficients of grid samples, truncated to the box.

    Exact for trigonometric polynomials whose band fits the grid.
    """
    _check_sampling(radius, g.n_x, g.n_y)
    spec = np.fft.fft2(g.values) / (g.n_x * g.n_y)
    r = np.arange(-radius, radius + 1)
    return SpectralField(radius, spec[np.ix_(r % g.n_x, r % g.n_y)], sobolev_index)
