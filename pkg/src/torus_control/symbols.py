"""Dispersion symbols, eigenvalue tables and the free propagator."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, RadiusMismatchError
from .spectral import SpectralField, lattice

SYMMETRIES = ("H2", "H3", "none")


@dataclass(frozen=True)
class DispersionSymbol:
    """Real Fourier multiplier ``b(k)`` of the operator L.

    ``b`` is called with integer arrays ``(k1, k2)`` of equal shape and must
    return a real array.  The evolution eigenvalues are ``k1 * b(k)``.
    """

    name: str
    b: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False)
    order_r: float
    growth_C: float
    threshold_N0: float = 1.0
    declared_symmetry: str = "none"
    integer_valued: bool = False
    analytic_gamma_prime: float | None = None

    def __post_init__(self):
        if self.declared_symmetry not in SYMMETRIES:
            raise ValueError(f"declared_symmetry must be one of {SYMMETRIES}")
        if self.order_r < 1:
            raise ValueError("order_r must be >= 1")
        if self.growth_C <= 0:
            raise ValueError("growth_C must be positive")

    def __call__(self, k1, k2) -> np.ndarray:
        return np.asarray(self.b(np.asarray(k1), np.asarray(k2)), dtype=float)


def _zk(k1, k2):
    return k1**2 + k2**2


def _bo2d(k1, k2):
    return k2 * np.sign(k1)


def _bozk(k1, k2):
    return np.abs(k1) + k2**2


def builtin_symbol(name: str, alpha: float | None = None) -> DispersionSymbol:
    """Look up one of the registered models.

    ``name`` is ``zk``, ``bo2d``, ``bozk`` or ``dgbozk``; the dispersion
    generalized model takes ``alpha > 0`` either as argument or inline as
    ``dgbozk:<alpha>`` / ``dgbozk(<alpha>)``.
    """
    key = name.strip().lower()
    m = re.fullmatch(r"dgbozk\s*(?::\s*|\(\s*)([^)\s]+)\s*\)?", key)
    if m:
        key = "dgbozk"
        try:
            alpha = float(m.group(1))
        except ValueError as exc:
            raise ConfigError(f"cannot parse alpha in {name!r}") from exc
    if key == "zk":
        return DispersionSymbol("zk", _zk, 3.0, 1.0, 1.0, "H3", True, 1.0)
    if key == "bo2d":
        return DispersionSymbol("bo2d", _bo2d, 2.0, 1.0, 1.0, "H2", True, 1.0)
    if key == "bozk":
        return DispersionSymbol("bozk", _bozk, 3.0, 2.0, 1.0, "H3", True, 1.0)
    if key == "dgbozk":
        if alpha is None:
            raise ConfigError("dgbozk requires alpha")
        if not (alpha > 0 and math.isfinite(alpha)):
            raise ConfigError(f"dgbozk requires alpha > 0, got {alpha}")
        a = float(alpha)

        def _dg(k1, k2, a=a):
            return np.abs(k1) ** a + k2**2

        integral = a.is_integer()
        # gamma' is only known in the two limiting cases that reduce to ZK / BOZK
        gp = 1.0 if a in (1.0, 2.0) else None
        return DispersionSymbol(
            f"dgbozk:{a:g}", _dg, max(a + 1.0, 3.0), 2.0, 1.0, "H3", integral, gp
        )
    raise ConfigError(f"unknown model {name!r}; expected zk, bo2d, bozk or dgbozk:<alpha>")


def eigenvalue(sym: DispersionSymbol, k) -> float:
    """``lambda_k = k1 * b(k)``."""
    k1, k2 = k
    return float(k1 * sym(k1, k2))


@dataclass(frozen=True, eq=False)
class EigenvalueTable:
    """Eigenvalues ``lambda[k1 + N, k2 + N] = k1 b(k)`` over the box."""

    symbol: DispersionSymbol
    radius: int
    lam: np.ndarray

    @classmethod
    def build(cls, sym: DispersionSymbol, radius: int) -> "EigenvalueTable":
        k1, k2 = lattice(radius)
        lam = k1 * sym(k1, k2)
        if not np.all(np.isfinite(lam)):
            raise ValueError(f"symbol {sym.name} is not finite on the box")
        lam = np.array(lam, float)
        if sym.integer_valued:
            lam = np.rint(lam)
        lam.setflags(write=False)
        return cls(sym, radius, lam)

    def __getitem__(self, k) -> float:
        k1, k2 = k
        return float(self.lam[k1 + self.radius, k2 + self.radius])

    @property
    def flat(self) -> np.ndarray:
        return self.lam.ravel()

    def same(self, a, b):
        """Eigenvalue equality: exact for integer symbols, relative 1e-9 otherwise."""
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        if self.symbol.integer_valued:
            return a == b
        return np.abs(a - b) <= 1e-9 * np.maximum(1.0, np.abs(a))

    def resized(self, radius: int) -> "EigenvalueTable":
        return EigenvalueTable.build(self.symbol, radius)


@dataclass(frozen=True)
class GrowthReport:
    holds: bool
    worst_ratio: float
    worst_mode: tuple[int, int] | None


def symbol_growth_check(sym: DispersionSymbol, radius: int) -> GrowthReport:
    """Check ``|b(k)| <= C |k|^{r-1}`` on the box for ``|k| >= max(N0, 1)``.

    A relative slack of ``1e-12`` absorbs rounding in ``|k|^{r-1}``.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    k1, k2 = lattice(radius)
    norm = np.hypot(k1, k2)
    mask = norm >= max(sym.threshold_N0, 1.0)
    ratio = np.abs(sym(k1, k2))[mask] / norm[mask] ** (sym.order_r - 1.0)
    i = int(np.argmax(ratio))
    worst = float(ratio[i])
    mode = (int(k1[mask][i]), int(k2[mask][i]))
    return GrowthReport(worst <= sym.growth_C * (1 + 1e-12), worst, mode)


def propagate_free(u0: SpectralField, table: EigenvalueTable, t: float) -> SpectralField:
    """Free flow ``U(t)``: multiply each coefficient by ``exp(i lambda_k t)``."""
    if u0.radius != table.radius:
        raise RadiusMismatchError(f"field radius {u0.radius} vs table radius {table.radius}")
    return u0.replace(u0.coeffs * np.exp(1j * table.lam * t))
