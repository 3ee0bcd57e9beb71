"""Exact controls by the moment method on a truncated lattice.

Pipeline: pick one representative per eigenvalue class, build the dual
family ``q_m`` of the exponentials ``exp(-i lambda_m t)`` on ``[0, T]`` by
inverting their Gram matrix, solve the per-mode moment equations for the
coefficients ``h_j`` and assemble

    h(x, y, t) = sum_j h_j conj(q_j(t)) psi_j(x, y).

Every time integral is evaluated in closed form, so moment residuals and the
Duhamel final state are exact up to rounding.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .analysis import multiplicity_classes, verify_hypothesis
from .control_operator import ControlOperator
from .errors import (
    ConditioningError,
    HypothesisError,
    MeanMismatchError,
    RadiusMismatchError,
)
from .spectral import (
    TWO_PI,
    GridSamples,
    SpectralField,
    box_size,
    sobolev_norm,
    sobolev_weights,
    to_grid,
)
from .symbols import EigenvalueTable, propagate_free
from .timeint import osc_integral

log = logging.getLogger(__name__)

DEFAULT_COND_LIMIT = 1e12


def gram_matrix(lambdas, T: float) -> np.ndarray:
    """``gram[m, n] = int_0^T exp(-i lambda_m t) exp(i lambda_n t) dt``."""
    lam = np.asarray(lambdas, dtype=float)
    if T <= 0:
        raise ValueError("T must be positive")
    if np.unique(lam).size != lam.size:
        raise ValueError("eigenvalues passed to gram_matrix must be pairwise distinct")
    g = osc_integral(lam[None, :] - lam[:, None], T)
    np.fill_diagonal(g, T)
    return g


@dataclass(frozen=True, eq=False)
class DualBasis:
    """Biorthogonal family ``q_m(t) = sum_n dual_coeffs[m, n] exp(-i lambda_n t)``."""

    T: float
    lambdas: np.ndarray
    gram: np.ndarray = field(repr=False)
    dual_coeffs: np.ndarray = field(repr=False)
    condition_number: float
    biorthogonality_residual: float
    integer_valued: bool = True

    def __len__(self):
        return self.lambdas.size

    def q(self, t) -> np.ndarray:
        """Values ``q_m(t)``, shape ``(len(self), len(t))``."""
        t = np.atleast_1d(np.asarray(t, float))
        return self.dual_coeffs @ np.exp(-1j * self.lambdas[:, None] * t[None, :])

    def biorthogonality_matrix(self) -> np.ndarray:
        """``[k, m] -> int_0^T exp(-i lambda_k t) conj(q_m(t)) dt`` via the closed-form Gram."""
        return self.gram @ self.dual_coeffs.conj().T

    @property
    def q_norms_sq(self) -> np.ndarray:
        """``int_0^T |q_m|^2 dt``, the diagonal of the inverse Gram matrix."""
        return np.real(np.diag(self.dual_coeffs)).copy()

    def index_of(self, values) -> np.ndarray:
        """Positions of ``values`` among the basis eigenvalues."""
        values = np.asarray(values, float)
        pos = np.clip(np.searchsorted(self.lambdas, values), 0, len(self) - 1)
        best = pos.copy()
        for cand in (pos - 1, pos):
            cand = np.clip(cand, 0, len(self) - 1)
            closer = np.abs(self.lambdas[cand] - values) < np.abs(self.lambdas[best] - values)
            best = np.where(closer, cand, best)
        found = self.lambdas[best]
        if self.integer_valued:
            ok = found == values
        else:
            ok = np.abs(found - values) <= 1e-9 * np.maximum(1.0, np.abs(values))
        if not np.all(ok):
            missing = np.unique(values[~ok])
            raise KeyError(f"eigenvalues {missing[:5].tolist()} are not in the dual basis")
        return best


def dual_basis(
    lambdas, T: float, cond_limit: float = DEFAULT_COND_LIMIT, integer_valued: bool = True
) -> DualBasis:
    """Invert the Gram matrix of ``{exp(-i lambda_n t)}`` on ``[0, T]``.

    Raises
    ------
    ConditioningError
        If the Gram matrix is not numerically positive definite or its
        condition number exceeds ``cond_limit`` (horizon too short for the
        gap, or nearly coincident eigenvalues).
    """
    lam = np.sort(np.asarray(lambdas, float))
    gram = gram_matrix(lam, T)
    ev = linalg.eigvalsh(gram)
    if ev[0] <= 0:
        raise ConditioningError(f"Gram matrix is not positive definite (min eigenvalue {ev[0]:.3e})")
    cond = float(ev[-1] / ev[0])
    if cond > cond_limit:
        raise ConditioningError(
            f"Gram condition number {cond:.3e} exceeds {cond_limit:.1e}; "
            f"T={T} is likely too short for the eigenvalue gap"
        )
    factor = linalg.cho_factor(gram, lower=True)
    coeffs = linalg.cho_solve(factor, np.eye(lam.size, dtype=complex))
    resid = float(np.abs(gram @ coeffs.conj().T - np.eye(lam.size)).max())
    return DualBasis(float(T), lam, gram, coeffs, cond, resid, integer_valued)


def build_dual_basis(table: EigenvalueTable, T: float, cond_limit: float = DEFAULT_COND_LIMIT):
    """Dual family over every distinct eigenvalue of the box."""
    report = multiplicity_classes(table)
    return dual_basis(report.values, T, cond_limit, table.symbol.integer_valued)


def _check_radius(*objs):
    radii = {o.radius for o in objs}
    if len(radii) != 1:
        raise RadiusMismatchError(f"inconsistent radii {sorted(radii)}")


def _mean_is_zero(u: SpectralField) -> bool:
    scale = float(np.abs(u.coeffs).max(initial=0.0))
    return abs(u.mean) <= 1e-12 * max(scale, 1e-300) or u.mean == 0


def control_coefficients(
    u1: SpectralField,
    table: EigenvalueTable,
    op: ControlOperator,
    T: float,
    symmetry: str | None = None,
) -> np.ndarray:
    """Coefficients ``h_j`` steering ``0`` to ``u1`` in time ``T``.

    Axis modes get ``h = (2pi)^3 u1_hat e^{-i lambda T}``.  Off-axis modes are
    coupled in pairs, ``(+-k1, k2)`` under H2 or ``(k1, +-k2)`` under H3, and
    solved with the explicit inverse of the 2x2 matrix
    ``[[1/pi, g_hat(2k)], [g_hat(-2k), 1/pi]]``.

    Returns an array shaped like ``u1.coeffs``.
    """
    _check_radius(u1, table, op)
    sym = symmetry or table.symbol.declared_symmetry
    if sym not in ("H2", "H3"):
        raise HypothesisError(
            f"symbol {table.symbol.name} declares no symmetry; pass symmetry='H2' or 'H3'"
        )
    verdict = verify_hypothesis(table, sym)
    if not verdict.holds:
        raise HypothesisError(f"{sym} fails on the box: {verdict.counterexample}")
    if table.symbol.declared_symmetry == "none":
        log.warning("%s verified for %s on the box only; not a proof on Z^2", sym, table.symbol.name)
    if not _mean_is_zero(u1):
        raise MeanMismatchError(f"target mean mode must vanish, got {u1.mean}")

    N = table.radius
    rhs = TWO_PI**2 * np.exp(-1j * table.lam * T) * u1.coeffs
    h = np.zeros_like(rhs)
    nz = np.arange(-N, N + 1) != 0
    h[nz, N] = TWO_PI * rhs[nz, N]
    h[N, nz] = TWO_PI * rhs[N, nz]

    pi = math.pi
    if sym == "H2":
        g = op.g1
        for k in range(1, N + 1):
            c_plus, c_minus = complex(g.coef(2 * k)), complex(g.coef(-2 * k))
            d = 1.0 / pi**2 - abs(c_plus) ** 2
            p, m = rhs[N + k, nz], rhs[N - k, nz]
            h[N + k, nz] = p / (pi * d) - c_plus / d * m
            h[N - k, nz] = -c_minus / d * p + m / (pi * d)
    else:
        g = op.g2
        for k in range(1, N + 1):
            c_plus, c_minus = complex(g.coef(2 * k)), complex(g.coef(-2 * k))
            d = 1.0 / pi**2 - abs(c_plus) ** 2
            p, m = rhs[nz, N + k], rhs[nz, N - k]
            h[nz, N + k] = p / (pi * d) - c_plus / d * m
            h[nz, N - k] = -c_minus / d * p + m / (pi * d)
    h[N, N] = 0.0
    return h


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """``h(x, y, t) = sum_j h_j conj(q_j(t)) psi_j(x, y)`` on the box.

    ``class_index[i]`` routes flat mode ``i`` to the dual function of its
    eigenvalue.
    """

    coeffs: np.ndarray = field(repr=False)
    basis: DualBasis = field(repr=False)
    radius: int
    class_index: np.ndarray = field(repr=False)
    sobolev_index: float = 0.0

    def exponential_form(self) -> np.ndarray:
        """Matrix ``B`` with ``h_hat_j(t) = sum_n B[j, n] exp(i lambda_n t)``."""
        h = self.coeffs.ravel()
        return h[:, None] * np.conj(self.basis.dual_coeffs[self.class_index]) / TWO_PI

    def coefficients_at(self, t) -> np.ndarray:
        """Fourier coefficients of ``h(., ., t)``, shape ``(len(t), 2N+1, 2N+1)``."""
        t = np.atleast_1d(np.asarray(t, float))
        q = self.basis.q(t)[self.class_index]  # (modes, times)
        vals = self.coeffs.ravel()[:, None] * np.conj(q) / TWO_PI
        n = box_size(self.radius)
        return vals.T.reshape(t.size, n, n)

    def at(self, t: float) -> SpectralField:
        return SpectralField(self.radius, self.coefficients_at(t)[0], self.sobolev_index)

    def on_grid(self, t: float, n: int) -> GridSamples:
        return to_grid(self.at(t), n, n)

    def norm_sq(self, s: float | None = None) -> float:
        """``||h||^2`` in ``L^2(0, T; H^s_p)``: ``sum (1+|j|)^{2s} |h_j|^2 int |q_j|^2``."""
        s = self.sobolev_index if s is None else s
        w = sobolev_weights(self.radius, 2.0 * s).ravel()
        qn = self.basis.q_norms_sq[self.class_index]
        return float(np.sum(w * np.abs(self.coeffs.ravel()) ** 2 * qn))

    def norm(self, s: float | None = None) -> float:
        return math.sqrt(self.norm_sq(s))


def assemble_control(
    coeffs: np.ndarray, basis: DualBasis, table: EigenvalueTable, sobolev_index: float = 0.0
) -> ControlSignal:
    """Attach each coefficient to the dual function of its eigenvalue class."""
    coeffs = np.asarray(coeffs, complex)
    n = box_size(table.radius)
    if coeffs.shape != (n, n):
        raise RadiusMismatchError(f"coefficients shape {coeffs.shape} vs box {(n, n)}")
    idx = basis.index_of(table.flat)
    c = coeffs.copy()
    c.setflags(write=False)
    return ControlSignal(c, basis, table.radius, idx, sobolev_index)


def _forcing(h: ControlSignal, op: ControlOperator) -> np.ndarray:
    """``A[k, n]``: coefficient of ``exp(i lambda_n t)`` in ``(G h(t))_hat(k)``."""
    B = h.exponential_form()
    if op.radius != h.radius:
        if op.radius < h.radius:
            raise RadiusMismatchError("operator box smaller than control box")
        n_big, n_small = box_size(op.radius), box_size(h.radius)
        off = op.radius - h.radius
        Bb = np.zeros((n_big, n_big, B.shape[1]), complex)
        Bb[off : off + n_small, off : off + n_small] = B.reshape(n_small, n_small, -1)
        B = Bb.reshape(n_big * n_big, -1)
    return op.matrix @ B


def verify_moment_equations(
    h: ControlSignal,
    table: EigenvalueTable,
    op: ControlOperator,
    T: float,
    u1: SpectralField,
) -> np.ndarray:
    """Residuals of ``int_0^T (G h(t), e^{-i lambda_k (T-t)} psi_k) dt = 2pi u1_hat(k)``.

    Returns the left side minus ``2 pi u1_hat(k)`` for every box mode.
    """
    _check_radius(h, table, op, u1)
    A = _forcing(h, op)
    lam_k = table.flat
    lam_n = h.basis.lambdas
    integ = osc_integral(lam_n[None, :] - lam_k[:, None], T)
    lhs = TWO_PI * np.exp(1j * lam_k * T) * np.sum(A * integ, axis=1)
    return (lhs - TWO_PI * u1.vector).reshape(u1.coeffs.shape)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: list

    def __post_init__(self):
        t = np.asarray(self.times, float)
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if len({s.radius for s in self.states}) > 1:
            raise RadiusMismatchError("trajectory states must share a radius")
        object.__setattr__(self, "times", t)

    @property
    def final(self) -> SpectralField:
        return self.states[-1]

    def norms(self, s: float = 0.0) -> np.ndarray:
        return np.array([sobolev_norm(u, s) for u in self.states])

    def distances(self, target: SpectralField, s: float = 0.0) -> np.ndarray:
        return np.array([sobolev_norm(u - target, s) for u in self.states])


def duhamel_solve(
    u0: SpectralField,
    h: ControlSignal | None,
    op: ControlOperator,
    table: EigenvalueTable,
    times,
) -> Trajectory:
    """Mild solution ``u(t) = U(t) u0 + int_0^t U(t - tau) G h(tau) d tau``.

    Each forcing exponential is integrated in closed form, including the
    resonant case, so there is no time-stepping error.  The operator and
    table may live on a larger box than the control (spillover studies).
    """
    _check_radius(u0, op, table)
    times = np.atleast_1d(np.asarray(times, float))
    lam_k = table.flat
    states = []
    if h is None:
        for t in times:
            states.append(propagate_free(u0, table, t))
        return Trajectory(times, states)
    A = _forcing(h, op)
    lam_n = h.basis.lambdas
    mu = lam_n[None, :] - lam_k[:, None]
    for t in times:
        forced = np.sum(A * osc_integral(mu, t), axis=1)
        vec = np.exp(1j * lam_k * t) * (u0.vector + forced)
        states.append(SpectralField.from_vector(u0.radius, vec, u0.sobolev_index))
    return Trajectory(times, states)


def reduce_target(
    u0: SpectralField, u1: SpectralField, table: EigenvalueTable, T: float
) -> SpectralField:
    """``u1 - U(T) u0``, the target of the equivalent problem from rest."""
    _check_radius(u0, u1, table)
    scale = max(1.0, abs(u0.mean), abs(u1.mean))
    if abs(u0.mean - u1.mean) > 1e-12 * scale:
        raise MeanMismatchError(
            f"initial mean {u0.mean} and target mean {u1.mean} differ; the mass is conserved"
        )
    return (u1 - propagate_free(u0, table, T)).without_mean()


def control_norm_ratio(
    h: ControlSignal, u0: SpectralField, u1: SpectralField, s: float = 0.0
) -> float:
    """``||h||_{L^2(0,T;H^s)} / (||u0||_{H^s} + ||u1||_{H^s})``."""
    denom = sobolev_norm(u0, s) + sobolev_norm(u1, s)
    if denom == 0:
        raise ValueError("control norm ratio undefined for u0 = u1 = 0")
    return h.norm(s) / denom


@dataclass(frozen=True, eq=False)
class SteeringResult:
    control: ControlSignal
    reduced_target: SpectralField
    residuals: np.ndarray = field(repr=False)
    final_state: SpectralField
    relative_error: float
    norm_ratio: float | None

    @property
    def max_residual(self) -> float:
        return float(np.abs(self.residuals).max())

    @property
    def basis(self) -> DualBasis:
        return self.control.basis


def steer(
    u0: SpectralField,
    u1: SpectralField,
    table: EigenvalueTable,
    op: ControlOperator,
    T: float,
    s: float = 0.0,
    symmetry: str | None = None,
    basis: DualBasis | None = None,
    cond_limit: float = DEFAULT_COND_LIMIT,
) -> SteeringResult:
    """Synthesize a control from ``u0`` to ``u1`` and verify it end to end."""
    target = reduce_target(u0, u1, table, T)
    if basis is None:
        basis = build_dual_basis(table, T, cond_limit)
    coeffs = control_coefficients(target, table, op, T, symmetry)
    h = assemble_control(coeffs, basis, table, s)
    resid = verify_moment_equations(h, table, op, T, target)
    final = duhamel_solve(u0, h, op, table, [T]).final
    ref = sobolev_norm(u1, 0.0)
    err = sobolev_norm(final - u1, 0.0)
    rel = err / ref if ref > 0 else err
    denom = sobolev_norm(u0, s) + sobolev_norm(u1, s)
    ratio = h.norm(s) / denom if denom > 0 else None
    return SteeringResult(h, target, resid, final, rel, ratio)


@dataclass(frozen=True)
class SpilloverReport:
    radius: int
    big_radius: int
    leakage_norm: float
    inner_error: float
    target_norm: float

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "big_radius": self.big_radius,
            "leakage_norm": self.leakage_norm,
            "inner_error": self.inner_error,
            "target_norm": self.target_norm,
        }


def spillover(
    u0: SpectralField,
    u1: SpectralField,
    h: ControlSignal,
    table: EigenvalueTable,
    op: ControlOperator,
    T: float,
    big_radius: int,
    s: float = 0.0,
) -> SpilloverReport:
    """Re-simulate a box-``N`` control on a box of radius ``big_radius``.

    Reports the ``H^s`` norm at time ``T`` of the modes outside the original
    box (leakage) and the error inside it.  A diagnostic; nothing here is
    expected to be small.
    """
    if big_radius < table.radius:
        raise ValueError("big_radius must be at least the control radius")
    big_table = table.resized(big_radius)
    big_op = op.resized(big_radius)
    final = duhamel_solve(u0.resized(big_radius), h, big_op, big_table, [T]).final
    w = sobolev_weights(big_radius, 2.0 * s)
    N, M = table.radius, big_radius
    inside = np.zeros(final.coeffs.shape, bool)
    inside[M - N : M + N + 1, M - N : M + N + 1] = True
    diff = final.coeffs - u1.resized(big_radius).coeffs
    leak = TWO_PI * math.sqrt(float(np.sum((w * np.abs(diff) ** 2)[~inside])))
    inner = TWO_PI * math.sqrt(float(np.sum((w * np.abs(diff) ** 2)[inside])))
    return SpilloverReport(N, M, leak, inner, sobolev_norm(u1, s))
