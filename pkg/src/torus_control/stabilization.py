"""Gramian feedback with prescribed decay rate and the observability constant.

All matrices live in ``H^s``-weighted coordinates ``w_k = (1+|k|)^s u_hat(k)``
where the ``H^s`` adjoint is the conjugate transpose.  The mean mode is
dropped from the Gramian: ``G`` vanishes on constants, so the Gramian is
singular on the full box, and the feedback acts as zero there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .control_operator import ControlOperator
from .errors import ConditioningError, RadiusMismatchError
from .spectral import SpectralField, mean_mode_index, sobolev_norm, sobolev_weights
from .symbols import EigenvalueTable
from .synthesis import Trajectory
from .timeint import exp_integral

DEFAULT_DT = 0.05
FIT_START_FRACTION = 0.1
# slopes above this count as non-decaying (least-squares rounding on flat data)
DECAY_SLOPE_TOL = 1e-9


def _mean_zero_mask(radius: int) -> np.ndarray:
    n = (2 * radius + 1) ** 2
    mask = np.ones(n, bool)
    mask[mean_mode_index(radius)] = False
    return mask


def damped_gramian(
    table: EigenvalueTable,
    op: ControlOperator,
    T: float,
    lam: float,
    s: float = 0.0,
) -> np.ndarray:
    """``D = int_0^T e^{-2 lam tau} U(-tau) G G^* U(-tau)^* d tau`` on mean-zero modes.

    Entry ``(k, j)`` is ``(G G^*)_{kj} int_0^T exp((-2 lam + i (lambda_j - lambda_k)) tau) d tau``.
    ``lam = 0`` gives the undamped observability Gramian.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if table.radius != op.radius:
        raise RadiusMismatchError(f"table radius {table.radius} vs operator radius {op.radius}")
    mask = _mean_zero_mask(table.radius)
    gw = op.weighted(s)
    ggh = (gw @ gw.conj().T)[np.ix_(mask, mask)]
    ev = table.flat[mask]
    rate = -2.0 * lam + 1j * (ev[None, :] - ev[:, None])
    d = ggh * exp_integral(rate, T)
    return 0.5 * (d + d.conj().T)


@dataclass(frozen=True, eq=False)
class FeedbackSystem:
    """Feedback ``K = -G^* D^{-1}`` for decay rate ``decay_lambda``.

    ``gains`` acts on weighted coordinates of the full box (zero column and
    row at the mean mode); :meth:`gains_unweighted` acts on raw coefficients.
    """

    decay_lambda: float
    T: float
    gramian: np.ndarray = field(repr=False)
    gains: np.ndarray = field(repr=False)
    sobolev_index: float
    radius: int
    gramian_condition: float
    gramian_min_eig: float

    def gains_unweighted(self) -> np.ndarray:
        w = sobolev_weights(self.radius, self.sobolev_index).ravel()
        return self.gains * w[None, :] / w[:, None]

    @property
    def gain_norm(self) -> float:
        """Operator norm of ``K`` on ``H^s``."""
        return float(np.linalg.norm(self.gains, 2))


def feedback_gains(D: np.ndarray, op: ControlOperator, s: float = 0.0) -> np.ndarray:
    """``K = -G_w^H D^{-1}`` zero-extended on the mean mode.

    Raises
    ------
    ConditioningError
        If ``D`` is not numerically positive definite.
    """
    mask = _mean_zero_mask(op.radius)
    if D.shape != (mask.sum(), mask.sum()):
        raise RadiusMismatchError(f"Gramian shape {D.shape} does not match the mean-zero box")
    try:
        factor = linalg.cho_factor(D, lower=True)
    except linalg.LinAlgError as exc:
        raise ConditioningError("damped Gramian is singular or indefinite") from exc
    gw = op.weighted(s)
    n = mask.size
    K = np.zeros((n, n), complex)
    # K[:, mz] = -G^H[:, mz] D^{-1} = -(D^{-1} G[mz, :])^H since D is Hermitian
    K[:, mask] = -linalg.cho_solve(factor, gw[mask, :]).conj().T
    K[:, ~mask] = 0.0
    return K


def build_feedback(
    table: EigenvalueTable, op: ControlOperator, T: float, lam: float, s: float = 0.0
) -> FeedbackSystem:
    if lam <= 0:
        raise ValueError("decay rate lambda must be positive")
    D = damped_gramian(table, op, T, lam, s)
    ev = linalg.eigvalsh(D)
    if ev[0] <= 0:
        raise ConditioningError(f"damped Gramian not positive definite (min eig {ev[0]:.3e})")
    K = feedback_gains(D, op, s)
    return FeedbackSystem(lam, T, D, K, s, table.radius, float(ev[-1] / ev[0]), float(ev[0]))


def closed_loop_generator(table: EigenvalueTable, op: ControlOperator, K_u: np.ndarray) -> np.ndarray:
    """``diag(i lambda) + G K`` on raw coefficients."""
    return np.diag(1j * table.flat) + op.matrix @ K_u


def closed_loop_simulate(
    u0: SpectralField,
    table: EigenvalueTable,
    op: ControlOperator,
    K,
    t_end: float,
    dt: float = DEFAULT_DT,
) -> Trajectory:
    """Integrate ``u' = (A + G K) u`` with the exact one-step propagator ``expm(L dt)``.

    ``K`` is a :class:`FeedbackSystem` or a raw-coefficient gain matrix.
    Snapshots are taken at ``0, dt, 2 dt, ...`` up to ``t_end``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    if not (u0.radius == table.radius == op.radius):
        raise RadiusMismatchError("u0, table and operator must share a radius")
    K_u = K.gains_unweighted() if isinstance(K, FeedbackSystem) else np.asarray(K)
    L = closed_loop_generator(table, op, K_u)
    step = linalg.expm(L * dt)
    n_steps = int(math.floor(t_end / dt + 1e-9))
    times = dt * np.arange(n_steps + 1)
    vec = u0.vector.copy()
    states = [u0]
    for _ in range(n_steps):
        vec = step @ vec
        states.append(SpectralField.from_vector(u0.radius, vec, u0.sobolev_index))
    return Trajectory(times, states)


@dataclass(frozen=True)
class DecayReport:
    fitted_exponent: float
    constant_M: float
    window: tuple[float, float]
    decay_lambda: float
    times: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)

    @property
    def decays(self) -> bool:
        return self.fitted_exponent < -DECAY_SLOPE_TOL

    def bound(self) -> np.ndarray:
        """``M e^{-lambda t} d(0)`` at the sample times."""
        return self.constant_M * np.exp(-self.decay_lambda * self.times) * self.distances[0]

    def to_dict(self) -> dict:
        return {
            "fitted_exponent": self.fitted_exponent,
            "constant_M": self.constant_M,
            "window": list(self.window),
            "decay_lambda": self.decay_lambda,
            "decays": self.decays,
        }


def decay_fit_series(times, distances, lam: float, start_fraction: float = FIT_START_FRACTION) -> DecayReport:
    """Fit ``log d(t)`` on ``[start_fraction t_end, t_end]`` and measure ``M``."""
    t = np.asarray(times, float)
    d = np.asarray(distances, float)
    if t.size < 10:
        raise ValueError("decay fit needs at least 10 samples")
    if d[0] <= 0:
        raise ValueError("initial distance is zero; nothing to stabilize")
    t_end = float(t[-1])
    t_start = t[0] + start_fraction * (t_end - t[0])
    win = (t >= t_start - 1e-12) & (d > 0)
    if win.sum() < 2:
        raise ValueError("fit window holds fewer than two positive distances")
    slope = float(np.polyfit(t[win], np.log(d[win]), 1)[0])
    M = float(np.max(d * np.exp(lam * t)) / d[0])
    return DecayReport(slope, M, (float(t_start), t_end), float(lam), t, d)


def distance_to_mean(traj: Trajectory, s: float = 0.0) -> np.ndarray:
    """``||u(t) - u0_hat(0,0)||_{H^s}`` along a trajectory."""
    mean0 = traj.states[0].mean
    out = []
    for u in traj.states:
        c = u.coeffs.copy()
        c[u.radius, u.radius] -= mean0
        out.append(sobolev_norm(u.replace(c), s))
    return np.array(out)


def decay_fit(traj: Trajectory, lam: float, s: float = 0.0) -> DecayReport:
    return decay_fit_series(traj.times, distance_to_mean(traj, s), lam)


def observability_constant(
    table: EigenvalueTable, op: ControlOperator, T: float, s: float = 0.0
) -> float:
    """``delta`` with ``delta^2`` the smallest eigenvalue of the undamped Gramian on mean-zero modes."""
    D0 = damped_gramian(table, op, T, 0.0, s)
    ev0 = float(linalg.eigvalsh(D0)[0])
    return math.sqrt(max(ev0, 0.0))
