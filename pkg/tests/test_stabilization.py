import dataclasses
import math

import numpy as np
import pytest
from scipy import integrate, linalg

from torus_control import (
    ConditioningError,
    SpectralField,
    build_feedback,
    closed_loop_simulate,
    damped_gramian,
    decay_fit,
    decay_fit_series,
    feedback_gains,
    observability_constant,
    sobolev_norm,
)
from torus_control.config import random_field
from torus_control.stabilization import distance_to_mean

from conftest import BUILTINS, gauss_legendre, operator, table


def _quadrature_gramian(tab, op, T, lam, s):
    """Oracle: Gauss-Legendre quadrature of the damped Gramian integrand."""
    t, w = gauss_legendre(T, panels=600)
    mask = np.ones(tab.flat.size, bool)
    mask[tab.flat.size // 2] = False
    lamk = tab.flat[mask]
    gw = op.weighted(s)
    ggh = (gw @ gw.conj().T)[np.ix_(mask, mask)]
    E = np.exp(1j * np.outer(t, lamk))  # (time, mode)
    kern = (E.conj() * (w * np.exp(-2 * lam * t))[:, None]).T @ E
    return ggh * kern


@pytest.mark.parametrize("s", [0.0, 1.0])
@pytest.mark.parametrize("lam", [0.0, 0.5])
def test_gramian_against_quadrature(s, lam):
    tab, op = table("zk", 3), operator(3)
    D = damped_gramian(tab, op, 7.0, lam, s)
    np.testing.assert_allclose(D, _quadrature_gramian(tab, op, 7.0, lam, s), atol=1e-12)


def test_gramian_hermitian_and_positive():
    tab, op = table("zk", 4), operator(4)
    D = damped_gramian(tab, op, 7.0, 0.5, 0.0)
    assert D.shape == (80, 80)
    assert np.abs(D - D.conj().T).max() <= 1e-10
    assert linalg.eigvalsh(D)[0] > 0


def test_gramian_diagonal_specialization():
    tab, op = table("bo2d", 3), operator(3)
    lam, T = 0.7, 4.0
    D = damped_gramian(tab, op, T, lam, 0.0)
    mask = np.ones(49, bool)
    mask[24] = False
    ggh = (op.matrix @ op.matrix.conj().T)[np.ix_(mask, mask)]
    np.testing.assert_allclose(np.diag(D), np.diag(ggh) * (1 - np.exp(-2 * lam * T)) / (2 * lam), rtol=1e-13)


def test_zero_operator_gives_zero_gramian():
    op = operator(2)
    zero = dataclasses.replace(op, matrix=np.zeros_like(op.matrix))
    assert np.all(damped_gramian(table("zk", 2), zero, 7.0, 0.5) == 0)
    with pytest.raises(ConditioningError):
        feedback_gains(damped_gramian(table("zk", 2), zero, 7.0, 0.5), zero)


def test_gramian_argument_checks():
    with pytest.raises(ValueError):
        damped_gramian(table("zk", 2), operator(2), 0.0, 0.5)
    with pytest.raises(ValueError):
        damped_gramian(table("zk", 2), operator(2), 1.0, -0.5)
    with pytest.raises(ValueError):
        build_feedback(table("zk", 2), operator(2), 1.0, 0.0)


@pytest.mark.parametrize("s", [0.0, 1.0])
def test_gain_identities(s):
    tab, op = table("zk", 4), operator(4)
    fb = build_feedback(tab, op, 7.0, 0.5, s)
    mid = 40
    assert np.all(fb.gains[:, mid] == 0)
    const = SpectralField.constant(4, 3.0)
    assert np.abs(fb.gains_unweighted() @ const.vector).max() == 0
    mask = np.ones(81, bool)
    mask[mid] = False
    gw = op.weighted(s)
    lhs = gw @ fb.gains[:, mask] @ fb.gramian
    np.testing.assert_allclose(lhs, -(gw @ gw.conj().T)[:, mask], atol=1e-8)
    assert np.isfinite(fb.gain_norm) and fb.gain_norm > 0


def test_free_flow_conserves_norm():
    tab, op = table("zk", 3), operator(3)
    u0 = random_field(3, 4)
    traj = closed_loop_simulate(u0, tab, op, np.zeros((49, 49)), 5.0, 0.1)
    np.testing.assert_allclose(traj.norms(1.0), sobolev_norm(u0, 1.0), rtol=1e-12)
    assert traj.times.size == 51 and traj.times[-1] == pytest.approx(5.0)


def test_constant_state_is_fixed():
    tab, op = table("zk", 3), operator(3)
    fb = build_feedback(tab, op, 7.0, 0.5)
    traj = closed_loop_simulate(SpectralField.constant(3, 1.5), tab, op, fb, 3.0, 0.05)
    for u in traj.states:
        np.testing.assert_allclose(u.coeffs, SpectralField.constant(3, 1.5).coeffs, atol=1e-14)


def test_propagator_against_ode_solver():
    tab, op = table("bozk", 2), operator(2)
    fb = build_feedback(tab, op, 7.0, 0.5, 1.0)
    u0 = random_field(2, 6) + SpectralField.constant(2, 0.2)
    traj = closed_loop_simulate(u0, tab, op, fb, 2.0, 0.05)
    L = np.diag(1j * tab.flat) + op.matrix @ fb.gains_unweighted()
    sol = integrate.solve_ivp(lambda t, y: L @ y, (0, 2.0), u0.vector, method="DOP853",
                              rtol=1e-12, atol=1e-13, t_eval=traj.times)
    np.testing.assert_allclose(np.stack([u.vector for u in traj.states], axis=1), sol.y, atol=1e-9)


def test_zk_decay_run():
    tab, op = table("zk", 4), operator(4)
    fb = build_feedback(tab, op, 7.0, 0.5)
    traj = closed_loop_simulate(random_field(4, 12), tab, op, fb, 30.0, 0.05)
    rep = decay_fit(traj, 0.5)
    assert rep.fitted_exponent <= -0.45
    assert np.isfinite(rep.constant_M) and rep.constant_M >= 1.0
    assert np.all(rep.distances <= rep.bound() * (1 + 1e-12))


def test_synthetic_decay():
    t = np.linspace(0, 10, 201)
    rep = decay_fit_series(t, 3.0 * np.exp(-0.7 * t), 0.7)
    assert rep.fitted_exponent == pytest.approx(-0.7, abs=1e-6)
    assert rep.constant_M == pytest.approx(1.0, rel=1e-12)
    assert rep.window == (pytest.approx(1.0), 10.0)


def test_constant_trajectory_flags_non_decay():
    t = np.linspace(0, 10, 50)
    rep = decay_fit_series(t, np.full_like(t, 2.0), 0.5)
    assert rep.fitted_exponent == pytest.approx(0.0, abs=1e-12)
    assert not rep.decays
    assert rep.constant_M == pytest.approx(math.exp(5.0))


def test_decay_fit_errors():
    with pytest.raises(ValueError):
        decay_fit_series(np.arange(20.0), np.zeros(20), 0.5)
    with pytest.raises(ValueError):
        decay_fit_series(np.arange(5.0), np.ones(5), 0.5)


def test_distance_subtracts_initial_mean():
    tab, op = table("zk", 2), operator(2)
    traj = closed_loop_simulate(SpectralField.constant(2, 4.0), tab, op, np.zeros((25, 25)), 1.0, 0.5)
    assert np.all(distance_to_mean(traj) == 0)


@pytest.mark.parametrize("model", BUILTINS)
def test_observability_positive_and_monotone(model):
    tab, op = table(model, 4), operator(4)
    deltas = [observability_constant(tab, op, T, 0.0) for T in (3.0, 7.0, 10.0)]
    assert deltas[1] > 0
    assert deltas[0] <= deltas[1] <= deltas[2]


def test_observability_matches_quadrature_eigenvalue():
    tab, op = table("zk", 3), operator(3)
    delta = observability_constant(tab, op, 7.0, 1.0)
    ev = linalg.eigvalsh(_quadrature_gramian(tab, op, 7.0, 0.0, 1.0))[0]
    assert delta**2 == pytest.approx(ev, rel=1e-9)
