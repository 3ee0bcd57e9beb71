import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from torus_control import (
    RadiusMismatchError,
    SpectralField,
    apply_G,
    apply_G1,
    apply_G2,
    build_control_operator,
    determinant_margins,
    g_matrix_entry,
    l2_inner,
    m_coefficient,
    make_bump,
    to_grid,
)
from torus_control.config import random_field
from torus_control.control_operator import _profile

from conftest import operator

TWO_PI = 2 * math.pi


def _quad_coef(a, b, k):
    """Independent oracle: adaptive quadrature of the normalized profile."""
    f = lambda x: _profile(np.array([x]), a, b)[0]
    mass = integrate.quad(f, a, b, epsabs=1e-15, epsrel=1e-13)[0]
    if k == 0:
        return 1.0 / TWO_PI
    re = integrate.quad(f, a, b, weight="cos", wvar=k, epsabs=1e-15)[0]
    im = integrate.quad(f, a, b, weight="sin", wvar=k, epsabs=1e-15)[0]
    return (re - 1j * im) / (TWO_PI * mass)


def test_bump_unit_mass_and_support():
    g = make_bump(0.5, 1.5, k_max=8)
    x = np.linspace(0, TWO_PI, 20001)
    vals = g(x)
    assert vals.min() >= 0
    assert np.all(vals[(x <= 0.5) | (x >= 1.5)] == 0)
    assert g.coef(0) == pytest.approx(1 / TWO_PI, rel=1e-14)
    assert g.support == (0.5, 1.5)


@pytest.mark.parametrize("k", [1, 2, 5, 16, 40])
def test_bump_coefficients_match_adaptive_quadrature(k):
    g = make_bump(0.5, 1.5, k_max=64)
    assert abs(g.coef(k) - _quad_coef(0.5, 1.5, k)) < 1e-12
    # real profile: g_hat(-k) = conj(g_hat(k))
    assert g.coef(-k) == pytest.approx(np.conj(g.coef(k)), abs=1e-16)


def test_bump_drift_is_small():
    g = make_bump(0.5, 1.5, k_max=64)
    assert g.quadrature_drift < 1e-12


def test_bump_rejects_bad_interval():
    with pytest.raises(ValueError):
        make_bump(1.5, 0.5)
    with pytest.raises(ValueError):
        make_bump(0.0, 1.0)
    with pytest.raises(ValueError):
        make_bump(0.5, 1.5, grid_size=64, k_max=32)


def test_coef_outside_cache_raises():
    g = make_bump(0.5, 1.5, k_max=8)
    with pytest.raises(IndexError):
        g.coef(9)


def test_m_coefficient_cases():
    assert m_coefficient(1, 3, 3) == 1 / TWO_PI
    assert m_coefficient(2, -2, -2) == 1 / TWO_PI
    assert m_coefficient(1, 0, 0) == 0.0
    assert m_coefficient(2, 1, 2) == 0.0
    with pytest.raises(ValueError):
        m_coefficient(3, 1, 1)


def test_partial_averages():
    u = SpectralField.from_modes(2, {(0, 1): 1.0, (1, 0): 2.0, (1, 1): 3.0, (0, 0): 4.0})
    g1 = apply_G1(u)
    assert g1[(0, 1)] == 0 and g1[(0, 0)] == 0
    assert g1[(1, 0)] == pytest.approx(2 / TWO_PI)
    g2 = apply_G2(u)
    assert g2[(1, 0)] == 0 and g2[(0, 0)] == 0
    assert g2[(1, 1)] == pytest.approx(3 / TWO_PI)


def test_matrix_entries_match_formula():
    op = operator(3)
    rng = np.random.default_rng(5)
    n = 7
    for _ in range(30):
        j = tuple(rng.integers(-3, 4, size=2))
        k = tuple(rng.integers(-3, 4, size=2))
        row = (k[0] + 3) * n + (k[1] + 3)
        col = (j[0] + 3) * n + (j[1] + 3)
        assert op.matrix[row, col] == pytest.approx(g_matrix_entry(op, j, k), abs=1e-17)


def test_matrix_column_is_G_of_basis_function():
    # (G psi_j, psi_k) from the grid path, column by column
    op = operator(2)
    n = 5
    for j in [(1, 2), (0, -1), (-2, 0), (0, 0)]:
        e = SpectralField.from_modes(2, {j: 1.0})
        col = apply_G(op, e, "grid").vector
        np.testing.assert_allclose(col, op.matrix[:, (j[0] + 2) * n + j[1] + 2], atol=1e-10)


def test_grid_path_matches_matrix_path():
    op = operator(4)
    for seed in range(5):
        u = random_field(4, seed)
        a = apply_G(op, u, "matrix")
        b = apply_G(op, u, "grid")
        assert np.abs(a.coeffs - b.coeffs).max() <= 1e-9


def test_apply_g_checks_radius_and_method():
    op = operator(2)
    with pytest.raises(RadiusMismatchError):
        apply_G(op, SpectralField.zeros(3))
    with pytest.raises(ValueError):
        apply_G(op, SpectralField.zeros(2), method="fft")


def test_operator_structure():
    op = operator(4)
    M = op.matrix
    mid = M.shape[0] // 2
    assert np.abs(M - M.conj().T).max() <= 1e-15
    assert np.all(M[mid] == 0) and np.all(M[:, mid] == 0)
    # G is multiplication by a non-negative function after projection, so it is positive semidefinite
    assert np.linalg.eigvalsh(M).min() > -1e-14
    assert op.bound(0.0) <= 2 * (2 / TWO_PI) * TWO_PI * np.abs(op.g1.fourier).max()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s=st.sampled_from([0.0, 1.0]))
def test_self_adjoint_and_mean_free(seed, s):
    op = operator(3)
    rng = np.random.default_rng(seed)
    u = SpectralField(3, rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7)))
    v = SpectralField(3, rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7)))
    lhs = l2_inner(apply_G(op, u), v)
    rhs = l2_inner(u, apply_G(op, v))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))
    assert abs(apply_G(op, u).mean) == 0.0
    # the weighted matrix is the H^s representation, so it is similar to M
    gw = op.weighted(s)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(gw).real), np.sort(np.linalg.eigvalsh(op.matrix)), atol=1e-12)


def test_constants_are_annihilated():
    op = operator(3)
    assert np.abs(apply_G(op, SpectralField.constant(3, 2.5)).coeffs).max() == 0.0


def test_control_acts_only_on_strips():
    # G u vanishes where both profiles vanish
    op = operator(4)
    u = random_field(4, 9)
    Gu = apply_G(op, u, "grid")
    g = to_grid(Gu, 256)
    X, Y = np.meshgrid(g.x, g.y, indexing="ij")
    outside = ((X < 0.4) | (X > 1.6)) & ((Y < 0.4) | (Y > 1.6))
    # truncation to the box smears the strips; check smallness relative to the peak
    assert np.abs(g.values[outside]).max() < np.abs(g.values).max()


def test_determinant_margins():
    g = make_bump(0.5, 1.5, k_max=64)
    d = determinant_margins(g, 32)
    assert np.all(d >= 3 / (4 * math.pi**2) - 1e-10)


def test_resized_operator_embeds():
    op = operator(2)
    big = op.resized(4)
    n_big = 9
    idx = [(a + 2) * n_big + (b + 2) for a in range(5) for b in range(5)]
    np.testing.assert_allclose(big.matrix[np.ix_(idx, idx)], op.matrix, atol=1e-15)


def test_build_requires_positive_radius():
    with pytest.raises(ValueError):
        build_control_operator(0)
