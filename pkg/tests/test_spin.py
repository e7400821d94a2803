import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from spinphoton.exceptions import NonHermitianError, QuadratureError, ValidationError
from spinphoton.spin import (
    damped_ham_G,
    degenerate_clusters,
    eig_hermitian,
    gauss_quadrature,
    ham_reduction_G,
    kron,
    spin_operators,
)

twice_spin = st.integers(min_value=1, max_value=9)


@given(twice_spin)
def test_angular_momentum_algebra(n):
    s = Fraction(n, 2)
    ops = spin_operators(s)
    assert ops.dim == n + 1
    comm = ops.sx @ ops.sy - ops.sy @ ops.sx
    np.testing.assert_allclose(comm, 1j * ops.sz, atol=1e-12)
    s2 = ops.sx @ ops.sx + ops.sy @ ops.sy + ops.sz @ ops.sz
    np.testing.assert_allclose(s2, float(s * (s + 1)) * np.eye(n + 1), atol=1e-12)
    np.testing.assert_allclose(ops.sp, ops.sx + 1j * ops.sy, atol=1e-12)


def test_spin_zero_is_trivial():
    ops = spin_operators(0)
    assert ops.dim == 1 and not ops.sz.any()


def test_spin_one_is_diagonal_in_sz():
    ops = spin_operators(1)
    np.testing.assert_array_equal(np.diag(ops.sz).real, [1, 0, -1])


@pytest.mark.parametrize("bad", [-1, 0.3, "1/3", "x"])
def test_spin_rejects_non_half_integers(bad):
    with pytest.raises(ValidationError):
        spin_operators(bad)


def test_kron_orders_first_factor_outer():
    a, b = np.diag([1.0, 2.0]), np.diag([1.0, 10.0])
    np.testing.assert_array_equal(np.diag(kron(a, b)), [1, 10, 2, 20])


@given(st.integers(min_value=1, max_value=9), st.integers(min_value=0, max_value=2**31))
def test_eig_hermitian_reconstructs(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    m = m + m.conj().T
    w, v = eig_hermitian(m)
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, m, atol=1e-10)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-12)


def test_eig_hermitian_rejects_asymmetry():
    with pytest.raises(NonHermitianError) as err:
        eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert err.value.max_asymmetry == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        eig_hermitian(np.ones((2, 3)))


def test_degenerate_clusters():
    groups = degenerate_clusters([0.0, 1e-9, 1.0, 1.0, 1.0, 5.0])
    assert [g.tolist() for g in groups] == [[0, 1], [2, 3, 4], [5]]
    assert [g.tolist() for g in degenerate_clusters([2.0, 2.0])] == [[0, 1]]
    with pytest.raises(ValidationError):
        degenerate_clusters([1.0, 0.0])


def _G_quad(x):
    val, _ = quad(lambda t: math.expm1(t) / t if t else 1.0, 0.0, x, epsabs=0, epsrel=1e-13, limit=200)
    return val


@pytest.mark.parametrize("x", [0.0, 1e-6, 0.065, 0.5, 3.0, 20.0, 50.0])
def test_G_series_matches_quadrature(x):
    assert ham_reduction_G(x) == pytest.approx(_G_quad(x), rel=1e-11, abs=1e-15)


def test_G_range_is_enforced():
    with pytest.raises(ValidationError):
        ham_reduction_G(50.5)
    with pytest.raises(ValidationError):
        damped_ham_G(-1.0, 0.0)


@pytest.mark.parametrize("x", [60.0, 100.0, 400.0])
def test_damped_G_asymptotic_branch(x):
    # e^{-x} G(x) = int_0^x (e^{t-x} - e^{-x}) / t dt, integrable without overflow
    ref, _ = quad(lambda t: (math.exp(t - x) - math.exp(-x)) / t if t else 1.0, 0.0, x, epsabs=0, epsrel=1e-12,
                  limit=500, points=[x - 1.0])
    assert damped_ham_G(x, x) == pytest.approx(ref, rel=1e-8)


def test_damped_G_is_continuous_at_series_edge():
    lo = damped_ham_G(50.0, 50.0)
    hi = damped_ham_G(50.0 + 1e-9, 50.0)
    assert hi == pytest.approx(lo, rel=1e-3)


@pytest.mark.parametrize("sigma", [0.3, 1.0, 170.0])
def test_gauss_quadrature_moments(sigma):
    assert gauss_quadrature(lambda d: d**2, sigma) == pytest.approx(sigma**2, rel=1e-12)
    k = 1.3 / sigma
    assert gauss_quadrature(lambda d: np.cos(k * d), sigma) == pytest.approx(math.exp(-0.5 * (k * sigma) ** 2), rel=1e-9)


def test_gauss_quadrature_reports_nonconvergence():
    with pytest.raises(QuadratureError):
        gauss_quadrature(lambda d: (d > 0.4).astype(float), 1.0, n_nodes=8, max_nodes=32)
    with pytest.raises(ValidationError):
        gauss_quadrature(np.cos, 0.0)


@pytest.mark.parametrize("x", [5e-324, 1e-308, 2.2e-308])
def test_G_terminates_for_subnormal_arguments(x):
    assert ham_reduction_G(x) == pytest.approx(x, rel=1e-12)
