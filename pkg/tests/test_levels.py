import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.optimize import fsolve

from spinphoton.exceptions import InconsistentInputError, ValidationError
from spinphoton.levels import (
    CUBIC_A,
    J_OPS,
    L_DOT_S,
    STRONG_STATES,
    WEAK_STATES,
    ExcitedStateParams,
    GroundStateParams,
    Table3Inputs,
    basis_index,
    classify_levels,
    derive_djt,
    derive_table3,
    excited_hamiltonian,
    ground_hamiltonian,
    level_coefficients,
    product_state,
    solve_levels,
)
from spinphoton.spin import eig_hermitian

MU_B = 13.996245


def _G(x):
    return quad(lambda t: math.expm1(t) / t if t else 1.0, 0, x, epsrel=1e-13)[0]


params_st = st.builds(
    ExcitedStateParams,
    zeta=st.floats(-1e4, 1e4),
    mu=st.floats(-1e4, 1e4),
    rho=st.floats(-1e4, 1e4),
    E_JT=st.floats(0, 5e4),
    hbar_omega_ph=st.floats(1e2, 1e4),
    g_L=st.floats(-1, 1),
    g_s_e=st.floats(1, 3),
)
field_st = st.tuples(*[st.floats(-9, 9)] * 3)


def test_basis_index_layout():
    assert basis_index(1, 1) == 0
    assert basis_index(1, -1) == 2
    assert basis_index(0, 0) == 4
    assert basis_index(-1, -1) == 8
    with pytest.raises(ValidationError):
        basis_index(2, 0)


def test_product_state_is_normalized():
    psi = product_state({(1, 1): 1, (-1, -1): 1})
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    assert psi[0] == pytest.approx(1 / math.sqrt(2))


def test_operator_identities():
    # (L.S) = (J^2 - L^2 - S^2) / 2 with L^2 = S^2 = 2
    j2 = sum(j @ j for j in J_OPS)
    np.testing.assert_allclose(L_DOT_S, (j2 - 4 * np.eye(9)) / 2, atol=1e-12)
    np.testing.assert_allclose(CUBIC_A, CUBIC_A.conj().T, atol=1e-12)


@given(params_st, field_st)
def test_excited_hamiltonian_is_hermitian(p, B):
    h = excited_hamiltonian(p, B)
    np.testing.assert_allclose(h, h.conj().T, atol=1e-9 * max(1.0, np.abs(h).max()))


@given(params_st, st.floats(-9, 9))
def test_fourfold_rotation_symmetry(p, bz):
    """A cubic Hamiltonian with B along z commutes with a pi/2 rotation about z (not with J_z itself)."""
    h = excited_hamiltonian(p, (0.0, 0.0, bz))
    u = expm(-0.5j * math.pi * J_OPS[2])
    scale = max(1.0, np.abs(h).max())
    np.testing.assert_allclose(u @ h - h @ u, 0, atol=1e-9 * scale)


def test_cubic_term_breaks_full_rotation_symmetry():
    p = ExcitedStateParams(0.0, 0.0, 1000.0, 0.0, 6150.0)
    h = excited_hamiltonian(p)
    assert np.abs(h @ J_OPS[2] - J_OPS[2] @ h).max() > 1.0


@given(params_st)
def test_weak_states_are_always_eigenvectors(p):
    h = excited_hamiltonian(p)
    scale = max(1.0, np.abs(h).max())
    for psi in WEAK_STATES.values():
        e = np.real(psi.conj() @ h @ psi)
        np.testing.assert_allclose(h @ psi, e * psi, atol=1e-9 * scale)


def test_djt_quantities_against_quadrature(params):
    d = derive_djt(params)
    k = params.kappa
    pref = params.g_L**2 * params.zeta**2 / params.hbar_omega_ph * math.exp(-k)
    assert d.kappa == pytest.approx(3 * params.E_JT / params.hbar_omega_ph)
    assert d.K1 == pytest.approx(pref * _G(k / 2), rel=1e-10)
    assert d.K2 == pytest.approx(pref * (_G(k) - _G(k / 2)), rel=1e-10)
    assert d.g_L_tilde == pytest.approx(params.g_L * math.exp(-k / 2))


def test_no_distortion_means_no_reduction():
    d = derive_djt(ExcitedStateParams(-7000.0, 1.0, 1.0, 0.0, 6000.0))
    assert (d.kappa, d.K1, d.K2) == (0.0, 0.0, 0.0)
    assert d.ham_factor == 1.0


def test_level_coefficients(params):
    d = derive_djt(params)
    a, b, c = level_coefficients(params, d)
    r = math.exp(-params.kappa / 2)
    assert a == pytest.approx(0.5 * r * params.zeta)
    assert b == pytest.approx(params.mu * r + d.K1)
    assert c == pytest.approx(params.rho + params.mu * (1 - r) + d.K2)


def test_parameter_chain_reference_values(derived):
    # tolerance 0.03 THz / 0.01 as for the quoted values
    p, d = derived
    assert p.zeta == pytest.approx(-7730, abs=30)
    assert p.E_JT == pytest.approx(260, abs=30)
    assert p.mu == pytest.approx(4920, abs=30)
    assert p.rho == pytest.approx(-5740, abs=30)
    assert d.kappa == pytest.approx(0.13, abs=0.01)
    assert d.K1 == pytest.approx(140, abs=30)
    assert d.K2 == pytest.approx(150, abs=30)


def test_parameter_chain_round_trip_by_numerical_solve(inputs, derived):
    """Solve for mu and rho by diagonalisation alone and compare with the closed-form chain."""
    p, _ = derived

    def resid(x):
        q = ExcitedStateParams(p.zeta, x[0], x[1], p.E_JT, p.hbar_omega_ph, p.g_L, p.g_s_e)
        d21, _, d43 = solve_levels(q).splittings()
        return [d21 - inputs.delta21, d43 - inputs.delta43]

    mu, rho = fsolve(resid, [4000.0, -5000.0], xtol=1e-10)
    assert mu == pytest.approx(p.mu, rel=1e-8)
    assert rho == pytest.approx(p.rho, rel=1e-8)
    d21, d32, d43 = solve_levels(p).splittings()
    assert (d21, d32, d43) == pytest.approx((inputs.delta21, inputs.delta32, inputs.delta43), rel=1e-9)


def test_table3_rejects_inconsistent_inputs(inputs):
    bad = Table3Inputs(inputs.g_s_g, inputs.E_ge, 9000.0, inputs.delta43, inputs.delta21, inputs.hbar_omega_ph)
    with pytest.raises(InconsistentInputError):
        derive_table3(bad)
    with pytest.raises(InconsistentInputError):
        derive_table3(Table3Inputs(1.9, inputs.E_ge, 7260.0, 12600.0, 5280.0, 6150.0))
    with pytest.raises(ValidationError):
        derive_table3(Table3Inputs(2.242, 258e3, 7260.0, 12600.0, 5280.0, 0.0))


def test_weak_regime_labels(weak_levels):
    assert weak_levels.regime == "weak"
    assert weak_levels.degeneracies == (2, 3, 3, 1)
    assert [c.label for c in weak_levels.clusters] == ["E_u", "T_1u", "T_2u", "A_2u"]
    assert not weak_levels.degenerate


def test_strong_regime(params):
    lv = solve_levels(params, strong=True)
    assert lv.regime == "strong"
    assert lv.degeneracies == (3, 6)
    # quenched limit: only rho survives, ground triplet at 2 rho, sextet at rho
    d = derive_djt(ExcitedStateParams(params.zeta, params.mu, params.rho, 50 * params.hbar_omega_ph / 3,
                                      params.hbar_omega_ph))
    c = params.rho + params.mu * (1 - d.ham_factor) + d.K2
    assert lv.clusters[1].energy - lv.clusters[0].energy == pytest.approx(-c, rel=1e-6)
    reps = lv.representative_states()
    for name in STRONG_STATES:
        assert name in reps


def test_quenched_limit_without_mu():
    lv = classify_levels(excited_hamiltonian(ExcitedStateParams(0.0, 0.0, -5280.0, 6.15e9, 6150.0)))
    assert lv.degeneracies == (3, 6)
    assert lv.clusters[0].energy == pytest.approx(-10560.0)
    assert lv.clusters[1].energy == pytest.approx(-5280.0)


def test_all_degenerate_hamiltonian():
    lv = classify_levels(np.zeros((9, 9)))
    assert lv.degenerate and lv.degeneracies == (9,)


def test_energy_of_named_state(weak_levels):
    e = weak_levels.energy_of("T_1u,0")
    assert e == pytest.approx(weak_levels.cluster("T_1u").energy)


def test_ground_hamiltonian_zeeman():
    h = ground_hamiltonian(GroundStateParams(2.242, (0, 0, 1.0)))
    np.testing.assert_allclose(np.diag(h).real, [2.242 * MU_B, 0, -2.242 * MU_B])
    w, _ = eig_hermitian(ground_hamiltonian(GroundStateParams(2.0, (1.0, 0, 0))))
    np.testing.assert_allclose(w, [-2 * MU_B, 0, 2 * MU_B], atol=1e-9)
    with pytest.raises(ValidationError):
        GroundStateParams(q=np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]]))


@pytest.mark.parametrize("kw", [{"hbar_omega_ph": 0.0}, {"E_JT": -1.0}, {"zeta": math.nan}])
def test_excited_params_validation(kw):
    base = dict(zeta=-7000.0, mu=1.0, rho=1.0, E_JT=100.0, hbar_omega_ph=6000.0)
    base.update(kw)
    with pytest.raises(ValidationError):
        ExcitedStateParams(**base)
