import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from spinphoton.exceptions import ConsistencyError, ValidationError
from spinphoton.levels import WEAK_STATES, ExcitedStateParams, derive_djt, excited_hamiltonian, excited_zeeman_operator
from spinphoton.spin import eig_hermitian
from spinphoton.transitions import (
    EMISSION_GROUPS,
    POLARIZATIONS,
    emission_lines,
    lineshape,
    quadratic_shift_beta,
    synthesize_spectrum,
    transition_table,
)

POL_ML = {"sigma_plus": -1, "pi": 0, "sigma_minus": 1}
MU_B = 13.996245


def _prob_from_ket(psi, m_s, pol):
    # dipole keeps the spin and selects the orbital component m_l
    idx = 3 * (1 - POL_ML[pol]) + (1 - m_s)
    return abs(psi[idx]) ** 2


def test_probabilities_follow_ket_components(weak_table):
    for name, psi in WEAK_STATES.items():
        for ms in (-1, 0, 1):
            for pol in POLARIZATIONS:
                assert weak_table.probability(name, ms, pol) == pytest.approx(_prob_from_ket(psi, ms, pol), abs=1e-12)


def test_lambda_system(weak_table):
    assert weak_table.probability("T_1u,0", -1, "sigma_plus") == pytest.approx(0.5)
    assert weak_table.probability("T_1u,0", 1, "sigma_minus") == pytest.approx(0.5)
    assert sum(weak_table.probability("T_1u,0", 0, p) for p in POLARIZATIONS) == pytest.approx(0.0, abs=1e-15)


def test_each_state_has_unit_total_probability(weak_table):
    for name in weak_table.excited_labels():
        assert weak_table.probability_block(name).sum() == pytest.approx(1.0)


@given(st.lists(st.floats(-1, 1), min_size=18, max_size=18).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_total_probability_is_norm(v):
    from spinphoton.transitions import _probabilities

    psi = np.array(v[:9]) + 1j * np.array(v[9:])
    psi /= np.linalg.norm(psi)
    assert _probabilities(psi).sum() == pytest.approx(1.0)


def test_time_reversal_partner_symmetry(weak_table):
    # P(sigma+, J_z = +m -> m_s) = P(sigma-, J_z = -m -> -m_s)
    mirror = {"sigma_plus": "sigma_minus", "pi": "pi", "sigma_minus": "sigma_plus"}
    for a, b in [("T_1u,1", "T_1u,-1"), ("T_2u,1", "T_2u,-1"), ("T_1u,0", "T_1u,0"), ("E_u,eps", "E_u,eps")]:
        for ms in (-1, 0, 1):
            for pol in POLARIZATIONS:
                assert weak_table.probability(a, ms, pol) == pytest.approx(weak_table.probability(b, -ms, mirror[pol]))


def test_transition_slopes(weak_table, params):
    g = 2.242
    gs = params.g_s_e + derive_djt(params).g_L_tilde
    expected = {
        "E_u,eps": (g, 0, -g),
        "E_u,theta": (g, 0, -g),
        "T_1u,1": (g + gs / 2, gs / 2, -g + gs / 2),
        "T_1u,0": (g, 0, -g),
        # time-reversed image of the T_1u,1 row
        "T_1u,-1": (g - gs / 2, -gs / 2, -g - gs / 2),
    }
    for name, slopes in expected.items():
        for ms, s in zip((-1, 0, 1), slopes):
            assert weak_table.slope(name, ms) == pytest.approx(s, abs=1e-9)


def test_summed_probability(weak_table):
    eu = ["E_u,eps", "E_u,theta"]
    assert weak_table.summed_probability(-1, "sigma_plus", eu) == pytest.approx(0.5)
    assert weak_table.summed_probability(1, "sigma_plus", eu) == pytest.approx(1 / 6)


def test_emission_line_bookkeeping(params):
    lines = emission_lines(params, 3.0, "E_u", 1.7)
    assert len(lines) == 2 * 3 * 3
    assert sum(ln.probability for ln in lines) == pytest.approx(2.0)
    top = max(lines, key=lambda ln: ln.probability * ln.weight)
    assert top.polarization in POLARIZATIONS


def test_emission_line_positions_at_field(params):
    B = 2.0
    lines = [ln for ln in emission_lines(params, B, "E_u", 1.7) if ln.probability > 0.4]
    # the two strongest (1/2) lines are E_u,eps -> m_s = -1 / +1, shifted by -/+ g mu_B B plus a tiny quadratic shift
    freqs = sorted(ln.frequency for ln in lines)
    split = freqs[-1] - freqs[0]
    assert split == pytest.approx(2 * 2.242 * MU_B * B, rel=1e-3)


def test_emission_validation(params):
    with pytest.raises(ValidationError):
        emission_lines(params, 1.0, "T_3u")
    with pytest.raises(ValidationError):
        emission_lines(params, 1.0, "E_u", temperature=0.0)


@pytest.mark.parametrize("kind", ["sech", "gaussian", "lorentzian"])
def test_lineshape_area_and_width(kind):
    fwhm = 3.0
    area = quad(lambda x: float(lineshape(kind, np.array([x]), fwhm)[0]), -np.inf, np.inf, limit=400)[0]
    assert area == pytest.approx(1.0, rel=1e-6)
    peak = lineshape(kind, np.array([0.0]), fwhm)[0]
    assert lineshape(kind, np.array([fwhm / 2]), fwhm)[0] == pytest.approx(peak / 2, rel=1e-12)
    with pytest.raises(ValidationError):
        lineshape(kind, np.zeros(2), 0.0)
    with pytest.raises(ValidationError):
        lineshape("voigt", np.zeros(2), 1.0)


def test_spectrum_is_polarization_resolved(params):
    grid = np.linspace(-600, 600, 1201)
    tr = synthesize_spectrum(params, 5.0, grid, "E_u", 1.7)
    assert set(tr.intensity) == set(POLARIZATIONS)
    for pol in ("sigma_plus", "sigma_minus"):
        assert tr.intensity[pol].max() > 0
    peak_p = grid[np.argmax(tr.intensity["sigma_plus"])]
    peak_m = grid[np.argmax(tr.intensity["sigma_minus"])]
    assert peak_p * peak_m < 0 or abs(peak_p - peak_m) > 100


def _beta_second_order(p):
    """Second-order perturbation theory for the E_u,eps energy in the zero-field eigenbasis (MHz/T^2)."""
    djt = derive_djt(p)
    w, v = eig_hermitian(excited_hamiltonian(p, djt=djt))
    V = v.conj().T @ excited_zeeman_operator(p, (0, 0, 1), djt) @ v
    k = int(np.argmax(np.abs(v.conj().T @ WEAK_STATES["E_u,eps"])))
    deg = np.abs(w - w[k]) < 1e-6
    return sum(abs(V[j, k]) ** 2 / (w[k] - w[j]) for j in range(9) if not deg[j]) * 1e3


def test_beta_curvature_against_perturbation_theory(params, inputs):
    p = ExcitedStateParams(params.zeta, params.mu, params.rho, params.E_JT, params.hbar_omega_ph, params.g_L, 1.8)
    q = quadratic_shift_beta(p, inputs.delta21, tolerance=1.0)
    assert q.beta_curvature == pytest.approx(_beta_second_order(p), rel=2e-3)


def test_beta_reference_value(params, inputs):
    g_s_e = 1.33 - derive_djt(params).g_L_tilde
    p = ExcitedStateParams(params.zeta, params.mu, params.rho, params.E_JT, params.hbar_omega_ph, params.g_L, g_s_e)
    q = quadratic_shift_beta(p, inputs.delta21)
    assert q.beta_formula == pytest.approx(-66, abs=2)
    assert q.beta_curvature == pytest.approx(-66, abs=2)
    assert q.relative_difference < 0.05


def test_beta_consistency_error(params):
    with pytest.raises(ConsistencyError):
        quadratic_shift_beta(params, 1000.0)
    with pytest.raises(ValidationError):
        quadratic_shift_beta(params, -1.0)


def test_emission_groups_cover_manifold():
    idx = sorted(i for s in EMISSION_GROUPS.values() for i in range(9)[s])
    assert idx == list(range(9))


def test_transition_table_requires_params(weak_levels):
    from dataclasses import replace

    with pytest.raises(ValidationError):
        transition_table(replace(weak_levels, params=None))
