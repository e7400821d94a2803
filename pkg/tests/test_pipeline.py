import numpy as np
import pytest

from spinphoton.exceptions import ValidationError
from spinphoton.levels import ExcitedStateParams, derive_djt
from spinphoton.pipeline import extract_centers, run_zeeman_pipeline, synthesize_traces

FIELDS = np.linspace(0, 9, 19)


@pytest.fixture(scope="module")
def theory_params(params):
    # g_s_e = 1.84 and g_L chosen so that the reduced orbital factor is -0.47
    red = derive_djt(params).ham_factor
    return ExcitedStateParams(params.zeta, params.mu, params.rho, params.E_JT, params.hbar_omega_ph, -0.47 / red, 1.84)


@pytest.fixture(scope="module")
def run(theory_params):
    return run_zeeman_pipeline(theory_params, FIELDS, threads=2)


def test_pipeline_recovers_ground_g(run):
    _, _, summary = run
    assert summary.g_s_g == pytest.approx(2.242, rel=0.005)


def test_pipeline_alpha(run):
    _, _, summary = run
    assert summary.alpha == pytest.approx(1.37, rel=0.03)
    assert summary.g_outer_1220 == pytest.approx(2.242, rel=0.01)


def test_pipeline_quadratic_shift_has_expected_sign(run):
    _, _, summary = run
    assert summary.beta_meas < 0
    assert summary.beta_theory == pytest.approx(-(1.84 - 0.47) ** 2 * 13.996245**2 / 5280 * 1e3, rel=1e-3)


def test_zero_field_peaks_are_flagged(run):
    _, centers, summary = run
    zero = [c for c in centers if c.B == 0.0]
    assert zero and all(c.degenerate for c in zero)
    assert any("unresolved" in w for w in summary.warnings)


def test_noise_is_independent_of_thread_count(theory_params):
    a = synthesize_traces(theory_params, FIELDS[:4], noise_fraction=0.05, seed=11, threads=1)
    b = synthesize_traces(theory_params, FIELDS[:4], noise_fraction=0.05, seed=11, threads=3)
    for ta, tb in zip(a, b):
        np.testing.assert_array_equal(ta.intensity, tb.intensity)
    c = synthesize_traces(theory_params, FIELDS[:4], noise_fraction=0.05, seed=12)
    assert not np.array_equal(a[-1].intensity, c[-1].intensity)


def test_noisy_pipeline_still_recovers_g(theory_params):
    _, _, s = run_zeeman_pipeline(theory_params, FIELDS, noise_fraction=0.02, seed=5)
    assert s.g_s_g == pytest.approx(2.242, rel=0.005)


def test_extract_centers_orders_peaks(theory_params):
    traces = synthesize_traces(theory_params, [6.0])
    for c in extract_centers([t for t in traces if t.polarization != "pi"]):
        assert c.low <= c.high


def test_field_grid_too_short(theory_params):
    with pytest.raises(ValidationError):
        run_zeeman_pipeline(theory_params, [0, 1, 2, 3])
