import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import curve_fit, least_squares
from sklearn.base import clone

from spinphoton.exceptions import ConvergenceError, SingularFitError, ValidationError
from spinphoton.fitting import (
    BiExponentialDecay,
    CommonOriginLineRegressor,
    DoubleSechPeaks,
    QuadraticShiftRegressor,
    fit_biexponential,
    fit_common_origin_lines,
    fit_double_sech,
    fit_quadratic_deviation,
    g_factor_from_slopes,
    nlls_fit,
)


def _decay(x, p):
    return p[0] * np.exp(-x / p[1]) + p[2]


@pytest.fixture
def noisy_decay():
    rng = np.random.default_rng(3)
    x = np.linspace(0, 10, 80)
    y = _decay(x, [2.0, 1.7, 0.3]) + 0.02 * rng.standard_normal(x.size)
    return x, y


def test_nlls_matches_scipy(noisy_decay):
    x, y = noisy_decay
    res = nlls_fit(_decay, x, y, [1.0, 1.0, 0.0], param_names=["a", "tau", "c"])
    ref = least_squares(lambda p: _decay(x, p) - y, [1.0, 1.0, 0.0], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    np.testing.assert_allclose(res.values, ref.x, rtol=1e-6)
    _, pcov = curve_fit(lambda t, a, tau, c: _decay(t, [a, tau, c]), x, y, p0=ref.x)
    np.testing.assert_allclose(res.covariance, pcov, rtol=1e-3)
    assert res.confidence_68["tau"] == pytest.approx(math.sqrt(pcov[1, 1]), rel=1e-3)
    assert res.converged and [r["name"] for r in res.as_records()] == ["a", "tau", "c"]


def test_nlls_absolute_sigma(noisy_decay):
    x, y = noisy_decay
    s = np.full(x.size, 0.02)
    res = nlls_fit(_decay, x, y, [1.0, 1.0, 0.0], sigma=s, absolute_sigma=True)
    _, pcov = curve_fit(lambda t, a, tau, c: _decay(t, [a, tau, c]), x, y, p0=res.values, sigma=s, absolute_sigma=True)
    np.testing.assert_allclose(res.covariance, pcov, rtol=1e-3)


def test_nlls_analytic_jacobian(noisy_decay):
    x, y = noisy_decay

    def jac(t, p):
        e = np.exp(-t / p[1])
        return np.column_stack([e, p[0] * t / p[1] ** 2 * e, np.ones_like(t)])

    a = nlls_fit(_decay, x, y, [1.0, 1.0, 0.0], jac=jac)
    b = nlls_fit(_decay, x, y, [1.0, 1.0, 0.0])
    np.testing.assert_allclose(a.values, b.values, rtol=1e-7)


def test_nlls_errors(noisy_decay):
    x, y = noisy_decay
    with pytest.raises(ConvergenceError) as err:
        nlls_fit(_decay, x, y, [1.0, 10.0, 0.0], max_iter=1)
    assert err.value.last_iterate is not None
    with pytest.raises(SingularFitError):
        nlls_fit(lambda t, p: (p[0] + p[1]) * t, x, 2 * x, [1.0, 1.0])
    with pytest.raises(ValidationError):
        nlls_fit(_decay, x[:2], y[:2], [1.0, 1.0, 0.0])
    with pytest.raises(ValidationError):
        nlls_fit(_decay, x, y[:-1], [1.0, 1.0, 0.0])
    with pytest.raises(ValidationError):
        nlls_fit(_decay, x, y, [1.0, 1.0], param_names=["a", "b", "c"])


def _sech_pair(f, c1, c2, w=20.0):
    return 1 / np.cosh((f - c1) / w) + 0.7 / np.cosh((f - c2) / w)


def test_double_sech_recovers_centres():
    f = np.linspace(-300, 300, 601)
    rng = np.random.default_rng(0)
    y = _sech_pair(f, -80.0, 95.0) + 0.01 * rng.standard_normal(f.size)
    pk = fit_double_sech((f, y))
    assert pk.centers == pytest.approx((-80.0, 95.0), abs=0.5)
    assert not pk.degenerate
    assert pk.widths[0] == pytest.approx(2 * math.acosh(2) * 20.0, rel=0.03)


def test_double_sech_flags_single_peak():
    f = np.linspace(-300, 300, 601)
    pk = fit_double_sech((f, 1 / np.cosh(f / 30.0)))
    assert pk.degenerate
    assert pk.centers[0] == pytest.approx(0.0, abs=0.5)


@given(st.floats(-150, -40), st.floats(40, 150))
def test_double_sech_ordering(c1, c2):
    f = np.linspace(-300, 300, 601)
    pk = DoubleSechPeaks().fit(f, _sech_pair(f, c2, c1)).peaks_
    assert pk.centers[0] < pk.centers[1]
    assert pk.centers == pytest.approx((c1, c2), abs=0.2)


def test_common_origin_lines():
    B = np.linspace(0, 9, 10)
    series = {"up": (B, 3.0 + 31.4 * B), "down": (B, 3.0 - 31.4 * B), "flat": (B, 3.0 + 0.1 * B)}
    res = fit_common_origin_lines(series)
    assert res.slopes == pytest.approx({"up": 31.4, "down": -31.4, "flat": 0.1})
    assert res.intercept == pytest.approx(3.0)


def test_independent_intercepts_match_polyfit():
    rng = np.random.default_rng(1)
    B = np.linspace(0, 9, 12)
    y1 = 1.0 + 2.0 * B + 0.1 * rng.standard_normal(B.size)
    y2 = -4.0 - 1.0 * B + 0.1 * rng.standard_normal(B.size)
    res = fit_common_origin_lines({"a": (B, y1), "b": (B, y2)}, shared_intercept=False)
    assert res.slopes["a"] == pytest.approx(np.polyfit(B, y1, 1)[0], rel=1e-10)
    assert res.slopes["b"] == pytest.approx(np.polyfit(B, y2, 1)[0], rel=1e-10)


def test_common_origin_regressor_is_sklearn_compatible():
    B = np.tile(np.linspace(0, 9, 5), 2)
    X = np.column_stack([B, np.repeat([0, 1], 5)])
    y = np.where(X[:, 1] == 0, 2 * B, -B) + 1.0
    reg = clone(CommonOriginLineRegressor()).fit(X, y)
    np.testing.assert_allclose(reg.predict(X), y, atol=1e-10)
    assert reg.get_params() == {"shared_intercept": True}
    with pytest.raises(ValidationError):
        fit_common_origin_lines({"only": (B[:5], y[:5])})
    with pytest.raises(ValidationError):
        CommonOriginLineRegressor().fit(B, y)


def test_g_factor_from_slopes():
    mub = 13.996245
    assert g_factor_from_slopes(2.242 * mub, -2.242 * mub) == pytest.approx(2.242)


def test_quadratic_deviation_weighted_oracle():
    rng = np.random.default_rng(2)
    B = np.linspace(0, 9, 19)
    s = np.full(B.size, 50.0)
    df = -66.0 * B**2 + s * rng.standard_normal(B.size)
    beta, ci = fit_quadratic_deviation(B, df, s, B_min=3.5)
    keep = B >= 3.5
    ref = np.linalg.lstsq((B[keep] ** 2)[:, None], df[keep], rcond=None)[0][0]
    assert beta == pytest.approx(ref, rel=1e-12)
    assert beta == pytest.approx(-66.0, abs=4 * ci)
    reg = QuadraticShiftRegressor(b_min=3.5).fit(B, df)
    assert reg.n_used_ == int(keep.sum())
    with pytest.raises(ValidationError):
        fit_quadratic_deviation(B[:8], df[:8], B_min=3.5)


def test_biexponential_recovery():
    t = np.linspace(0.1, 200, 400)
    y = 0.9 * np.exp(-t / 4.5) + 0.1 * np.exp(-t / 100.0)
    res = fit_biexponential(t, y)
    assert res.parameters["A"] == pytest.approx(0.9, rel=1e-6)
    assert res.parameters["T2_short"] == pytest.approx(4.5, rel=1e-6)
    assert res.parameters["B"] == pytest.approx(0.1, rel=1e-6)
    assert res.parameters["T2_long"] == pytest.approx(100.0, rel=1e-6)
    assert "collinear" not in res.flags


def test_biexponential_collinear_fallback():
    t = np.linspace(0.1, 50, 200)
    est = BiExponentialDecay().fit(t, 2.0 * np.exp(-t / 7.0))
    assert est.collinear_
    assert est.result_.parameters["T2_short"] == pytest.approx(7.0, rel=1e-6)
    assert est.result_.parameters["B"] == 0.0
    assert isinstance(est.result_.parameters["A"], float)
    np.testing.assert_allclose(est.predict(t), 2.0 * np.exp(-t / 7.0), rtol=1e-6)


@given(st.floats(1, 10), st.floats(30, 300), st.floats(0.1, 0.9))
def test_biexponential_components_are_ordered(ts, tl, frac):
    t = np.geomspace(ts / 20, 5 * tl, 300)
    y = frac * np.exp(-t / tl) + (1 - frac) * np.exp(-t / ts)
    est = BiExponentialDecay().fit(t, y)
    assert est.T2_short_ <= est.T2_long_
    assert est.T2_short_ == pytest.approx(ts, rel=1e-4)
    assert est.T2_long_ == pytest.approx(tl, rel=1e-4)
