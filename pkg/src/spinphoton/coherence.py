"""Spin-echo envelope models.

Electron-nuclear ESEEM for an ``S = 1`` centre next to ``I = 5/2`` 25Mg
nuclei, the echo-trace model built on it, and the spectral-diffusion
temperature dependence of ``T2``.

Units: hyperfine and nuclear frequencies in MHz, times in microseconds,
temperatures in kelvin.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .constants import CONSTANTS
from .exceptions import ValidationError
from .fitting._nlls import FitResult, nlls_fit
from .fitting._validation import as_1d, check_xy
from .spin import eig_hermitian, gauss_quadrature, spin_operators

__all__ = [
    "EseemSystem",
    "LatticeGeometry",
    "HyperfineSite",
    "EchoModelParams",
    "SdParams",
    "EseemSpectrum",
    "rocksalt_neighbors",
    "hyperfine_tensor",
    "eseem_frequencies_amplitudes",
    "eseem_signal",
    "visibility_v1",
    "occupancy_p25",
    "instrument_response",
    "echo_trace",
    "EchoTraceModel",
    "spectral_diffusion_integrand",
    "spectral_diffusion_integral",
    "t2_vs_temperature",
    "SpectralDiffusionT2",
    "fit_t2_curve",
]


@dataclass(frozen=True)
class EseemSystem:
    omega_I: float = -0.385  # MHz, signed
    A_zz: float = 0.306  # MHz
    A_zx: float = 0.918  # MHz
    I: Fraction = Fraction(5, 2)
    m_s_pair: tuple = (-1, 0)
    omega_S: float = 4.425  # GHz, bookkeeping only

    def __post_init__(self):
        spin = Fraction(self.I)
        if (2 * spin).denominator != 1 or spin <= 0:
            raise ValidationError("I must be a positive half-integer")
        if len(self.m_s_pair) != 2 or any(abs(m) > 1 for m in self.m_s_pair):
            raise ValidationError("m_s_pair entries must satisfy |m_s| <= 1")
        object.__setattr__(self, "I", spin)


def rocksalt_neighbors(a: float) -> np.ndarray:
    """The 12 cation neighbours of a rock-salt cation site, ``a (1/2, 1/2, 0)`` and permutations."""
    out = set()
    for perm in set(itertools.permutations((0.5, 0.5, 0.0))):
        for signs in itertools.product((1, -1), repeat=3):
            out.add(tuple(s * p for s, p in zip(signs, perm)))
    return a * np.array(sorted(out))


@dataclass(frozen=True)
class LatticeGeometry:
    a: float = 0.42  # nm
    neighbor_vectors: np.ndarray | None = None
    g_n: float = -0.34
    p25: float = 0.1

    def __post_init__(self):
        if not self.a > 0:
            raise ValidationError("lattice constant must be positive")
        if not 0 <= self.p25 <= 1:
            raise ValidationError("p25 must lie in [0, 1]")
        vecs = rocksalt_neighbors(self.a) if self.neighbor_vectors is None else np.asarray(self.neighbor_vectors, float)
        if vecs.ndim != 2 or vecs.shape[1] != 3:
            raise ValidationError("neighbor_vectors must be an (N, 3) array")
        object.__setattr__(self, "neighbor_vectors", vecs)


@dataclass(frozen=True)
class HyperfineSite:
    r: tuple  # nm
    A_zz: float  # MHz
    A_zx: float  # MHz


def hyperfine_tensor(geom: LatticeGeometry, g_s_g: float = 2.242, B_direction=(0.0, 0.0, 1.0)) -> list[HyperfineSite]:
    """Point-dipole hyperfine components for each neighbour.

    ``A_ij = 3 (mu0/4pi) mu_B mu_N g g_n (|r|^2 delta_ij - 3 r_i r_j) / |r|^5``.
    ``A_zz`` is the component along the field and ``A_zx`` the one along
    the in-plane direction of the neighbour perpendicular to the field.
    """
    n = np.asarray(B_direction, dtype=float)
    n = n / np.linalg.norm(n)
    c = CONSTANTS
    sites = []
    for r_nm in geom.neighbor_vectors:
        r = r_nm * 1e-9
        rr = float(r @ r)
        pref = 3 * c.mu0_over_4pi * c.mu_B * c.mu_N * g_s_g * geom.g_n / rr**2.5
        A = pref * (rr * np.eye(3) - 3 * np.outer(r, r)) / c.h * 1e-6  # MHz
        perp = r - (r @ n) * n
        norm = np.linalg.norm(perp)
        azz = float(n @ A @ n)
        azx = float((perp / norm) @ A @ n) if norm > 1e-12 * math.sqrt(rr) else 0.0
        sites.append(HyperfineSite(tuple(r_nm), azz, azx))
    return sites


def _manifold(sys: EseemSystem, m_s: int) -> np.ndarray:
    ops = spin_operators(sys.I)
    return -sys.omega_I * ops.sz + m_s * (sys.A_zz * ops.sz + sys.A_zx * ops.sx)


@dataclass(frozen=True)
class EseemSpectrum:
    """``p(t) = mean + sum_k weight_k cos(2 pi f_k t)`` normalised to ``p(0) = 1``."""

    mean: float
    frequencies: np.ndarray  # MHz
    weights: np.ndarray

    def __iter__(self):
        return iter(zip(self.frequencies, self.weights))

    def signal(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.mean + np.cos(2 * np.pi * np.multiply.outer(t, self.frequencies)) @ self.weights

    def oscillating(self, t) -> np.ndarray:
        return self.signal(t) - self.mean


def eseem_frequencies_amplitudes(sys: EseemSystem, rel_tol: float = 1e-9) -> EseemSpectrum:
    """Modulation frequencies and weights of the two-level echo.

    For every lower-manifold eigenstate ``a`` the return amplitude
    ``sum_u |<u|a>|^2 exp(-i E_u t)`` through the upper manifold is squared
    and the result summed over ``a``; equal frequencies are merged.
    """
    lo, up = sys.m_s_pair
    _, va = eig_hermitian(_manifold(sys, lo))
    eu, vu = eig_hermitian(_manifold(sys, up))
    w = np.abs(vu.conj().T @ va) ** 2  # w[u, a]
    dim = w.shape[0]
    pair = w @ w.T / dim  # sum_a w_ua w_u'a
    mean, bins = 0.0, {}
    scale = max(float(np.max(np.abs(eu))), 1e-300)
    for u in range(dim):
        for v in range(u, dim):
            f = abs(eu[v] - eu[u])
            amp = pair[u, v] if u == v else 2 * pair[u, v]
            if f <= rel_tol * scale:
                mean += amp
                continue
            key = next((k for k in bins if abs(k - f) <= rel_tol * scale), f)
            bins[key] = bins.get(key, 0.0) + amp
    freqs = np.array(sorted(f for f, a in bins.items() if a > 1e-14))
    mean += sum(a for a in bins.values() if a <= 1e-14)
    return EseemSpectrum(float(mean), freqs, np.array([bins[f] for f in freqs]))


def eseem_signal(sys: EseemSystem, t) -> np.ndarray:
    return eseem_frequencies_amplitudes(sys).signal(t)


def visibility_v1(sys: EseemSystem) -> float:
    """Closed-form ``I = 1/2`` visibility ``(|A_zx|/2) / sqrt((omega_I + A_zz)^2 + A_zx^2/4)``."""
    den = math.sqrt((sys.omega_I + sys.A_zz) ** 2 + sys.A_zx**2 / 4)
    if den == 0:
        raise ValidationError("visibility undefined: omega_I = -A_zz with A_zx = 0")
    return abs(sys.A_zx) / 2 / den


def occupancy_p25(p25: float, n_nn: int = 8) -> float:
    """Probability that at least one of ``n_nn`` sites holds a 25Mg nucleus."""
    if not 0 <= p25 <= 1:
        raise ValidationError("p25 must lie in [0, 1]")
    return 1 - (1 - p25) ** n_nn


def instrument_response(pulse_bandwidth: float = 2.0, cavity_width: float = 1.0):
    """Spectral weighting ``sinc^2(f / pulse_bandwidth) / (1 + (2 f / cavity_width)^2)``.

    ``pulse_bandwidth`` is the inverse pulse duration (MHz), so the first
    zero of the pulse filter sits there; ``cavity_width`` is the cavity FWHM.
    """
    if not (pulse_bandwidth > 0 and cavity_width > 0):
        raise ValidationError("both widths must be positive")

    def weight(f):
        f = np.asarray(f, dtype=float)
        return np.sinc(f / pulse_bandwidth) ** 2 / (1 + (2 * f / cavity_width) ** 2)

    return weight


@dataclass(frozen=True)
class EchoModelParams:
    A: float = 0.917
    B: float = 0.0825
    T2_short: float = 4.50  # us
    T2_long: float = 109.0  # us
    T2_star_nuc: float = 52.0  # us
    P25: float = 0.81

    def __post_init__(self):
        for name in ("A", "B", "T2_short", "T2_long", "T2_star_nuc"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if not 0 <= self.P25 <= 1:
            raise ValidationError("P25 must lie in [0, 1]")

    FIELDS = ("A", "B", "T2_short", "T2_long", "T2_star_nuc", "P25")

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in self.FIELDS])


def _echo_from_vector(spec: EseemSpectrum, t, p):
    A, B, ts, tl, tn, P = p
    g1 = A * np.exp(-t / ts) + B * np.exp(-t / tl)
    return g1 * (spec.mean + P * np.exp(-t / tn) * spec.oscillating(t))


def echo_trace(sys: EseemSystem, env: EchoModelParams, times) -> np.ndarray:
    """``g1(t) [p_mean + g2(t) p_osc(t)]`` with bi-exponential ``g1`` and ``g2 = P25 exp(-t/T2*)``."""
    t = as_1d(times, "times")
    if np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise ValidationError("times must be non-negative and ascending")
    return _echo_from_vector(eseem_frequencies_amplitudes(sys), t, env.as_vector())


class EchoTraceModel(RegressorMixin, BaseEstimator):
    """Six-parameter fit of the echo-trace model for a fixed ESEEM system."""

    def __init__(self, system: EseemSystem | None = None, init: EchoModelParams | None = None, max_iter: int = 500):
        self.system = system
        self.init = init
        self.max_iter = max_iter

    def fit(self, t, y, sigma=None):
        t, y, s = check_xy(t, y, sigma)
        spec = eseem_frequencies_amplitudes(self.system or EseemSystem())
        p0 = (self.init or EchoModelParams()).as_vector()
        res = nlls_fit(
            lambda x, p: _echo_from_vector(spec, x, p), t, y, p0, sigma=s,
            param_names=EchoModelParams.FIELDS, max_iter=self.max_iter,
            units={"T2_short": "us", "T2_long": "us", "T2_star_nuc": "us"},
        )
        self._spectrum = spec
        self.result_ = res
        self.params_ = EchoModelParams(**{k: abs(v) for k, v in res.parameters.items()})
        return self

    def predict(self, t):
        check_is_fitted(self, "params_")
        return _echo_from_vector(self._spectrum, as_1d(t, "t"), self.params_.as_vector())


@dataclass(frozen=True)
class SdParams:
    sigma: float = 170.0  # MHz
    eps_B: float = 4386.0  # MHz
    T2_LT: float = 85.0  # us
    T2_SD_sat: float = 2.65  # us

    def __post_init__(self):
        for name in ("sigma", "eps_B", "T2_LT", "T2_SD_sat"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")


def _beta_per_mhz(T: float) -> float:
    return 1.0 / (CONSTANTS.k_B_over_h * 1e3 * T)


def spectral_diffusion_integrand(delta, eps_B: float, T: float) -> np.ndarray:
    """Flip-flop weight of a bath pair detuned by ``delta`` (MHz).

    With ``Z(d) = 1 + exp(-b(eps - d)) + exp(-2 b eps)``:
    ``[exp(-b(eps - d)) + exp(-b(3 eps - d))] / Z(d)^2 + exp(-2 b eps) / (Z(d) Z(-d))``.
    Evaluated in log space so no exponent overflows.
    """
    d = np.asarray(delta, dtype=float)
    b = _beta_per_mhz(T)
    x_p = -b * (eps_B - d)
    x_m = -b * (eps_B + d)
    y = -2 * b * eps_B
    log_zp = np.logaddexp(np.logaddexp(0.0, x_p), y)
    log_zm = np.logaddexp(np.logaddexp(0.0, x_m), y)
    t1 = np.exp(x_p + np.log1p(np.exp(y)) - 2 * log_zp)
    t2 = np.exp(y - log_zp - log_zm)
    return t1 + t2


def spectral_diffusion_integral(sigma: float, eps_B: float, T: float, n_nodes: int = 64) -> float:
    """Gaussian average of :func:`spectral_diffusion_integrand` over ``delta``."""
    if not T > 0:
        raise ValidationError("temperature must be positive")
    return gauss_quadrature(lambda d: spectral_diffusion_integrand(d, eps_B, T), sigma, n_nodes)


def t2_vs_temperature(p: SdParams, T) -> np.ndarray | float:
    """``T2`` (us) from ``1/T2 = 1/T2_LT + (3/T2_SD_sat) * integral``."""
    temps = np.atleast_1d(np.asarray(T, dtype=float))
    if np.any(temps <= 0):
        raise ValidationError("temperature must be positive")
    out = np.array(
        [1.0 / (1.0 / p.T2_LT + 3.0 / p.T2_SD_sat * spectral_diffusion_integral(p.sigma, p.eps_B, t)) for t in temps]
    )
    return float(out[0]) if np.ndim(T) == 0 else out


class SpectralDiffusionT2(RegressorMixin, BaseEstimator):
    """Fit ``T2_LT`` and ``T2_SD_sat`` to ``T2(T)`` data with ``sigma`` and ``eps_B`` fixed.

    Internally the two rates ``1/T2_LT`` and ``1/T2_SD_sat`` are fitted; the
    times and their 68% half-widths follow by error propagation. Flags mark
    parameters that the data do not constrain.
    """

    def __init__(self, sigma: float = 170.0, eps_B: float = 4386.0, T2_LT_init: float | None = None,
                 T2_SD_sat_init: float | None = None, max_iter: int = 500):
        self.sigma = sigma
        self.eps_B = eps_B
        self.T2_LT_init = T2_LT_init
        self.T2_SD_sat_init = T2_SD_sat_init
        self.max_iter = max_iter

    def fit(self, T, T2, sigma_T2=None):
        T, T2, s = check_xy(T, T2, sigma_T2)
        if T.size < 3:
            raise ValidationError("need at least 3 temperature points")
        if np.any(T <= 0) or np.any(T2 <= 0):
            raise ValidationError("temperatures and T2 values must be positive")
        integ = np.array([spectral_diffusion_integral(self.sigma, self.eps_B, t) for t in T])

        def model(_, p):
            return 1.0 / (p[0] + 3.0 * p[1] * integ)

        r1 = 1 / self.T2_LT_init if self.T2_LT_init else 1 / float(np.max(T2))
        r2 = 1 / self.T2_SD_sat_init if self.T2_SD_sat_init else max(1 / float(np.min(T2)) - r1, 1e-6)
        res = nlls_fit(model, T, T2, [r1, r2], sigma=s, param_names=["r_LT", "r_SD"], max_iter=self.max_iter)
        (r1, r2), cov = res.values, res.covariance
        dr1, dr2 = np.sqrt(np.diag(cov))
        flags = []
        if r2 <= 2 * dr2:
            flags.append("T2_SD_sat unconstrained")
        if r1 <= 2 * dr1:
            flags.append("T2_LT weakly constrained")
        t_lt = 1 / r1 if r1 > 0 else math.inf
        t_sd = 1 / r2 if r2 > 0 else math.inf
        # d(1/r) = dr / r^2
        jac = np.diag([-1 / r1**2 if r1 else 0.0, -1 / r2**2 if r2 else 0.0])
        self.result_ = FitResult(
            parameters={"T2_LT": t_lt, "T2_SD_sat": t_sd},
            covariance=jac @ cov @ jac.T,
            residual_norm=res.residual_norm,
            confidence_68={"T2_LT": dr1 / r1**2 if r1 else math.inf, "T2_SD_sat": dr2 / r2**2 if r2 else math.inf},
            units={"T2_LT": "us", "T2_SD_sat": "us"},
            n_iter=res.n_iter,
            flags=flags,
        )
        self.T2_LT_, self.T2_SD_sat_ = t_lt, t_sd
        return self

    def predict(self, T):
        check_is_fitted(self, "result_")
        return t2_vs_temperature(SdParams(self.sigma, self.eps_B, self.T2_LT_, self.T2_SD_sat_), as_1d(T, "T"))


def fit_t2_curve(T, T2, sigma_T2=None, sigma: float = 170.0, eps_B: float = 4386.0) -> FitResult:
    return SpectralDiffusionT2(sigma, eps_B).fit(T, T2, sigma_T2).result_
