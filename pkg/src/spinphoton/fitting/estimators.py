"""Curve-fitting estimators with a scikit-learn style interface.

Each estimator takes its hyper-parameters in ``__init__``, learns from
``fit`` and stores results in trailing-underscore attributes. A thin
functional wrapper is provided for one-shot use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks, medfilt, peak_widths
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..constants import CONSTANTS
from ..exceptions import ConvergenceError, NumericalError, SingularFitError, ValidationError
from ._nlls import FitResult, nlls_fit
from ._validation import as_1d, check_xy

SECH_FWHM_PER_W = 2 * math.acosh(2.0)


def _sech_sum(f, p):
    out = np.zeros_like(f, dtype=float)
    for amp, c, w in p.reshape(-1, 3):
        out += amp / np.cosh(np.clip((f - c) / w, -700, 700))
    return out


@dataclass(frozen=True)
class PeakPair:
    """Two fitted sech peaks, centres ascending.

    ``widths`` are FWHM in the grid unit; ``amplitudes`` are peak heights.
    When ``degenerate`` is set only one peak was resolved and both entries
    repeat it.
    """

    centers: tuple
    widths: tuple
    amplitudes: tuple
    degenerate: bool
    result: FitResult | None = None


class DoubleSechPeaks(BaseEstimator):
    """Sum of two ``amp * sech((f - c) / w)`` peaks.

    Initialised from the two highest local maxima of a 3-point median
    filtered copy of the data whose prominence clears both
    ``min_prominence`` and five times a robust noise estimate. If the
    second component collapses during the fit, a single peak is refitted
    and the pair is reported as degenerate.

    Parameters
    ----------
    min_prominence : float
        Local maxima below this fraction of the data maximum are ignored.
    merge_fraction : float
        Peaks closer than this fraction of the mean FWHM are reported as
        degenerate.
    """

    def __init__(self, min_prominence: float = 0.05, merge_fraction: float = 0.25, max_iter: int = 500):
        self.min_prominence = min_prominence
        self.merge_fraction = merge_fraction
        self.max_iter = max_iter

    def fit(self, f, y):
        f, y, _ = check_xy(f, y)
        if f.size < 20:
            raise ValidationError("need at least 20 grid points")
        if np.any(np.diff(f) <= 0):
            raise ValidationError("frequency grid must be strictly increasing")
        smooth = medfilt(y, 3)
        top = float(np.max(smooth))
        if not top > 0:
            raise ValidationError("data has no positive peak")
        # robust noise level from first differences (MAD); noise bumps must not seed a second peak
        noise = float(np.median(np.abs(np.diff(y)))) / (0.6745 * math.sqrt(2))
        idx, _ = find_peaks(smooth, prominence=max(self.min_prominence * top, 5 * noise))
        if idx.size == 0:
            idx = np.array([int(np.argmax(smooth))])
        idx = idx[np.argsort(smooth[idx])[::-1][:2]]
        widths_samples = peak_widths(smooth, idx, rel_height=0.5)[0]
        step = float(np.mean(np.diff(f)))
        p0 = []
        for i, ws in zip(idx, widths_samples):
            fwhm = max(ws * step, 2 * step)
            p0 += [smooth[i], f[i], fwhm / SECH_FWHM_PER_W]
        names = [f"{k}{j}" for j in range(len(idx)) for k in ("amp", "center", "w")]
        try:
            res = nlls_fit(_sech_sum, f, y, p0, param_names=names, max_iter=self.max_iter)
        except (SingularFitError, ConvergenceError):
            if len(idx) == 1:
                raise
            # a noise maximum collapsed into nothing; keep the stronger peak only
            res = nlls_fit(_sech_sum, f, y, p0[:3], param_names=names[:3], max_iter=self.max_iter)
        peaks = sorted(np.asarray(list(res.parameters.values())).reshape(-1, 3).tolist(), key=lambda r: r[1])
        fwhms = [abs(w) * SECH_FWHM_PER_W for _, _, w in peaks]
        degenerate = len(peaks) == 1 or abs(peaks[1][1] - peaks[0][1]) < self.merge_fraction * float(np.mean(fwhms))
        if len(peaks) == 1:
            peaks, fwhms = peaks * 2, fwhms * 2
        self.params_ = np.asarray([[a, c, abs(w)] for a, c, w in peaks])
        self.peaks_ = PeakPair(
            centers=(peaks[0][1], peaks[1][1]),
            widths=tuple(fwhms),
            amplitudes=(abs(peaks[0][0]), abs(peaks[1][0])),
            degenerate=bool(degenerate),
            result=res,
        )
        return self

    def predict(self, f):
        check_is_fitted(self, "params_")
        p = self.params_[:1] if self.peaks_.degenerate and self.peaks_.centers[0] == self.peaks_.centers[1] else self.params_
        return _sech_sum(as_1d(f, "f"), p.ravel())


def fit_double_sech(trace, polarization: str | None = None, **kwargs) -> PeakPair:
    """Fit two sech peaks to a :class:`SpectrumTrace` (one polarisation) or an ``(f, y)`` pair."""
    if isinstance(trace, tuple):
        f, y = trace
    else:
        if polarization is None:
            raise ValidationError("polarization is required for a SpectrumTrace")
        f, y = trace.frequency_grid, trace.intensity[polarization]
    return DoubleSechPeaks(**kwargs).fit(f, y).peaks_


class CommonOriginLineRegressor(RegressorMixin, BaseEstimator):
    """Straight lines ``y = c0 + s_i * B`` sharing one intercept.

    ``X`` has two columns: the field ``B`` and an integer line identifier.
    With ``shared_intercept=False`` each line gets its own intercept, which
    is the same as independent per-line regressions.
    """

    def __init__(self, shared_intercept: bool = True):
        self.shared_intercept = shared_intercept

    def _design(self, B, ids):
        cols = [(ids == k) * B for k in self.lines_]
        if self.shared_intercept:
            cols.insert(0, np.ones_like(B))
        else:
            cols = [(ids == k).astype(float) for k in self.lines_] + cols
        return np.column_stack(cols)

    def fit(self, X, y, sample_weight=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 2:
            raise ValidationError("X must have columns (B, line_id)")
        B, y, sigma = check_xy(X[:, 0], y, None if sample_weight is None else 1 / np.sqrt(as_1d(sample_weight, "w")))
        ids = X[:, 1]
        self.lines_ = np.unique(ids)
        if self.lines_.size < 1:
            raise ValidationError("no lines given")
        A = self._design(B, ids)
        w = 1 / sigma
        Aw, yw = A * w[:, None], y * w
        rank = np.linalg.matrix_rank(Aw)
        if rank < A.shape[1]:
            raise SingularFitError(float(np.linalg.cond(Aw.T @ Aw)))
        coef, *_ = np.linalg.lstsq(Aw, yw, rcond=None)
        r = yw - Aw @ coef
        dof = y.size - A.shape[1]
        s2 = float(r @ r) / dof if dof > 0 else np.inf
        cov = np.linalg.inv(Aw.T @ Aw) * s2
        n = self.lines_.size
        if self.shared_intercept:
            self.intercept_, self.slopes_ = float(coef[0]), coef[1:]
            self.intercept_ci_, self.slopes_ci_ = float(np.sqrt(cov[0, 0])), np.sqrt(np.diag(cov)[1:])
        else:
            self.intercept_, self.slopes_ = coef[:n], coef[n:]
            self.intercept_ci_, self.slopes_ci_ = np.sqrt(np.diag(cov)[:n]), np.sqrt(np.diag(cov)[n:])
        self.covariance_ = cov
        self.residual_norm_ = float(np.linalg.norm(r))
        return self

    def predict(self, X):
        check_is_fitted(self, "slopes_")
        X = np.asarray(X, dtype=float)
        coef = np.concatenate([np.atleast_1d(self.intercept_), self.slopes_])
        return self._design(X[:, 0], X[:, 1]) @ coef


@dataclass(frozen=True)
class CommonOriginResult:
    slopes: dict  # frequency unit per tesla
    slopes_ci: dict
    intercept: float
    intercept_ci: float
    residual_norm: float


def fit_common_origin_lines(series: dict, shared_intercept: bool = True) -> CommonOriginResult:
    """Fit ``{name: (B, centers)}`` with a shared origin.

    Needs at least two lines with three points each.
    """
    if len(series) < 2:
        raise ValidationError("need at least two lines")
    names = list(series)
    Bs, ys, ids = [], [], []
    for k, name in enumerate(names):
        B, c, _ = check_xy(*series[name][:2])
        if B.size < 3:
            raise ValidationError(f"line {name!r} has fewer than 3 points")
        Bs.append(B)
        ys.append(c)
        ids.append(np.full(B.size, k))
    X = np.column_stack([np.concatenate(Bs), np.concatenate(ids)])
    reg = CommonOriginLineRegressor(shared_intercept).fit(X, np.concatenate(ys))
    return CommonOriginResult(
        slopes=dict(zip(names, map(float, reg.slopes_))),
        slopes_ci=dict(zip(names, map(float, reg.slopes_ci_))),
        intercept=reg.intercept_ if not shared_intercept else float(reg.intercept_),
        intercept_ci=reg.intercept_ci_,
        residual_norm=reg.residual_norm_,
    )


def g_factor_from_slopes(s_plus: float, s_minus: float, unit_per_tesla: float = CONSTANTS.mu_B_over_h) -> float:
    """``g = (s+ - s-) / (2 mu_B)`` for an opposite-slope line pair (slopes in GHz/T)."""
    return (s_plus - s_minus) / (2 * unit_per_tesla)


class QuadraticShiftRegressor(RegressorMixin, BaseEstimator):
    """One-parameter fit ``df = beta * B^2`` using only points with ``B >= b_min``."""

    def __init__(self, b_min: float = 3.5):
        self.b_min = b_min

    def fit(self, B, df, sigma=None):
        B, df, s = check_xy(B, df, sigma)
        keep = B >= self.b_min
        if keep.sum() < 3:
            raise ValidationError(f"need at least 3 points with B >= {self.b_min} T, got {int(keep.sum())}")
        x2, yk, w = B[keep] ** 2, df[keep], 1 / s[keep] ** 2
        denom = float(np.sum(w * x2**2))
        self.beta_ = float(np.sum(w * x2 * yk)) / denom
        r = (yk - self.beta_ * x2) * np.sqrt(w)
        dof = yk.size - 1
        self.beta_ci_ = float(np.sqrt(float(r @ r) / dof / denom))
        self.n_used_ = int(keep.sum())
        return self

    def predict(self, B):
        check_is_fitted(self, "beta_")
        return self.beta_ * as_1d(B, "B") ** 2


def fit_quadratic_deviation(B, df, sigma=None, B_min: float = 3.5) -> tuple[float, float]:
    """Return ``(beta, 68% half-width)`` for ``df = beta * B^2``."""
    reg = QuadraticShiftRegressor(B_min).fit(B, df, sigma)
    return reg.beta_, reg.beta_ci_


def _biexp(t, p):
    return p[0] * np.exp(-t / p[1]) + p[2] * np.exp(-t / p[3])


def _monoexp(t, p):
    return p[0] * np.exp(-t / p[1])


class BiExponentialDecay(RegressorMixin, BaseEstimator):
    """``A exp(-t/T2_short) + B exp(-t/T2_long)`` with ``T2_short < T2_long``.

    Starting values come from a coarse grid over the two time constants with
    the amplitudes solved linearly. If the second component is not supported
    by the data the fit falls back to one exponential, ``B = 0`` and
    ``collinear_`` is set.
    """

    def __init__(self, grid_points: int = 30, min_fraction: float = 1e-3, min_ratio: float = 1.05, max_iter: int = 500):
        self.grid_points = grid_points
        self.min_fraction = min_fraction
        self.min_ratio = min_ratio
        self.max_iter = max_iter

    def _initial(self, t, y, w):
        taus = np.geomspace(max(t.min(), 1e-12 * t.max()) / 3, t.max() * 3, self.grid_points)
        best, best_cost = None, np.inf
        for i, ts in enumerate(taus):
            for tl in taus[i + 1:]:
                A = np.column_stack([np.exp(-t / ts), np.exp(-t / tl)]) * w[:, None]
                amp, *_ = np.linalg.lstsq(A, y * w, rcond=None)
                if np.any(amp <= 0):
                    continue
                c = float(np.sum((A @ amp - y * w) ** 2))
                if c < best_cost:
                    best, best_cost = [amp[0], ts, amp[1], tl], c
        return best

    def fit(self, t, y, sigma=None):
        t, y, s = check_xy(t, y, sigma)
        if np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise ValidationError("t must be positive and ascending")
        names = ["A", "T2_short", "B", "T2_long"]
        p0 = self._initial(t, y, 1 / s)
        res, collinear = None, p0 is None
        if not collinear:
            try:
                res = nlls_fit(_biexp, t, y, p0, sigma=s, param_names=names, max_iter=self.max_iter)
                a, ts, b, tl = res.values
                if ts > tl:
                    a, ts, b, tl = b, tl, a, ts
                    res.parameters = dict(zip(names, (a, ts, b, tl)))
                    ci = res.confidence_68
                    res.confidence_68 = dict(zip(names, (ci["B"], ci["T2_long"], ci["A"], ci["T2_short"])))
                frac = min(a, b) / (a + b) if a + b > 0 else 0.0
                collinear = frac < self.min_fraction or tl / ts < self.min_ratio or min(ts, tl) <= 0
            except (SingularFitError, NumericalError):
                collinear = True
        if collinear:
            k = max(1, t.size // 2)
            slope = np.polyfit(t[:k], np.log(np.clip(y[:k], 1e-300, None)), 1)[0]
            tau0 = -1 / slope if slope < 0 else t.max()
            mono = nlls_fit(_monoexp, t, y, [y[0] * math.exp(t[0] / tau0), tau0], sigma=s,
                            param_names=["A", "T2_short"], max_iter=self.max_iter)
            a, ts = map(float, mono.values)
            ci = mono.confidence_68
            res = FitResult(
                parameters={"A": a, "T2_short": ts, "B": 0.0, "T2_long": ts},
                covariance=mono.covariance,
                residual_norm=mono.residual_norm,
                confidence_68={"A": ci["A"], "T2_short": ci["T2_short"], "B": 0.0, "T2_long": ci["T2_short"]},
                n_iter=mono.n_iter,
                flags=["collinear"],
            )
        res.units = {"A": "", "B": "", "T2_short": "t", "T2_long": "t"}
        self.result_ = res
        self.collinear_ = bool(collinear)
        self.A_, self.T2_short_, self.B_, self.T2_long_ = res.values
        return self

    def predict(self, t):
        check_is_fitted(self, "result_")
        return _biexp(as_1d(t, "t"), np.array([self.A_, self.T2_short_, self.B_, self.T2_long_]))


def fit_biexponential(t, amplitude, sigma=None) -> FitResult:
    """Functional form of :class:`BiExponentialDecay`; returns its ``FitResult``."""
    return BiExponentialDecay().fit(t, amplitude, sigma).result_
