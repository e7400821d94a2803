"""Least-squares engine and the curve fits used in the spectroscopy analysis."""

from ._nlls import FitResult, nlls_fit
from .estimators import (
    BiExponentialDecay,
    CommonOriginLineRegressor,
    DoubleSechPeaks,
    PeakPair,
    QuadraticShiftRegressor,
    fit_biexponential,
    fit_common_origin_lines,
    fit_double_sech,
    fit_quadratic_deviation,
    g_factor_from_slopes,
)

__all__ = [
    "FitResult",
    "nlls_fit",
    "PeakPair",
    "DoubleSechPeaks",
    "CommonOriginLineRegressor",
    "QuadraticShiftRegressor",
    "BiExponentialDecay",
    "fit_double_sech",
    "fit_common_origin_lines",
    "fit_quadratic_deviation",
    "fit_biexponential",
    "g_factor_from_slopes",
]
