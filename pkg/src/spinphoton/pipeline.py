"""Zeeman magneto-spectroscopy pipeline.

Synthesises polarised spectra of the 1250 nm (``E_u``) and 1220 nm
(``T_1u``) groups over a field grid, extracts line centres with double-sech
fits and regresses them into g-factors and the quadratic shift.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constants import CONSTANTS
from .exceptions import ValidationError
from .fitting import fit_common_origin_lines, fit_double_sech, fit_quadratic_deviation, g_factor_from_slopes
from .levels import ExcitedStateParams, GroundStateParams, derive_djt
from .transitions import synthesize_spectrum

__all__ = ["TraceRecord", "LineCenters", "ZeemanSummary", "synthesize_traces", "extract_centers", "analyze_traces", "run_zeeman_pipeline"]

GROUPS = ("E_u", "T_1u")
FIT_POLARIZATIONS = ("sigma_plus", "sigma_minus")


@dataclass(frozen=True)
class TraceRecord:
    B: float
    group: str
    polarization: str
    frequency: np.ndarray
    intensity: np.ndarray


@dataclass(frozen=True)
class LineCenters:
    B: float
    group: str
    polarization: str
    low: float
    high: float
    degenerate: bool


@dataclass
class ZeemanSummary:
    g_s_g: float
    g_s_g_ci: float
    alpha: float
    alpha_ci: float
    g_outer_1220: float
    beta_meas: float
    beta_meas_ci: float
    beta_theory: float
    slopes: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def synthesize_traces(
    params: ExcitedStateParams,
    fields,
    ground: GroundStateParams | None = None,
    temperatures: dict | None = None,
    width: float = 100.0,
    lineshape: str = "sech",
    window: float = 600.0,
    grid_points: int = 1201,
    noise_fraction: float = 0.0,
    seed: int = 0,
    threads: int = 1,
) -> list[TraceRecord]:
    """Spectra for both groups and all fields; noise streams are seeded per field so results do not depend on ``threads``."""
    temps = {"E_u": 1.7, "T_1u": 60.0} if temperatures is None else temperatures
    grid = np.linspace(-window, window, grid_points)
    fields = [float(b) for b in fields]
    children = np.random.SeedSequence(seed).spawn(len(fields))

    def one(k):
        rng = np.random.default_rng(children[k])
        out = []
        for grp in GROUPS:
            tr = synthesize_spectrum(params, fields[k], grid, grp, temps[grp], lineshape, width, ground)
            for pol in ("sigma_plus", "pi", "sigma_minus"):
                y = tr.intensity[pol]
                if noise_fraction > 0:
                    y = y + noise_fraction * float(np.max(y)) * rng.standard_normal(y.size)
                out.append(TraceRecord(fields[k], grp, pol, grid, y))
        return out

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as ex:
        chunks = list(ex.map(one, range(len(fields))))
    return [r for c in chunks for r in c]


def extract_centers(traces: list[TraceRecord], threads: int = 1) -> list[LineCenters]:
    todo = [t for t in traces if t.polarization in FIT_POLARIZATIONS]

    def one(t):
        pk = fit_double_sech((t.frequency, t.intensity))
        return LineCenters(t.B, t.group, t.polarization, pk.centers[0], pk.centers[1], pk.degenerate)

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as ex:
        return list(ex.map(one, todo))


def _series(centers, group, pol, which):
    pts = [(c.B, getattr(c, which)) for c in centers if c.group == group and c.polarization == pol and not c.degenerate]
    pts.sort()
    return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])


def analyze_traces(
    centers: list[LineCenters], params: ExcitedStateParams, delta21: float | None = None, B_min: float = 3.5
) -> ZeemanSummary:
    """Common-origin regressions and the same-sign quadratic deviation.

    Line assignment (field along z):
    1250 nm sigma+ high/low are ``E_u,eps -> -1`` (+g) and ``E_u,theta -> +1`` (-g);
    sigma- high/low are ``E_u,theta -> -1`` (+g) and ``E_u,eps -> +1`` (-g).
    1220 nm sigma+ high/low are the outer ``T_1u,0 -> -1`` and inner ``T_1u,-1 -> 0``;
    sigma- high/low are the inner ``T_1u,1 -> 0`` and outer ``T_1u,0 -> +1``.
    """
    mub = CONSTANTS.mu_B_over_h
    warnings = []
    slopes, cis = {}, {}
    for grp in GROUPS:
        lines = {f"{pol}:{w}": _series(centers, grp, pol, w) for pol in FIT_POLARIZATIONS for w in ("low", "high")}
        short = [k for k, (b, _) in lines.items() if b.size < 3]
        if short:
            raise ValidationError(f"{grp}: fewer than 3 resolved points for {short}; extend the field grid")
        res = fit_common_origin_lines(lines)
        for k in lines:
            slopes[f"{grp}:{k}"] = res.slopes[k]
            cis[f"{grp}:{k}"] = res.slopes_ci[k]
    n_deg = sum(c.degenerate for c in centers)
    if n_deg:
        warnings.append(f"{n_deg} spectra had unresolved peaks and were excluded from the regressions")

    g = g_factor_from_slopes(slopes["E_u:sigma_plus:high"], slopes["E_u:sigma_minus:low"])
    g_ci = np.hypot(cis["E_u:sigma_plus:high"], cis["E_u:sigma_minus:low"]) / (2 * mub)
    alpha = (slopes["T_1u:sigma_minus:high"] - slopes["T_1u:sigma_plus:low"]) / mub
    alpha_ci = np.hypot(cis["T_1u:sigma_minus:high"], cis["T_1u:sigma_plus:low"]) / mub
    g_out = g_factor_from_slopes(slopes["T_1u:sigma_plus:high"], slopes["T_1u:sigma_minus:low"])

    bp, fp = _series(centers, "E_u", "sigma_plus", "high")
    bm, fm = _series(centers, "E_u", "sigma_minus", "high")
    common = np.intersect1d(bp, bm)
    df = np.array([fp[bp == b][0] - fm[bm == b][0] for b in common]) * 1e3  # MHz
    try:
        beta, beta_ci = fit_quadratic_deviation(common, df, B_min=B_min)
    except ValidationError as exc:
        warnings.append(str(exc))
        beta, beta_ci = float("nan"), float("nan")

    djt = derive_djt(params)
    if delta21 is None:
        from .levels import solve_levels

        delta21 = solve_levels(params).splittings()[0]
    beta_th = -((params.g_s_e + djt.g_L_tilde) ** 2) * mub**2 / delta21 * 1e3
    return ZeemanSummary(float(g), float(g_ci), float(alpha), float(alpha_ci), float(g_out), float(beta), float(beta_ci),
                         float(beta_th), slopes, warnings)


def run_zeeman_pipeline(params: ExcitedStateParams, fields, ground: GroundStateParams | None = None,
                        B_min: float = 3.5, threads: int = 1, **synth) -> tuple[list[TraceRecord], list[LineCenters], ZeemanSummary]:
    if len(fields) < 5:
        raise ValidationError("the field grid needs at least 5 points")
    traces = synthesize_traces(params, fields, ground, threads=threads, **synth)
    centers = extract_centers(traces, threads)
    return traces, centers, analyze_traces(centers, params, B_min=B_min)
