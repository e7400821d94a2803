"""Command-line front end: ``spinphoton <command> [--config FILE] [--out DIR]``.

Exit codes: 0 success, 1 failed reproduction checks, 2 invalid input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import run_all
from .coherence import (
    EchoModelParams,
    EchoTraceModel,
    EseemSystem,
    LatticeGeometry,
    SdParams,
    echo_trace,
    eseem_frequencies_amplitudes,
    fit_t2_curve,
    hyperfine_tensor,
    instrument_response,
    occupancy_p25,
    t2_vs_temperature,
    visibility_v1,
)
from .config import RunConfig, load_config
from .exceptions import ConvergenceError, NumericalError, SpinPhotonError, ValidationError
from .levels import ExcitedStateParams, GroundStateParams, Table3Inputs, derive_table3, solve_levels
from .pipeline import TraceRecord, analyze_traces, extract_centers, synthesize_traces
from .protocols import PumpingModel, build_rephasing_schedule, estimate_cooperativity, raman_efficiency, simulate_pumping
from .records import ResultRecord, read_csv, write_csv
from .transitions import transition_table

__all__ = ["main", "build_parser", "excited_from_config", "summary_from_spectra_csv"]

SPECTRA_HEADER = ["B_tesla", "frequency_GHz", "intensity", "polarization", "group"]
CENTERS_HEADER = ["B_tesla", "group", "polarization", "low_GHz", "high_GHz", "degenerate"]


def _table3_inputs(s: dict) -> Table3Inputs:
    return Table3Inputs(
        g_s_g=s["g_s_g"], E_ge=s["E_ge_GHz"], delta32=s["delta32_GHz"], delta43=s["delta43_GHz"],
        delta21=s["delta21_GHz"], hbar_omega_ph=s["hbar_omega_ph_GHz"], g_L=s["g_L"], g_s_e=s["g_s_e"],
    )


def excited_from_config(cfg: RunConfig) -> tuple[ExcitedStateParams, float | None]:
    """Excited-state parameters and, when known, the measured ``Delta21`` (GHz)."""
    if cfg.has("excited"):
        e = cfg["excited"]
        p = ExcitedStateParams(e["zeta_GHz"], e["mu_GHz"], e["rho_GHz"], e["E_JT_GHz"], e["hbar_omega_ph_GHz"],
                               e["g_L"], e["g_s_e"])
        return p, None
    if cfg.has("table3"):
        m = _table3_inputs(cfg["table3"])
        return derive_table3(m)[0], m.delta21
    raise ValidationError("need an [excited] or [table3] section")


def _ground(cfg: RunConfig) -> GroundStateParams:
    return GroundStateParams(g_s_g=cfg["ground"]["g_s_g"]) if cfg.has("ground") else GroundStateParams()


def cmd_derive_params(cfg: RunConfig, out: Path, args) -> int:
    cfg.require("derive-params")
    m = _table3_inputs(cfg["table3"])
    try:
        p, d = derive_table3(m)
    except ValidationError as exc:
        raise type(exc)(f"[table3] in {cfg.source}: {exc}") from exc
    rows = [
        ("zeta", p.zeta, "GHz"), ("E_JT", p.E_JT, "GHz"), ("kappa", d.kappa, "1"), ("K1", d.K1, "GHz"),
        ("K2", d.K2, "GHz"), ("mu", p.mu, "GHz"), ("rho", p.rho, "GHz"), ("g_L_tilde", d.g_L_tilde, "1"),
    ]
    rec = ResultRecord("derive-params", cfg.hash)
    for name, v, unit in rows:
        rec.add(name, float(v), unit)
    write_csv(out / "derive_params.csv", ["parameter", "value", "unit"], [(n, float(v), u) for n, v, u in rows])
    rec.write(out)
    for name, v, unit in rows:
        print(f"{name:10s} {v:14.6g} {unit}")
    return 0


def _spectra_rows(traces: list[TraceRecord]):
    for t in traces:
        for f, y in zip(t.frequency, t.intensity):
            yield (t.B, float(f), float(y), t.polarization, t.group)


def _summary_record(rec: ResultRecord, s) -> None:
    rec.add("g_s_g", s.g_s_g, "1")
    rec.add("g_s_g_ci68", s.g_s_g_ci, "1")
    rec.add("alpha", s.alpha, "mu_B")
    rec.add("alpha_ci68", s.alpha_ci, "mu_B")
    rec.add("g_outer_1220", s.g_outer_1220, "1")
    rec.add("beta_measured", s.beta_meas, "MHz/T^2")
    rec.add("beta_measured_ci68", s.beta_meas_ci, "MHz/T^2")
    rec.add("beta_theory", s.beta_theory, "MHz/T^2")
    rec.warnings.extend(s.warnings)


def cmd_spectra(cfg: RunConfig, out: Path, args) -> int:
    cfg.require("spectra")
    sp = cfg["spectra"]
    params, delta21 = excited_from_config(cfg)
    fields = np.linspace(sp["field_min_tesla"], sp["field_max_tesla"], sp["field_points"])
    if fields.size < 5:
        raise ValidationError("[spectra] field_points must be at least 5")
    traces = synthesize_traces(
        params, fields, _ground(cfg), temperatures={"E_u": sp["temperature_1250_K"], "T_1u": sp["temperature_1220_K"]},
        width=sp["linewidth_GHz"], lineshape=sp["lineshape"], window=sp["window_GHz"], grid_points=sp["grid_points"],
        noise_fraction=sp["noise_fraction"], seed=args.seed, threads=args.threads,
    )
    centers = extract_centers(traces, args.threads)
    summary = analyze_traces(centers, params, delta21, sp["B_min_tesla"])
    write_csv(out / "spectra.csv", SPECTRA_HEADER, _spectra_rows(traces))
    write_csv(out / "line_centers.csv", CENTERS_HEADER,
              [(c.B, c.group, c.polarization, c.low, c.high, int(c.degenerate)) for c in centers])
    rec = ResultRecord("spectra", cfg.hash)
    _summary_record(rec, summary)
    rec.write(out)
    print(f"g_s_g = {summary.g_s_g:.4f} +- {summary.g_s_g_ci:.4f}")
    print(f"alpha = {summary.alpha:.4f} +- {summary.alpha_ci:.4f} mu_B")
    print(f"beta  = {summary.beta_meas:.2f} +- {summary.beta_meas_ci:.2f} MHz/T^2 (theory {summary.beta_theory:.2f})")
    for w in summary.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def summary_from_spectra_csv(path, params: ExcitedStateParams, delta21: float | None = None, B_min: float = 3.5,
                             threads: int = 1):
    """Re-run line extraction and regressions on an emitted ``spectra.csv``."""
    header, rows = read_csv(Path(path))
    if header != SPECTRA_HEADER:
        raise ValidationError(f"{path}: expected columns {SPECTRA_HEADER}, got {header}")
    groups: dict = {}
    for b, f, y, pol, grp in rows:
        groups.setdefault((float(b), grp, pol), []).append((float(f), float(y)))
    traces = []
    for (b, grp, pol), pts in groups.items():
        arr = np.array(pts)
        traces.append(TraceRecord(b, grp, pol, arr[:, 0], arr[:, 1]))
    return analyze_traces(extract_centers(traces, threads), params, delta21, B_min)


def _eseem_system(cfg: RunConfig) -> tuple[EseemSystem, LatticeGeometry]:
    e = cfg["eseem"]
    geom = LatticeGeometry(a=e["lattice_constant_nm"], g_n=e["g_n"], p25=e["p25"])
    azz, azx = e["A_zz_MHz"], e["A_zx_MHz"]
    if azz is None or azx is None:
        g = cfg["ground"]["g_s_g"] if cfg.has("ground") else 2.242
        site = next(s for s in hyperfine_tensor(geom, g) if s.A_zx != 0)
        azz = site.A_zz if azz is None else azz
        azx = abs(site.A_zx) if azx is None else azx
    return EseemSystem(e["omega_I_MHz"], azz, azx, I=e["nuclear_spin"]), geom


def _read_xy(path) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    header, rows = read_csv(Path(path))
    if len(header) not in (2, 3):
        raise ValidationError(f"{path}: expected 2 or 3 columns (x, y[, sigma_y]), got {header}")
    try:
        a = np.array(rows, dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric entry ({exc})") from exc
    if a.ndim != 2 or a.shape[1] != len(header):
        raise ValidationError(f"{path}: ragged rows")
    return a[:, 0], a[:, 1], (a[:, 2] if a.shape[1] == 3 else None)


def _add_fit(rec: ResultRecord, prefix: str, fit, units: dict) -> None:
    for k, v in fit.parameters.items():
        rec.add(f"{prefix}.{k}", float(v), units.get(k, "1"))
        rec.add(f"{prefix}.{k}_ci68", float(fit.confidence_68[k]), units.get(k, "1"))
    rec.warnings.extend(f"{prefix}: {f}" for f in fit.flags)


def cmd_coherence(cfg: RunConfig, out: Path, args) -> int:
    cfg.require("coherence")
    system, geom = _eseem_system(cfg)
    e, ec, sd = cfg["eseem"], cfg["echo"], cfg["spectral_diffusion"]
    rec = ResultRecord("coherence", cfg.hash)

    spec = eseem_frequencies_amplitudes(system)
    inst = instrument_response(e["pulse_bandwidth_MHz"], e["cavity_width_MHz"])(spec.frequencies)
    write_csv(out / "eseem_spectrum.csv", ["frequency_MHz", "weight", "instrument_weight", "weighted_weight"],
              [(float(f), float(w), float(i), float(w * i)) for f, w, i in zip(spec.frequencies, spec.weights, inst)])
    rec.add("A_zz", system.A_zz, "MHz")
    rec.add("A_zx", system.A_zx, "MHz")
    rec.add("V1", visibility_v1(system), "1")
    rec.add("P25_occupancy", occupancy_p25(geom.p25, e["n_nn"]), "1")
    rec.add("eseem_mean", spec.mean, "1")
    if spec.frequencies.size:
        rec.add("eseem_dominant_frequency", float(spec.frequencies[np.argmax(spec.weights * inst)]), "MHz")

    env = EchoModelParams(ec["A"], ec["B"], ec["T2_short_us"], ec["T2_long_us"], ec["T2_star_nuc_us"], ec["P25"])
    t = np.linspace(0.0, e["trace_max_us"], e["trace_points"])
    write_csv(out / "echo_trace.csv", ["time_us", "echo"], zip(map(float, t), map(float, echo_trace(system, env, t))))
    if ec["data_csv"]:
        x, y, s = _read_xy(ec["data_csv"])
        fit = EchoTraceModel(system, env).fit(x, y, s).result_
        _add_fit(rec, "echo_fit", fit, {"T2_short": "us", "T2_long": "us", "T2_star_nuc": "us"})

    p = SdParams(sd["sigma_MHz"], sd["eps_B_MHz"], sd["T2_LT_us"], sd["T2_SD_sat_us"])
    T = np.array(sd["temperatures_K"])
    T2 = np.atleast_1d(t2_vs_temperature(p, T))
    write_csv(out / "t2_curve.csv", ["temperature_K", "T2_us"], zip(map(float, T), map(float, T2)))
    for temp, v in zip(T, T2):
        rec.add(f"T2({temp:g} K)", float(v), "us")
    if sd["data_csv"]:
        x, y, s = _read_xy(sd["data_csv"])
        fit = fit_t2_curve(x, y, s, p.sigma, p.eps_B)
        _add_fit(rec, "t2_fit", fit, {"T2_LT": "us", "T2_SD_sat": "us"})

    rec.write(out)
    for name, o in rec.outputs.items():
        print(f"{name:28s} {o['value']!s:>14} {o['unit']}")
    for w in rec.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_protocols(cfg: RunConfig, out: Path, args) -> int:
    cfg.require("protocols")
    pu, me = cfg["pumping"], cfg["memory"]
    rec = ResultRecord("protocols", cfg.hash)
    params = excited_from_config(cfg)[0] if (cfg.has("excited") or cfg.has("table3")) else \
        excited_from_config(load_config())[0]
    table = transition_table(solve_levels(params), _ground(cfg))
    model = PumpingModel(pu["pump_rate_per_s"], pu["pump_polarization"], pu["pump_target"], pu["Gamma_T1u_to_Eu_per_s"],
                         pu["Gamma_Eu_per_s"], pu["stim_rate_per_s"], pu["T1_spin_s"])
    res = simulate_pumping(model, table, pu["duration_s"], n_times=pu["points"], tolerance=1e-6)
    write_csv(out / "pumping.csv", ["time_s", *res.compartments],
              ([float(t), *map(float, row)] for t, row in zip(res.times, res.populations)))
    for k, v in res.final().items():
        rec.add(f"final[{k}]", v, "1")

    C = me["cooperativities"]
    write_csv(out / "memory_efficiency.csv", ["cooperativity", "efficiency"], [(float(c), raman_efficiency(c)) for c in C])
    est = estimate_cooperativity(me["dipole_Cm"], me["density_per_m3"], me["detuning_GHz"], me["length_m"],
                                 me["cross_section_m2"], me["pulse_energy_J"], me["pulse_duration_s"],
                                 me["wavelength_m"], me["linewidth_GHz"])
    rec.add("cooperativity", est.C, "1")
    rec.add("cooperativity_formula", est.formula, "")
    rec.add("efficiency_at_estimate", raman_efficiency(est.C), "1")
    rec.warnings.extend(est.warnings)

    sched = build_rephasing_schedule(me["tau_us"], me["cycles"])
    write_csv(out / "schedule.csv", ["time_us", "kind", "polarization"],
              [(e.time, e.kind, e.polarization or "") for e in sched.events])
    rec.add("schedule_times", sched.times, "us")
    rec.write(out)
    for name, o in rec.outputs.items():
        print(f"{name:24s} {o['value']!s:>14} {o['unit']}")
    return 0


def cmd_reproduce(cfg: RunConfig, out: Path, args) -> int:
    t0 = time.perf_counter()
    results = run_all(args.seed)
    rec = ResultRecord("reproduce-paper", cfg.hash)
    for r in results:
        print(r.report() if args.verbose else r.summary())
        rec.add(f"criterion_{r.number}", r.passed, "bool")
        for c in r.checks:
            rec.add(f"criterion_{r.number}.{c.name}", c.value, "see name")
    total = time.perf_counter() - t0
    ok11 = total < 120.0 and [r.number for r in results] == list(range(1, 11))
    print(f"criterion 11 {'PASS' if ok11 else 'FAIL'}  full run reports criteria 1-10 in {total:.2f} s (limit 120 s)")
    rec.add("criterion_11", ok11, "bool")
    rec.add("elapsed", total, "s")
    rec.write(out)
    passed = sum(r.passed for r in results) + ok11
    print(f"{passed} of 11 criteria passed")
    return 0 if passed == 11 else 1


COMMANDS = {
    "derive-params": (cmd_derive_params, "derive excited-state parameters from spectroscopic inputs"),
    "spectra": (cmd_spectra, "synthesize Zeeman spectra and regress g-factors and the quadratic shift"),
    "coherence": (cmd_coherence, "ESEEM spectrum, echo trace and T2(T) curve, with optional fits"),
    "protocols": (cmd_protocols, "optical pumping, memory efficiency and re-phasing schedule"),
    "reproduce-paper": (cmd_reproduce, "run every reference check and print a pass/fail table"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinphoton", description="Ni:MgO spin-photon interface model.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, default=None, help="configuration file (built-in defaults if omitted)")
        p.add_argument("--out", type=Path, default=None, help="output directory (default: [output] directory)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        if name == "reproduce-paper":
            p.add_argument("-v", "--verbose", action="store_true", help="print every individual comparison")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1 or args.seed < 0:
        print("error: --threads must be >= 1 and --seed >= 0", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        out = args.out or Path(cfg["output"]["directory"] if cfg.has("output") else "out")
        return COMMANDS[args.command][0](cfg, out, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}; last iterate {exc.last_iterate}", file=sys.stderr)
        return 3
    except (NumericalError, SpinPhotonError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
