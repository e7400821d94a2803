"""Run configuration: a sectioned ``key = value`` text format with a strict typed schema.

Grammar (a subset of INI)::

    # comment
    [section]
    key = value          ; floats, ints, strings, or comma-separated float lists

Units are part of the key names. Unknown sections or keys are rejected.
The configuration hash is the SHA-256 of a canonical JSON rendering of the
typed values, so formatting, key order and ``1`` versus ``1.0`` do not
change it.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .exceptions import ValidationError

__all__ = ["SCHEMA", "COMMAND_SECTIONS", "DEFAULT_CONFIG_TEXT", "RunConfig", "parse_config", "load_config"]

REQUIRED = object()


def _float(v: str) -> float:
    x = float(v)
    if math.isnan(x):
        raise ValueError("NaN is not allowed")
    return x


def _floats(v: str) -> list[float]:
    items = [s.strip() for s in v.split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return [_float(s) for s in items]


def _int(v: str) -> int:
    x = float(v)
    if x != int(x):
        raise ValueError(f"{v!r} is not an integer")
    return int(x)


def _str(v: str) -> str:
    return v.strip()


_TABLE3 = {
    "g_s_g": (_float, REQUIRED),
    "E_ge_GHz": (_float, REQUIRED),
    "delta32_GHz": (_float, REQUIRED),
    "delta43_GHz": (_float, REQUIRED),
    "delta21_GHz": (_float, REQUIRED),
    "hbar_omega_ph_GHz": (_float, REQUIRED),
    "g_L": (_float, -0.5),
    "g_s_e": (_float, 1.84),
}

SCHEMA: dict[str, dict] = {
    "ground": {"g_s_g": (_float, 2.242), "field_tesla": (_float, 0.141)},
    "table3": _TABLE3,
    "excited": {
        "zeta_GHz": (_float, REQUIRED),
        "mu_GHz": (_float, REQUIRED),
        "rho_GHz": (_float, REQUIRED),
        "E_JT_GHz": (_float, REQUIRED),
        "hbar_omega_ph_GHz": (_float, REQUIRED),
        "g_L": (_float, -0.5),
        "g_s_e": (_float, 1.84),
    },
    "spectra": {
        "field_min_tesla": (_float, 0.0),
        "field_max_tesla": (_float, 9.0),
        "field_points": (_int, 19),
        "linewidth_GHz": (_float, 100.0),
        "lineshape": (_str, "sech"),
        "temperature_1250_K": (_float, 1.7),
        "temperature_1220_K": (_float, 60.0),
        "window_GHz": (_float, 600.0),
        "grid_points": (_int, 1201),
        "B_min_tesla": (_float, 3.5),
        "noise_fraction": (_float, 0.0),
    },
    "eseem": {
        "omega_I_MHz": (_float, -0.385),
        "A_zz_MHz": (_float, None),
        "A_zx_MHz": (_float, None),
        "nuclear_spin": (_float, 2.5),
        "lattice_constant_nm": (_float, 0.42),
        "g_n": (_float, -0.34),
        "p25": (_float, 0.1),
        "n_nn": (_int, 8),
        "pulse_bandwidth_MHz": (_float, 2.0),
        "cavity_width_MHz": (_float, 1.0),
        "trace_max_us": (_float, 150.0),
        "trace_points": (_int, 1500),
    },
    "echo": {
        "A": (_float, 0.917),
        "B": (_float, 0.0825),
        "T2_short_us": (_float, 4.50),
        "T2_long_us": (_float, 109.0),
        "T2_star_nuc_us": (_float, 52.0),
        "P25": (_float, 0.81),
        "data_csv": (_str, None),
    },
    "spectral_diffusion": {
        "sigma_MHz": (_float, 170.0),
        "eps_B_MHz": (_float, 4386.0),
        "T2_LT_us": (_float, 85.0),
        "T2_SD_sat_us": (_float, 2.65),
        "temperatures_K": (_floats, [0.009, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 4.0]),
        "data_csv": (_str, None),
    },
    "pumping": {
        "pump_rate_per_s": (_float, 1e4),
        "pump_polarization": (_str, "sigma_minus"),
        "pump_target": (_str, "T_1u"),
        "Gamma_T1u_to_Eu_per_s": (_float, 1e9),
        "Gamma_Eu_per_s": (_float, 1 / 3.6e-3),
        "stim_rate_per_s": (_float, 1e6),
        "T1_spin_s": (_float, 1e9),
        "duration_s": (_float, 0.05),
        "points": (_int, 201),
    },
    "memory": {
        "cooperativities": (_floats, [0.0, 1.0, 2.0, 10.0]),
        "dipole_Cm": (_float, 3.4e-32),
        "density_per_m3": (_float, 2.4e24),
        "detuning_GHz": (_float, 200.0),
        "length_m": (_float, 5e-3),
        "cross_section_m2": (_float, 25e-12),
        "pulse_energy_J": (_float, 1e-6),
        "pulse_duration_s": (_float, 1e-9),
        "wavelength_m": (_float, 1.22e-6),
        "linewidth_GHz": (_float, 100.0),
        "tau_us": (_float, 1.0),
        "cycles": (_int, 1),
    },
    "output": {"directory": (_str, "out")},
}

# sections each command reads; a tuple means "one of"
COMMAND_SECTIONS = {
    "derive-params": ["table3"],
    "spectra": [("excited", "table3"), "spectra"],
    "coherence": ["eseem", "echo", "spectral_diffusion"],
    "protocols": ["pumping", "memory"],
    "reproduce-paper": [],
}

DEFAULT_CONFIG_TEXT = """\
[ground]
g_s_g = 2.242
field_tesla = 0.141

[table3]
g_s_g = 2.242
E_ge_GHz = 258000
delta32_GHz = 7260
delta43_GHz = 12600
delta21_GHz = 5280
hbar_omega_ph_GHz = 6150
g_L = -0.5
g_s_e = 1.84

[spectra]
[eseem]
[echo]
[spectral_diffusion]
[pumping]
[memory]
[output]
"""


@dataclass(frozen=True)
class RunConfig:
    sections: dict
    source: str = "<default>"

    def has(self, section: str) -> bool:
        return section in self.sections

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    def canonical(self) -> str:
        return json.dumps(self.sections, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def require(self, command: str) -> None:
        """Raise a :class:`ValidationError` naming the keys of any missing section."""
        for need in COMMAND_SECTIONS[command]:
            options = need if isinstance(need, tuple) else (need,)
            if not any(o in self.sections for o in options):
                listing = "; ".join(
                    f"[{o}] " + ", ".join(k + ("*" if d is REQUIRED else "") for k, (_, d) in SCHEMA[o].items())
                    for o in options
                )
                raise ValidationError(
                    f"command {command!r} needs section {' or '.join(options)} (* = required key): {listing}"
                )


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"), default_section="__none__")
    cp.optionxform = str  # keep key case
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ValidationError(f"{source}: {exc}") from exc
    sections = {}
    for name in cp.sections():
        if name not in SCHEMA:
            raise ValidationError(f"{source}: unknown section [{name}]")
        schema = SCHEMA[name]
        values = {}
        for key, raw in cp.items(name):
            if key not in schema:
                raise ValidationError(f"{source}: unknown key {key!r} in [{name}]")
            conv = schema[key][0]
            try:
                values[key] = conv(raw)
            except ValueError as exc:
                raise ValidationError(f"{source}: [{name}] {key} = {raw!r}: {exc}") from exc
        for key, (_, default) in schema.items():
            if key not in values:
                if default is REQUIRED:
                    raise ValidationError(f"{source}: [{name}] is missing required key {key!r}")
                values[key] = default
        sections[name] = values
    if "excited" in sections and "table3" in sections:
        raise ValidationError(f"{source}: give either [excited] or [table3], not both")
    _check_ranges(sections, source)
    return RunConfig(sections, source)


def _check_ranges(s: dict, source: str) -> None:
    def bad(msg):
        raise ValidationError(f"{source}: {msg}")

    if "spectra" in s:
        sp = s["spectra"]
        if sp["field_points"] < 1 or sp["field_max_tesla"] < sp["field_min_tesla"]:
            bad("[spectra] field grid must be non-empty and ascending")
        if sp["linewidth_GHz"] <= 0:
            bad("[spectra] linewidth_GHz must be positive")
        if sp["lineshape"] not in ("sech", "gaussian", "lorentzian"):
            bad("[spectra] lineshape must be sech, gaussian or lorentzian")
    if "spectral_diffusion" in s:
        t = s["spectral_diffusion"]["temperatures_K"]
        if any(b <= a for a, b in zip(t, t[1:])) or min(t) <= 0:
            bad("[spectral_diffusion] temperatures_K must be positive and strictly increasing")
    if "memory" in s:
        c = s["memory"]["cooperativities"]
        if any(x < 0 for x in c):
            bad("[memory] cooperativities must be non-negative")


def load_config(path: str | Path | None = None) -> RunConfig:
    if path is None:
        return parse_config(DEFAULT_CONFIG_TEXT, "<default>")
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"config file not found: {p}")
    return parse_config(p.read_text(), str(p))
