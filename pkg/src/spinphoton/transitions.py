"""Magnetic-dipole selection rules and synthetic polarised emission spectra.

The dipole operator for polarisation ``k`` maps the ground ``A2g`` orbital
to the excited orbital ``|T2g, k>`` and leaves the spin untouched, so the
relative rate from an excited state ``|e>`` to ground ``|m_s>`` is
``|<e| D_k |m_s>|^2`` with ``D_k = |k>_l <A2g| (x) 1_s``.

Note that the orbital index of the polarisation is not a ``Delta m_J`` rule:
``T_1u,0`` is a superposition of ``J_z = +2`` and ``-2`` and still emits
``sigma+`` and ``sigma-`` light. Use the tables, not angular-momentum
shortcuts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import CONSTANTS
from .exceptions import ConsistencyError, ValidationError
from .levels import (
    WEAK_STATES,
    ExcitedStateParams,
    GroundStateParams,
    LevelSet,
    basis_index,
    derive_djt,
    excited_hamiltonian,
    excited_zeeman_operator,
    ground_hamiltonian,
)
from .spin import eig_hermitian

__all__ = [
    "POLARIZATIONS",
    "GROUND_M_S",
    "DipoleOperator",
    "dipole_operators",
    "TransitionRow",
    "TransitionTable",
    "transition_table",
    "EmissionLine",
    "emission_lines",
    "SpectrumTrace",
    "lineshape",
    "synthesize_spectrum",
    "QuadraticShift",
    "quadratic_shift_beta",
    "EMISSION_GROUPS",
]

POLARIZATIONS = ("sigma_plus", "pi", "sigma_minus")
# orbital projection of the excited T2g state reached by each polarisation
_POL_TO_ML = {"sigma_plus": -1, "pi": 0, "sigma_minus": 1}
GROUND_M_S = (1, 0, -1)

# zero-field cluster sizes of the weak regime, lowest first
EMISSION_GROUPS = {"E_u": slice(0, 2), "T_1u": slice(2, 5), "T_2u": slice(5, 8), "A_2u": slice(8, 9)}


def _ground_index(m_s: int) -> int:
    return 1 - m_s


@dataclass(frozen=True)
class DipoleOperator:
    polarization: str
    matrix: np.ndarray  # 9 x 3, excited product basis <- ground spin basis


def dipole_operators() -> dict[str, DipoleOperator]:
    """The three dipole operators with unit proportionality constant."""
    ops = {}
    for pol, ml in _POL_TO_ML.items():
        d = np.zeros((9, 3), dtype=complex)
        for ms in GROUND_M_S:
            d[basis_index(ml, ms), _ground_index(ms)] = 1.0
        ops[pol] = DipoleOperator(pol, d)
    return ops


_DIPOLES = dipole_operators()


def _probabilities(state: np.ndarray) -> np.ndarray:
    """3x3 array ``P[ground index, polarisation index]``."""
    out = np.empty((3, 3))
    for j, pol in enumerate(POLARIZATIONS):
        amp = state.conj() @ _DIPOLES[pol].matrix
        out[:, j] = np.abs(amp) ** 2
    return out


@dataclass(frozen=True)
class TransitionRow:
    excited_label: str
    excited_index: int
    ground_m_s: int
    polarization: str
    relative_probability: float
    zeeman_slope: float  # transition shift in units of mu_B * B


@dataclass(frozen=True)
class TransitionTable:
    rows: tuple
    regime: str

    def probability(self, excited: str, m_s: int, polarization: str) -> float:
        for r in self.rows:
            if r.excited_label == excited and r.ground_m_s == m_s and r.polarization == polarization:
                return r.relative_probability
        raise KeyError((excited, m_s, polarization))

    def slope(self, excited: str, m_s: int) -> float:
        for r in self.rows:
            if r.excited_label == excited and r.ground_m_s == m_s:
                return r.zeeman_slope
        raise KeyError((excited, m_s))

    def excited_labels(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.excited_label not in seen:
                seen.append(r.excited_label)
        return seen

    def probability_block(self, excited: str) -> np.ndarray:
        """``[m_s = -1, 0, +1] x [sigma+, pi, sigma-]`` block."""
        return np.array(
            [[self.probability(excited, ms, pol) for pol in POLARIZATIONS] for ms in (-1, 0, 1)]
        )

    def summed_probability(self, m_s: int, polarization: str, excited: list[str] | None = None) -> float:
        return sum(
            r.relative_probability
            for r in self.rows
            if r.ground_m_s == m_s
            and r.polarization == polarization
            and (excited is None or r.excited_label in excited)
        )


def transition_table(
    levels: LevelSet,
    ground: GroundStateParams | None = None,
    params: ExcitedStateParams | None = None,
) -> TransitionTable:
    """Relative probabilities and first-order Zeeman slopes (field along z).

    Slopes are ``<e|dH_exc/dB|e> - dE_ground/dB`` divided by ``mu_B``, i.e.
    dimensionless g-combinations.
    """
    ground = GroundStateParams() if ground is None else ground
    params = levels.params if params is None else params
    if params is None:
        raise ValidationError("transition_table needs ExcitedStateParams (none attached to levels)")
    djt = derive_djt(params)
    mub = CONSTANTS.mu_B_over_h
    zee = excited_zeeman_operator(params, (0, 0, 1), djt) / mub
    g_unit = GroundStateParams(ground.g_s_g, (0, 0, 1.0), ground.q * 0, ground.delta_gS)
    g_slope = np.real(np.diag(ground_hamiltonian(g_unit))) / mub

    rows = []
    states = levels.representative_states()
    for idx, (name, psi) in enumerate(states.items()):
        probs = _probabilities(psi)
        e_slope = float(np.real(psi.conj() @ zee @ psi))
        for ms in GROUND_M_S:
            gi = _ground_index(ms)
            for j, pol in enumerate(POLARIZATIONS):
                rows.append(
                    TransitionRow(name, idx, ms, pol, float(probs[gi, j]), e_slope - float(g_slope[gi]))
                )
    return TransitionTable(tuple(rows), levels.regime)


@dataclass(frozen=True)
class EmissionLine:
    frequency: float  # GHz, relative to the zero-field cluster energy of the group
    polarization: str
    ground_m_s: int
    probability: float
    excited_energy: float
    weight: float  # thermal population of the emitting level


def emission_lines(
    params: ExcitedStateParams,
    B: float,
    group: str = "E_u",
    temperature: float = 1.7,
    ground: GroundStateParams | None = None,
) -> list[EmissionLine]:
    """Emission lines of one zero-field group at field ``B`` along z.

    Eigenvectors are recomputed at the field, so field-induced mixing enters
    the probabilities. Thermal weights are Boltzmann factors normalised over
    the whole excited manifold.
    """
    if group not in EMISSION_GROUPS:
        raise ValidationError(f"unknown emission group {group!r}")
    if not temperature > 0:
        raise ValidationError("temperature must be positive")
    ground = GroundStateParams() if ground is None else ground
    djt = derive_djt(params)
    e0, _ = eig_hermitian(excited_hamiltonian(params, djt=djt))
    ref = float(np.mean(e0[EMISSION_GROUPS[group]]))
    w, v = eig_hermitian(excited_hamiltonian(params, (0.0, 0.0, float(B)), djt))
    gp = GroundStateParams(ground.g_s_g, (0.0, 0.0, float(B)), ground.q, ground.delta_gS)
    eg, vg = eig_hermitian(ground_hamiltonian(gp))
    beta = 1.0 / (CONSTANTS.k_B_over_h * temperature)
    boltz = np.exp(-(w - w[0]) * beta)
    boltz /= boltz.sum()

    lines = []
    for k in range(9)[EMISSION_GROUPS[group]]:
        for gi in range(3):
            gvec = vg[:, gi]
            ms = GROUND_M_S[int(np.argmax(np.abs(gvec)))]
            for pol in POLARIZATIONS:
                amp = v[:, k].conj() @ _DIPOLES[pol].matrix @ gvec
                lines.append(
                    EmissionLine(
                        float(w[k] - eg[gi] - ref), pol, ms, float(abs(amp) ** 2), float(w[k]), float(boltz[k])
                    )
                )
    return lines


def lineshape(kind: str, x: np.ndarray, fwhm: float) -> np.ndarray:
    """Unit-area lineshape evaluated at offsets ``x`` (same unit as ``fwhm``)."""
    if not fwhm > 0:
        raise ValidationError("width must be positive")
    x = np.asarray(x, dtype=float)
    if kind == "sech":
        w = fwhm / (2 * math.acosh(2.0))
        return 1.0 / (math.pi * w * np.cosh(np.clip(x / w, -700, 700)))
    if kind == "gaussian":
        s = fwhm / (2 * math.sqrt(2 * math.log(2)))
        return np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi))
    if kind == "lorentzian":
        g = fwhm / 2
        return g / (math.pi * (x**2 + g**2))
    raise ValidationError(f"unknown lineshape {kind!r}")


@dataclass(frozen=True)
class SpectrumTrace:
    frequency_grid: np.ndarray
    intensity: dict = field(default_factory=dict)
    B: float = 0.0
    temperature: float = 1.0

    def __post_init__(self):
        grid = np.asarray(self.frequency_grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValidationError("frequency grid must be 1-D and strictly increasing")
        object.__setattr__(self, "frequency_grid", grid)


def synthesize_spectrum(
    params: ExcitedStateParams,
    B: float,
    grid,
    group: str = "E_u",
    temperature: float = 1.7,
    lineshape_kind: str = "sech",
    width: float = 100.0,
    ground: GroundStateParams | None = None,
) -> SpectrumTrace:
    """Polarisation-resolved emission spectrum of one group on ``grid`` (GHz).

    Each line contributes ``probability * thermal weight * kernel``; degenerate
    contributions add in intensity.
    """
    grid = np.asarray(grid, dtype=float)
    lines = emission_lines(params, B, group, temperature, ground)
    out = {pol: np.zeros_like(grid) for pol in POLARIZATIONS}
    for ln in lines:
        amp = ln.probability * ln.weight
        if amp > 0:
            out[ln.polarization] += amp * lineshape(lineshape_kind, grid - ln.frequency, width)
    return SpectrumTrace(grid, out, float(B), float(temperature))


@dataclass(frozen=True)
class QuadraticShift:
    beta_formula: float  # MHz/T^2
    beta_curvature: float  # MHz/T^2
    relative_difference: float


def quadratic_shift_beta(
    params: ExcitedStateParams,
    delta21: float,
    fields=(0.0, 4.5, 9.0),
    tolerance: float = 0.05,
) -> QuadraticShift:
    """Second-order Zeeman coefficient of ``E_u,eps`` (MHz/T^2).

    The closed form ``-(g_s_e + g_L_tilde)^2 mu_B^2 / Delta21`` is checked
    against a least-squares ``beta B^2`` fit of the diagonalised ``E_u,eps``
    energy over ``fields``.

    Raises
    ------
    ConsistencyError
        If the two disagree by more than ``tolerance`` (relative).
    """
    if not delta21 > 0:
        raise ValidationError("delta21 must be positive")
    djt = derive_djt(params)
    gsum = params.g_s_e + djt.g_L_tilde
    mub = CONSTANTS.mu_B_over_h
    beta_formula = -(gsum**2) * mub**2 / delta21 * 1e3

    eps = WEAK_STATES["E_u,eps"]
    b = np.asarray(fields, dtype=float)
    shifts = []
    for bz in b:
        w, v = eig_hermitian(excited_hamiltonian(params, (0.0, 0.0, bz), djt))
        k = int(np.argmax(np.abs(v.conj().T @ eps)))
        shifts.append(w[k])
    shifts = (np.asarray(shifts) - shifts[0]) * 1e3
    b2 = b**2
    denom = float(b2 @ b2)
    if denom == 0:
        raise ValidationError("need at least one non-zero field")
    beta_curv = float(b2 @ shifts) / denom

    scale = max(abs(beta_formula), abs(beta_curv))
    rel = 0.0 if scale == 0 else abs(beta_formula - beta_curv) / scale
    if rel > tolerance:
        raise ConsistencyError(
            f"beta formula {beta_formula:.4g} and curvature {beta_curv:.4g} MHz/T^2 differ by {rel:.1%}"
        )
    return QuadraticShift(beta_formula, beta_curv, rel)
