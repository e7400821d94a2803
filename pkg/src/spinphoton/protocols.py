"""Protocol calculators: ESR resonance, optical pumping, Raman memory and pulse timing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .constants import CONSTANTS
from .exceptions import ConservationError, NumericalError, ValidationError
from .transitions import POLARIZATIONS, TransitionTable

__all__ = [
    "esr_resonance_field",
    "COMPARTMENTS",
    "PumpingModel",
    "PumpingResult",
    "rate_matrix",
    "simulate_pumping",
    "raman_efficiency",
    "CooperativityEstimate",
    "estimate_cooperativity",
    "PulseEvent",
    "PulseSchedule",
    "build_rephasing_schedule",
]

# physical constants not needed elsewhere (SI)
_EPS0 = 8.8541878128e-12
_C_LIGHT = 299792458.0


def esr_resonance_field(frequency: float, g: float) -> float:
    """Resonance field in tesla for a microwave frequency in GHz: ``B = f / (g mu_B/h)``."""
    if not (frequency > 0 and g > 0):
        raise ValidationError("frequency and g must be positive")
    return frequency / (g * CONSTANTS.mu_B_over_h)


COMPARTMENTS = ("m_s=-1", "m_s=0", "m_s=+1", "T_1u", "E_u")
_GROUND_M = (-1, 0, 1)


@dataclass(frozen=True)
class PumpingModel:
    """Rate constants in s^-1 (``T1_spin`` in s).

    ``branching`` gives the E_u decay fractions into ``m_s = -1, 0, +1``;
    ``None`` derives them from the transition table.
    """

    pump_rate: float = 1e4
    pump_polarization: str = "sigma_minus"
    pump_target: str = "T_1u"
    Gamma_T1u_to_Eu: float = 1e9
    Gamma_Eu: float = 1 / 3.6e-3
    stim_rate: float = 0.0
    T1_spin: float = math.inf
    branching: tuple | None = None

    def __post_init__(self):
        if self.pump_polarization not in POLARIZATIONS:
            raise ValidationError(f"pump_polarization must be one of {POLARIZATIONS}")
        if self.pump_target not in ("T_1u", "E_u"):
            raise ValidationError("pump_target must be 'T_1u' or 'E_u'")
        for name in ("pump_rate", "Gamma_T1u_to_Eu", "Gamma_Eu", "stim_rate"):
            if not getattr(self, name) >= 0:
                raise ValidationError(f"{name} must be non-negative")
        if not self.T1_spin > 0:
            raise ValidationError("T1_spin must be positive")
        if self.branching is not None:
            b = np.asarray(self.branching, dtype=float)
            if b.shape != (3,) or np.any(b < 0) or abs(b.sum() - 1) > 1e-9:
                raise ValidationError("branching must be 3 non-negative numbers summing to 1")


def _table_branching(table: TransitionTable) -> np.ndarray:
    eu = [n for n in table.excited_labels() if n.startswith("E_u")]
    w = np.array([sum(table.summed_probability(m, pol, eu) for pol in POLARIZATIONS) for m in _GROUND_M])
    return w / w.sum()


def rate_matrix(m: PumpingModel, table: TransitionTable) -> np.ndarray:
    """Generator ``M`` of ``dp/dt = M p`` over :data:`COMPARTMENTS`; columns sum to zero."""
    M = np.zeros((5, 5))
    target = 3 if m.pump_target == "T_1u" else 4
    states = [n for n in table.excited_labels() if n.startswith(m.pump_target)]
    if not states:
        raise ValidationError(f"transition table has no {m.pump_target} states")
    for i, ms in enumerate(_GROUND_M):
        r = m.pump_rate * table.summed_probability(ms, m.pump_polarization, states)
        M[target, i] += r
        M[i, i] -= r
    M[4, 3] += m.Gamma_T1u_to_Eu
    M[3, 3] -= m.Gamma_T1u_to_Eu
    branching = _table_branching(table) if m.branching is None else np.asarray(m.branching, float)
    out = m.Gamma_Eu + m.stim_rate
    M[:3, 4] += out * branching
    M[4, 4] -= out
    if math.isfinite(m.T1_spin):
        k = 1.0 / m.T1_spin
        for i in range(3):
            for j in range(3):
                if i != j:
                    M[j, i] += k
                    M[i, i] -= k
    return M


@dataclass(frozen=True)
class PumpingResult:
    times: np.ndarray  # s
    populations: np.ndarray  # len(times) x 5
    compartments: tuple = COMPARTMENTS

    def final(self) -> dict:
        return dict(zip(self.compartments, map(float, self.populations[-1])))


def simulate_pumping(
    m: PumpingModel,
    table: TransitionTable,
    duration: float,
    initial=(1 / 3, 1 / 3, 1 / 3),
    n_times: int = 201,
    tolerance: float = 1e-9,
) -> PumpingResult:
    """Populations of the five compartments from ``t = 0`` to ``duration`` (s).

    The linear rate equations are propagated exactly with a matrix
    exponential at each output time.

    Raises
    ------
    ConservationError
        If the total population drifts by more than ``tolerance``.
    """
    p0 = np.asarray(initial, dtype=float)
    if p0.shape == (3,):
        p0 = np.concatenate([p0, [0.0, 0.0]])
    if p0.shape != (5,) or np.any(p0 < 0) or abs(p0.sum() - 1) > 1e-9:
        raise ValidationError("initial populations must be non-negative and sum to 1")
    if not duration > 0:
        raise ValidationError("duration must be positive")
    M = rate_matrix(m, table)
    times = np.linspace(0.0, duration, n_times)
    pops = np.array([expm(M * t) @ p0 for t in times])
    if not np.all(np.isfinite(pops)):
        raise NumericalError("propagation produced non-finite populations; reduce the output time step")
    drift = float(np.max(np.abs(pops.sum(axis=1) - 1)))
    if drift > tolerance:
        raise ConservationError(f"population drift {drift:.3e} exceeds {tolerance:.1e}; reduce the output time step")
    return PumpingResult(times, np.clip(pops, 0.0, None))


def raman_efficiency(C: float) -> float:
    """Storage-plus-retrieval efficiency ``C^2 / (1 + C)^2``."""
    if not C >= 0:
        raise ValidationError("C must be non-negative")
    if math.isinf(C):
        return 1.0
    return C * C / ((1 + C) * (1 + C))


@dataclass(frozen=True)
class CooperativityEstimate:
    C: float
    optical_depth_rate: float  # d * gamma, rad/s
    control_energy_integral: float  # int Omega^2 dt, rad^2/s
    formula: str
    warnings: tuple = field(default_factory=tuple)


COOPERATIVITY_FORMULA = (
    "C = d*gamma*W/Delta^2 with d*gamma = n*L*omega*p^2/(eps0*hbar*c), "
    "W = int Omega^2 dt = 2*p^2*E_pulse/(A*eps0*c*hbar^2), Delta = 2*pi*detuning (all angular units)"
)


def estimate_cooperativity(
    dipole: float,
    density: float,
    detuning: float,
    length: float,
    cross_section: float,
    pulse_energy: float,
    pulse_duration: float,
    wavelength: float = 1220e-9,
    linewidth: float = 100.0,
) -> CooperativityEstimate:
    """Far-detuned Raman memory cooperativity.

    The product of the resonant optical depth and the homogeneous amplitude
    decay rate does not depend on the linewidth, so only the detuning enters
    as a frequency scale. ``pulse_duration`` (s) and ``linewidth`` (GHz)
    are used for regime checks only.

    Parameters are SI except ``detuning`` and ``linewidth`` in GHz.
    """
    vals = dict(dipole=dipole, density=density, detuning=detuning, length=length, cross_section=cross_section,
                pulse_energy=pulse_energy, pulse_duration=pulse_duration, wavelength=wavelength)
    for k, v in vals.items():
        if not v > 0 and not (k == "density" and v == 0):
            raise ValidationError(f"{k} must be positive")
    hbar = CONSTANTS.h / (2 * math.pi)
    omega = 2 * math.pi * _C_LIGHT / wavelength
    d_gamma = density * length * omega * dipole**2 / (_EPS0 * hbar * _C_LIGHT)
    W = 2 * dipole**2 * pulse_energy / (cross_section * _EPS0 * _C_LIGHT * hbar**2)
    delta = 2 * math.pi * detuning * 1e9
    warnings = []
    if detuning < linewidth:
        warnings.append(f"detuning {detuning} GHz is below the ensemble linewidth {linewidth} GHz (not far-detuned)")
    if 1 / pulse_duration > detuning * 1e9:
        warnings.append("pulse bandwidth exceeds the detuning (non-adiabatic regime)")
    return CooperativityEstimate(d_gamma * W / delta**2, d_gamma, W, COOPERATIVITY_FORMULA, tuple(warnings))


@dataclass(frozen=True)
class PulseEvent:
    time: float  # us
    kind: str  # store | rephase | retrieve | control
    polarization: str | None = None


@dataclass(frozen=True)
class PulseSchedule:
    events: tuple

    def __post_init__(self):
        t = [e.time for e in self.events]
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValidationError("event times must be strictly increasing")

    @property
    def times(self) -> list[float]:
        return [e.time for e in self.events]

    def is_finalized(self) -> bool:
        kinds = [e.kind for e in self.events]
        return kinds.count("store") == 1 and kinds.count("retrieve") == 1

    def is_time_symmetric(self, atol: float = 1e-12) -> bool:
        t = np.array(self.times)
        return bool(np.allclose(np.sort(t[-1] + t[0] - t), t, atol=atol))

    def net_frame(self) -> np.ndarray:
        """Product of the population swaps applied by the re-phasing pulses."""
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        out = np.eye(2)
        for e in self.events:
            if e.kind == "rephase":
                out = swap @ out
        return out


def build_rephasing_schedule(
    tau: float, cycles: int = 1, control_polarization: str | None = None, rephase_polarization: str | None = None
) -> PulseSchedule:
    """Store at 0, re-phase at ``4k tau + tau`` and ``4k tau + 3 tau``, retrieve at ``4 tau cycles``."""
    if not tau > 0:
        raise ValidationError("tau must be positive")
    if not (isinstance(cycles, (int, np.integer)) and cycles >= 1):
        raise ValidationError("cycles must be a positive integer")
    tau = float(tau)
    ev = [PulseEvent(0.0, "store", control_polarization)]
    for k in range(cycles):
        ev.append(PulseEvent(4 * k * tau + tau, "rephase", rephase_polarization))
        ev.append(PulseEvent(4 * k * tau + 3 * tau, "rephase", rephase_polarization))
    ev.append(PulseEvent(4 * tau * cycles, "retrieve", control_polarization))
    return PulseSchedule(tuple(ev))
