"""Spin and orbital g-factors of the excited 3T2g manifold.

The spin g-factor is reduced by spin-orbit admixture of the 3T1g manifold
(first order in the mixing fraction). The orbital factor is obtained by
projecting two-electron ``l = 2`` angular momentum onto the ``T2g``
triplet and flipping the sign for the hole picture of ``d8``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import CONSTANTS
from .exceptions import ValidationError
from .spin import spin_operators

__all__ = [
    "PerturbationInputs",
    "SpinGFactor",
    "excited_spin_gfactor",
    "t1u_gfactor",
    "inner_line_slope",
    "TwoElectronOrbitalBasis",
    "build_t2g_orbitals",
    "exchange_operator",
    "OrbitalMomentum",
    "orbital_angular_momentum_matrices",
    "orbital_gfactor",
]


@dataclass(frozen=True)
class PerturbationInputs:
    zeta: float  # GHz
    E_gap: float  # GHz
    g0: float = CONSTANTS.g0

    def __post_init__(self):
        if not self.E_gap > 0:
            raise ValidationError("E_gap must be positive")


@dataclass(frozen=True)
class SpinGFactor:
    gamma: float
    g_s_e: float


def excited_spin_gfactor(p: PerturbationInputs) -> SpinGFactor:
    """``gamma = -(sqrt(3)/2) zeta / E_gap`` and ``g_s_e = g0 (1 - 2 gamma)``."""
    gamma = -(math.sqrt(3) / 2) * p.zeta / p.E_gap
    return SpinGFactor(gamma, p.g0 * (1 - 2 * gamma))


def t1u_gfactor(g_L_tilde: float, g_s_e: float) -> float:
    """Effective g-factor of the ``T_1u`` triplet, ``(g_L_tilde + g_s_e) / 2``."""
    return 0.5 * (g_L_tilde + g_s_e)


def inner_line_slope(g_L_tilde: float, g_s_e: float) -> float:
    """Slope difference of the two inner 1220 nm lines in units of mu_B."""
    return g_L_tilde + g_s_e


_M = (2, 1, 0, -1, -2)


def _pair_index(m1: int, m2: int) -> int:
    return 5 * (2 - m1) + (2 - m2)


def _antisym(m1: int, m2: int) -> np.ndarray:
    v = np.zeros(25, dtype=complex)
    v[_pair_index(m1, m2)] += 1
    v[_pair_index(m2, m1)] -= 1
    return v / math.sqrt(2)


@dataclass(frozen=True)
class TwoElectronOrbitalBasis:
    states: np.ndarray  # 25 x 3, columns T2g,+1 / 0 / -1
    labels: tuple = ("T_2g,1", "T_2g,0", "T_2g,-1")


def build_t2g_orbitals() -> TwoElectronOrbitalBasis:
    """Antisymmetrised ``T2g`` two-electron states in ``|m1, m2>`` (``m = 2 .. -2``)."""
    c = math.sqrt(3) / math.sqrt(8)
    t_plus = c * (_antisym(1, 2) + _antisym(1, -2)) - 0.5 * _antisym(-1, 0)
    t_zero = (_antisym(2, 0) - _antisym(-2, 0)) / math.sqrt(2)
    t_minus = -(c * (_antisym(-1, -2) + _antisym(-1, 2)) - 0.5 * _antisym(1, 0))
    states = np.column_stack([t_plus, t_zero, t_minus])
    states /= np.linalg.norm(states, axis=0)
    return TwoElectronOrbitalBasis(states)


def exchange_operator() -> np.ndarray:
    """Permutation ``P12 |m1, m2> = |m2, m1>`` on the 25-dimensional space."""
    p = np.zeros((25, 25))
    for m1 in _M:
        for m2 in _M:
            p[_pair_index(m2, m1), _pair_index(m1, m2)] = 1
    return p


@dataclass(frozen=True)
class OrbitalMomentum:
    Lx: np.ndarray
    Ly: np.ndarray
    Lz: np.ndarray
    leakage: float  # largest norm of L|T> outside the triplet


def orbital_angular_momentum_matrices(basis: TwoElectronOrbitalBasis) -> OrbitalMomentum:
    """Matrix elements of ``L = l1 + l2`` within the triplet (electron picture)."""
    l2 = spin_operators(2)
    i5 = np.eye(5)
    V = basis.states
    proj = V @ V.conj().T
    mats, leak = [], 0.0
    for op in l2.vector():
        total = np.kron(op, i5) + np.kron(i5, op)
        mats.append(V.conj().T @ total @ V)
        leak = max(leak, float(np.linalg.norm((np.eye(25) - proj) @ total @ V, axis=0).max()))
    return OrbitalMomentum(*mats, leakage=leak)


def orbital_gfactor(m: OrbitalMomentum | None = None) -> float:
    """Orbital g-factor of the ``T2g`` hole, i.e. minus the electron ``<T_2g,1|L_z|T_2g,1>``."""
    m = orbital_angular_momentum_matrices(build_t2g_orbitals()) if m is None else m
    return -float(np.real(m.Lz[0, 0]))
