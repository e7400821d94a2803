"""Ground and excited-state Hamiltonians of octahedral Ni2+ and their level schemes.

The excited ``3T2g`` manifold lives in a 9-dimensional product space
``|m_l>_orbital (x) |m_s>_spin`` with both factors treated as spin-1.
Basis vectors are ordered with ``m_l`` outer and ``m_s`` inner, each running
``+1, 0, -1``, so that ``index = 3 * (1 - m_l) + (1 - m_s)``.

All energies are in GHz and magnetic fields in tesla.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .constants import CONSTANTS
from .exceptions import InconsistentInputError, LevelClassificationError, ValidationError
from .spin import damped_ham_G, degenerate_clusters, eig_hermitian, kron, spin_operators

__all__ = [
    "GroundStateParams",
    "ExcitedStateParams",
    "DjtDerived",
    "Table3Inputs",
    "LevelCluster",
    "LevelSet",
    "SO_LINEAR_NORMALIZATION",
    "basis_index",
    "product_state",
    "WEAK_STATES",
    "STRONG_STATES",
    "ground_hamiltonian",
    "derive_djt",
    "excited_hamiltonian",
    "excited_zeeman_operator",
    "classify_levels",
    "solve_levels",
    "derive_table3",
]

# Weight of the Ham-reduced linear spin-orbit term.  With this normalisation
# the level energies obey Delta32 = -zeta * exp(-kappa/2) and the closed-form
# inversion in ``derive_table3`` is exact.
SO_LINEAR_NORMALIZATION = 0.5

STRONG_KAPPA = 50.0

_S1 = spin_operators(1)
_I3 = np.eye(3, dtype=complex)
L_OPS = tuple(kron(op, _I3) for op in _S1.vector())
S_OPS = tuple(kron(_I3, op) for op in _S1.vector())
L_DOT_S = sum(l @ s for l, s in zip(L_OPS, S_OPS))
CUBIC_A = sum(l @ l @ s @ s for l, s in zip(L_OPS, S_OPS))
J_OPS = tuple(l + s for l, s in zip(L_OPS, S_OPS))


def basis_index(m_l: int, m_s: int) -> int:
    if m_l not in (1, 0, -1) or m_s not in (1, 0, -1):
        raise ValidationError(f"projections must be in {{1, 0, -1}}, got ({m_l}, {m_s})")
    return 3 * (1 - m_l) + (1 - m_s)


def product_state(amplitudes: Mapping[tuple[int, int], complex]) -> np.ndarray:
    """Normalised 9-vector from ``{(m_l, m_s): amplitude}``."""
    v = np.zeros(9, dtype=complex)
    for (ml, ms), a in amplitudes.items():
        v[basis_index(ml, ms)] += a
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValidationError("state has zero norm")
    return v / norm


_r2, _r3, _r6 = math.sqrt(2), math.sqrt(3), math.sqrt(6)

# Symmetry-adapted states.  Every irrep occurs once in 3T2g x S=1, so these
# are exact eigenvectors at zero field for any coupling constants.
WEAK_STATES: dict[str, np.ndarray] = {
    "E_u,eps": product_state({(1, 1): 1 / _r2, (-1, -1): 1 / _r2}),
    "E_u,theta": product_state({(1, -1): 1 / _r6, (-1, 1): 1 / _r6, (0, 0): 2 / _r6}),
    "T_1u,1": product_state({(1, 0): -1 / _r2, (0, 1): -1 / _r2}),
    "T_1u,0": product_state({(1, 1): 1 / _r2, (-1, -1): -1 / _r2}),
    "T_1u,-1": product_state({(-1, 0): 1 / _r2, (0, -1): 1 / _r2}),
    "T_2u,1": product_state({(1, 0): 1 / _r2, (0, 1): -1 / _r2}),
    "T_2u,0": product_state({(1, -1): 1 / _r2, (-1, 1): -1 / _r2}),
    "T_2u,-1": product_state({(0, -1): 1 / _r2, (-1, 0): -1 / _r2}),
    "A_2u": product_state({(1, -1): 1 / _r3, (-1, 1): 1 / _r3, (0, 0): -1 / _r3}),
}

# Basis used when the orbital angular momentum is fully quenched: the
# sextuplet is then diagonal in plain product kets.
STRONG_STATES: dict[str, np.ndarray] = {
    "E_u,eps": WEAK_STATES["E_u,eps"],
    "E_u,theta": WEAK_STATES["E_u,theta"],
    "A_2u": WEAK_STATES["A_2u"],
    "|0>l|1>s": product_state({(0, 1): 1}),
    "T_1u,0": WEAK_STATES["T_1u,0"],
    "|0>l|-1>s": product_state({(0, -1): 1}),
    "|1>l|0>s": product_state({(1, 0): 1}),
    "T_2u,0": WEAK_STATES["T_2u,0"],
    "|-1>l|0>s": product_state({(-1, 0): 1}),
}

_IRREP_ORDER = ("E_u", "T_1u", "T_2u", "A_2u")
_IRREP_DIM = {"E_u": 2, "T_1u": 3, "T_2u": 3, "A_2u": 1}


def _irrep_of(name: str) -> str:
    return name.split(",")[0]


@dataclass(frozen=True)
class GroundStateParams:
    """Parameters of the ``3A2g`` ground-state spin Hamiltonian.

    ``q`` (GHz) and ``delta_gS`` are strain-induced tensors already contracted
    with the strain; both default to zero.
    """

    g_s_g: float = 2.242
    B: tuple = (0.0, 0.0, 0.0)
    q: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    delta_gS: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __post_init__(self):
        b = np.asarray(self.B, dtype=float)
        q = np.asarray(self.q, dtype=float)
        dg = np.asarray(self.delta_gS, dtype=float)
        if b.shape != (3,) or q.shape != (3, 3) or dg.shape != (3, 3):
            raise ValidationError("B must be a 3-vector and q, delta_gS 3x3 tensors")
        if not np.allclose(q, q.T, atol=1e-12):
            raise ValidationError("q must be symmetric")
        object.__setattr__(self, "B", tuple(b))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "delta_gS", dg)


@dataclass(frozen=True)
class ExcitedStateParams:
    """Spin-orbit and dynamic Jahn-Teller parameters of the ``3T2g`` manifold (GHz)."""

    zeta: float
    mu: float
    rho: float
    E_JT: float
    hbar_omega_ph: float
    g_L: float = -0.5
    g_s_e: float = 1.84

    def __post_init__(self):
        if not self.hbar_omega_ph > 0:
            raise ValidationError("hbar_omega_ph must be positive")
        if not self.E_JT >= 0:
            raise ValidationError("E_JT must be non-negative")
        for name in ("zeta", "mu", "rho", "E_JT", "hbar_omega_ph", "g_L", "g_s_e"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")

    @property
    def kappa(self) -> float:
        return 3.0 * self.E_JT / self.hbar_omega_ph


@dataclass(frozen=True)
class DjtDerived:
    kappa: float
    K1: float
    K2: float
    g_L_tilde: float

    @property
    def ham_factor(self) -> float:
        """Ham reduction factor ``exp(-kappa/2)``."""
        return math.exp(-self.kappa / 2)


@dataclass(frozen=True)
class Table3Inputs:
    """Spectroscopic inputs of the parameter chain (energies in GHz)."""

    g_s_g: float
    E_ge: float
    delta32: float
    delta43: float
    delta21: float
    hbar_omega_ph: float
    g_L: float = -0.5
    g_s_e: float = 1.84


def ground_hamiltonian(p: GroundStateParams) -> np.ndarray:
    """3x3 ground-state Hamiltonian in the ``m_s = +1, 0, -1`` basis (GHz)."""
    s = _S1.vector()
    b = np.asarray(p.B)
    mub = CONSTANTS.mu_B_over_h
    h = mub * p.g_s_g * sum(bi * si for bi, si in zip(b, s))
    h = h + sum(p.q[i, j] * s[i] @ s[j] for i in range(3) for j in range(3))
    h = h + mub * sum(b[i] * p.delta_gS[i, j] * s[j] for i in range(3) for j in range(3))
    return np.asarray(h, dtype=complex)


def derive_djt(p: ExcitedStateParams) -> DjtDerived:
    """Ham reduction quantities ``kappa``, ``K1``, ``K2`` and ``g_L_tilde``."""
    kappa = p.kappa
    pref = p.g_L**2 * p.zeta**2 / p.hbar_omega_ph
    g_half = damped_ham_G(kappa / 2, kappa)
    g_full = damped_ham_G(kappa, kappa)
    return DjtDerived(
        kappa=kappa,
        K1=pref * g_half,
        K2=pref * (g_full - g_half),
        g_L_tilde=p.g_L * math.exp(-kappa / 2),
    )


def level_coefficients(p: ExcitedStateParams, djt: DjtDerived | None = None) -> tuple[float, float, float]:
    """Coefficients ``(a, b, c)`` of ``a L.S + b (L.S)^2 + c A``."""
    djt = derive_djt(p) if djt is None else djt
    red = djt.ham_factor
    a = SO_LINEAR_NORMALIZATION * red * p.zeta
    b = p.mu * red + djt.K1
    c = p.rho + p.mu * (1 - red) + djt.K2
    return a, b, c


def excited_zeeman_operator(p: ExcitedStateParams, direction=(0.0, 0.0, 1.0), djt: DjtDerived | None = None) -> np.ndarray:
    """Field-linear part of the excited Hamiltonian per tesla along ``direction`` (GHz/T)."""
    djt = derive_djt(p) if djt is None else djt
    n = np.asarray(direction, dtype=float)
    mub = CONSTANTS.mu_B_over_h
    return mub * sum(
        ni * (djt.g_L_tilde * l + p.g_s_e * s) for ni, l, s in zip(n, L_OPS, S_OPS)
    )


def excited_hamiltonian(p: ExcitedStateParams, B=(0.0, 0.0, 0.0), djt: DjtDerived | None = None) -> np.ndarray:
    """9x9 Hamiltonian of the spin-orbit split ``3T2g`` manifold (GHz)."""
    djt = derive_djt(p) if djt is None else djt
    a, b, c = level_coefficients(p, djt)
    h = a * L_DOT_S + b * (L_DOT_S @ L_DOT_S) + c * CUBIC_A
    bvec = np.asarray(B, dtype=float)
    if bvec.shape != (3,):
        raise ValidationError("B must be a 3-vector")
    if np.any(bvec):
        h = h + excited_zeeman_operator(p, (1.0, 0.0, 0.0), djt) * bvec[0]
        h = h + excited_zeeman_operator(p, (0.0, 1.0, 0.0), djt) * bvec[1]
        h = h + excited_zeeman_operator(p, (0.0, 0.0, 1.0), djt) * bvec[2]
    return h


@dataclass(frozen=True)
class LevelCluster:
    label: str
    irreps: tuple
    indices: tuple
    energy: float

    @property
    def degeneracy(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class LevelSet:
    """Diagonalised level scheme.

    ``regime`` is ``"weak"`` when the four irreps are resolved, ``"strong"``
    for the triplet/sextuplet pattern of a quenched orbital momentum,
    ``"other"`` for any remaining grouping and ``"degenerate"`` when the
    spectrum collapses to a single level (no labels are assigned then).
    """

    energies: np.ndarray
    states: np.ndarray
    clusters: tuple
    regime: str
    params: ExcitedStateParams | None = None

    @property
    def degenerate(self) -> bool:
        return self.regime == "degenerate"

    @property
    def labels(self) -> list[tuple[str, int]]:
        return [(c.label, c.degeneracy) for c in self.clusters]

    @property
    def degeneracies(self) -> tuple[int, ...]:
        return tuple(c.degeneracy for c in self.clusters)

    def cluster(self, irrep: str) -> LevelCluster:
        for c in self.clusters:
            if irrep in c.irreps or irrep == c.label:
                return c
        raise KeyError(irrep)

    def splittings(self) -> tuple[float, ...]:
        """Successive cluster gaps (GHz), lowest first."""
        e = [c.energy for c in self.clusters]
        return tuple(float(e[i + 1] - e[i]) for i in range(len(e) - 1))

    def representative_states(self) -> dict[str, np.ndarray]:
        """Analytic eigenvectors appropriate to the regime, keyed by name."""
        if self.regime == "strong":
            return dict(STRONG_STATES)
        if self.regime == "weak":
            return dict(WEAK_STATES)
        raise LevelClassificationError(f"no analytic basis for regime {self.regime!r}")

    def energy_of(self, state_name: str) -> float:
        irrep = _irrep_of(state_name) if state_name in WEAK_STATES else None
        if irrep is not None:
            return self.cluster(irrep).energy
        vec = STRONG_STATES[state_name]
        return float(np.real(vec.conj() @ self.states @ np.diag(self.energies) @ self.states.conj().T @ vec))


def classify_levels(
    H: np.ndarray,
    params: ExcitedStateParams | None = None,
    rel_gap: float = 1e-6,
    min_overlap: float = 0.99,
) -> LevelSet:
    """Cluster the zero-field spectrum and label clusters by irrep.

    Each symmetry-adapted state of :data:`WEAK_STATES` must have squared
    projection of at least ``min_overlap`` onto exactly one cluster.

    Raises
    ------
    LevelClassificationError
        When a state straddles clusters or a cluster's dimension disagrees
        with the irreps assigned to it.
    """
    H = np.asarray(H)
    if H.shape != (9, 9):
        raise ValidationError(f"expected a 9x9 Hamiltonian, got {H.shape}")
    w, v = eig_hermitian(H)
    groups = degenerate_clusters(w, rel_gap)
    if len(groups) == 1:
        only = LevelCluster("degenerate", (), tuple(range(9)), float(np.mean(w)))
        return LevelSet(w, v, (only,), "degenerate", params)

    members: dict[int, list[str]] = {i: [] for i in range(len(groups))}
    for name, psi in WEAK_STATES.items():
        weights = [float(np.sum(np.abs(v[:, g].conj().T @ psi) ** 2)) for g in groups]
        best = int(np.argmax(weights))
        if weights[best] < min_overlap:
            raise LevelClassificationError(
                f"state {name} is spread over clusters (best overlap {weights[best]:.4f}); "
                "gaps may be below the degeneracy threshold"
            )
        members[best].append(name)

    clusters = []
    for i, g in enumerate(groups):
        irreps = tuple(r for r in _IRREP_ORDER if any(_irrep_of(n) == r for n in members[i]))
        for r in irreps:
            if sum(_irrep_of(n) == r for n in members[i]) != _IRREP_DIM[r]:
                raise LevelClassificationError(f"irrep {r} split across clusters")
        if sum(_IRREP_DIM[r] for r in irreps) != len(g):
            raise LevelClassificationError(f"cluster {i} dimension {len(g)} does not match {irreps}")
        clusters.append(LevelCluster("+".join(irreps), irreps, tuple(int(k) for k in g), float(np.mean(w[g]))))

    sets = sorted(c.irreps for c in clusters)
    if len(clusters) == 4:
        regime = "weak"
    elif sets == [("E_u", "A_2u"), ("T_1u", "T_2u")]:
        regime = "strong"
    else:
        regime = "other"
    return LevelSet(w, v, tuple(clusters), regime, params)


def solve_levels(p: ExcitedStateParams, strong: bool = False) -> LevelSet:
    """Zero-field level set; ``strong=True`` evaluates the quenched limit at ``kappa = 50``."""
    if strong:
        p = ExcitedStateParams(
            p.zeta, p.mu, p.rho, STRONG_KAPPA * p.hbar_omega_ph / 3.0, p.hbar_omega_ph, p.g_L, p.g_s_e
        )
    return classify_levels(excited_hamiltonian(p), params=p)


def derive_table3(m: Table3Inputs, g0: float = CONSTANTS.g0) -> tuple[ExcitedStateParams, DjtDerived]:
    """Excited-state parameters from spectroscopic inputs.

    Chain: ``zeta`` from the ground g-shift and the ``3T2g`` energy,
    ``E_JT`` from the quenching of ``Delta32``, then ``K1``, ``K2``, ``mu``
    and ``rho`` from the remaining splittings.

    Raises
    ------
    InconsistentInputError
        If ``-Delta32/zeta`` is not in ``(0, 1]`` (no real, non-negative ``E_JT``).
    """
    for name in ("E_ge", "delta32", "delta43", "delta21", "hbar_omega_ph", "g_s_g"):
        if not getattr(m, name) > 0:
            raise ValidationError(f"{name} must be positive")
    zeta = (g0 - m.g_s_g) * m.E_ge / (4 * g0)
    ratio = -m.delta32 / zeta
    if not ratio > 0:
        raise InconsistentInputError(
            f"-delta32/zeta = {ratio:.6g} must be positive (zeta = {zeta:.6g} GHz)"
        )
    E_JT = -(2.0 / 3.0) * m.hbar_omega_ph * math.log(ratio)
    if E_JT < -1e-9 * m.hbar_omega_ph:
        raise InconsistentInputError(
            f"delta32 exceeds |zeta| ({m.delta32} > {abs(zeta):.6g} GHz); E_JT would be negative"
        )
    E_JT = max(E_JT, 0.0)
    probe = ExcitedStateParams(zeta, 0.0, 0.0, E_JT, m.hbar_omega_ph, m.g_L, m.g_s_e)
    djt = derive_djt(probe)
    red = djt.ham_factor
    mu = (m.delta43 + m.delta21 + red * zeta / 2 - 3 * djt.K1) / (3 * red)
    rho = -m.delta21 - (1 - red) * mu - djt.K2
    params = ExcitedStateParams(zeta, mu, rho, E_JT, m.hbar_omega_ph, m.g_L, m.g_s_e)
    return params, djt
