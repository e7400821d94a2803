"""Spin algebra and small numerical kernels.

Spin matrices of arbitrary dimension, a checked Hermitian eigensolver,
degeneracy clustering, the Ham-reduction special function ``G(x)`` and an
adaptive Gauss-Hermite quadrature against a normal weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .exceptions import NonHermitianError, QuadratureError, ValidationError

__all__ = [
    "SpinOperatorSet",
    "spin_operators",
    "eig_hermitian",
    "degenerate_clusters",
    "ham_reduction_G",
    "damped_ham_G",
    "gauss_quadrature",
    "kron",
]

HERMITIAN_RTOL = 1e-12
G_X_MAX = 50.0


@dataclass(frozen=True)
class SpinOperatorSet:
    """Cartesian spin matrices in the ``|s, m>`` basis with ``m = s, s-1, ..., -s``."""

    spin: Fraction
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    @property
    def dim(self) -> int:
        return self.sz.shape[0]

    @property
    def sp(self) -> np.ndarray:
        return self.sx + 1j * self.sy

    @property
    def sm(self) -> np.ndarray:
        return self.sx - 1j * self.sy

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def vector(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.sx, self.sy, self.sz)


def _as_half_integer(s) -> Fraction:
    try:
        two_s = Fraction(s) * 2
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"spin must be a number, got {s!r}") from exc
    if isinstance(s, float) and abs(float(two_s) - round(float(two_s))) > 1e-12:
        raise ValidationError(f"spin {s} is not a half-integer")
    if two_s.denominator != 1 or two_s < 0:
        raise ValidationError(f"spin {s} is not a non-negative half-integer")
    return two_s / 2


def spin_operators(s) -> SpinOperatorSet:
    """Return ``Sx, Sy, Sz`` for spin ``s`` (units of hbar).

    Parameters
    ----------
    s : int, float, str or Fraction
        Non-negative half-integer, e.g. ``1``, ``2.5`` or ``"5/2"``.
    """
    spin = _as_half_integer(s)
    sv = float(spin)
    m = sv - np.arange(int(2 * spin) + 1)
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1)), stored on the first superdiagonal
    sp = np.diag(np.sqrt(sv * (sv + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    sm = sp.conj().T
    sx = (sp + sm) / 2
    sy = (sp - sm) / 2j
    sz = np.diag(m).astype(complex)
    return SpinOperatorSet(spin, sx, sy, sz)


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of operators, left factor outermost."""
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def eig_hermitian(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and orthonormal eigenvector columns.
    Raises :class:`NonHermitianError` carrying the largest entrywise
    asymmetry when ``M`` deviates from ``M^H`` by more than 1e-12 relative.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix contains non-finite entries")
    asym = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if asym > HERMITIAN_RTOL * scale:
        raise NonHermitianError(asym)
    w, v = np.linalg.eigh(m)
    return w, v


def degenerate_clusters(eigenvalues, rel_gap: float = 1e-6) -> list[np.ndarray]:
    """Group sorted eigenvalues whose neighbour gap is below ``rel_gap * span``.

    A zero span puts everything in one cluster.
    """
    w = np.asarray(eigenvalues, dtype=float)
    if w.size == 0:
        return []
    if np.any(np.diff(w) < 0):
        raise ValidationError("eigenvalues must be sorted ascending")
    span = w[-1] - w[0]
    tol = rel_gap * span
    clusters, start = [], 0
    for i in range(1, w.size):
        if w[i] - w[i - 1] > tol:
            clusters.append(np.arange(start, i))
            start = i
    clusters.append(np.arange(start, w.size))
    return clusters


def ham_reduction_G(x: float) -> float:
    """``G(x) = int_0^x (e^t - 1)/t dt`` via its power series ``sum x^n/(n n!)``.

    Valid for ``0 <= x <= 50``.
    """
    x = float(x)
    if not (0.0 <= x <= G_X_MAX):
        raise ValidationError(f"G(x) requires 0 <= x <= {G_X_MAX}, got {x}")
    total, power, n = 0.0, 1.0, 0
    while True:
        n += 1
        power *= x / n  # x^n / n!
        term = power / n
        total += term
        if term <= 1e-15 * total:  # also ends the loop once a subnormal term underflows to zero
            return total


def damped_ham_G(x: float, damping: float) -> float:
    """``exp(-damping) * G(x)`` for any ``x >= 0``.

    Beyond the series range the asymptotic expansion
    ``G(x) ~ e^x/x * sum k!/x^k - gamma - ln x`` is used, with the
    exponential folded into the damping so nothing overflows.
    """
    x = float(x)
    if x < 0:
        raise ValidationError(f"G(x) requires x >= 0, got {x}")
    if x <= G_X_MAX:
        return math.exp(-damping) * ham_reduction_G(x)
    series, term, k = 1.0, 1.0, 0
    while True:
        k += 1
        nxt = term * k / x
        if nxt > term or nxt < 1e-17:
            break
        term = nxt
        series += term
    head = math.exp(x - damping) / x * series if x - damping < 700 else math.inf
    tail = math.exp(-damping) * (np.euler_gamma + math.log(x))
    return head - tail


def gauss_quadrature(
    f: Callable[[np.ndarray], np.ndarray],
    sigma: float,
    n_nodes: int = 64,
    rtol: float = 1e-9,
    atol: float = 1e-15,
    max_nodes: int = 2048,
) -> float:
    """Integrate ``f(delta)`` against a zero-mean normal density of width ``sigma``.

    Uses probabilists' Gauss-Hermite rules, doubling the node count until two
    successive estimates agree to ``rtol`` (or ``atol`` absolutely).

    Raises
    ------
    QuadratureError
        If ``max_nodes`` is reached first; carries the last two estimates.
    """
    if n_nodes < 8:
        raise ValidationError("n_nodes must be >= 8")
    if not sigma > 0:
        raise ValidationError("sigma must be positive")

    def rule(n: int) -> float:
        x, w = np.polynomial.hermite_e.hermegauss(n)
        vals = np.asarray(f(sigma * x), dtype=float)
        return float(np.dot(w, vals) / math.sqrt(2 * math.pi))

    prev = prev_prev = rule(n_nodes)
    n = n_nodes
    while n < max_nodes:
        n *= 2
        cur = rule(n)
        if abs(cur - prev) <= max(rtol * abs(cur), atol):
            return cur
        prev_prev, prev = prev, cur
    raise QuadratureError((prev_prev, prev))
