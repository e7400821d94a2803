"""Levenberg-Marquardt least squares with linearised confidence intervals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..exceptions import ConvergenceError, SingularFitError, ValidationError
from ._validation import check_xy


@dataclass
class FitResult:
    """Outcome of a least-squares fit.

    ``confidence_68`` holds one-sigma half-widths from the covariance, which
    is scaled by the reduced chi-square unless ``absolute_sigma`` was set.
    """

    parameters: dict
    covariance: np.ndarray
    residual_norm: float
    confidence_68: dict
    units: dict = field(default_factory=dict)
    n_iter: int = 0
    converged: bool = True
    flags: list = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array(list(self.parameters.values()))

    def as_records(self) -> list[dict]:
        return [
            {"name": k, "value": v, "ci68": self.confidence_68[k], "unit": self.units.get(k, "")}
            for k, v in self.parameters.items()
        ]


def _jacobian(fun, p, r0, step):
    J = np.empty((r0.size, p.size))
    for j in range(p.size):
        h = step * max(abs(p[j]), 1e-3)
        dp = np.zeros_like(p)
        dp[j] = h
        J[:, j] = (fun(p + dp) - fun(p - dp)) / (2 * h)
    return J


def covariance_from_jacobian(J: np.ndarray, cost: float, n_points: int, absolute_sigma: bool) -> np.ndarray:
    # condition on the column-scaled Jacobian so parameter units do not matter
    scale = np.linalg.norm(J, axis=0)
    if np.any(scale == 0) or not np.all(np.isfinite(scale)):
        raise SingularFitError(float("inf"))
    jtj = (J / scale).T @ (J / scale)
    cond = np.linalg.cond(jtj) if jtj.size else 1.0
    if not np.isfinite(cond) or cond > 1e15:
        raise SingularFitError(float(cond))
    cov = np.linalg.inv(jtj) / np.outer(scale, scale)
    dof = n_points - J.shape[1]
    if not absolute_sigma:
        cov = cov * (2 * cost / dof if dof > 0 else np.inf)
    return 0.5 * (cov + cov.T)


def nlls_fit(
    model: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x,
    y,
    p0: Sequence[float],
    sigma=None,
    param_names: Sequence[str] | None = None,
    units: dict | None = None,
    jac: Callable | None = None,
    max_iter: int = 500,
    gtol: float = 1e-8,
    xtol: float = 1e-14,
    absolute_sigma: bool = False,
    diff_step: float = 1e-6,
) -> FitResult:
    """Minimise ``sum(((model(x, p) - y) / sigma)^2)``.

    Damped Gauss-Newton steps with Marquardt scaling; a step that raises the
    cost is rejected and the damping increased. Converges when the gradient
    norm falls below ``gtol`` times its initial value, or when the step
    becomes negligible relative to the parameters.

    Raises
    ------
    ConvergenceError
        After ``max_iter`` iterations; ``last_iterate`` carries the parameters.
    SingularFitError
        When the normal equations are singular at the solution.
    """
    x, y, s = check_xy(x, y, sigma)
    p = np.asarray(p0, dtype=float).copy()
    if p.ndim != 1 or not np.all(np.isfinite(p)):
        raise ValidationError("initial parameters must be a finite 1-D vector")
    if y.size < p.size:
        raise ValidationError(f"need at least {p.size} points, got {y.size}")
    names = list(param_names) if param_names is not None else [f"p{i}" for i in range(p.size)]
    if len(names) != p.size:
        raise ValidationError("param_names length does not match p0")

    def resid(q):
        return (np.asarray(model(x, q), dtype=float) - y) / s

    def jacobian(q, r):
        if jac is not None:
            return np.asarray(jac(x, q), dtype=float) / s[:, None]
        return _jacobian(resid, q, r, diff_step)

    r = resid(p)
    if not np.all(np.isfinite(r)):
        raise ValidationError("model is not finite at the initial parameters")
    cost = 0.5 * float(r @ r)
    J = jacobian(p, r)
    g = J.T @ r
    g0 = float(np.linalg.norm(g))
    lam = 1e-3
    converged = g0 == 0.0
    it = 0
    while not converged and it < max_iter:
        it += 1
        A = J.T @ J
        d = np.diag(A).copy()
        d[d == 0] = 1.0
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            p_new = p + step
            r_new = resid(p_new)
            cost_new = 0.5 * float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
            if cost_new <= cost:
                accepted = True
                break
            lam *= 10
        if not accepted:
            # no descent direction left at machine precision
            converged = True
            break
        small_step = np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol)
        p, r, cost = p_new, r_new, cost_new
        lam = max(lam / 10, 1e-12)
        J = jacobian(p, r)
        g = J.T @ r
        if np.linalg.norm(g) <= gtol * g0 or small_step:
            converged = True
    if not converged:
        raise ConvergenceError(f"no convergence after {max_iter} iterations", last_iterate=p)

    cov = covariance_from_jacobian(J, cost, y.size, absolute_sigma)
    ci = np.sqrt(np.clip(np.diag(cov), 0, None))
    return FitResult(
        parameters=dict(zip(names, map(float, p))),
        covariance=cov,
        residual_norm=float(np.linalg.norm(r)),
        confidence_68=dict(zip(names, map(float, ci))),
        units=dict(units or {}),
        n_iter=it,
        converged=True,
    )
