"""Dantzig-selector estimate of the discriminant direction, solved as an LP.

For a covariance estimate ``S``, mean difference ``delta`` and level ``lam``::

    minimize |beta|_1  subject to  |S @ beta - delta|_inf <= lam
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleError
from .simplex import linprog_simplex

__all__ = [
    "FEAS_TOL",
    "SolveStatus",
    "DantzigProblem",
    "DantzigSolution",
    "build_lp",
    "solve_dantzig",
    "soft_threshold",
    "lambda_rate",
]

FEAS_TOL = 1e-9
OPT_TOL = 1e-9


class SolveStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True, eq=False)
class DantzigProblem:
    sigma_hat: np.ndarray
    delta_hat: np.ndarray
    lam: float

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.sigma_hat, dtype=float))
        delta = np.atleast_1d(np.asarray(self.delta_hat, dtype=float)).ravel()
        p = delta.shape[0]
        if S.shape != (p, p):
            raise ValueError(f"sigma_hat has shape {S.shape}, expected {(p, p)}")
        if not (np.all(np.isfinite(S)) and np.all(np.isfinite(delta))):
            raise ValueError("Dantzig problem data must be finite")
        if np.max(np.abs(S - S.T), initial=0.0) > 1e-10 * max(1.0, np.abs(S).max()):
            raise ValueError("sigma_hat must be symmetric")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError("lambda must be finite and nonnegative")
        object.__setattr__(self, "sigma_hat", S)
        object.__setattr__(self, "delta_hat", delta)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def p(self) -> int:
        return self.delta_hat.shape[0]


@dataclass(frozen=True, eq=False)
class DantzigSolution:
    beta_hat: np.ndarray
    objective: float
    status: SolveStatus
    residual_inf_norm: float
    iterations: int
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    def raise_for_status(self, context=""):
        if not self.ok:
            prefix = f"{context}: " if context else ""
            raise InfeasibleError(f"{prefix}Dantzig LP not solved ({self.message})",
                                  iterations=self.iterations)
        return self


def build_lp(prob: DantzigProblem):
    """LP in the variables ``(beta, v)`` with ``2p`` columns and ``4p`` rows.

    Rows, in order: ``beta - v <= 0``, ``-beta - v <= 0``,
    ``S beta <= lam + delta`` and ``-S beta <= lam - delta``. The objective is
    ``sum(v)``; ``beta`` is free and ``v >= 0`` is implied by the first two blocks.

    Returns ``(c, A_ub, b_ub, free)``.
    """
    p = prob.p
    S, delta, lam = prob.sigma_hat, prob.delta_hat, prob.lam
    eye, zero = np.eye(p), np.zeros((p, p))
    A = np.block([[eye, -eye], [-eye, -eye], [S, zero], [-S, zero]])
    b = np.concatenate([np.zeros(2 * p), lam + delta, lam - delta])
    c = np.concatenate([np.zeros(p), np.ones(p)])
    free = np.concatenate([np.ones(p, dtype=bool), np.zeros(p, dtype=bool)])
    return c, A, b, free


def _split_lp(prob: DantzigProblem):
    # beta = b_plus - b_minus with both parts nonnegative; |beta|_1 = sum of parts at optimum.
    S, delta, lam = prob.sigma_hat, prob.delta_hat, prob.lam
    A = np.block([[S, -S], [-S, S]])
    b = np.concatenate([lam + delta, lam - delta])
    c = np.ones(2 * prob.p)
    return c, A, b


def solve_dantzig(prob: DantzigProblem, *, formulation="split", max_iter=None,
                  tol=OPT_TOL) -> DantzigSolution:
    """Solve the Dantzig program with the two-phase simplex.

    ``formulation="split"`` (default) writes ``beta`` as the difference of two
    nonnegative vectors (``2p`` columns, ``2p`` rows); ``"paper"`` solves the
    ``(beta, v)`` program returned by :func:`build_lp`. Both have the same
    optimal value. The pivot cap defaults to ``max(50 * p, 100)``.
    """
    p = prob.p
    if max_iter is None:
        max_iter = max(50 * p, 100)
    delta = prob.delta_hat
    if np.max(np.abs(delta), initial=0.0) <= prob.lam:
        return DantzigSolution(np.zeros(p), 0.0, SolveStatus.OPTIMAL,
                               float(np.max(np.abs(delta), initial=0.0)), 0, "zero feasible")
    if formulation == "split":
        c, A, b = _split_lp(prob)
        res = linprog_simplex(c, A, b, tol=tol, max_iter=max_iter, bland_after=10 * p)
        beta = res.x[:p] - res.x[p:] if res.success else None
    elif formulation == "paper":
        c, A, b, free = build_lp(prob)
        res = linprog_simplex(c, A, b, free=free, tol=tol, max_iter=max_iter,
                              bland_after=10 * p)
        beta = res.x[:p] if res.success else None
    else:
        raise ValueError(f"unknown formulation {formulation!r}")
    if beta is None:
        return DantzigSolution(np.full(p, np.nan), float("nan"), SolveStatus.INFEASIBLE,
                               float("nan"), res.nit, res.message)
    resid = float(np.max(np.abs(prob.sigma_hat @ beta - delta)))
    if resid > prob.lam + FEAS_TOL:
        return DantzigSolution(beta, float(np.abs(beta).sum()), SolveStatus.INFEASIBLE, resid,
                               res.nit, f"basic solution violates the constraint by "
                                        f"{resid - prob.lam:.2e}")
    return DantzigSolution(beta, float(np.abs(beta).sum()), SolveStatus.OPTIMAL, resid,
                           res.nit, res.message)


def soft_threshold(delta, lam):
    """Coordinatewise ``sign(x) * max(|x| - lam, 0)``."""
    delta = np.asarray(delta, dtype=float)
    return np.sign(delta) * np.maximum(np.abs(delta) - lam, 0.0)


def lambda_rate(n, p, d, delta_sup, C=1.0) -> float:
    """``C * (log p / n) ** (2 / (4 + d)) * delta_sup``."""
    if n < 2 or p < 2:
        raise ValueError("lambda_rate needs n >= 2 and p >= 2")
    if not (delta_sup > 0 and C > 0):
        raise ValueError("delta_sup and C must be positive")
    return C * (math.log(p) / n) ** (2.0 / (4 + d)) * delta_sup
