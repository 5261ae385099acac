"""Dense two-phase primal simplex for small inequality-form linear programs.

Solves::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                x[j] >= 0 unless free[j]

Free variables are split into a difference of two nonnegative columns and every
row gets a slack. Rows with negative right-hand side are negated and receive an
artificial variable, which phase one drives to zero.

Entering variable: Dantzig's most-negative reduced cost. After ``bland_after``
consecutive degenerate pivots the phase switches permanently to Bland's rule
(lowest-index entering column). Leaving-row ties always go to the lowest basic
index, so the sequence of pivots, and therefore the returned vertex, is a
deterministic function of the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["LPResult", "linprog_simplex"]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class LPResult:
    x: np.ndarray
    fun: float
    status: str
    nit: int
    basis: np.ndarray = field(repr=False, default=None)
    message: str = ""

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    def __init__(self, T, basis, tol, bland_after):
        self.T = T
        self.basis = basis
        self.tol = tol
        self.bland_after = bland_after
        self.nit = 0

    def pivot(self, r, q):
        T = self.T
        T[r] /= T[r, q]
        col = T[:, q].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, q] = 0.0
        T[r, q] = 1.0
        rhs = T[:-1, -1]
        rhs[(rhs < 0) & (rhs > -self.tol)] = 0.0
        self.basis[r] = q

    def run(self, n_cols, max_iter):
        """Iterate on the cost row (last row of ``T``) over the first ``n_cols`` columns."""
        T, tol = self.T, self.tol
        bland = False
        degenerate = 0
        while True:
            z = T[-1, :n_cols]
            if bland:
                cand = np.flatnonzero(z < -tol)
                if cand.size == 0:
                    return OPTIMAL
                q = int(cand[0])
            else:
                q = int(np.argmin(z))
                if z[q] >= -tol:
                    return OPTIMAL
            if self.nit >= max_iter:
                return ITERATION_LIMIT
            col = T[:-1, q]
            rows = np.flatnonzero(col > tol)
            if rows.size == 0:
                return UNBOUNDED
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol * max(1.0, abs(best))]
            r = int(ties[np.argmin(self.basis[ties])])
            if best <= tol:
                degenerate += 1
                if degenerate >= self.bland_after:
                    bland = True
            else:
                degenerate = 0
            self.pivot(r, q)
            self.nit += 1


def linprog_simplex(c, A_ub, b_ub, *, free=None, tol=1e-9, max_iter=None,
                    bland_after=None) -> LPResult:
    """Solve an inequality-form LP with the two-phase tableau method.

    ``max_iter`` caps the total number of pivots over both phases (default
    ``50 * n_vars``); ``bland_after`` defaults to ``10 * n_vars``.
    """
    c = np.asarray(c, dtype=float).ravel()
    A = np.atleast_2d(np.asarray(A_ub, dtype=float))
    b = np.asarray(b_ub, dtype=float).ravel()
    m, n = A.shape
    if c.shape[0] != n or b.shape[0] != m:
        raise ValueError("inconsistent LP dimensions")
    free = np.zeros(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    if max_iter is None:
        max_iter = 50 * max(n, 1)
    if bland_after is None:
        bland_after = 10 * max(n, 1)

    # Structural columns: original variables followed by the negative parts of free ones.
    free_idx = np.flatnonzero(free)
    A_s = np.hstack([A, -A[:, free_idx]])
    c_s = np.concatenate([c, -c[free_idx]])
    n_s = A_s.shape[1]

    flip = b < 0
    sign = np.where(flip, -1.0, 1.0)
    A_std = np.hstack([A_s * sign[:, None], np.diag(sign)])
    b_std = b * sign
    art_rows = np.flatnonzero(flip)
    n_art = art_rows.size
    n_real = n_s + m

    T = np.zeros((m + 1, n_real + n_art + 1))
    T[:m, :n_real] = A_std
    T[:m, -1] = b_std
    T[art_rows, n_real + np.arange(n_art)] = 1.0
    basis = np.arange(n_s, n_s + m)
    basis[art_rows] = n_real + np.arange(n_art)
    tab = _Tableau(T, basis, tol, bland_after)

    if n_art:
        # phase one: minimize the sum of artificials
        T[-1, :] = 0.0
        T[-1, n_real:n_real + n_art] = 1.0
        T[-1] -= T[art_rows].sum(axis=0)
        status = tab.run(n_real + n_art, max_iter)
        if status == ITERATION_LIMIT:
            return _fail(n, status, tab.nit, "iteration cap reached in phase one")
        infeas = -T[-1, -1]
        if infeas > tol * max(1.0, np.abs(b_std).max()):
            return _fail(n, INFEASIBLE, tab.nit, f"phase one ended at {infeas:.3e}")
        keep = np.ones(m + 1, dtype=bool)
        for r in np.flatnonzero(basis >= n_real):
            row = T[r, :n_real]
            nz = np.flatnonzero(np.abs(row) > tol)
            if nz.size:
                tab.pivot(r, int(nz[np.argmax(np.abs(row[nz]))]))
            else:
                keep[r] = False  # redundant row
        T = T[keep][:, np.r_[0:n_real, T.shape[1] - 1]]
        basis = basis[keep[:-1]]
        A_std = A_std[keep[:-1]]
        b_std = b_std[keep[:-1]]
        tab.T, tab.basis = T, basis

    cost = np.concatenate([c_s, np.zeros(m)])
    T[-1, :] = 0.0
    T[-1, :n_real] = cost
    T[-1] -= cost[basis] @ T[:-1]
    status = tab.run(n_real, max_iter)
    if status != OPTIMAL:
        return _fail(n, status, tab.nit, f"phase two stopped: {status}")

    xs = np.zeros(n_real)
    xs[basis] = T[:-1, -1]
    # Recompute the basic solution from the original data to shed pivot roundoff.
    try:
        B = A_std[:, basis]
        xb = np.linalg.solve(B, b_std)
        if np.all(xb >= -tol) and np.all(np.isfinite(xb)):
            xs[basis] = np.maximum(xb, 0.0)
    except np.linalg.LinAlgError:
        pass
    x = xs[:n].copy()
    x[free_idx] -= xs[n:n_s]
    return LPResult(x=x, fun=float(c @ x), status=OPTIMAL, nit=tab.nit,
                    basis=basis.copy(), message="optimal")


def _fail(n, status, nit, message):
    return LPResult(x=np.full(n, np.nan), fun=np.nan, status=status, nit=nit, message=message)
