"""Dense two-phase primal simplex for small equality-constrained LPs.

Solves ``min c.x  subject to  A x = b, x >= 0`` on a dense tableau.  The
pivot path is a pure function of the input data: columns are priced with
Dantzig's rule (lowest index on ties) and the solver switches permanently
to Bland's rule after a run of degenerate pivots.  Long degenerate
streaks, which in floating point can defeat even Bland's rule, are broken
by refactorizing the tableau from the original data; a streak that
survives refactorization is a degenerate optimum and is accepted.
Problem sizes here are tiny (tens of rows, a few hundred columns), so the
tableau method is both fast enough and easy to audit.
"""

from __future__ import annotations

import numpy as np

from .errors import Infeasible, SolverFailure

# Reduced costs above -RCOST_TOL count as optimal; pivots below PIVOT_TOL
# are treated as zero.
RCOST_TOL = 1e-9
PIVOT_TOL = 1e-9
FEASIBILITY_TOL = 1e-8

_STALL_BLAND = 30      # degenerate pivots before Bland's rule engages
_STALL_REFACTOR = 200  # ... before the tableau is rebuilt from scratch
_STALL_ACCEPT = 450    # ... before a degenerate optimum is accepted as-is
_REFRESH_EVERY = 300   # unconditional refactorization cadence


def _pivot(tab, basis, row, col):
    tab[row] = tab[row] / tab[row, col]
    factor = tab[:, col].copy()
    factor[row] = 0.0
    tab -= np.outer(factor, tab[row])
    basis[row] = col


def _refactor(orig, b, basis):
    """Rebuild the reduced tableau for the current basis from original data."""
    try:
        return np.linalg.solve(orig[:, basis], np.hstack([orig, b[:, None]]))
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(orig[:, basis], np.hstack([orig, b[:, None]]), rcond=None)
        return sol


def _run_phase(orig, b, tab, basis, costs, max_iter, iters, stop_below=None):
    """Pivot until the reduced costs are non-negative.

    Returns (tableau, iteration count); the tableau may have been replaced
    by a refactorized copy.  ``stop_below`` lets phase 1 exit as soon as
    the artificial objective is negligible instead of polishing it to an
    exact zero.
    """
    n = orig.shape[1]
    stall = 0
    bland = False
    last_obj = costs[basis] @ tab[:, n]
    while True:
        if stop_below is not None and last_obj < stop_below:
            return tab, iters
        reduced = costs[:n] - costs[basis] @ tab[:, :n]
        reduced[basis] = 0.0
        if bland:
            eligible = np.flatnonzero(reduced < -RCOST_TOL)
            col = int(eligible[0]) if eligible.size else -1
        else:
            col = int(np.argmin(reduced))
            if reduced[col] >= -RCOST_TOL:
                col = -1
        if col < 0:
            return tab, iters
        if iters >= max_iter:
            raise SolverFailure(f"simplex exceeded {max_iter} iterations")
        direction = tab[:, col]
        rows = np.flatnonzero(direction > PIVOT_TOL)
        if rows.size == 0:
            # cannot happen with the non-negative costs used here unless the
            # data is numerically broken
            raise SolverFailure("unbounded pivot direction in simplex")
        ratios = tab[rows, n] / direction[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12]
        # leaving variable: smallest basis index among the tied rows
        row = int(ties[np.argmin(basis[ties])])
        _pivot(tab, basis, row, col)
        iters += 1
        if iters % _REFRESH_EVERY == 0:
            # bound the drift a long pivot path accumulates in the tableau
            tab = _refactor(orig, b, basis)
        obj = costs[basis] @ tab[:, n]
        if obj > last_obj - 1e-12 * (1.0 + abs(last_obj)):
            stall += 1
            if stall == _STALL_BLAND:
                bland = True
            elif stall == _STALL_REFACTOR:
                tab = _refactor(orig, b, basis)
            elif stall >= _STALL_ACCEPT:
                # degenerate optimum cycling at noise level: accept it
                return _refactor(orig, b, basis), iters
        else:
            stall = 0
        last_obj = obj


def solve_equality_lp(a, b, costs, max_iter=None):
    """Minimize ``costs.x`` subject to ``a x = b`` and ``x >= 0``.

    Raises Infeasible when no feasible point exists within FEASIBILITY_TOL,
    and SolverFailure when the pivot budget is exhausted.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    costs = np.asarray(costs, dtype=float)
    m, n = a.shape
    if max_iter is None:
        max_iter = 2000 + 60 * (m + n)

    # x = 0 is optimal whenever it is feasible and no cost is negative
    if np.min(costs, initial=0.0) >= 0.0 and np.max(np.abs(b), initial=0.0) < 1e-12:
        return np.zeros(n)

    # normalize to b >= 0 for the phase-1 basis
    flip = b < 0.0
    a0 = np.where(flip[:, None], -a, a)
    b0 = np.where(flip, -b, b)

    # phase 1: [A I | b] starting from the artificial basis
    orig1 = np.hstack([a0, np.eye(m)])
    tab = np.hstack([orig1, b0[:, None]])
    basis = np.arange(n, n + m)
    costs1 = np.concatenate([np.zeros(n), np.ones(m)])
    tab, iters = _run_phase(orig1, b0, tab, basis, costs1, max_iter, 0,
                            stop_below=0.01 * FEASIBILITY_TOL)
    if costs1[basis] @ tab[:, -1] > FEASIBILITY_TOL:
        raise Infeasible("equality constraints have no non-negative solution")

    # drive leftover artificials out of the basis; rows that cannot pivot
    # on any structural column are redundant constraints
    keep = np.ones(tab.shape[0], dtype=bool)
    for r in range(tab.shape[0]):
        if basis[r] < n:
            continue
        structural = np.flatnonzero(np.abs(tab[r, :n]) > PIVOT_TOL)
        if structural.size:
            _pivot(tab, basis, r, int(structural[0]))
        else:
            keep[r] = False
    tab = tab[keep]
    basis = basis[keep]
    a0 = a0[keep]
    b0 = b0[keep]

    # phase 2 on structural columns only
    tab = np.hstack([tab[:, :n], tab[:, -1:]])
    tab, _ = _run_phase(a0, b0, tab, basis, costs, max_iter, iters)

    x = np.zeros(n)
    x[basis] = tab[:, -1]
    # polish: re-solve on the final basis to undo accumulated tableau roundoff
    refined, *_ = np.linalg.lstsq(a0[:, basis], b0, rcond=None)
    polished = np.zeros(n)
    polished[basis] = refined
    if _residual(a0, b0, polished) <= _residual(a0, b0, x):
        x = polished
    x[np.abs(x) < 1e-14] = 0.0
    return x


def _residual(a, b, x):
    return float(np.max(np.abs(a @ x - b))) if b.size else 0.0
