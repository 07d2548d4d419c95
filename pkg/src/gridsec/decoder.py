"""Sparse error decoding over the reals.

The building blocks used by every estimator in the package:

* ``compute_annihilator`` builds an orthonormal-row matrix ``omega`` with
  ``omega @ phi = 0`` from the full QR factorization of ``phi``, so that
  pre-multiplying stacked measurements isolates the sparse error term.
* ``l1_minimize`` recovers the error by basis pursuit, reformulated as a
  linear program (positive/negative split) and solved with the in-package
  deterministic simplex.
* ``l0_bruteforce`` is the independent oracle: exhaustive support
  enumeration with least squares on each candidate support.
* ``certify_recoverability`` checks the subset-rank condition under which
  the sparse solution is unique.
* ``decode`` chains the pieces: annihilate, minimize, back-substitute.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .errors import DimensionError, Infeasible, RankDeficient, TooLarge
from .lp import solve_equality_lp

# |e_i| above this counts as part of the support; two orders above the
# LP feasibility tolerance.
ZERO_THRESHOLD = 1e-6

# residual below which an enumerated support counts as an exact solution
EXACT_RESIDUAL_TOL = 1e-8

# enumeration budgets for the brute-force oracle and the certificate
MAX_BRUTEFORCE_COLUMNS = 24
MAX_BRUTEFORCE_SPARSITY = 4
MAX_CERTIFY_COLUMNS = 24

_SINGULAR_TOL = 1e-10


def numerical_rank(a) -> int:
    """Rank from singular values with the max(m,n)*eps*sigma_max threshold."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return 0
    sv = np.linalg.svd(a, compute_uv=False)
    tol = max(a.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    return int(np.sum(sv > tol))


@dataclass(frozen=True)
class CodingProblem:
    """A full-column-rank coding matrix together with corrupted measurements."""

    coding_matrix: np.ndarray
    measurements: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.coding_matrix, dtype=float))
        y = np.asarray(self.measurements, dtype=float).reshape(-1)
        m, n = a.shape
        if m < n:
            raise DimensionError(f"coding matrix is {m}x{n}, needs rows >= cols")
        if y.shape[0] != m:
            raise DimensionError(f"{y.shape[0]} measurements for {m} matrix rows")
        if numerical_rank(a) < n:
            raise RankDeficient("coding matrix does not have full column rank")
        object.__setattr__(self, "coding_matrix", a)
        object.__setattr__(self, "measurements", y)

    def decode(self):
        return decode(self.coding_matrix, self.measurements)


@dataclass(frozen=True)
class Annihilator:
    """Orthonormal-row left null space of a tall matrix, plus its QR factors."""

    omega: np.ndarray
    source_rank: int
    q1: np.ndarray
    r1: np.ndarray


@dataclass(frozen=True)
class SparseSolution:
    error_vector: np.ndarray
    support: tuple
    residual_norm: float
    objective: float


def _make_solution(matrix, rhs, e) -> SparseSolution:
    e = np.asarray(e, dtype=float)
    support = tuple(int(i) for i in np.flatnonzero(np.abs(e) > ZERO_THRESHOLD))
    residual = float(np.linalg.norm(matrix @ e - rhs)) if rhs.size else 0.0
    return SparseSolution(e, support, residual, float(np.sum(np.abs(e))))


def compute_annihilator(phi) -> Annihilator:
    """Annihilator of a tall full-column-rank matrix via full Householder QR.

    Returns omega with ``omega @ phi = 0`` and orthonormal rows, along with
    the thin factors q1, r1 needed to recover the state once the error is
    known.
    """
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    m, n = phi.shape
    if m <= n:
        raise DimensionError(f"matrix is {m}x{n}; an annihilator needs rows > cols")
    if numerical_rank(phi) < n:
        raise RankDeficient(f"matrix rank below {n}; stacked system is unobservable")
    q, r = np.linalg.qr(phi, mode="complete")
    return Annihilator(omega=q[:, n:].T.copy(), source_rank=n, q1=q[:, :n].copy(), r1=r[:n].copy())


def l1_minimize(matrix, rhs, max_iter=None, weights=None) -> SparseSolution:
    """Minimum-l1-norm solution of ``matrix @ e = rhs``.

    Reformulated as an LP by splitting e into non-negative parts; the
    deterministic simplex guarantees bitwise-identical results for
    identical inputs.  ``weights`` (per entry, default all ones) turn the
    objective into a weighted l1 norm; callers use small weights to mark
    nuisance entries that should not compete with the entries of interest.
    The reported objective is always the plain l1 norm of the solution.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    rhs = np.asarray(rhs, dtype=float).reshape(-1)
    r, c = matrix.shape
    if rhs.shape[0] != r:
        raise DimensionError(f"rhs has {rhs.shape[0]} entries for {r} constraint rows")
    if weights is None:
        costs = np.ones(c)
    else:
        costs = np.asarray(weights, dtype=float).reshape(-1)
        if costs.shape[0] != c or np.any(costs < 0.0):
            raise DimensionError("weights must be non-negative, one per column")
    split = np.hstack([matrix, -matrix])
    z = solve_equality_lp(split, rhs, np.concatenate([costs, costs]), max_iter=max_iter)
    e = z[:c] - z[c:]
    sol = _make_solution(matrix, rhs, e)
    if sol.residual_norm > 10.0 * EXACT_RESIDUAL_TOL * max(1.0, float(np.max(np.abs(rhs), initial=0.0))):
        raise Infeasible(f"l1 solution violates constraints (residual {sol.residual_norm:.3e})")
    return sol


def l0_bruteforce(matrix, rhs, q_max) -> SparseSolution | None:
    """Sparsest exact solution by exhaustive support enumeration.

    Supports are tried in increasing size and, within a size, in
    lexicographic index order; the first exact fit wins, which makes the
    tie-break deterministic.  Returns None when no support of size <= q_max
    solves the system (the no-solution marker).
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    rhs = np.asarray(rhs, dtype=float).reshape(-1)
    r, c = matrix.shape
    if c > MAX_BRUTEFORCE_COLUMNS or q_max > MAX_BRUTEFORCE_SPARSITY:
        raise TooLarge(
            f"enumeration budget exceeded ({c} columns, q_max {q_max}; "
            f"limits {MAX_BRUTEFORCE_COLUMNS}/{MAX_BRUTEFORCE_SPARSITY})"
        )
    scale = max(1.0, float(np.max(np.abs(rhs), initial=0.0)))
    for size in range(0, q_max + 1):
        for support in combinations(range(c), size):
            if size == 0:
                residual = float(np.linalg.norm(rhs))
                candidate = np.zeros(c)
            else:
                cols = matrix[:, list(support)]
                coefs, *_ = np.linalg.lstsq(cols, rhs, rcond=None)
                candidate = np.zeros(c)
                candidate[list(support)] = coefs
                residual = float(np.linalg.norm(cols @ coefs - rhs))
            if residual < EXACT_RESIDUAL_TOL * scale:
                return _make_solution(matrix, rhs, candidate)
    return None


def certify_recoverability(matrix, s) -> bool:
    """True iff every 2s-column submatrix has full column rank.

    This is the sufficient condition for a unique s-sparse solution of
    ``matrix @ e = rhs``; smallest singular value per subset must clear
    1e-10.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    r, c = matrix.shape
    if s == 0:
        return True
    if 2 * s > c:
        return False
    if c > MAX_CERTIFY_COLUMNS or comb(c, 2 * s) > 300_000:
        raise TooLarge(f"certification over {c} columns choose {2 * s} exceeds budget")
    if r < 2 * s:
        return False
    for subset in combinations(range(c), 2 * s):
        sv = np.linalg.svd(matrix[:, list(subset)], compute_uv=False)
        if sv[-1] <= _SINGULAR_TOL:
            return False
    return True


def decode(phi, y):
    """Recover (x0, sparse error) from ``y = phi @ x0 + e``.

    Annihilates phi, basis-pursuits the error, then back-substitutes
    through the triangular QR factor.  Exact when the true error satisfies
    the recoverability certificate.
    """
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != phi.shape[0]:
        raise DimensionError(f"{y.shape[0]} measurements for {phi.shape[0]} matrix rows")
    ann = compute_annihilator(phi)
    solution = l1_minimize(ann.omega, ann.omega @ y)
    x0 = np.linalg.solve(ann.r1, ann.q1.T @ (y - solution.error_vector))
    return x0, solution
