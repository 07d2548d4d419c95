"""Two nonlinear-to-linear transforms for secure estimation.

Both cover systems of the form

    x(k+1) = A x(k) + f(x(k), e(k)) + u(k),   y(k) = C x(k) + e(k).

``transform_with_mapping`` handles the case where a mapping g with
g(y(k)) = f(x(k), e(k)) exists: the history terms are subtracted from the
outputs, leaving the plain linear stacking.  ``transform_feedback_linearized``
handles the split f = g(y) + h1(x) + H e when the plant ran under the
cancelling control u(k) = -h1(x(k)) + v(k): the error term then enters
through a block lower-triangular matrix with identity diagonal, and the
decoder solves ``omega Y = omega Psi E``.

g is a caller-supplied callback; the module never differentiates or
inverts it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import decoder
from .errors import DimensionError


@dataclass(frozen=True)
class NonlinearSystem:
    a: np.ndarray
    c: np.ndarray
    g: Callable[[np.ndarray], np.ndarray]
    h: Optional[np.ndarray] = None

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        c = np.atleast_2d(np.asarray(self.c, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise DimensionError(f"state matrix is {a.shape}, must be square")
        if c.shape[1] != a.shape[0]:
            raise DimensionError(f"output matrix has {c.shape[1]} columns for {a.shape[0]} states")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)
        if self.h is not None:
            h = np.atleast_2d(np.asarray(self.h, dtype=float))
            if h.shape != (a.shape[0], c.shape[0]):
                raise DimensionError(f"error map is {h.shape}, expected {(a.shape[0], c.shape[0])}")
            object.__setattr__(self, "h", h)

    @property
    def n_states(self) -> int:
        return self.a.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class LinearizedStack:
    """Y = Phi x(0) + Psi E after removing known history terms."""

    y: np.ndarray
    phi: np.ndarray
    psi: np.ndarray


def _check_sequences(sys, y_seq, u_seq):
    if len(y_seq) != len(u_seq):
        raise DimensionError(f"{len(y_seq)} outputs vs {len(u_seq)} inputs")
    if len(y_seq) == 0:
        raise DimensionError("empty measurement window")
    p, n = sys.n_outputs, sys.n_states
    ys = [np.asarray(y, dtype=float).reshape(-1) for y in y_seq]
    us = [np.asarray(u, dtype=float).reshape(-1) for u in u_seq]
    if any(y.shape[0] != p for y in ys):
        raise DimensionError(f"output samples must have length {p}")
    if any(u.shape[0] != n for u in us):
        raise DimensionError(f"input samples must have length {n}")
    return ys, us


def _history_corrected_outputs(sys, ys, us):
    # running history state: s(k+1) = A s(k) + g(y(k)) + u(k), s(0) = 0,
    # matching how a forward simulation would accumulate the same terms
    rows = []
    history = np.zeros(sys.n_states)
    for yk, uk in zip(ys, us):
        rows.append(yk - sys.c @ history)
        gk = np.asarray(sys.g(yk), dtype=float).reshape(-1)
        if gk.shape[0] != sys.n_states:
            raise DimensionError(f"g(y) must return length {sys.n_states}")
        history = sys.a @ history + gk + uk
    return np.concatenate(rows)


def _observability(sys, horizon):
    blocks = []
    block = sys.c
    for _ in range(horizon):
        blocks.append(block)
        block = block @ sys.a
    return np.vstack(blocks)


def transform_with_mapping(sys: NonlinearSystem, y_seq, u_seq) -> LinearizedStack:
    """Linearize via the mapping function; Psi is the identity."""
    ys, us = _check_sequences(sys, y_seq, u_seq)
    horizon = len(ys)
    y = _history_corrected_outputs(sys, ys, us)
    phi = _observability(sys, horizon)
    return LinearizedStack(y=y, phi=phi, psi=np.eye(horizon * sys.n_outputs))


def transform_feedback_linearized(sys: NonlinearSystem, y_seq, v_seq) -> LinearizedStack:
    """Linearize a feedback-linearized plant (u(k) = -h1(x(k)) + v(k)).

    The sub-diagonal blocks of Psi are C A^j H, so the decoder solves
    Y = Phi x(0) + Psi E for the same stacked error vector.
    """
    if sys.h is None:
        raise DimensionError("system has no linear error map; use transform_with_mapping")
    ys, vs = _check_sequences(sys, y_seq, v_seq)
    horizon = len(ys)
    p = sys.n_outputs
    y = _history_corrected_outputs(sys, ys, vs)
    phi = _observability(sys, horizon)
    psi = np.eye(horizon * p)
    a_pow = np.eye(sys.n_states)
    for j in range(horizon - 1):
        block = sys.c @ a_pow @ sys.h  # C A^j H fills the j-th sub-diagonal
        for k in range(j + 1, horizon):
            psi[k * p:(k + 1) * p, (k - 1 - j) * p:(k - j) * p] = block
        a_pow = a_pow @ sys.a
    return LinearizedStack(y=y, phi=phi, psi=psi)


def decode_linearized(stack: LinearizedStack):
    """Annihilate Phi, basis-pursuit through Psi, back-substitute for x(0)."""
    ann = decoder.compute_annihilator(stack.phi)
    solution = decoder.l1_minimize(ann.omega @ stack.psi, ann.omega @ stack.y)
    x0 = np.linalg.solve(ann.r1, ann.q1.T @ (stack.y - stack.psi @ solution.error_vector))
    return x0, solution
