"""Secure estimation for linear time-invariant systems.

Stacks a window of corrupted outputs into ``Y = Phi x(0) + E`` with Phi the
observability matrix, then delegates to the sparse decoder.  The attacked
sensor set may change at every step; recovery is certified by the
subset-rank check in ``check_recovery_conditions``.

The window length is the caller's choice; ``default_horizon`` returns the
smallest value that leaves slack for a nontrivial annihilator (n + 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import decoder
from .errors import DimensionError, RankDeficient, Unobservable


@dataclass(frozen=True)
class LinearSystem:
    """x(k+1) = A x(k),  y(k) = C x(k) + e(k)."""

    a: np.ndarray
    c: np.ndarray
    observability_rank: int = field(init=False)

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        c = np.atleast_2d(np.asarray(self.c, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise DimensionError(f"state matrix is {a.shape}, must be square")
        if c.shape[1] != a.shape[0]:
            raise DimensionError(f"output matrix has {c.shape[1]} columns for {a.shape[0]} states")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)
        full = build_observability(self, a.shape[0])
        object.__setattr__(self, "observability_rank", decoder.numerical_rank(full))

    @property
    def n_states(self) -> int:
        return self.a.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class StackedObservation:
    y: np.ndarray
    phi: np.ndarray
    horizon: int


def default_horizon(sys: LinearSystem) -> int:
    return sys.n_states + 2


def build_observability(sys: LinearSystem, horizon: int) -> np.ndarray:
    """Stack [C; CA; ...; CA^(T-1)] by rows."""
    if horizon < 1:
        raise DimensionError("horizon must be at least 1")
    blocks = []
    block = sys.c
    for _ in range(horizon):
        blocks.append(block)
        block = block @ sys.a
    return np.vstack(blocks)


def stack_outputs(sys: LinearSystem, y_seq) -> StackedObservation:
    horizon = len(y_seq)
    y = np.concatenate([np.asarray(yk, dtype=float).reshape(-1) for yk in y_seq])
    if y.shape[0] != horizon * sys.n_outputs:
        raise DimensionError("output samples do not all have the sensor count length")
    phi = build_observability(sys, horizon)
    if decoder.numerical_rank(phi) < sys.n_states:
        raise Unobservable(
            "stacked observability matrix is rank deficient; x(0) cannot be "
            "determined even without attacks"
        )
    return StackedObservation(y=y, phi=phi, horizon=horizon)


def secure_estimate_linear(sys: LinearSystem, y_seq):
    """Recover (x(0), per-step attack estimates) from a corrupted window.

    Returns the initial state and the error estimates reshaped to one row
    per time step (row k is the attack on y(k)).
    """
    stacked = stack_outputs(sys, y_seq)
    try:
        x0, solution = decoder.decode(stacked.phi, stacked.y)
    except RankDeficient as exc:  # pragma: no cover - caught by stack_outputs
        raise Unobservable(str(exc)) from exc
    e_steps = solution.error_vector.reshape(stacked.horizon, sys.n_outputs)
    return x0, e_steps


def check_recovery_conditions(sys: LinearSystem, horizon: int, s: int) -> bool:
    """True iff the window certifies exact recovery of any s-sparse attack.

    Both parts must hold: Phi has full column rank, and every 2s-column
    subset of the annihilator is linearly independent.
    """
    phi = build_observability(sys, horizon)
    if decoder.numerical_rank(phi) < sys.n_states:
        return False
    ann = decoder.compute_annihilator(phi)
    return decoder.certify_recoverability(ann.omega, s)
