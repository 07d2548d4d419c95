"""Wide-area secure estimator with a two-step commit delay.

The monitoring system receives every generator's angle measurements over
attackable channels, stacks a sliding window of them against the enlarged
discrete-time model of the reduced network, annihilates the unknown
initial state, and basis-pursuits the stacked unknowns: the per-step
channel corruptions E(k) and the trigonometric coupling residuals
epsilon(k) they induce in the swing dynamics.

Two structural facts shape the algorithm.  First, the columns that carry
a channel's two corruption routes (generator-to-generator and
generator-to-monitor) are identical, so only their sum is identifiable
before classification.  Second, epsilon(k) enters the measurable outputs
only two steps later, so the estimator commits the estimate for step k-2
at wall step k, deciding between the two single-type hypotheses by
evaluating the two-step consistency residual for each and keeping the
smaller.

When the closed loop applies corrections to the measurements generators
use, the corrections are known to the estimator and are folded into the
hypothesis construction; with no corrections the hypotheses reduce to the
plain rules (pure-m: epsilon = 0, pure-c: all mass on the
generator-to-generator side).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import decoder
from .decoder import ZERO_THRESHOLD
from .errors import (
    DimensionError,
    GridsecError,
    MissingMeasurement,
    RankDeficient,
)
from .grid import GeneratorParams, ReducedNetwork, coupling_gain


@dataclass(frozen=True)
class WacsSystem:
    """Enlarged state-space model plus the index maps that address it.

    State X stacks [theta_i, omega_i] per generator; outputs stack the
    angle channels in canonical order (self first, then neighbors
    ascending, generators ascending).  E stacks the channel corruptions
    [E^c_1..E^c_N, E^m_1..E^m_N] and epsilon stacks the per-generator
    [cos-block, sin-block] coupling residuals.
    """

    red: ReducedNetwork
    params: Tuple[GeneratorParams, ...]
    ts: float
    a: np.ndarray
    q: np.ndarray
    c: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d: np.ndarray
    channels: Tuple[Tuple[int, int], ...]
    pair_channels: Tuple[Tuple[int, int], ...]
    ych_index: Dict[Tuple[int, int], int]
    ec_index: Dict[Tuple[int, int], int]
    em_index: Dict[Tuple[int, int], int]
    eps_c_index: Dict[Tuple[int, int], int]
    eps_s_index: Dict[Tuple[int, int], int]
    gtilde: Dict[Tuple[int, int], float]
    phase: Dict[Tuple[int, int], float]

    @property
    def n_gens(self) -> int:
        return self.red.n_gens

    @property
    def edge_count(self) -> int:
        return self.red.edge_count

    @property
    def y_len(self) -> int:
        return self.n_gens + 2 * self.edge_count

    @property
    def e_len(self) -> int:
        return self.n_gens + 4 * self.edge_count

    @property
    def eps_len(self) -> int:
        return 4 * self.edge_count

    def measurement_vector(self, ym: Dict[Tuple[int, int], float]) -> np.ndarray:
        out = np.empty(self.y_len)
        for ch, row in self.ych_index.items():
            if ch not in ym:
                raise MissingMeasurement(f"channel {ch} absent from measurement snapshot")
            out[row] = ym[ch]
        return out

    def e_labels(self) -> Tuple[str, ...]:
        labels = [f"ec_{i + 1}_{j + 1}" for (i, j) in self.pair_channels]
        labels += [f"em_{i + 1}_{j + 1}" for (i, j) in self.channels]
        return tuple(labels)

    def eps_labels(self) -> Tuple[str, ...]:
        labels = [""] * self.eps_len
        for (i, j), idx in self.eps_c_index.items():
            labels[idx] = f"epsc_{i + 1}_{j + 1}"
        for (i, j), idx in self.eps_s_index.items():
            labels[idx] = f"epss_{i + 1}_{j + 1}"
        return tuple(labels)


def assemble_wacs(red: ReducedNetwork, params: Sequence[GeneratorParams], ts: float) -> WacsSystem:
    """Build the block matrices and index maps of the enlarged system."""
    n = red.n_gens
    if len(params) != n:
        raise DimensionError(f"{len(params)} parameter records for {n} generators")
    l_count = [len(red.neighbors[i]) for i in range(n)]
    two_l = sum(l_count)  # == 2L

    a = np.zeros((2 * n, 2 * n))
    q = np.zeros(2 * n)
    for i, p in enumerate(params):
        a[2 * i, 2 * i] = 1.0
        a[2 * i, 2 * i + 1] = ts
        a[2 * i + 1, 2 * i + 1] = p.alpha_for(ts)
        q[2 * i] = -ts * p.omega_s
        q[2 * i + 1] = p.beta_for(ts)

    channels = red.measurement_channels()
    pair_channels = red.pair_channels()
    y_len = n + two_l

    ych_index = {ch: row for row, ch in enumerate(channels)}

    c = np.zeros((y_len, 2 * n))
    for row, (_, j) in enumerate(channels):
        c[row, 2 * j] = 1.0  # the channel carries theta_j

    d1 = np.zeros((y_len, two_l))
    ec_index: Dict[Tuple[int, int], int] = {}
    ec_off = 0
    for i in range(n):
        row0 = ych_index[(i, i)]
        for rank, j in enumerate(red.neighbors[i]):
            d1[row0 + 1 + rank, ec_off + rank] = 1.0
            ec_index[(i, j)] = ec_off + rank
        ec_off += l_count[i]
    d2 = np.eye(y_len)
    d = np.hstack([d1, d2])

    em_index: Dict[Tuple[int, int], int] = {}
    for row, ch in enumerate(channels):
        em_index[ch] = two_l + row

    eps_c_index: Dict[Tuple[int, int], int] = {}
    eps_s_index: Dict[Tuple[int, int], int] = {}
    eps_off = 0
    for i in range(n):
        for rank, j in enumerate(red.neighbors[i]):
            eps_c_index[(i, j)] = eps_off + rank
            eps_s_index[(i, j)] = eps_off + l_count[i] + rank
        eps_off += 2 * l_count[i]

    gtilde = {}
    phase = {}
    for i in range(n):
        for j in red.neighbors[i]:
            gtilde[(i, j)] = coupling_gain(red, params, i, j, ts)
            phase[(i, j)] = red.phase_shift(i, j)

    return WacsSystem(
        red=red,
        params=tuple(params),
        ts=ts,
        a=a,
        q=q,
        c=c,
        d1=d1,
        d2=d2,
        d=d,
        channels=channels,
        pair_channels=pair_channels,
        ych_index=ych_index,
        ec_index=ec_index,
        em_index=em_index,
        eps_c_index=eps_c_index,
        eps_s_index=eps_s_index,
        gtilde=gtilde,
        phase=phase,
    )


@dataclass(frozen=True)
class CouplingMatrix:
    """Measurement-dependent coupling H(k): block diagonal, first rows zero."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if np.any(m[0::2, :] != 0.0):
            raise DimensionError("angle rows of the coupling matrix must be zero")
        object.__setattr__(self, "matrix", m)


def coupling_matrix(wacs: WacsSystem, ym: np.ndarray) -> CouplingMatrix:
    """Fill H(k) from a measurement snapshot.

    The speed row of generator i carries the sine coefficients on the
    cos-residual block and the negated cosine coefficients on the
    sin-residual block, so that H(k) epsilon(k) reproduces the coupling
    term of the swing update exactly.
    """
    ym = np.asarray(ym, dtype=float).reshape(-1)
    if ym.shape[0] != wacs.y_len:
        raise MissingMeasurement(f"snapshot has {ym.shape[0]} channels, expected {wacs.y_len}")
    h = np.zeros((2 * wacs.n_gens, wacs.eps_len))
    for i in range(wacs.n_gens):
        y_ii = ym[wacs.ych_index[(i, i)]]
        for j in wacs.red.neighbors[i]:
            angle = wacs.phase[(i, j)] + y_ii - ym[wacs.ych_index[(i, j)]]
            h[2 * i + 1, wacs.eps_c_index[(i, j)]] = wacs.gtilde[(i, j)] * math.sin(angle)
            h[2 * i + 1, wacs.eps_s_index[(i, j)]] = -wacs.gtilde[(i, j)] * math.cos(angle)
    return CouplingMatrix(matrix=h)


def epsilon_from_attacks(
    wacs: WacsSystem, e_vec: np.ndarray, correction: Optional[np.ndarray] = None
) -> np.ndarray:
    """Coupling residuals induced by channel corruptions.

    For each directed pair (i, j):

        eps_c = cos(em_ii - em_ij - ec_ij) - cos(em_ii - em_ij - c_ij)
        eps_s = sin(em_ii - em_ij - ec_ij) - sin(em_ii - em_ij - c_ij)

    where c_ij is the correction the receiving generator subtracted from
    that channel before computing its control (zero when the loop runs
    without protection, recovering the plain definition).
    """
    e_vec = np.asarray(e_vec, dtype=float).reshape(-1)
    if e_vec.shape[0] != wacs.e_len:
        raise DimensionError(f"attack vector has {e_vec.shape[0]} entries, expected {wacs.e_len}")
    if correction is None:
        correction = np.zeros(2 * wacs.edge_count)
    correction = np.asarray(correction, dtype=float).reshape(-1)
    eps = np.zeros(wacs.eps_len)
    for idx, (i, j) in enumerate(wacs.pair_channels):
        em_ii = e_vec[wacs.em_index[(i, i)]]
        em_ij = e_vec[wacs.em_index[(i, j)]]
        ec_ij = e_vec[wacs.ec_index[(i, j)]]
        attacked = em_ii - em_ij - ec_ij
        baseline = em_ii - em_ij - correction[idx]
        eps[wacs.eps_c_index[(i, j)]] = math.cos(attacked) - math.cos(baseline)
        eps[wacs.eps_s_index[(i, j)]] = math.sin(attacked) - math.sin(baseline)
    return eps


@dataclass(frozen=True)
class StackedWacsSystem:
    """One window of the stacked system: Ybar = Phi X(0) + Psi Ebar."""

    ybar: np.ndarray
    phi: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    omega: np.ndarray
    q1: np.ndarray
    r1: np.ndarray
    horizon: int

    @property
    def psi(self) -> np.ndarray:
        return np.hstack([self.psi1, self.psi2])


def stack_and_annihilate(
    wacs: WacsSystem,
    ym_window: Sequence[np.ndarray],
    h_window: Sequence[CouplingMatrix],
) -> StackedWacsSystem:
    """Assemble one sliding window and the annihilator of its state map.

    Needs at least two steps (the newest step's coupling residuals have no
    block column at all).  Raises RankDeficient when the stacked state map
    loses column rank.
    """
    horizon = len(ym_window)
    if horizon < 2:
        raise DimensionError("window must cover at least 2 steps")
    if len(h_window) < horizon - 1:
        raise DimensionError("coupling matrices missing for the window")
    y_len, e_len, eps_len = wacs.y_len, wacs.e_len, wacs.eps_len

    # observability blocks C A^k, reused for Psi2
    ca = [wacs.c]
    for _ in range(horizon - 1):
        ca.append(ca[-1] @ wacs.a)
    phi = np.vstack(ca[:horizon])

    # drift-corrected outputs: block k is Y(k) - C sum A^(k-1-m) q
    ybar = np.empty(horizon * y_len)
    drift = np.zeros(2 * wacs.n_gens)
    for k in range(horizon):
        yk = np.asarray(ym_window[k], dtype=float).reshape(-1)
        if yk.shape[0] != y_len:
            raise MissingMeasurement(f"window step {k} has {yk.shape[0]} channels")
        ybar[k * y_len:(k + 1) * y_len] = yk - wacs.c @ drift
        drift = wacs.a @ drift + wacs.q

    psi1 = np.kron(np.eye(horizon), wacs.d)
    psi2 = np.zeros((horizon * y_len, (horizon - 1) * eps_len))
    for m in range(horizon - 1):
        h_m = h_window[m].matrix
        for k in range(m + 1, horizon):
            block = ca[k - 1 - m] @ h_m
            psi2[k * y_len:(k + 1) * y_len, m * eps_len:(m + 1) * eps_len] = block

    ann = decoder.compute_annihilator(phi)
    return StackedWacsSystem(
        ybar=ybar,
        phi=phi,
        psi1=psi1,
        psi2=psi2,
        omega=ann.omega,
        q1=ann.q1,
        r1=ann.r1,
        horizon=horizon,
    )


def estimate_window(stacked: StackedWacsSystem) -> decoder.SparseSolution:
    """Minimum-l1 stacked unknowns subject to the annihilated window equations.

    The channel corruptions carry unit weight.  The coupling residuals are
    nuisance unknowns whose constraint columns are scaled by the tiny
    per-step coupling gains; at unit weight the minimizer would rather
    absorb their dynamic footprint into the newest corruption block than
    pay their full magnitude, which poisons the two-step classification.
    They are therefore weighted well below their smallest column gain, so
    the coupling footprint lands on the residual columns where it belongs
    while spurious residual mass still costs more than it can save.
    """
    m1 = stacked.omega @ stacked.psi1
    m2 = stacked.omega @ stacked.psi2
    gains = np.sum(np.abs(m2), axis=0)
    live = gains[gains > 1e-12]
    eps_weight = 0.01 * float(live.min()) if live.size else 1e-7
    weights = np.concatenate([
        np.ones(m1.shape[1]),
        np.full(m2.shape[1], eps_weight),
    ])
    return decoder.l1_minimize(
        np.hstack([m1, m2]), stacked.omega @ stacked.ybar, weights=weights
    )


def recover_initial_state(stacked: StackedWacsSystem, ebar: np.ndarray) -> np.ndarray:
    """X at the window start by back-substitution once Ebar is known."""
    return np.linalg.solve(
        stacked.r1, stacked.q1.T @ (stacked.ybar - stacked.psi @ ebar)
    )


def e_block(wacs: WacsSystem, ebar: np.ndarray, step: int) -> np.ndarray:
    return ebar[step * wacs.e_len:(step + 1) * wacs.e_len]


def eps_block(wacs: WacsSystem, ebar: np.ndarray, step: int, horizon: int) -> np.ndarray:
    offset = horizon * wacs.e_len
    return ebar[offset + step * wacs.eps_len:offset + (step + 1) * wacs.eps_len]


@dataclass(frozen=True)
class CorrectableBound:
    """Counting limits of the decoder over a window of the enlarged system."""

    q_total_max: int
    q_bar: int
    measurements_per_step: int
    max_average_measurements: int


def correctable_bound(n_gens: int, edge_count: int, horizon: int) -> CorrectableBound:
    """Correctable-corruption counts for N generators, L links, T steps.

    All four are exact integer evaluations of floor((N+2L)T/2 - N),
    floor(N/2 + L - N/T), floor(N/4 + L/2 - N/(2T)) and
    ceil(N/4 + L/2 - 1).
    """
    n, l, t = int(n_gens), int(edge_count), int(horizon)
    if min(n, l, t) < 1:
        raise DimensionError("bounds need N, L, T >= 1")
    q_total = ((n + 2 * l) * t - 2 * n) // 2
    q_bar = (n * t + 2 * l * t - 2 * n) // (2 * t)
    per_step = (n * t + 2 * l * t - 2 * n) // (4 * t)
    max_avg = -((-(n + 2 * l - 4)) // 4)
    return CorrectableBound(q_total, q_bar, per_step, max_avg)


ATTACK_NONE = "none"
ATTACK_C = "c-attack"
ATTACK_M = "m-attack"


@dataclass(frozen=True)
class AttackEstimate:
    """Committed reconstruction of the attack at one time step.

    ``e`` holds the raw channel corruptions (generator-to-generator block
    first, then generator-to-monitor), ``epsilon`` the coupling residuals
    implied by ``e`` alone, and ``residuals`` the two-step consistency
    norms (c-hypothesis, m-hypothesis) that drove the classification.
    """

    k: int
    e: np.ndarray
    epsilon: np.ndarray
    attack_type: str
    residuals: Tuple[float, float]
    ec_len: int

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float)
        eps = np.asarray(self.epsilon, dtype=float)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "epsilon", eps)
        if self.attack_type == ATTACK_M:
            if np.any(np.abs(e[: self.ec_len]) > ZERO_THRESHOLD) or np.any(np.abs(eps) > ZERO_THRESHOLD):
                raise DimensionError("monitor-side attack estimate carries channel-side mass")
        elif self.attack_type == ATTACK_C:
            if np.any(np.abs(e[self.ec_len:]) > ZERO_THRESHOLD):
                raise DimensionError("channel-side attack estimate carries monitor-side mass")
        elif self.attack_type == ATTACK_NONE:
            if np.any(np.abs(e) > ZERO_THRESHOLD):
                raise DimensionError("no-attack estimate carries attack mass")
        else:
            raise DimensionError(f"unknown attack type {self.attack_type!r}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": self.k,
                "type": self.attack_type,
                "residual_c": self.residuals[0],
                "residual_m": self.residuals[1],
                "e": [float(v) for v in self.e],
                "epsilon": [float(v) for v in self.epsilon],
            }
        )


def two_step_residual(
    wacs: WacsSystem,
    y_k: np.ndarray,
    x_km2: np.ndarray,
    h_km2: CouplingMatrix,
    eps_km2: np.ndarray,
    e_k: np.ndarray,
) -> float:
    """Norm of Y(k) - C A^2 X(k-2) - C A q - C q - C A H(k-2) eps(k-2) - D E(k)."""
    c, a, q = wacs.c, wacs.a, wacs.q
    predicted = (
        c @ (a @ (a @ x_km2)) + c @ (a @ q) + c @ q
        + c @ (a @ (h_km2.matrix @ eps_km2))
        + wacs.d @ e_k
    )
    return float(np.linalg.norm(np.asarray(y_k, dtype=float).reshape(-1) - predicted))


def classify_two_step(
    wacs: WacsSystem,
    e_est_km2: np.ndarray,
    e_est_k: np.ndarray,
    x_km2: np.ndarray,
    y_k: np.ndarray,
    h_km2: CouplingMatrix,
    k: int,
    correction: Optional[np.ndarray] = None,
) -> Tuple[AttackEstimate, np.ndarray]:
    """Decide the attack type at k-2 and return the committed estimate.

    Only per-channel sums are identifiable before classification, so both
    hypotheses redistribute the sums: the m-hypothesis puts all mass on the
    monitor side (coupling residuals come only from any applied
    correction), the c-hypothesis puts the pair-channel mass on the
    generator side and derives the residuals it would have caused.  The
    two-step equation is evaluated for both; the strictly smaller norm
    wins for the c-hypothesis, ties go to the m-hypothesis.

    Returns the estimate plus the effective coupling residual vector for
    rolling the committed state forward (they differ from the estimate's
    own ``epsilon`` only when corrections were active).
    """
    two_l = 2 * wacs.edge_count
    if correction is None:
        correction = np.zeros(two_l)
    correction = np.asarray(correction, dtype=float).reshape(-1)

    # identifiable per-channel sums at k-2
    sums = np.zeros(wacs.e_len)
    for ch in wacs.pair_channels:
        sums[wacs.em_index[ch]] = e_est_km2[wacs.ec_index[ch]] + e_est_km2[wacs.em_index[ch]]
    for i in range(wacs.n_gens):
        sums[wacs.em_index[(i, i)]] = e_est_km2[wacs.em_index[(i, i)]]

    raw_peak = float(np.max(np.abs(sums), initial=0.0))
    if raw_peak < ZERO_THRESHOLD and float(np.max(np.abs(correction), initial=0.0)) < ZERO_THRESHOLD:
        zero = np.zeros(wacs.e_len)
        est = AttackEstimate(
            k=k,
            e=zero,
            epsilon=np.zeros(wacs.eps_len),
            attack_type=ATTACK_NONE,
            residuals=(0.0, 0.0),
            ec_len=two_l,
        )
        return est, np.zeros(wacs.eps_len)

    # m-hypothesis: all mass on the monitor side
    e_m = np.zeros(wacs.e_len)
    e_m[two_l:] = sums[two_l:]
    eps_m_eff = epsilon_from_attacks(wacs, e_m, correction)

    # c-hypothesis: pair-channel mass on the generator side, self mass dropped
    e_c = np.zeros(wacs.e_len)
    for ch in wacs.pair_channels:
        e_c[wacs.ec_index[ch]] = sums[wacs.em_index[ch]]
    eps_c_eff = epsilon_from_attacks(wacs, e_c, correction)

    r_m = two_step_residual(wacs, y_k, x_km2, h_km2, eps_m_eff, e_est_k)
    r_c = two_step_residual(wacs, y_k, x_km2, h_km2, eps_c_eff, e_est_k)

    if raw_peak < ZERO_THRESHOLD:
        # corrections active but no residual attack: commit none, keep the
        # correction-induced residuals for the rollout
        est = AttackEstimate(
            k=k,
            e=np.zeros(wacs.e_len),
            epsilon=np.zeros(wacs.eps_len),
            attack_type=ATTACK_NONE,
            residuals=(r_c, r_m),
            ec_len=two_l,
        )
        return est, epsilon_from_attacks(wacs, np.zeros(wacs.e_len), correction)

    if r_c < r_m:
        est = AttackEstimate(
            k=k,
            e=e_c,
            epsilon=epsilon_from_attacks(wacs, e_c),
            attack_type=ATTACK_C,
            residuals=(r_c, r_m),
            ec_len=two_l,
        )
        return est, eps_c_eff
    est = AttackEstimate(
        k=k,
        e=e_m,
        epsilon=np.zeros(wacs.eps_len),
        attack_type=ATTACK_M,
        residuals=(r_c, r_m),
        ec_len=two_l,
    )
    return est, eps_m_eff


class WacsEstimator:
    """Sliding-window driver: observe, solve, classify, commit, roll forward.

    One window of fixed length is re-solved at every step once enough
    measurements exist; the committed output of wall step k is the
    estimate for step k-2 (the first full window back-fills the older
    steps it can already decide).  The committed state trajectory is the
    decoded window-start state rolled forward with the committed coupling
    residuals; it supplies the X(k-2) needed by the classification.

    Callers must report, after every ``observe``, the correction that was
    actually applied to the generators' control path at that step (zeros
    when unprotected) via ``note_correction``.
    """

    def __init__(self, red: ReducedNetwork, params, ts: float, window: int = 5):
        if window < 3:
            raise DimensionError("window must be at least 3 to commit with a 2-step delay")
        self.sys = assemble_wacs(red, params, ts)
        self.window = int(window)
        self._ym: List[np.ndarray] = []
        self._h: List[CouplingMatrix] = []
        self._corr: List[np.ndarray] = []
        self.committed: Dict[int, AttackEstimate] = {}
        self._eps_eff: Dict[int, np.ndarray] = {}
        self._x_at: Optional[Tuple[int, np.ndarray]] = None
        self.errors: List[str] = []

    @property
    def step_count(self) -> int:
        return len(self._ym)

    def control_correction(self, step: int) -> np.ndarray:
        """Pair-channel correction to apply at ``step``: the committed
        generator-side estimate from two steps earlier, zeros otherwise."""
        two_l = 2 * self.sys.edge_count
        est = self.committed.get(step - 2)
        if est is None:
            return np.zeros(two_l)
        return est.e[:two_l].copy()

    def note_correction(self, correction) -> None:
        if len(self._corr) != len(self._ym) - 1:
            raise DimensionError("note_correction must follow each observe exactly once")
        self._corr.append(np.asarray(correction, dtype=float).reshape(-1).copy())

    def observe(self, ym_vec) -> List[AttackEstimate]:
        """Ingest the wall-step measurement snapshot; return new commits."""
        if len(self._corr) != len(self._ym):
            raise DimensionError("previous step's correction was never noted")
        ym_vec = np.asarray(ym_vec, dtype=float).reshape(-1).copy()
        self._ym.append(ym_vec)
        self._h.append(coupling_matrix(self.sys, ym_vec))
        k = len(self._ym) - 1
        if k + 1 < self.window:
            return []
        start = k + 1 - self.window
        try:
            stacked = stack_and_annihilate(
                self.sys, self._ym[start:k + 1], self._h[start:k + 1]
            )
            ebar = estimate_window(stacked).error_vector
        except GridsecError as exc:
            self.errors.append(f"step {k}: {exc}")
            self._skip_commit(k - 2)
            return []
        if self._x_at is None:
            x0 = recover_initial_state(stacked, ebar)
            self._x_at = (start, x0)
            return self._commit_range(stacked, ebar, start, range(start, k - 1))
        return self._commit_range(stacked, ebar, start, [k - 2])

    def _commit_range(self, stacked, ebar, start, targets) -> List[AttackEstimate]:
        out = []
        for target in targets:
            x_target = self._roll_to(target)
            rel = target - start
            est, eps_eff = classify_two_step(
                self.sys,
                e_block(self.sys, ebar, rel),
                e_block(self.sys, ebar, rel + 2),
                x_target,
                self._ym[target + 2],
                self._h[target],
                k=target,
                correction=self._corr[target],
            )
            self.committed[target] = est
            self._eps_eff[target] = eps_eff
            out.append(est)
        return out

    def _roll_to(self, target: int) -> np.ndarray:
        """Advance the committed state to ``target`` using committed residuals."""
        at, x = self._x_at
        while at < target:
            x = self.sys.a @ x + self.sys.q + self._h[at].matrix @ self._eps_eff[at]
            at += 1
        self._x_at = (at, x)
        return x

    def _skip_commit(self, target: int) -> None:
        # solver failed: keep the rollout chain alive by assuming no attack
        # beyond the known correction at that step
        if target < 0 or self._x_at is None or target in self._eps_eff:
            return
        self._eps_eff[target] = epsilon_from_attacks(
            self.sys, np.zeros(self.sys.e_len), self._corr[target]
        )
