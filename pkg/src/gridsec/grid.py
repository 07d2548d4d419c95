"""Physical plant: admittance network, Kron reduction, swing dynamics.

The bus network holds generator terminal buses (indices 0..N-1) and load
buses.  ``kron_reduce`` eliminates the load buses through the Schur
complement of the complex bus admittance matrix, leaving a connected
network of electro-mechanical oscillators coupled through equivalent line
admittances.  The discrete-time plant applies forward Euler to the swing
dynamics with the storage feedback-linearization control law baked in:
the control, and hence the closed loop, is driven by the phase-angle
measurements each generator received, which is where channel attacks bite.

All angles are radians and all speeds rad/s internally.  Generator indices
are 0-based throughout this module; file ingestion converts the 1-based
bus ids exactly once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from .errors import (
    Disconnected,
    DimensionError,
    MissingNeighborMeasurement,
    NetworkParseError,
    SingularLoadBlock,
)

# off-diagonal magnitudes below this are treated as absent reduced lines
_EDGE_TOL = 1e-9

DEFAULT_TIME_STEP = 0.01  # s


@dataclass(frozen=True)
class Line:
    """Transmission line between buses i and j with admittance g + jb."""

    i: int
    j: int
    g: float
    b: float

    def __post_init__(self):
        if self.i == self.j:
            raise NetworkParseError(f"line endpoints coincide at bus {self.i}")
        if self.g < 0.0:
            raise NetworkParseError(f"line ({self.i},{self.j}): conductance must be >= 0")
        if self.b <= 0.0:
            raise NetworkParseError(f"line ({self.i},{self.j}): susceptance must be > 0")

    @property
    def admittance(self) -> complex:
        return complex(self.g, self.b)


@dataclass(frozen=True)
class BusNetwork:
    """Bus-level network: generator terminals first, then load buses."""

    n_buses: int
    n_gens: int
    lines: Tuple[Line, ...]
    shunts: Tuple[complex, ...] = ()

    def __post_init__(self):
        if not (0 < self.n_gens <= self.n_buses):
            raise NetworkParseError(f"{self.n_gens} generators for {self.n_buses} buses")
        lines = tuple(self.lines)
        seen = set()
        for line in lines:
            if not (0 <= line.i < self.n_buses and 0 <= line.j < self.n_buses):
                raise NetworkParseError(f"line ({line.i},{line.j}) references a missing bus")
            key = (min(line.i, line.j), max(line.i, line.j))
            if key in seen:
                raise NetworkParseError(f"duplicate line between buses {key}")
            seen.add(key)
        object.__setattr__(self, "lines", lines)
        shunts = tuple(self.shunts) if self.shunts else (0j,) * self.n_buses
        if len(shunts) != self.n_buses:
            raise NetworkParseError(f"{len(shunts)} shunts for {self.n_buses} buses")
        object.__setattr__(self, "shunts", shunts)
        if not _connected(self.n_buses, [(l.i, l.j) for l in lines]):
            raise Disconnected("bus network graph is not connected")

    def admittance_matrix(self) -> np.ndarray:
        y = np.zeros((self.n_buses, self.n_buses), dtype=complex)
        for line in self.lines:
            y[line.i, line.j] -= line.admittance
            y[line.j, line.i] -= line.admittance
            y[line.i, line.i] += line.admittance
            y[line.j, line.j] += line.admittance
        for bus, shunt in enumerate(self.shunts):
            y[bus, bus] += shunt
        return y


def _connected(n, edges) -> bool:
    if n == 0:
        return False
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == n


@dataclass(frozen=True)
class ReducedNetwork:
    """Generator-only oscillator network with equivalent admittances.

    ``couplings`` maps ordered generator pairs (i, j), i < j, to the
    equivalent admittance of the reduced line between them.
    """

    n_gens: int
    couplings: Mapping[Tuple[int, int], complex]
    neighbors: Tuple[Tuple[int, ...], ...] = field(init=False)
    edge_count: int = field(init=False)

    def __post_init__(self):
        couplings = dict(self.couplings)
        for (i, j) in couplings:
            if not (0 <= i < j < self.n_gens):
                raise NetworkParseError(f"coupling ({i},{j}) is not an ordered generator pair")
        object.__setattr__(self, "couplings", couplings)
        neigh = [set() for _ in range(self.n_gens)]
        for (i, j) in couplings:
            neigh[i].add(j)
            neigh[j].add(i)
        object.__setattr__(self, "neighbors", tuple(tuple(sorted(s)) for s in neigh))
        object.__setattr__(self, "edge_count", len(couplings))
        if not _connected(self.n_gens, list(couplings)):
            raise Disconnected("reduced generator graph is not connected")

    def admittance(self, i: int, j: int) -> complex:
        return self.couplings[(i, j) if i < j else (j, i)]

    def magnitude(self, i: int, j: int) -> float:
        return abs(self.admittance(i, j))

    def phase_shift(self, i: int, j: int) -> float:
        y = self.admittance(i, j)
        return math.atan2(y.real, y.imag)  # arctan(g/b) for b > 0

    def edges(self) -> Tuple[Tuple[int, int], ...]:
        return tuple(sorted(self.couplings))

    def pair_channels(self) -> Tuple[Tuple[int, int], ...]:
        """Directed channels (receiver i, neighbor j): one per e^c signal."""
        out = []
        for i in range(self.n_gens):
            out.extend((i, j) for j in self.neighbors[i])
        return tuple(out)

    def measurement_channels(self) -> Tuple[Tuple[int, int], ...]:
        """Canonical order of (i, j) channels: self first, then neighbors ascending."""
        out = []
        for i in range(self.n_gens):
            out.append((i, i))
            out.extend((i, j) for j in self.neighbors[i])
        return tuple(out)


def kron_reduce(net: BusNetwork) -> ReducedNetwork:
    """Eliminate load buses via the Schur complement of the admittance matrix.

    The reduced off-diagonal entries give the equivalent line admittances;
    the result must remain a connected generator graph.
    """
    n = net.n_gens
    y = net.admittance_matrix()
    if net.n_buses == n:
        reduced = y
    else:
        y_gg = y[:n, :n]
        y_gl = y[:n, n:]
        y_lg = y[n:, :n]
        y_ll = y[n:, n:]
        try:
            elim = np.linalg.solve(y_ll, y_lg)
        except np.linalg.LinAlgError as exc:
            raise SingularLoadBlock("load-bus admittance block is singular") from exc
        if not np.all(np.isfinite(elim)):
            raise SingularLoadBlock("load-bus elimination produced non-finite entries")
        reduced = y_gg - y_gl @ elim
    couplings = {}
    for i in range(n):
        for j in range(i + 1, n):
            # symmetrize to remove the roundoff skew of the Schur complement
            y_eq = -0.5 * (reduced[i, j] + reduced[j, i])
            if abs(y_eq) > _EDGE_TOL:
                couplings[(i, j)] = y_eq
    return ReducedNetwork(n_gens=n, couplings=couplings)


@dataclass(frozen=True)
class GeneratorParams:
    """Per-machine constants for the swing dynamics and storage control."""

    inertia: float          # H_i, s
    damping: float          # d_i
    storage_gain: float     # F_i
    voltage: float          # E_i, p.u.
    mechanical_power: float  # P_i^m, p.u.
    omega_s: float          # nominal speed, rad/s

    def __post_init__(self):
        if self.inertia <= 0.0:
            raise NetworkParseError("generator inertia must be positive")
        if self.storage_gain < 0.0:
            raise NetworkParseError("storage gain must be non-negative")
        if self.omega_s <= 0.0:
            raise NetworkParseError("nominal speed must be positive")

    def alpha_for(self, ts: float) -> float:
        return 1.0 - ts * (self.damping + self.storage_gain) / (2.0 * self.inertia)

    def beta_for(self, ts: float) -> float:
        return ts * self.storage_gain * self.omega_s / (2.0 * self.inertia)


@dataclass(frozen=True)
class GridState:
    """Rotor angles (rad) and speeds (rad/s), one entry per generator."""

    theta: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        omega = np.asarray(self.omega, dtype=float).reshape(-1)
        if theta.shape != omega.shape:
            raise DimensionError("theta and omega lengths differ")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(omega))):
            raise DimensionError("grid state entries must be finite")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "omega", omega)

    def as_vector(self) -> np.ndarray:
        """Interleaved [theta_1, omega_1, theta_2, omega_2, ...]."""
        out = np.empty(2 * self.theta.shape[0])
        out[0::2] = self.theta
        out[1::2] = self.omega
        return out

    @staticmethod
    def from_vector(x) -> "GridState":
        x = np.asarray(x, dtype=float).reshape(-1)
        return GridState(theta=x[0::2].copy(), omega=x[1::2].copy())


def electrical_power(red: ReducedNetwork, voltages: Sequence[float], theta) -> np.ndarray:
    """P_i^e = sum over neighbors of E_i E_j |y_ij| sin(theta_i - theta_j + phi_ij)."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    power = np.zeros(red.n_gens)
    for i in range(red.n_gens):
        for j in red.neighbors[i]:
            power[i] += (
                voltages[i]
                * voltages[j]
                * red.magnitude(i, j)
                * math.sin(theta[i] - theta[j] + red.phase_shift(i, j))
            )
    return power


def p_meas(red: ReducedNetwork, voltages: Sequence[float], i: int, yc_row: Mapping[int, float]) -> float:
    """Electrical power as generator i computes it from received angle measurements."""
    if i not in yc_row:
        raise MissingNeighborMeasurement(f"generator {i} lacks its own angle measurement")
    total = 0.0
    for j in red.neighbors[i]:
        if j not in yc_row:
            raise MissingNeighborMeasurement(f"generator {i} lacks the measurement from {j}")
        total += (
            voltages[i]
            * voltages[j]
            * red.magnitude(i, j)
            * math.sin(yc_row[i] - yc_row[j] + red.phase_shift(i, j))
        )
    return total


def storage_control(params: GeneratorParams, omega_i: float, p_meas_i: float) -> float:
    """Storage injection U_i = -P_i^m + P_i,meas - F_i (omega_i - omega_s)."""
    return -params.mechanical_power + p_meas_i - params.storage_gain * (omega_i - params.omega_s)


def euler_step(
    red: ReducedNetwork,
    params: Sequence[GeneratorParams],
    state: GridState,
    yc: Mapping[Tuple[int, int], float],
    ts: float,
) -> GridState:
    """One forward-Euler step of the closed-loop swing dynamics.

    ``yc`` maps (receiver, source) to the angle measurement the receiver
    used; the self channel (i, i) is the locally measured angle.  With
    uncorrupted measurements the two sine terms cancel pairwise and the
    speed recursion reduces to the scalar alpha/beta update.
    """
    if ts <= 0.0:
        raise DimensionError("time step must be positive")
    n = red.n_gens
    theta = state.theta
    omega = state.omega
    new_theta = np.empty(n)
    new_omega = np.empty(n)
    for i in range(n):
        p = params[i]
        new_theta[i] = theta[i] + ts * (omega[i] - p.omega_s)
        coupling = 0.0
        for j in red.neighbors[i]:
            try:
                y_ii = yc[(i, i)]
                y_ij = yc[(i, j)]
            except KeyError as exc:
                raise MissingNeighborMeasurement(f"channel {exc.args[0]} absent from yc") from exc
            gtilde = -ts * p.voltage * params[j].voltage * red.magnitude(i, j) / (2.0 * p.inertia)
            shift = red.phase_shift(i, j)
            coupling += gtilde * (
                math.sin(theta[i] - theta[j] + shift) - math.sin(y_ii - y_ij + shift)
            )
        # algebraically alpha*omega + beta; the deviation form keeps the
        # synchronous speed an exact fixed point in floating point
        new_omega[i] = (
            omega[i]
            - ts * p.damping / (2.0 * p.inertia) * omega[i]
            - ts * p.storage_gain / (2.0 * p.inertia) * (omega[i] - p.omega_s)
            + coupling
        )
    return GridState(theta=new_theta, omega=new_omega)


def coupling_gain(red: ReducedNetwork, params: Sequence[GeneratorParams], i: int, j: int, ts: float) -> float:
    """G~_ij = -T_s E_i E_j |y_ij| / (2 H_i); the per-link gain in the speed update."""
    return -ts * params[i].voltage * params[j].voltage * red.magnitude(i, j) / (2.0 * params[i].inertia)


def uncorrupted_measurements(red: ReducedNetwork, theta) -> Dict[Tuple[int, int], float]:
    """The y^c map when every channel is clean: y_ij = theta_j."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    yc = {}
    for i in range(red.n_gens):
        yc[(i, i)] = float(theta[i])
        for j in red.neighbors[i]:
            yc[(i, j)] = float(theta[j])
    return yc
