"""Closed-loop scenario engine.

Each step: the scenario injects attacks into the channel measurements,
the monitoring system (when protection is on) ingests the forwarded
measurements and may commit the estimate for two steps back, the
generators correct their control-path measurements with the freshest
committed channel estimates, compute their storage controls, and the
plant advances one forward-Euler step.

Everything that happened is appended to the trace; runs with identical
configuration and seed are bitwise reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import grid
from .errors import ConfigError
from .netfile import prepare_plant, resolve_network_path
from .scenario import AttackScenario, FixedTarget, TYPE_NONE
from .wacs import ATTACK_C, ATTACK_M, ATTACK_NONE, AttackEstimate, WacsEstimator

_TYPE_OF_COMMIT = {ATTACK_C: "c", ATTACK_M: "m", ATTACK_NONE: "none"}


@dataclass
class SimulationConfig:
    network: str
    horizon: int
    scenario: AttackScenario
    ts: float = grid.DEFAULT_TIME_STEP
    window: int = 5
    protection: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.horizon < self.window:
            raise ConfigError("horizon must be at least the estimator window")
        if self.ts <= 0.0:
            raise ConfigError("time step must be positive")

    @staticmethod
    def from_dict(doc: dict) -> "SimulationConfig":
        try:
            scen = doc.get("scenario", {})
            fixed = tuple(
                FixedTarget(
                    receiver=int(t["from"]) - 1,
                    source=int(t["to"]) - 1,
                    offset=np.radians(float(t["offset_deg"])),
                )
                for t in scen.get("fixed_targets", [])
            )
            scenario = AttackScenario(
                start_step=int(scen.get("start_step", 0)),
                type_policy=str(scen.get("type_policy", "coin")),
                fixed_targets=fixed,
                random_targets=int(scen.get("random_targets", 0)),
                random_sigma=np.radians(float(scen.get("random_sigma_deg", 0.0))),
                random_pool=(
                    int(scen["random_pool"]) - 1 if scen.get("random_pool") is not None else None
                ),
                resample=str(scen.get("resample", "step")),
                seed=scen.get("seed"),
            )
            protection = doc.get("protection", "secure-estimation")
            if protection not in ("off", "secure-estimation"):
                raise ConfigError(f"protection must be 'off' or 'secure-estimation', got {protection!r}")
            return SimulationConfig(
                network=str(doc["network"]),
                horizon=int(doc["horizon"]),
                scenario=scenario,
                ts=float(doc.get("ts", grid.DEFAULT_TIME_STEP)),
                window=int(doc.get("window", 5)),
                protection=protection == "secure-estimation",
                seed=int(doc.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad simulation config: {exc}") from exc

    @staticmethod
    def from_file(path) -> "SimulationConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return SimulationConfig.from_dict(doc)


@dataclass
class SimulationTrace:
    """Per-step record of everything the closed loop did."""

    config: SimulationConfig
    plant_name: str
    n_gens: int
    omega_s: float
    pair_channels: tuple
    channels: tuple
    theta: np.ndarray
    omega: np.ndarray
    ec_true: np.ndarray
    em_true: np.ndarray
    ym: np.ndarray
    corrections: np.ndarray
    controls: np.ndarray
    injected_type: List[str] = field(default_factory=list)
    committed: Dict[int, AttackEstimate] = field(default_factory=dict)
    arrival: Dict[int, int] = field(default_factory=dict)
    estimator_errors: List[str] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.injected_type)

    def committed_type(self, step: int) -> Optional[str]:
        est = self.committed.get(step)
        return _TYPE_OF_COMMIT[est.attack_type] if est is not None else None

    def classification_flags(self):
        """(step, correct) for every committed step that was attacked."""
        out = []
        for step, est in sorted(self.committed.items()):
            truth = self.injected_type[step]
            if truth == TYPE_NONE:
                continue
            out.append((step, _TYPE_OF_COMMIT[est.attack_type] == truth))
        return out

    def classification_accuracy(self) -> float:
        flags = self.classification_flags()
        if not flags:
            return 1.0
        return sum(ok for _, ok in flags) / len(flags)

    def injected_e_matrix(self) -> np.ndarray:
        """Channel-by-step matrix of injected attacks (e^c rows then e^m rows)."""
        return np.vstack([self.ec_true.T, self.em_true.T])

    def committed_e_matrix(self) -> np.ndarray:
        """Same layout as injected_e_matrix; NaN marks uncommitted steps."""
        n_rows = len(self.pair_channels) + len(self.channels)
        out = np.full((n_rows, self.horizon), np.nan)
        for step, est in self.committed.items():
            out[:, step] = est.e
        return out

    def max_theta_deviation(self, upto: Optional[int] = None) -> float:
        """Largest |theta - theta(0)| over generators and steps (rad)."""
        end = self.horizon if upto is None else min(upto + 1, self.horizon)
        dev = np.abs(self.theta[:end] - self.theta[0])
        return float(dev.max()) if dev.size else 0.0

    def summary(self) -> dict:
        theta_deg = np.degrees(self.theta)
        omega_hz = self.omega / (2.0 * np.pi)
        pair_spread = 0.0
        for i in range(self.n_gens):
            for j in range(i + 1, self.n_gens):
                pair_spread = max(
                    pair_spread, float(np.max(np.abs(theta_deg[:, i] - theta_deg[:, j])))
                )
        flags = self.classification_flags()
        return {
            "plant": self.plant_name,
            "horizon": self.horizon,
            "protection": "secure-estimation" if self.config.protection else "off",
            "seed": self.config.seed,
            "max_theta_dev_deg": float(np.degrees(self.max_theta_deviation())),
            "omega_min_hz": float(omega_hz.min()),
            "omega_max_hz": float(omega_hz.max()),
            "classification_accuracy": self.classification_accuracy(),
            "attacked_committed_steps": len(flags),
            "committed_steps": len(self.committed),
            "estimator_errors": len(self.estimator_errors),
            "sync_trip_flag": bool(pair_spread > 90.0),
            "max_pair_angle_deg": pair_spread,
        }


def run_simulation(config: SimulationConfig) -> SimulationTrace:
    """Run the closed loop for ``config.horizon`` steps and return the trace."""
    plant = prepare_plant(resolve_network_path(config.network))
    red, params = plant.reduced, plant.params
    config.scenario.validate(red)

    estimator = None
    if config.protection:
        estimator = WacsEstimator(red, params, config.ts, window=config.window)
    wacs_sys = estimator.sys if estimator else None

    seed = config.scenario.seed if config.scenario.seed is not None else config.seed
    rng = np.random.default_rng(seed)

    n = red.n_gens
    pair_channels = red.pair_channels()
    channels = red.measurement_channels()
    horizon = config.horizon

    trace = SimulationTrace(
        config=config,
        plant_name=plant.name,
        n_gens=n,
        omega_s=plant.omega_s,
        pair_channels=pair_channels,
        channels=channels,
        theta=np.zeros((horizon, n)),
        omega=np.zeros((horizon, n)),
        ec_true=np.zeros((horizon, len(pair_channels))),
        em_true=np.zeros((horizon, len(channels))),
        ym=np.zeros((horizon, len(channels))),
        corrections=np.zeros((horizon, len(pair_channels))),
        controls=np.zeros((horizon, n)),
    )

    voltages = [p.voltage for p in params]
    state = plant.initial_state
    for k in range(horizon):
        kind, ec_map, em_map = config.scenario.inject(red, rng, k)
        trace.injected_type.append(kind)
        trace.theta[k] = state.theta
        trace.omega[k] = state.omega

        # raw received measurements, then the forwarded copies
        yc_raw = grid.uncorrupted_measurements(red, state.theta)
        for ch, val in ec_map.items():
            yc_raw[ch] += val
        ym = {ch: yc_raw[ch] + em_map.get(ch, 0.0) for ch in channels}

        for idx, ch in enumerate(pair_channels):
            trace.ec_true[k, idx] = ec_map.get(ch, 0.0)
        for idx, ch in enumerate(channels):
            trace.em_true[k, idx] = em_map.get(ch, 0.0)
            trace.ym[k, idx] = ym[ch]

        correction = np.zeros(len(pair_channels))
        if estimator is not None:
            before = len(estimator.errors)
            commits = estimator.observe(wacs_sys.measurement_vector(ym))
            trace.estimator_errors.extend(estimator.errors[before:])
            for est in commits:
                trace.committed[est.k] = est
                trace.arrival[est.k] = k
            correction = estimator.control_correction(k)
            estimator.note_correction(correction)
        trace.corrections[k] = correction

        # control-path measurements: committed channel estimates subtracted
        yc_used = dict(yc_raw)
        for idx, ch in enumerate(pair_channels):
            yc_used[ch] -= correction[idx]

        for i in range(n):
            row = {j: yc_used[(i, j)] for j in red.neighbors[i]}
            row[i] = yc_used[(i, i)]
            pm = grid.p_meas(red, voltages, i, row)
            trace.controls[k, i] = grid.storage_control(params[i], state.omega[i], pm)

        state = grid.euler_step(red, params, state, yc_used, config.ts)

    return trace
