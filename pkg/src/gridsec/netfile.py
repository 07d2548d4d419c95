"""Network description files.

A network is a JSON document; angles are degrees and speeds Hz at the file
level and are converted to radians / rad/s exactly once here.  Schema
(1-based bus ids, generators occupy buses 1..N):

    {
      "name": "ring3",
      "omega_s_hz": 60.0,
      "bus_count": 6,
      "generator_count": 3,
      "lines": [[from_bus, to_bus, g_pu, b_pu], ...],
      "shunts": [[bus, g_pu, b_pu], ...],              # optional
      "generators": [
        {"inertia_s": 4.0, "damping": 0.0, "storage_gain": 6.0,
         "voltage_pu": 1.0, "theta0_deg": 2.0,
         "omega0_hz": null,                # null -> nominal speed
         "mechanical_power_pu": null},     # null -> balance at theta0
        ...
      ]
    }

A file whose "lines" or generator parameter values are null is a
placeholder whose numbers must be sourced by the user; loading one raises
ParamFileMissing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import List, Tuple

import numpy as np

from . import grid
from .errors import NetworkParseError, ParamFileMissing

_GEN_FIELDS = ("inertia_s", "damping", "storage_gain", "voltage_pu", "theta0_deg")


@dataclass(frozen=True)
class PreparedPlant:
    """Everything the simulator needs: reduced network, params, initial state."""

    name: str
    network: grid.BusNetwork
    reduced: grid.ReducedNetwork
    params: Tuple[grid.GeneratorParams, ...]
    initial_state: grid.GridState
    omega_s: float
    ts_hint: float = grid.DEFAULT_TIME_STEP


def resolve_network_path(spec: str) -> Path:
    """Map ``builtin:<name>`` to the packaged data file, else treat as a path."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        return Path(str(resources.files("gridsec.data").joinpath(f"{name}.json")))
    return Path(spec)


def load_network(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ParamFileMissing(f"network file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise NetworkParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise NetworkParseError(f"{path}: top level must be an object")
    return doc


def prepare_plant(path) -> PreparedPlant:
    """Load, validate, Kron-reduce, and balance a network file."""
    path = Path(path)
    doc = load_network(path)
    name = str(doc.get("name", path.stem))

    for key in ("omega_s_hz", "bus_count", "generator_count", "lines", "generators"):
        if key not in doc:
            raise NetworkParseError(f"{path}: missing field '{key}'")
    if doc["lines"] is None or doc["generators"] is None:
        raise ParamFileMissing(
            f"{path}: line/machine parameters are unsourced placeholders; "
            "fill them in from your parameter reference before running"
        )

    n_buses = int(doc["bus_count"])
    n_gens = int(doc["generator_count"])
    omega_s = 2.0 * math.pi * float(doc["omega_s_hz"])

    lines: List[grid.Line] = []
    for entry in doc["lines"]:
        if entry is None or any(v is None for v in entry):
            raise ParamFileMissing(f"{path}: a line entry has unsourced values")
        if len(entry) != 4:
            raise NetworkParseError(f"{path}: line entries are [from, to, g, b], got {entry}")
        i, j, g, b = entry
        lines.append(grid.Line(i=int(i) - 1, j=int(j) - 1, g=float(g), b=float(b)))

    shunts = [0j] * n_buses
    for entry in doc.get("shunts", []) or []:
        bus, g, b = entry
        shunts[int(bus) - 1] = complex(float(g), float(b))

    gens = doc["generators"]
    if len(gens) != n_gens:
        raise NetworkParseError(f"{path}: {len(gens)} generator records for {n_gens} generators")

    theta0 = np.empty(n_gens)
    omega0 = np.empty(n_gens)
    raw_params = []
    for idx, rec in enumerate(gens):
        if rec is None:
            raise ParamFileMissing(f"{path}: generator {idx + 1} record is a placeholder")
        missing = [f for f in _GEN_FIELDS if rec.get(f) is None]
        if missing:
            raise ParamFileMissing(
                f"{path}: generator {idx + 1} has unsourced fields {missing}"
            )
        theta0[idx] = math.radians(float(rec["theta0_deg"]))
        omega0_hz = rec.get("omega0_hz")
        omega0[idx] = 2.0 * math.pi * float(omega0_hz) if omega0_hz is not None else omega_s
        raw_params.append(rec)

    try:
        network = grid.BusNetwork(
            n_buses=n_buses, n_gens=n_gens, lines=tuple(lines), shunts=tuple(shunts)
        )
        reduced = grid.kron_reduce(network)
    except NetworkParseError as exc:
        raise NetworkParseError(f"{path}: {exc}") from exc

    voltages = [float(rec["voltage_pu"]) for rec in raw_params]
    balance = grid.electrical_power(reduced, voltages, theta0)

    params = []
    for idx, rec in enumerate(raw_params):
        pm = rec.get("mechanical_power_pu")
        params.append(
            grid.GeneratorParams(
                inertia=float(rec["inertia_s"]),
                damping=float(rec["damping"]),
                storage_gain=float(rec["storage_gain"]),
                voltage=voltages[idx],
                mechanical_power=float(pm) if pm is not None else float(balance[idx]),
                omega_s=omega_s,
            )
        )

    return PreparedPlant(
        name=name,
        network=network,
        reduced=reduced,
        params=tuple(params),
        initial_state=grid.GridState(theta=theta0, omega=omega0),
        omega_s=omega_s,
        ts_hint=float(doc.get("ts_hint", grid.DEFAULT_TIME_STEP)),
    )
