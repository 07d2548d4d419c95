"""Attack scenarios: who gets corrupted, when, and by how much.

A scenario injects at most one attack type per step: either the
generator-to-generator channels (a c-attack, which bends the control
inputs) or the generator-to-monitor channels (an m-attack, which bends
only what the monitoring system sees).  Targets are a fixed list of
(receiver, source, offset) channels plus a number of randomly drawn
channels with Gaussian amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ConfigError, ParamFileMissing
from .grid import ReducedNetwork
from .netfile import PreparedPlant, prepare_plant

TYPE_NONE = "none"
TYPE_C = "c"
TYPE_M = "m"

# the demo attack on the 10-generator system: a constant 90 degree offset
# on the channel from generator 2 to generator 1
DEMO_FIXED_OFFSET = math.radians(90.0)
DEMO_RANDOM_TARGETS = 9
DEMO_RANDOM_SIGMA = math.radians(10.0)


@dataclass(frozen=True)
class FixedTarget:
    receiver: int  # 0-based generator index
    source: int
    offset: float  # rad

    def __post_init__(self):
        if self.receiver == self.source:
            raise ConfigError("self channels cannot carry a fixed target (no e^c_ii exists)")


@dataclass
class AttackScenario:
    """Per-step attack schedule and target selection.

    ``type_policy`` is one of "coin" (uniform c/m from the scenario RNG),
    "alternate" (c, m, c, ...), "c", "m" (always that type), or "none".
    ``resample`` decides whether random target channels are redrawn each
    step or frozen after the first attacked step.  ``random_pool``
    restricts random targets to one receiving generator (0-based index);
    None draws from every channel.
    """

    start_step: int = 0
    type_policy: str = "coin"
    fixed_targets: Tuple[FixedTarget, ...] = ()
    random_targets: int = 0
    random_sigma: float = 0.0
    random_pool: Optional[int] = None
    resample: str = "step"
    seed: Optional[int] = None
    _frozen_c: Optional[tuple] = field(default=None, repr=False)
    _frozen_m: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if self.type_policy not in ("coin", "alternate", "c", "m", "none"):
            raise ConfigError(f"unknown type policy {self.type_policy!r}")
        if self.resample not in ("step", "run"):
            raise ConfigError(f"unknown resample policy {self.resample!r}")
        if self.random_targets < 0 or self.random_sigma < 0.0:
            raise ConfigError("random target count and sigma must be non-negative")

    def validate(self, red: ReducedNetwork) -> None:
        pairs = set(red.pair_channels())
        for tgt in self.fixed_targets:
            if (tgt.receiver, tgt.source) not in pairs:
                raise ConfigError(
                    f"fixed target ({tgt.receiver + 1},{tgt.source + 1}) is not a "
                    "channel of the reduced network"
                )
        if self.random_pool is not None and not (0 <= self.random_pool < red.n_gens):
            raise ConfigError(f"random pool generator {self.random_pool} does not exist")

    def _draw_type(self, step: int, rng: np.random.Generator) -> str:
        if self.type_policy == "none" or step < self.start_step:
            return TYPE_NONE
        if self.type_policy == "coin":
            return TYPE_C if rng.integers(0, 2) == 0 else TYPE_M
        if self.type_policy == "alternate":
            return TYPE_C if (step - self.start_step) % 2 == 0 else TYPE_M
        return self.type_policy

    def _candidate_channels(self, red: ReducedNetwork, kind: str) -> list:
        if kind == TYPE_C:
            pool = list(red.pair_channels())
        else:
            pool = list(red.measurement_channels())
        if self.random_pool is not None:
            pool = [ch for ch in pool if ch[0] == self.random_pool]
        fixed = {(t.receiver, t.source) for t in self.fixed_targets}
        return [ch for ch in pool if ch not in fixed]

    def _random_channels(self, red, kind, rng) -> tuple:
        frozen = self._frozen_c if kind == TYPE_C else self._frozen_m
        if self.resample == "run" and frozen is not None:
            return frozen
        pool = self._candidate_channels(red, kind)
        count = min(self.random_targets, len(pool))
        picks = tuple(pool[int(idx)] for idx in rng.choice(len(pool), size=count, replace=False)) if count else ()
        if self.resample == "run":
            if kind == TYPE_C:
                self._frozen_c = picks
            else:
                self._frozen_m = picks
        return picks

    def inject(self, red: ReducedNetwork, rng: np.random.Generator, step: int):
        """Attack signals for one step.

        Returns (type, e_c map, e_m map); both maps are keyed by channel
        (receiver, source) and empty for the other attack type.
        """
        kind = self._draw_type(step, rng)
        if kind == TYPE_NONE:
            return TYPE_NONE, {}, {}
        signals: Dict[Tuple[int, int], float] = {}
        for tgt in self.fixed_targets:
            signals[(tgt.receiver, tgt.source)] = tgt.offset
        if self.random_targets:
            for ch in self._random_channels(red, kind, rng):
                signals[ch] = float(rng.normal(0.0, self.random_sigma))
        if kind == TYPE_C:
            return TYPE_C, signals, {}
        return TYPE_M, {}, signals


def build_new_england_scenario(param_file) -> Tuple[PreparedPlant, AttackScenario]:
    """The demo scenario on a 10-generator network file.

    Generator 1 is the victim: a constant 90 degree offset on its channel
    from generator 2 plus 9 random Gaussian corruptions drawn from its
    channel block each step, with the attack type coin-flipped per step.
    Requires a fully sourced parameter file; the shipped 39-bus file is a
    structural placeholder until its values are filled in.
    """
    plant = prepare_plant(param_file)
    if plant.reduced.n_gens != 10:
        raise ParamFileMissing(
            f"{param_file}: expected a 10-generator network, found {plant.reduced.n_gens}"
        )
    scenario = AttackScenario(
        start_step=0,
        type_policy="coin",
        fixed_targets=(FixedTarget(receiver=0, source=1, offset=DEMO_FIXED_OFFSET),),
        random_targets=DEMO_RANDOM_TARGETS,
        random_sigma=DEMO_RANDOM_SIGMA,
        random_pool=0,
        resample="step",
    )
    scenario.validate(plant.reduced)
    return plant, scenario
