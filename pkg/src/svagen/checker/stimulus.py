"""Input stimulus for bounded checking: exhaustive enumeration plus random top-up."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..rtl import DEFAULT_RESET_NAMES
from .model import COMBINATIONAL, BehavioralModel

EXHAUSTIVE = "exhaustive"
RANDOM = "random"
MAX_SEQUENTIAL_BITS = 24
MAX_COMBINATIONAL_BITS = 16


class PlanError(Exception):
    """The stimulus plan cannot be applied to this design."""


@dataclass(frozen=True)
class StimulusPlan:
    horizon: int = 20
    strategy: str = EXHAUSTIVE
    random_budget: int = 256
    seed: int = 0
    # bits of sequence choice enumerated exhaustively (depth = bits // bits per cycle)
    max_exhaustive_bits: int = 12

    def __post_init__(self):
        if self.horizon < 1:
            raise PlanError("horizon must be at least 1 cycle")
        if self.strategy not in (EXHAUSTIVE, RANDOM):
            raise PlanError(f"unknown strategy {self.strategy!r}")
        if self.random_budget < 0:
            raise PlanError("random_budget must be >= 0")
        if not 1 <= self.max_exhaustive_bits <= MAX_SEQUENTIAL_BITS:
            raise PlanError(f"max_exhaustive_bits must be in 1..{MAX_SEQUENTIAL_BITS}")

    def to_dict(self) -> dict:
        return asdict(self)


def reset_holds(model: BehavioralModel, reset_names=DEFAULT_RESET_NAMES) -> dict:
    """Inactive value for every reset-named input (active-low names end in 'n')."""
    lowered = {r.lower() for r in reset_names}
    holds = {}
    for name, _ in model.inputs:
        if name.lower() in lowered:
            holds[name] = 1 if name.lower().endswith(("_n", "resetn")) else 0
    return holds


@dataclass
class Stimuli:
    exhaustive: np.ndarray  # (n, depth, inputs)
    random: np.ndarray  # (m, horizon, inputs)
    exhaustive_depth: int
    notes: list

    @property
    def count(self) -> int:
        return len(self.exhaustive) + len(self.random)


def _free_inputs(model, holds):
    return [(k, w) for k, (n, w) in enumerate(model.inputs) if n not in holds]


def enumerate_exhaustive(model: BehavioralModel, depth: int, holds: dict) -> np.ndarray:
    free = _free_inputs(model, holds)
    bits = sum(w for _, w in free)
    total = 1 << (bits * depth)
    out = np.zeros((total, depth, len(model.inputs)), dtype=np.int64)
    for k, (name, _) in enumerate(model.inputs):
        if name in holds:
            out[:, :, k] = holds[name]
    idx = np.arange(total, dtype=np.int64)
    shift = 0
    for t in range(depth):
        for k, w in free:
            out[:, t, k] = (idx >> shift) & ((1 << w) - 1)
            shift += w
    return out


def random_sequences(model: BehavioralModel, count: int, horizon: int, seed: int,
                     holds: dict) -> np.ndarray:
    """``count`` random sequences; the first n are the same for any count >= n.

    Reset inputs are asserted with probability 1/8 so reset behavior is exercised.
    """
    n_in = len(model.inputs)
    if count == 0 or n_in == 0:
        return np.zeros((count, horizon, n_in), dtype=np.int64)
    rng = np.random.default_rng(seed)
    raw = rng.bit_generator.random_raw(count * horizon * n_in).reshape(count, horizon, n_in)
    out = np.zeros((count, horizon, n_in), dtype=np.int64)
    for k, (name, w) in enumerate(model.inputs):
        col = raw[:, :, k]
        if name in holds:
            active = (col % np.uint64(8)) == 0
            out[:, :, k] = np.where(active, 1 - holds[name], holds[name])
        else:
            out[:, :, k] = (col & np.uint64((1 << w) - 1)).astype(np.int64)
    return out


def build_stimuli(model: BehavioralModel, plan: StimulusPlan,
                  reset_names=DEFAULT_RESET_NAMES) -> Stimuli:
    notes = []
    if model.mode == COMBINATIONAL:
        bits = model.input_bits
        if plan.strategy == EXHAUSTIVE:
            if bits > MAX_COMBINATIONAL_BITS:
                raise PlanError(f"{model.name}: {bits} input bits exceed the exhaustive bound of "
                                f"{MAX_COMBINATIONAL_BITS}; use the random strategy")
            return Stimuli(enumerate_exhaustive(model, 1, {}), np.zeros((0, 1, len(model.inputs)), np.int64),
                           1, [f"exhaustive over {bits} input bits"])
        rnd = random_sequences(model, plan.random_budget, 1, plan.seed, {})
        return Stimuli(np.zeros((0, 1, len(model.inputs)), np.int64), rnd, 0,
                       [f"random: {plan.random_budget} vectors, seed {plan.seed}"])

    holds = reset_holds(model, reset_names)
    per_cycle = sum(w for _, w in _free_inputs(model, holds))
    empty = np.zeros((0, 0, len(model.inputs)), dtype=np.int64)
    if plan.strategy == RANDOM:
        rnd = random_sequences(model, plan.random_budget, plan.horizon, plan.seed, holds)
        return Stimuli(empty, rnd, 0, [f"random: {plan.random_budget} sequences of "
                                       f"{plan.horizon} cycles, seed {plan.seed}"])
    if per_cycle == 0:
        depth = plan.horizon
    else:
        depth = min(plan.horizon, plan.max_exhaustive_bits // per_cycle)
    if depth < 1:
        raise PlanError(f"{model.name}: {per_cycle} free input bits per cycle exceed the exhaustive "
                        f"budget of {plan.max_exhaustive_bits} bits; use the random strategy")
    ex = enumerate_exhaustive(model, depth, holds)
    if holds:
        notes.append("reset held inactive during enumeration: " +
                     ", ".join(f"{n}={v}" for n, v in sorted(holds.items())))
    notes.append(f"exhaustive over {depth} of {plan.horizon} cycles "
                 f"({per_cycle} free bits/cycle, {len(ex)} sequences)")
    rnd = np.zeros((0, plan.horizon, len(model.inputs)), dtype=np.int64)
    if depth < plan.horizon and plan.random_budget:
        rnd = random_sequences(model, plan.random_budget, plan.horizon, plan.seed, holds)
        notes.append(f"random top-up: {plan.random_budget} sequences of {plan.horizon} cycles, "
                     f"seed {plan.seed}")
    return Stimuli(ex, rnd, depth, notes)
