"""Behavioral golden models, traces, and cycle simulation."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..sva.ast import identifiers
from ..sva.parser import AssertionSyntaxError, parse_bool_expr
from . import kernels
from .evaluate import DEFAULT_WIDTH, mask, self_width

SEQUENTIAL = "sequential"
COMBINATIONAL = "combinational"


class ModelError(Exception):
    pass


@dataclass
class BehavioralModel:
    name: str
    inputs: list  # [(name, width)]
    state_vars: list  # [(name, width, init)]
    next_state: dict  # name -> expression text
    outputs: dict  # name -> expression text
    mode: str = SEQUENTIAL
    _parsed: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.inputs = [(str(n), int(w)) for n, w in self.inputs]
        self.state_vars = [(str(n), int(w), int(i)) for n, w, i in self.state_vars]
        self.validate()

    # --- structure -------------------------------------------------------
    def validate(self) -> None:
        if self.mode not in (SEQUENTIAL, COMBINATIONAL):
            raise ModelError(f"{self.name}: unknown mode {self.mode!r}")
        if self.mode == COMBINATIONAL and self.state_vars:
            raise ModelError(f"{self.name}: combinational models have no state variables")
        names = [n for n, _ in self.inputs] + [n for n, _, _ in self.state_vars]
        if len(set(names)) != len(names):
            raise ModelError(f"{self.name}: duplicate signal names")
        for n, w in self.inputs:
            if not 1 <= w <= 32:
                raise ModelError(f"{self.name}: input {n} width {w} outside 1..32")
        for n, w, init in self.state_vars:
            if not 1 <= w <= 32:
                raise ModelError(f"{self.name}: state {n} width {w} outside 1..32")
            if not 0 <= init <= mask(w):
                raise ModelError(f"{self.name}: init {init} does not fit state {n}")
        if set(self.next_state) != {n for n, _, _ in self.state_vars}:
            raise ModelError(f"{self.name}: next_state must define exactly the state variables")
        clash = set(self.outputs) & set(names)
        if clash:
            raise ModelError(f"{self.name}: outputs shadow signals {sorted(clash)}")
        known = set(names)
        for target, text in list(self.next_state.items()) + list(self.outputs.items()):
            expr = self.expr(text)
            for ident in identifiers(expr):
                if ident.name not in known:
                    raise ModelError(f"{self.name}: {target} references undeclared {ident.name!r}")
            w = self_width(expr, self.base_widths())
            if w is not None and w > 32:
                raise ModelError(f"{self.name}: {target} wider than 32 bits")

    def expr(self, text: str):
        if text not in self._parsed:
            try:
                self._parsed[text] = parse_bool_expr(text)
            except AssertionSyntaxError as e:
                raise ModelError(f"{self.name}: bad expression {text!r}: {e}") from None
        return self._parsed[text]

    def base_widths(self) -> dict:
        w = {n: width for n, width in self.inputs}
        w.update({n: width for n, width, _ in self.state_vars})
        return w

    def widths(self) -> dict:
        """Widths of every trace column, outputs included."""
        w = self.base_widths()
        for name, text in self.outputs.items():
            w[name] = self_width(self.expr(text), w) or DEFAULT_WIDTH
        return w

    @property
    def input_bits(self) -> int:
        return sum(w for _, w in self.inputs)

    @property
    def signal_names(self) -> list[str]:
        return [n for n, _ in self.inputs] + [n for n, _, _ in self.state_vars] + list(self.outputs)

    # --- persistence -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "inputs": [[n, w] for n, w in self.inputs],
            "state_vars": [[n, w, i] for n, w, i in self.state_vars],
            "next_state": dict(self.next_state),
            "outputs": dict(self.outputs),
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "BehavioralModel":
        expected = {"name", "inputs", "state_vars", "next_state", "outputs", "mode"}
        extra = set(d) - expected
        missing = expected - set(d)
        if extra or missing:
            raise ModelError(f"model fields mismatch: extra={sorted(extra)} missing={sorted(missing)}")
        return cls(d["name"], d["inputs"], d["state_vars"], d["next_state"], d["outputs"], d["mode"])

    @classmethod
    def load(cls, path) -> "BehavioralModel":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_changes(self, **changes) -> "BehavioralModel":
        d = self.to_dict()
        for key, value in changes.items():
            if isinstance(d.get(key), dict) and isinstance(value, dict):
                d[key] = {**d[key], **value}
            else:
                d[key] = value
        return BehavioralModel.from_dict(d)


@dataclass
class Trace:
    length: int
    columns: dict  # name -> list[int]

    def __post_init__(self):
        for name, col in self.columns.items():
            if len(col) != self.length:
                raise ValueError(f"column {name} has {len(col)} entries, expected {self.length}")

    def value(self, name: str, cycle: int) -> int:
        return self.columns[name][cycle]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        names = list(self.columns)
        writer.writerow(names)
        for t in range(self.length):
            writer.writerow([self.columns[n][t] for n in names])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Trace":
        rows = list(csv.reader(io.StringIO(text)))
        names = rows[0]
        cols = {n: [int(r[i]) for r in rows[1:]] for i, n in enumerate(names)}
        return cls(len(rows) - 1, cols)

    def to_dict(self) -> dict:
        return {"length": self.length, "columns": self.columns}


@dataclass
class TraceBatch:
    """Many equal-length traces; each column has shape (batch, cycles)."""

    columns: dict
    widths: dict

    @property
    def batch(self) -> int:
        return next(iter(self.columns.values())).shape[0] if self.columns else 0

    @property
    def length(self) -> int:
        return next(iter(self.columns.values())).shape[1] if self.columns else 0

    def trace(self, row: int) -> Trace:
        return Trace(self.length, {n: [int(v) for v in c[row]] for n, c in self.columns.items()})

    @classmethod
    def from_traces(cls, traces: Sequence[Trace], widths: dict) -> "TraceBatch":
        names = list(traces[0].columns)
        cols = {n: np.array([t.columns[n] for t in traces], dtype=np.int64) for n in names}
        return cls(cols, dict(widths))


class _Compiled:
    def __init__(self, model: BehavioralModel):
        self.model = model
        self.index = {n: i for i, n in enumerate([n for n, _ in model.inputs] +
                                                 [n for n, _, _ in model.state_vars])}
        widths = model.base_widths()
        self.next_state = [
            (n, kernels.compile_expr(model.expr(model.next_state[n]), widths, self.index, ctx=w), mask(w))
            for n, w, _ in model.state_vars
        ]
        self.outputs = [
            (n, kernels.compile_expr(model.expr(text), widths, self.index))
            for n, text in model.outputs.items()
        ]


def simulate_batch(model: BehavioralModel, inputs: np.ndarray) -> TraceBatch:
    """Simulate ``inputs`` of shape (batch, cycles, n_inputs)."""
    inputs = np.asarray(inputs, dtype=np.int64)
    if inputs.ndim != 3 or inputs.shape[2] != len(model.inputs):
        raise ModelError(f"inputs must have shape (batch, cycles, {len(model.inputs)})")
    B, T, _ = inputs.shape
    comp = _Compiled(model)
    widths = model.widths()
    for k, (name, w) in enumerate(model.inputs):
        if (inputs[:, :, k] < 0).any() or (inputs[:, :, k] > mask(w)).any():
            raise ModelError(f"input {name} value does not fit {w} bits")
    state = np.array([[init] * B for _, _, init in model.state_vars], dtype=np.int64).reshape(-1, B)
    cols = {n: np.zeros((B, T), dtype=np.int64) for n in model.signal_names}
    for t in range(T):
        env = np.concatenate([inputs[:, t, :].T, state], axis=0) if len(model.state_vars) \
            else inputs[:, t, :].T
        for k, (n, _) in enumerate(model.inputs):
            cols[n][:, t] = inputs[:, t, k]
        for k, (n, _, _) in enumerate(model.state_vars):
            cols[n][:, t] = state[k]
        for n, prog in comp.outputs:
            try:
                cols[n][:, t] = kernels.run(prog, env) & mask(widths[n])
            except Exception as e:  # pragma: no cover - defensive
                raise ModelError(f"cycle {t}: output {n}: {e}") from e
        if comp.next_state:
            state = np.stack([kernels.run(prog, env) & m for _, prog, m in comp.next_state])
    return TraceBatch(cols, widths)


def simulate(model: BehavioralModel, input_sequence: Sequence[Mapping[str, int]]) -> Trace:
    """Simulate one input sequence (one mapping per cycle, all inputs assigned)."""
    names = [n for n, _ in model.inputs]
    arr = np.zeros((1, len(input_sequence), len(names)), dtype=np.int64)
    for t, step in enumerate(input_sequence):
        missing = set(names) - set(step)
        if missing:
            raise ModelError(f"cycle {t}: inputs {sorted(missing)} not assigned")
        for k, n in enumerate(names):
            arr[0, t, k] = step[n]
    if not input_sequence:
        return Trace(0, {n: [] for n in model.signal_names})
    return simulate_batch(model, arr).trace(0)
