"""Vectorized bounded checker: one assertion over a batch of equal-length traces.

Implements exactly the attempt semantics of :mod:`.temporal`, but every
boolean leaf is evaluated once for all (trace, cycle) pairs with the compiled
kernels, and the temporal structure is walked once per start cycle with
per-trace masks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sva.ast import (
    AssertionDecl, Bool, Delay, DisableIff, Identifier, Implication, Not, Seq, SystemCall,
    walk,
)
from . import kernels
from .evaluate import mask, self_width
from .model import TraceBatch
from .temporal import FAILS, HOLDS, PENDING, VACUOUS, CheckError

_NOT = np.array([FAILS, FAILS, PENDING, HOLDS], dtype=np.int8)


@dataclass
class BatchResult:
    statuses: np.ndarray  # (batch, cycles) attempt status per start cycle
    violated_at: np.ndarray  # (batch,) first failing start, -1 if none

    @property
    def failing(self) -> np.ndarray:
        return np.flatnonzero(self.violated_at >= 0)

    def count(self, status: int) -> int:
        return int((self.statuses == status).sum())


class _Leaves:
    """Truth tables (B, L) and invalid masks (L,) for boolean leaves."""

    def __init__(self, batch: TraceBatch, widths):
        self.B, self.L = batch.batch, batch.length
        self.widths = widths
        self.names = list(batch.columns)
        self.index = {n: i for i, n in enumerate(self.names)}
        self.columns = [batch.columns[n].reshape(-1) for n in self.names]
        self.calls: dict = {}  # SystemCall -> (column, invalid mask)
        self.cache: dict = {}

    def _env(self) -> np.ndarray:
        if not self.columns:
            return np.zeros((1, self.B * self.L), dtype=np.int64)
        return np.stack(self.columns)

    def _column(self, call: SystemCall) -> int:
        if call not in self.calls:
            self.calls[call] = self._sampled(call)
        return self.calls[call][0]

    def _values(self, expr) -> np.ndarray:
        for node in walk(expr):
            if isinstance(node, Identifier) and node.name not in self.index:
                raise CheckError(f"signal {node.name!r} missing from trace")
        prog = kernels.compile_expr(expr, self.widths, self.index, call=self._column)
        return kernels.run(prog, self._env()).reshape(self.B, self.L)

    def _invalid(self, expr) -> np.ndarray:
        inv = np.zeros(self.L, dtype=bool)
        for node in walk(expr):
            if isinstance(node, SystemCall):
                self._column(node)
                inv |= self.calls[node][1]
        return inv

    def _sampled(self, call: SystemCall):
        arg = call.args[0]
        back = (call.cycles or 1) if call.name == "$past" else 1
        now = self._values(arg)
        arg_inv = self._invalid(arg)
        before = np.zeros_like(now)
        inv = np.ones(self.L, dtype=bool)
        if back < self.L:
            before[:, back:] = now[:, :-back]
            inv[back:] = arg_inv[:-back]
        if call.name == "$past":
            out = before
        else:
            inv = inv | arg_inv
            if call.name == "$rose":
                out = ((now & 1) == 1) & ((before & 1) == 0)
            elif call.name == "$fell":
                out = ((now & 1) == 0) & ((before & 1) == 1)
            else:
                m = mask(self_width(arg, self.widths) or 32)
                out = (now & m) == (before & m)
            out = out.astype(np.int64)
        self.columns.append(out.reshape(-1))
        return len(self.columns) - 1, inv

    def truth(self, expr):
        if expr not in self.cache:
            vals = self._values(expr) != 0
            inv = self._invalid(expr)
            self.cache[expr] = (vals & ~inv[None, :], inv)
        return self.cache[expr]


class _Walker:
    def __init__(self, leaves: _Leaves):
        self.lv = leaves
        self.B, self.L = leaves.B, leaves.L

    def reset(self):
        self.touched = np.full(self.B, -1, dtype=np.int64)
        self.invalid = np.zeros(self.B, dtype=bool)

    def match(self, seq, t: int, act: np.ndarray):
        B, L = self.B, self.L
        if isinstance(seq, Bool):
            ends = np.zeros((B, L), dtype=bool)
            if t >= L:
                return ends, act.copy()
            vals, inv = self.lv.truth(seq.expr)
            self.touched[act] = np.maximum(self.touched[act], t)
            if inv[t]:
                self.invalid |= act
            ends[:, t] = act & vals[:, t]
            return ends, np.zeros(B, dtype=bool)
        if isinstance(seq, Delay):
            ends = np.zeros((B, L), dtype=bool)
            if seq.lhs is None:
                pending = np.zeros(B, dtype=bool)
                origins = [(t, act)]
            else:
                lhs_ends, pending = self.match(seq.lhs, t, act)
                origins = [(e, lhs_ends[:, e]) for e in np.flatnonzero(lhs_ends.any(axis=0))]
            for e, m in origins:
                for k in range(seq.min_cycles, seq.upper + 1):
                    sub, p = self.match(seq.rhs, int(e) + k, m)
                    ends |= sub
                    pending |= p
            return ends, pending
        raise TypeError(seq)

    def prop(self, p, t: int, act: np.ndarray) -> np.ndarray:
        B, L = self.B, self.L
        if isinstance(p, Seq):
            ends, pending = self.match(p.seq, t, act)
            return np.where(ends.any(axis=1), HOLDS, np.where(pending, PENDING, FAILS)).astype(np.int8)
        if isinstance(p, Implication):
            ends, pending = self.match(p.antecedent, t, act)
            f = np.zeros(B, dtype=bool)
            h = np.zeros(B, dtype=bool)
            pend = pending.copy()
            for e in np.flatnonzero(ends.any(axis=0)):
                m = ends[:, e]
                start = e if p.overlapped else e + 1
                if start >= L:
                    pend |= m
                    continue
                st = self.prop(p.consequent, start, m)
                f |= m & (st == FAILS)
                pend |= m & (st == PENDING)
                h |= m & (st == HOLDS)
            return np.where(f, FAILS, np.where(pend, PENDING, np.where(h, HOLDS, VACUOUS))).astype(np.int8)
        if isinstance(p, Not):
            return _NOT[self.prop(p.inner, t, act)]
        if isinstance(p, DisableIff):
            st = self.prop(p.body, t, act)
            cond, _ = self.lv.truth(p.condition)
            hi = np.minimum(np.maximum(self.touched, t), L - 1)
            cycles = np.arange(L)
            window = (cycles[None, :] >= t) & (cycles[None, :] <= hi[:, None])
            disabled = (cond & window).any(axis=1)
            return np.where(act & (st == FAILS) & disabled, VACUOUS, st).astype(np.int8)
        raise TypeError(p)


def check_batch(decl: AssertionDecl, batch: TraceBatch, widths=None) -> BatchResult:
    """Check ``decl`` on every trace of ``batch``.

    ``widths`` defaults to the widths recorded in the batch.
    """
    widths = dict(batch.widths if widths is None else widths)
    B, L = batch.batch, batch.length
    statuses = np.zeros((B, L), dtype=np.int8)
    if B == 0 or L == 0:
        return BatchResult(statuses, np.full(B, -1, dtype=np.int64))
    walker = _Walker(_Leaves(batch, widths))
    everyone = np.ones(B, dtype=bool)
    for s in range(L):
        walker.reset()
        st = walker.prop(decl.property, s, everyone)
        statuses[:, s] = np.where(walker.invalid, VACUOUS, st)
    fails = statuses == FAILS
    violated = np.where(fails.any(axis=1), fails.argmax(axis=1), -1)
    return BatchResult(statuses, violated.astype(np.int64))
