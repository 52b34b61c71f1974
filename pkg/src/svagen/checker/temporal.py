"""Bounded checking of one assertion on one finite trace (scalar reference).

Each start cycle ``s`` launches an attempt that ends in one of four states:

* ``HOLDS``    - the property matched;
* ``VACUOUS``  - no antecedent match, a ``$past``-style read before cycle 0,
  or a ``disable iff`` abort;
* ``PENDING``  - obligations run past the last cycle (counted as satisfied);
* ``FAILS``    - a completed violation.

Every alternative of a ``##[m:n]`` range and every antecedent match is
explored; nothing short-circuits.  :mod:`.batch` implements the same rules
over many traces at once and is tested against this module.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..sva.ast import (
    AssertionDecl, Bool, Delay, DisableIff, Implication, Not, Seq, SystemCall,
)
from .evaluate import evaluate, mask, self_width
from .model import Trace

HOLDS, VACUOUS, PENDING, FAILS = 0, 1, 2, 3
STATUS_NAMES = ("holds", "vacuous", "pending", "fails")


class CheckError(Exception):
    pass


class _Invalid(Exception):
    """A sampled-value read before cycle 0."""


@dataclass
class CheckResult:
    holds: bool
    violated_at: int | None
    statuses: list = field(default_factory=list)

    @property
    def counts(self) -> dict:
        return {name: self.statuses.count(k) for k, name in enumerate(STATUS_NAMES)}

    @property
    def nonvacuous(self) -> bool:
        return HOLDS in self.statuses


class _Attempt:
    def __init__(self, trace: Trace, widths):
        self.trace = trace
        self.widths = widths
        self.L = trace.length
        self.invalid = False
        self.touched = -1

    # --- boolean layer ---------------------------------------------------
    def value(self, expr, t: int) -> int:
        def lookup(name):
            try:
                return self.trace.columns[name][t]
            except KeyError:
                raise CheckError(f"signal {name!r} missing from trace") from None

        return evaluate(expr, lookup, self.widths, None, lambda call: self.sampled(call, t))

    def sampled(self, call: SystemCall, t: int) -> int:
        arg = call.args[0]
        back = (call.cycles or 1) if call.name == "$past" else 1
        if t - back < 0:
            raise _Invalid
        before = self.value(arg, t - back)
        if call.name == "$past":
            return before
        now = self.value(arg, t)
        if call.name == "$rose":
            return int((now & 1) == 1 and (before & 1) == 0)
        if call.name == "$fell":
            return int((now & 1) == 0 and (before & 1) == 1)
        w = self_width(arg, self.widths) or 32
        return int((now & mask(w)) == (before & mask(w)))

    def truth(self, expr, t: int) -> bool:
        self.touched = max(self.touched, t)
        try:
            return self.value(expr, t) != 0
        except _Invalid:
            self.invalid = True
            return False

    # --- sequence layer --------------------------------------------------
    def match(self, seq, t: int):
        """Return (set of end cycles, pending flag) for ``seq`` started at ``t``."""
        if isinstance(seq, Bool):
            if t >= self.L:
                return set(), True
            return ({t} if self.truth(seq.expr, t) else set()), False
        if isinstance(seq, Delay):
            if seq.lhs is None:
                starts, pending = {t}, False
            else:
                starts, pending = self.match(seq.lhs, t)
            ends = set()
            for e in sorted(starts):
                for k in range(seq.min_cycles, seq.upper + 1):
                    sub, p = self.match(seq.rhs, e + k)
                    ends |= sub
                    pending = pending or p
            return ends, pending
        raise TypeError(seq)

    # --- property layer --------------------------------------------------
    def prop(self, p, t: int) -> int:
        if isinstance(p, Seq):
            ends, pending = self.match(p.seq, t)
            return HOLDS if ends else (PENDING if pending else FAILS)
        if isinstance(p, Implication):
            ends, pending = self.match(p.antecedent, t)
            results = set()
            for e in sorted(ends):
                start = e if p.overlapped else e + 1
                results.add(PENDING if start >= self.L else self.prop(p.consequent, start))
            if pending:
                results.add(PENDING)
            for status in (FAILS, PENDING, HOLDS):
                if status in results:
                    return status
            return VACUOUS
        if isinstance(p, Not):
            inner = self.prop(p.inner, t)
            return {HOLDS: FAILS, VACUOUS: FAILS, FAILS: HOLDS, PENDING: PENDING}[inner]
        if isinstance(p, DisableIff):
            status = self.prop(p.body, t)
            if status == FAILS:
                for c in range(t, min(max(self.touched, t), self.L - 1) + 1):
                    try:
                        if self.value(p.condition, c):
                            return VACUOUS
                    except _Invalid:
                        pass  # unreadable condition counts as false
            return status
        raise TypeError(p)


def attempt_status(decl: AssertionDecl, trace: Trace, start: int, widths=None) -> int:
    a = _Attempt(trace, widths or {})
    status = a.prop(decl.property, start)
    return VACUOUS if a.invalid else status


def check_on_trace(decl: AssertionDecl, trace: Trace, widths=None) -> CheckResult:
    """Check ``decl`` at every start cycle of ``trace``.

    ``widths`` gives declared signal widths (default 32 bits).
    """
    statuses = [attempt_status(decl, trace, s, widths) for s in range(trace.length)]
    violated = next((s for s, st in enumerate(statuses) if st == FAILS), None)
    return CheckResult(violated is None, violated, statuses)
