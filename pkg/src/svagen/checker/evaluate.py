"""Scalar reference evaluator for boolean expressions.

Width rules (shared with the compiled kernels):

* identifiers take their declared width; bit-selects are 1 bit, part-selects
  ``hi-lo+1`` bits; unsized literals and ``'0``/``'1`` adapt to context;
* arithmetic, bitwise, ``~``, unary ``-`` and ``?:`` results are computed at
  ``max(self width, context width)`` with two's-complement wraparound;
* comparisons size both operands to the wider of the two and yield 0/1;
  ``!``, ``&&``, ``||`` treat operands as truth values and yield 0/1;
* sampled-value function arguments are self-determined.
"""
from __future__ import annotations

from typing import Callable, Mapping, Optional

from ..sva.ast import (
    Binary, Conditional, Identifier, NumericLiteral, Paren, SystemCall, Unary,
)

DEFAULT_WIDTH = 32
ARITH_OPS = ("+", "-", "&", "|", "^")


class EvalError(Exception):
    pass


def mask(width: int) -> int:
    return (1 << width) - 1


def _max(a: Optional[int], b: Optional[int]) -> Optional[int]:
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def self_width(e, widths: Mapping[str, int]) -> Optional[int]:
    """Self-determined width, or None for context-sized literals."""
    if isinstance(e, Identifier):
        if e.index is not None:
            return 1
        if e.part is not None:
            return e.part[0] - e.part[1] + 1
        return widths.get(e.name, DEFAULT_WIDTH)
    if isinstance(e, NumericLiteral):
        return None if (e.fill or e.width is None) else e.width
    if isinstance(e, Paren):
        return self_width(e.inner, widths)
    if isinstance(e, Unary):
        return 1 if e.op == "!" else self_width(e.operand, widths)
    if isinstance(e, Binary):
        if e.op in ARITH_OPS:
            return _max(self_width(e.lhs, widths), self_width(e.rhs, widths))
        return 1
    if isinstance(e, Conditional):
        return _max(self_width(e.then, widths), self_width(e.other, widths))
    if isinstance(e, SystemCall):
        return self_width(e.args[0], widths) if e.name == "$past" else 1
    raise TypeError(f"not a boolean expression: {e!r}")


def result_width(e, widths, ctx: Optional[int]) -> int:
    w = _max(self_width(e, widths), ctx)
    return DEFAULT_WIDTH if w is None else w


def compare_width(e: Binary, widths) -> int:
    w = _max(self_width(e.lhs, widths), self_width(e.rhs, widths))
    return DEFAULT_WIDTH if w is None else w


def evaluate(e, lookup: Callable[[str], int], widths: Mapping[str, int],
             ctx: Optional[int] = None, call: Optional[Callable] = None) -> int:
    """Evaluate ``e``; every subexpression is evaluated (no short-circuit)."""
    if isinstance(e, Paren):
        return evaluate(e.inner, lookup, widths, ctx, call)
    if isinstance(e, Identifier):
        v = lookup(e.name)
        if e.index is not None:
            return (v >> e.index) & 1
        if e.part is not None:
            return (v >> e.part[1]) & mask(e.part[0] - e.part[1] + 1)
        return v
    if isinstance(e, NumericLiteral):
        w = ctx if ctx is not None else (e.width or DEFAULT_WIDTH)
        if e.fill:
            return mask(ctx if ctx is not None else 1) if e.value else 0
        return e.value & mask(w)
    if isinstance(e, Unary):
        if e.op == "!":
            return int(evaluate(e.operand, lookup, widths, None, call) == 0)
        w = result_width(e, widths, ctx)
        v = evaluate(e.operand, lookup, widths, w, call)
        return (~v if e.op == "~" else -v) & mask(w)
    if isinstance(e, Binary):
        op = e.op
        if op in ("&&", "||"):
            a = evaluate(e.lhs, lookup, widths, None, call) != 0
            b = evaluate(e.rhs, lookup, widths, None, call) != 0
            return int(a and b) if op == "&&" else int(a or b)
        if op in ARITH_OPS:
            w = result_width(e, widths, ctx)
            a = evaluate(e.lhs, lookup, widths, w, call)
            b = evaluate(e.rhs, lookup, widths, w, call)
            r = {"+": a + b, "-": a - b, "&": a & b, "|": a | b, "^": a ^ b}[op]
            return r & mask(w)
        w = compare_width(e, widths)
        a = evaluate(e.lhs, lookup, widths, w, call) & mask(w)
        b = evaluate(e.rhs, lookup, widths, w, call) & mask(w)
        return int({"==": a == b, "!=": a != b, "<": a < b, "<=": a <= b,
                    ">": a > b, ">=": a >= b}[op])
    if isinstance(e, Conditional):
        w = result_width(e, widths, ctx)
        c = evaluate(e.cond, lookup, widths, None, call)
        t = evaluate(e.then, lookup, widths, w, call)
        f = evaluate(e.other, lookup, widths, w, call)
        return (t if c else f) & mask(w)
    if isinstance(e, SystemCall):
        if call is None:
            raise EvalError(f"temporal function {e.name} cannot be evaluated without a trace")
        return call(e)
    raise TypeError(f"not a boolean expression: {e!r}")


def eval_expr(expr, env: Mapping[str, int], widths: Optional[Mapping[str, int]] = None) -> int:
    """Evaluate a non-temporal boolean expression under ``env``.

    ``widths`` gives declared bit widths (default 32 for names not listed).
    """
    widths = widths or {}

    def lookup(name):
        try:
            return env[name]
        except KeyError:
            raise EvalError(f"unbound identifier {name!r}") from None

    return evaluate(expr, lookup, widths)
