"""Canonical, fully parenthesized rendering of assertion ASTs."""
from __future__ import annotations

from .ast import (
    AssertionDecl, Binary, Bool, Conditional, Delay, DisableIff, Identifier,
    Implication, Not, NumericLiteral, Paren, Seq, SystemCall, Unary,
)

_DIGIT_FORMAT = {"b": "b", "o": "o", "d": "d", "h": "x"}


def format_literal(lit: NumericLiteral) -> str:
    if lit.fill:
        return f"'{lit.value}"
    if lit.base is None:
        return str(lit.value)
    digits = format(lit.value, _DIGIT_FORMAT[lit.base])
    size = "" if lit.width is None else str(lit.width)
    return f"{size}'{lit.base}{digits}"


def format_bool(e) -> str:
    if isinstance(e, Paren):
        return format_bool(e.inner)
    if isinstance(e, Identifier):
        if e.index is not None:
            return f"{e.name}[{e.index}]"
        if e.part is not None:
            return f"{e.name}[{e.part[0]}:{e.part[1]}]"
        return e.name
    if isinstance(e, NumericLiteral):
        return format_literal(e)
    if isinstance(e, Unary):
        return f"{e.op}({format_bool(e.operand)})"
    if isinstance(e, Binary):
        return f"({format_bool(e.lhs)}) {e.op} ({format_bool(e.rhs)})"
    if isinstance(e, Conditional):
        return f"({format_bool(e.cond)}) ? ({format_bool(e.then)}) : ({format_bool(e.other)})"
    if isinstance(e, SystemCall):
        args = ", ".join(format_bool(a) for a in e.args)
        if e.cycles is not None:
            args += f", {e.cycles}"
        return f"{e.name}({args})"
    raise TypeError(f"not a boolean expression: {e!r}")


def _delay_op(d: Delay) -> str:
    if d.max_cycles is None:
        return f"##{d.min_cycles}"
    return f"##[{d.min_cycles}:{d.max_cycles}]"


def format_sequence(s) -> str:
    if isinstance(s, Bool):
        return format_bool(s.expr)
    if isinstance(s, Delay):
        rhs = f"({format_sequence(s.rhs)})"
        if s.lhs is None:
            return f"{_delay_op(s)} {rhs}"
        return f"({format_sequence(s.lhs)}) {_delay_op(s)} {rhs}"
    raise TypeError(f"not a sequence: {s!r}")


def format_property(p) -> str:
    if isinstance(p, Seq):
        return format_sequence(p.seq)
    if isinstance(p, Implication):
        return f"({format_sequence(p.antecedent)}) {p.kind} ({format_property(p.consequent)})"
    if isinstance(p, Not):
        return f"not ({format_property(p.inner)})"
    if isinstance(p, DisableIff):
        return f"disable iff ({format_bool(p.condition)}) {format_property(p.body)}"
    raise TypeError(f"not a property: {p!r}")


def pretty_print(decl: AssertionDecl) -> str:
    label = f"{decl.label}: " if decl.label else ""
    if decl.immediate:
        return f"{label}assert({format_property(decl.property)});"
    clock = f"@({decl.clocking.edge} {decl.clocking.signal}) " if decl.clocking else ""
    return f"{label}assert property ({clock}{format_property(decl.property)});"
