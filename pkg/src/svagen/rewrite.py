"""Sequential-to-combinational assertion rewrite for clockless designs.

Clocking, ``disable iff`` and sampled-value functions are dropped, and every
implication ``a |-> b`` / ``a |=> b`` becomes ``(!(a)) || (b)``.  Delays have
no combinational reading and are reported instead of guessed at.
"""
from __future__ import annotations

from dataclasses import replace

from .sva import diagnostics as dg
from .sva.ast import (
    AssertionDecl, Binary, Bool, Conditional, Delay, DisableIff, Identifier,
    Implication, Not, NumericLiteral, Paren, Seq, SystemCall, Unary, walk,
)
from .sva.printer import format_sequence, pretty_print

COMBINATIONAL_RULES = (
    "Rules for designs without a clock:\n"
    "1. Delete the clocking event @(...), every 'disable iff (...)' and every clock-related "
    "function ($past, $rose, $fell, $stable); keep only their argument.\n"
    "2. Convert every implication a |-> b or a |=> b into (!a | b), written (!(a)) || (b).\n"
    "3. Use an immediate assertion: assert(<boolean expression>);\n"
    "4. Do not use ## delays."
)


class RewriteError(Exception):
    def __init__(self, diagnostic: dg.Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


def _bool(expr):
    if isinstance(expr, SystemCall):
        # $past(x, N) / $rose(x) / ... collapse to their argument
        return _bool(expr.args[0])
    if isinstance(expr, Unary):
        return Unary(expr.op, _bool(expr.operand))
    if isinstance(expr, Binary):
        return Binary(expr.op, _bool(expr.lhs), _bool(expr.rhs))
    if isinstance(expr, Conditional):
        return Conditional(_bool(expr.cond), _bool(expr.then), _bool(expr.other))
    if isinstance(expr, Paren):
        return Paren(_bool(expr.inner))
    if isinstance(expr, (Identifier, NumericLiteral)):
        return replace(expr, span=None)
    raise TypeError(expr)


def _seq(seq, decl):
    if isinstance(seq, Bool):
        return _bool(seq.expr)
    raise RewriteError(_delay_diag(decl, seq))


def _delay_diag(decl: AssertionDecl, node: Delay) -> dg.Diagnostic:
    src = decl.raw_text
    if node.span is not None and src:
        return dg.make(src, node.span.start, node.span.end, "E_COMB_DELAY",
                       "delay {frag} has no meaning in a design without a clock",
                       category="semantic",
                       hint="express the relation within a single cycle, without ##")
    text = format_sequence(node)
    return dg.make(text, 0, len(text), "E_COMB_DELAY",
                   "delay {frag} has no meaning in a design without a clock",
                   category="semantic", hint="express the relation within a single cycle, without ##")


def _prop(p, decl):
    if isinstance(p, DisableIff):
        return _prop(p.body, decl)
    if isinstance(p, Seq):
        return _seq(p.seq, decl)
    if isinstance(p, Implication):
        return Binary("||", Unary("!", _seq(p.antecedent, decl)), _prop(p.consequent, decl))
    if isinstance(p, Not):
        return Unary("!", _prop(p.inner, decl))
    raise TypeError(p)


def to_combinational(decl: AssertionDecl) -> AssertionDecl:
    """Return the immediate-assertion form of ``decl``.

    Raises :class:`RewriteError` (code ``E_COMB_DELAY``) when a delay remains.
    """
    for node in walk(decl.property):
        if isinstance(node, Delay):
            raise RewriteError(_delay_diag(decl, node))
    if decl.immediate and decl.clocking is None:
        return decl
    expr = _prop(decl.property, decl)
    out = AssertionDecl(Seq(Bool(expr)), None, decl.label, immediate=True)
    text = pretty_print(out)
    return replace(out, raw_text=text)
