"""Random well-formed assertion ASTs over a signal vocabulary."""
from __future__ import annotations

import random
from typing import Sequence

from .ast import (
    AssertionDecl, Binary, Bool, Clocking, Conditional, Delay, DisableIff,
    Identifier, Implication, Not, NumericLiteral, Seq, SystemCall, Unary,
)

_BIN = ("&&", "||", "&", "|", "^", "==", "!=", "<", "<=", ">", ">=", "+", "-")


class AstGenerator:
    """Draws assertions from the supported grammar.

    ``temporal`` toggles $past/$rose/... and delays; ``widths`` optionally maps
    signal names to bit widths so selects stay in range.
    """

    def __init__(self, rng: random.Random, vocab: Sequence[str], widths: dict | None = None,
                 *, rich: bool = True):
        if not vocab:
            raise ValueError("signal vocabulary must not be empty")
        self.rng = rng
        self.vocab = list(vocab)
        self.widths = widths or {}
        self.rich = rich  # selects, ternaries, fill literals, labels, negedge

    def identifier(self) -> Identifier:
        r = self.rng
        name = r.choice(self.vocab)
        width = self.widths.get(name, 8 if self.rich else 1)
        if self.rich and width > 1:
            roll = r.random()
            if roll < 0.15:
                return Identifier(name, index=r.randrange(width))
            if roll < 0.25:
                lo = r.randrange(width)
                return Identifier(name, part=(r.randrange(lo, width), lo))
        return Identifier(name)

    def literal(self) -> NumericLiteral:
        r = self.rng
        roll = r.random()
        if self.rich and roll < 0.1:
            return NumericLiteral(r.randint(0, 1), fill=True)
        if roll < 0.5:
            return NumericLiteral(r.randint(0, 15))
        width = r.randint(1, 8)
        base = r.choice("bdho")
        return NumericLiteral(r.randrange(1 << width), width, base)

    def bool_expr(self, depth: int, temporal: bool):
        r = self.rng
        if depth <= 0 or r.random() < 0.3:
            return self.identifier() if r.random() < 0.75 else self.literal()
        roll = r.random()
        if roll < 0.15:
            return Unary(r.choice("!~-") if self.rich else "!", self.bool_expr(depth - 1, temporal))
        if temporal and roll < 0.25:
            name = r.choice(("$past", "$rose", "$fell", "$stable"))
            arg = self.bool_expr(depth - 1, False)
            cycles = r.choice((None, 1, 2, 3)) if name == "$past" else None
            return SystemCall(name, (arg,), cycles)
        if self.rich and roll < 0.32:
            return Conditional(self.bool_expr(depth - 1, temporal),
                               self.bool_expr(depth - 1, temporal),
                               self.bool_expr(depth - 1, temporal))
        ops = _BIN if self.rich else ("&&", "||", "==", "!=")
        return Binary(r.choice(ops), self.bool_expr(depth - 1, temporal),
                      self.bool_expr(depth - 1, temporal))

    def sequence(self, depth: int, temporal: bool):
        r = self.rng
        if not temporal or depth <= 0 or r.random() < 0.5:
            return Bool(self.bool_expr(depth, temporal))
        lo = r.randint(0, 3)
        hi = r.choice((None, lo + r.randint(0, 3)))
        lhs = None if r.random() < 0.2 else self.sequence(depth - 1, temporal)
        return Delay(lhs, lo, hi, self.sequence(depth - 1, temporal))

    def property(self, depth: int, temporal: bool):
        r = self.rng
        roll = r.random()
        if depth <= 0 or roll < 0.3:
            return Seq(self.sequence(depth, temporal))
        if roll < 0.85:
            kind = r.choice(("|->", "|=>")) if temporal else "|->"
            return Implication(kind, self.sequence(depth - 1, temporal),
                               self.property(depth - 1, temporal))
        return Not(self.property(depth - 1, temporal))

    def assertion(self, depth: int = 3) -> AssertionDecl:
        r = self.rng
        label = f"a{r.randrange(100)}" if self.rich and r.random() < 0.1 else None
        roll = r.random()
        if roll < 0.15:
            return AssertionDecl(Seq(Bool(self.bool_expr(depth, False))), None, label, immediate=True)
        if roll < 0.25:
            return AssertionDecl(self.property(depth, False), None, label)
        edge = "negedge" if self.rich and r.random() < 0.1 else "posedge"
        prop = self.property(depth, True)
        if self.rich and r.random() < 0.2:
            prop = DisableIff(self.bool_expr(1, False), prop)
        return AssertionDecl(prop, Clocking(edge, "clk"), label)
