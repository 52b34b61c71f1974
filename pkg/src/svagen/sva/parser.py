"""Recursive-descent / precedence-climbing parser for single SVA statements.

Grammar and precedence table: docs/grammar.md.
"""
from __future__ import annotations

from . import diagnostics as dg
from .ast import (
    AssertionDecl, Binary, Bool, Clocking, Conditional, Delay, DisableIff,
    Identifier, Implication, Not, NumericLiteral, Paren, Seq, Span, SystemCall,
    Unary, temporal_nodes,
)
from .lexer import UNSUPPORTED_KEYWORDS, LexError, Token, tokenize

# left binding powers
_IMPL = 10
_NOT_OPERAND = 9
_DELAY = 20
_TERNARY = 30
_BINARY = {
    "||": 40, "&&": 50, "|": 60, "^": 70, "&": 80,
    "==": 90, "!=": 90, "<": 100, "<=": 100, ">": 100, ">=": 100,
    "+": 110, "-": 110,
}
_UNARY = 120

_BADOP_HINTS = {
    "=": "use '==' for comparison",
    "->": "use '|->' for implication",
    "=>": "use '|=>' for next-cycle implication",
    "<->": "equivalence is not supported; write it as two implications",
    "===": "use '=='",
    "!==": "use '!='",
    "{": "concatenation is not supported; compare the parts separately",
    "[*": "repetition is not supported; chain delays with ##1 instead",
    "[=": "repetition is not supported; chain delays with ##1 instead",
    "[->": "goto repetition is not supported; chain delays with ##1 instead",
    "#": "cycle delays are written '##N'",
}


class AssertionSyntaxError(Exception):
    """Raised by :func:`parse_assertion`; carries one or more diagnostics."""

    def __init__(self, diagnostics: list):
        super().__init__("; ".join(d.message for d in diagnostics))
        self.diagnostics = diagnostics


class _Abort(Exception):
    def __init__(self, diagnostic):
        self.diagnostic = diagnostic


def _is_bool(node) -> bool:
    return isinstance(node, (Identifier, NumericLiteral, Unary, Binary, Conditional, Paren, SystemCall))


def _is_seq(node) -> bool:
    return isinstance(node, (Bool, Delay))


class _Parser:
    def __init__(self, source: str, tokens: list[Token]):
        self.src = source
        self.toks = tokens
        self.i = 0
        self.depth = 0  # open parentheses inside the expression

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "keyword") and self.tok.text == text

    def last_real(self) -> Token:
        j = max(self.i - 1, 0)
        return self.toks[j]

    def span(self, start: int, end: int) -> Span:
        return dg.span_at(self.src, start, end)

    def fail(self, tok: Token, code: str, message: str, hint: str | None = None,
             expected: str | None = None):
        if tok.kind == "eof":
            # nothing to quote at end of input: point at the last real token
            prev = self.last_real()
            if self.depth:
                code, expected = "E001", "')'"
            message = "syntax error: input ends after {frag} — expected " + (expected or "more input")
            raise _Abort(dg.make(self.src, prev.start, prev.end, code, message, hint=hint))
        raise _Abort(dg.make(self.src, tok.start, tok.end, code, message, hint=hint))

    def expect(self, text: str, what: str | None = None):
        if self.at(text):
            return self.advance()
        tok = self.tok
        code = "E001" if text == ")" else ("E012" if text == ";" else "E002")
        if text == ";" and tok.text == ")" and tok.kind == "op":
            self.fail(tok, "E001", "unbalanced parentheses: {frag} has no matching '('",
                      hint="remove the extra ')'")
        if text == ";" and tok.kind == "eof":
            prev = self.last_real()
            raise _Abort(dg.make(self.src, prev.start, prev.end, "E012",
                                 "missing ';' after {frag}", hint="end the statement with ';'"))
        if tok.kind == "badop":
            self.bad_operator(tok)
        expected = f"'{text}'" if what is None else what
        self.fail(tok, code, f"syntax error near {{frag}} — expected {expected} before {{frag}}"
                  if what is None else f"syntax error near {{frag}} — expected {what}",
                  expected=expected)

    def bad_operator(self, tok: Token):
        end = tok.end
        if tok.text.startswith("["):  # quote the whole repetition, e.g. [*3]
            close = self.src.find("]", tok.end)
            end = close + 1 if close != -1 else end
        raise _Abort(dg.make(self.src, tok.start, end, "E006", "unsupported operator {frag}",
                             hint=_BADOP_HINTS.get(tok.text)))

    def misplaced_disable(self, tok: Token):
        # quote through the condition's closing parenthesis when there is one
        end, depth = tok.end, 0
        opened = self.src.find("(", tok.end)
        if opened != -1:
            for i in range(opened, len(self.src)):
                depth += {"(": 1, ")": -1}.get(self.src[i], 0)
                if depth == 0:
                    end = i + 1
                    break
        raise _Abort(dg.make(self.src, tok.start, end, "E005",
                             "{frag} may appear only once, directly after the clocking event",
                             hint="move disable iff to the front of the property"))

    # statement level
    def statement(self) -> AssertionDecl:
        start = self.tok.start
        label = None
        if self.tok.kind == "ident" and self.peek().text == ":" and self.peek().kind == "op":
            label = self.advance().text
            self.advance()
        if not (self.tok.kind == "keyword" and self.tok.text == "assert"):
            if self.tok.kind == "ident" and self.tok.text in ("assume", "cover"):
                self.fail(self.tok, "E006", "{frag} statements are not supported; only 'assert' is")
            self.fail(self.tok, "E007", "expected an 'assert' statement near {frag}")
        self.advance()
        if self.at("property"):
            self.advance()
            self.expect("(")
            self.depth += 1
            clocking = self.clocking()
            prop = self.property_spec()
            self.depth -= 1
            self.expect(")")
            immediate = False
        elif self.at("("):
            self.advance()
            self.depth += 1
            clocking = None
            node = self.expr(0)
            self.depth -= 1
            self.expect(")")
            if not _is_bool(node):
                raise _Abort(dg.make(
                    self.src, node.span.start, node.span.end, "E009",
                    "immediate assertion body {frag} must be a plain boolean expression",
                    hint="an implication a |-> b becomes (!(a)) || (b) without a clock"))
            prop = Seq(Bool(node, node.span), node.span)
            immediate = True
        else:
            self.fail(self.tok, "E002", "syntax error near {frag} — expected 'property' or '(' after 'assert'")
        self.expect(";")
        if self.tok.kind != "eof":
            self.fail(self.tok, "E008", "unexpected text {frag} after the end of the assertion",
                      hint="submit exactly one assertion per unit")
        return AssertionDecl(prop, clocking, label, immediate,
                             self.span(start, self.last_real().end), self.src)

    def clocking(self):
        if not self.at("@"):
            return None
        at = self.advance()
        self.expect("(")
        edge = self.tok
        if not (edge.kind == "keyword" and edge.text in ("posedge", "negedge")):
            if edge.kind == "ident" and edge.text == "edge":
                self.fail(edge, "E006", "dual-edge clocking {frag} is not supported")
            self.fail(edge, "E002", "syntax error near {frag} — expected 'posedge' or 'negedge'")
        self.advance()
        sig = self.tok
        if sig.kind != "ident":
            self.fail(sig, "E002", "syntax error near {frag} — expected a clock signal name")
        self.advance()
        close = self.expect(")")
        return Clocking(edge.text, sig.text, self.span(at.start, close.end))

    def property_spec(self):
        if self.at("disable"):
            d = self.advance()
            if not self.at("iff"):
                self.fail(self.tok, "E002", "syntax error near {frag} — expected 'iff' after 'disable'")
            self.advance()
            self.expect("(")
            self.depth += 1
            cond = self.expr(0)
            self.depth -= 1
            self.expect(")")
            if not _is_bool(cond):
                raise _Abort(dg.make(self.src, cond.span.start, cond.span.end, "E002",
                                     "disable iff condition {frag} must be a boolean expression"))
            body = self.as_property(self.expr(0))
            return DisableIff(cond, body, self.span(d.start, body.span.end))
        return self.as_property(self.expr(0))

    # layer coercions
    def as_property(self, node):
        if _is_bool(node):
            node = Bool(node, node.span)
        if _is_seq(node):
            return Seq(node, node.span)
        return node

    def as_sequence(self, node, op: Token):
        if _is_bool(node):
            return Bool(node, node.span)
        if _is_seq(node):
            return node
        raise _Abort(dg.make(self.src, node.span.start, node.span.end, "E002",
                             f"property {{frag}} cannot be used as an operand of '{op.text}'",
                             hint="only sequences can appear around ## and before an implication"))

    def as_bool(self, node, op: Token):
        if _is_bool(node):
            return node
        raise _Abort(dg.make(self.src, node.span.start, node.span.end, "E002",
                             f"temporal expression {{frag}} cannot be an operand of boolean operator '{op.text}'",
                             hint="wrap boolean parts in parentheses and keep ## and |-> outside them"))

    # expressions
    def expr(self, min_bp: int):
        left = self.prefix()
        while True:
            tok = self.tok
            if tok.kind == "badop":
                self.bad_operator(tok)
            if tok.kind == "ident" and tok.text in UNSUPPORTED_KEYWORDS:
                self.fail(tok, "E006", "unsupported operator {frag}")
            if tok.kind == "keyword" and tok.text == "disable":
                self.misplaced_disable(tok)
            if tok.kind != "op":
                break
            t = tok.text
            if t in ("|->", "|=>"):
                if _IMPL <= min_bp:
                    break
                self.advance()
                ante = self.as_sequence(left, tok)
                rhs = self.as_property(self.expr(_IMPL - 1))
                left = Implication(t, ante, rhs, ante.span.cover(rhs.span))
            elif t == "##":
                if _DELAY <= min_bp:
                    break
                self.advance()
                lo, hi = self.delay_range()
                lhs = self.as_sequence(left, tok)
                rhs = self.as_sequence(self.expr(_DELAY), tok)
                left = Delay(lhs, lo, hi, rhs, lhs.span.cover(rhs.span))
            elif t == "?":
                if _TERNARY <= min_bp:
                    break
                self.advance()
                cond = self.as_bool(left, tok)
                then = self.as_bool(self.expr(0), tok)
                self.expect(":", "':' of the conditional operator")
                other = self.as_bool(self.expr(_TERNARY - 1), tok)
                left = Conditional(cond, then, other, cond.span.cover(other.span))
            elif t in _BINARY:
                bp = _BINARY[t]
                if bp <= min_bp:
                    break
                self.advance()
                lhs = self.as_bool(left, tok)
                rhs = self.as_bool(self.expr(bp), tok)
                left = Binary(t, lhs, rhs, lhs.span.cover(rhs.span))
            else:
                break
        return left

    def delay_range(self):
        if self.at("["):
            open_ = self.advance()
            lo = self.int_literal("a delay count")
            hi = lo
            if self.at(":"):
                self.advance()
                if self.tok.kind == "system" and self.tok.text == "$":
                    self.fail(self.tok, "E006", "unbounded delay {frag} is not supported")
                hi = self.int_literal("a delay bound")
            close = self.expect("]")
            if hi < lo:
                raise _Abort(dg.make(self.src, open_.start, close.end, "E010",
                                     "delay range {frag} ends before it starts",
                                     hint=f"write the smaller bound first: [{hi}:{lo}]"))
            return lo, hi
        n = self.int_literal("a delay count")
        return n, None

    def int_literal(self, what: str) -> int:
        tok = self.tok
        if tok.kind != "number" or tok.value[3] or tok.value[2] not in (None, "d"):
            if tok.kind == "op" and tok.text == "$":
                self.fail(tok, "E006", "unbounded delay {frag} is not supported")
            self.fail(tok, "E002", f"syntax error near {{frag}} — expected {what} (a decimal integer)")
        self.advance()
        return tok.value[0]

    def prefix(self):
        tok = self.tok
        if tok.kind == "keyword" and tok.text == "not":
            self.advance()
            inner = self.as_property(self.expr(_NOT_OPERAND))
            return Not(inner, self.span(tok.start, inner.span.end))
        if tok.kind == "op" and tok.text == "##":
            self.advance()
            lo, hi = self.delay_range()
            rhs = self.as_sequence(self.expr(_DELAY), tok)
            return Delay(None, lo, hi, rhs, self.span(tok.start, rhs.span.end))
        if tok.kind == "op" and tok.text in ("!", "~", "-", "+"):
            if tok.text == "+":
                self.fail(tok, "E006", "unary {frag} is not supported")
            self.advance()
            operand = self.as_bool(self.expr(_UNARY), tok)
            return Unary(tok.text, operand, self.span(tok.start, operand.span.end))
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            self.depth += 1
            inner = self.expr(0)
            self.depth -= 1
            close = self.expect(")")
            if _is_bool(inner):
                return Paren(inner, self.span(tok.start, close.end))
            return _respan(inner, self.span(tok.start, close.end))
        if tok.kind == "number":
            self.advance()
            value, width, base, fill = tok.value
            return NumericLiteral(value, width, base, fill, self.span(tok.start, tok.end))
        if tok.kind == "system":
            return self.system_call()
        if tok.kind == "ident":
            if tok.text in UNSUPPORTED_KEYWORDS:
                self.fail(tok, "E006", "unsupported construct {frag}")
            return self.identifier()
        if tok.kind == "keyword" and tok.text == "disable":
            self.misplaced_disable(tok)
        if tok.kind == "badop":
            self.bad_operator(tok)
        if tok.kind == "eof":
            self.fail(tok, "E002", "", expected="an expression")
        if tok.kind == "op" and tok.text in (")", ";") and self.depth:
            self.fail(tok, "E002", "syntax error near {frag} — expected an expression before {frag}")
        if tok.kind == "op" and tok.text == "@":
            self.fail(tok, "E006", "clocking event {frag} is only allowed once, at the start of the property")
        self.fail(tok, "E002", "syntax error near {frag} — expected an expression")

    def identifier(self):
        tok = self.advance()
        if self.at("["):
            open_ = self.advance()
            hi = self.select_index()
            lo = None
            if self.at(":"):
                self.advance()
                lo = self.select_index()
            elif self.tok.kind == "op" and self.tok.text in ("+", "-") and self.peek().text == ":":
                self.fail(self.tok, "E006", "indexed part-select {frag} is not supported")
            close = self.expect("]")
            sp = self.span(tok.start, close.end)
            if lo is None:
                return Identifier(tok.text, index=hi, span=sp)
            if hi < lo:
                raise _Abort(dg.make(self.src, open_.start, close.end, "E010",
                                     "part-select {frag} must be written [high:low]"))
            return Identifier(tok.text, part=(hi, lo), span=sp)
        if self.tok.kind == "badop" and self.tok.text in ("[*", "[=", "[->"):
            self.bad_operator(self.tok)
        if self.at("("):
            self.fail(tok, "E006", "function call {frag} is not supported")
        return Identifier(tok.text, span=self.span(tok.start, tok.end))

    def select_index(self) -> int:
        tok = self.tok
        if tok.kind != "number" or tok.value[3]:
            self.fail(tok, "E006", "non-constant select index {frag} is not supported")
        self.advance()
        return tok.value[0]

    def system_call(self):
        tok = self.advance()
        name = tok.text
        if name not in ("$past", "$rose", "$fell", "$stable"):
            self.fail(tok, "E011", "unknown system function {frag}",
                      hint="supported: $past, $rose, $fell, $stable")
        self.expect("(", f"'(' after {name}")
        self.depth += 1
        arg = self.expr(0)
        arg = self.as_bool(arg, tok)
        cycles = None
        if self.at(","):
            comma = self.advance()
            if name != "$past":
                self.fail(comma, "E002", f"syntax error near {{frag}} — {name} takes one argument")
            ctok = self.tok
            cycles = self.int_literal("a cycle count")
            if cycles < 1:
                raise _Abort(dg.make(self.src, ctok.start, ctok.end, "E010",
                                     "$past cycle count {frag} must be at least 1"))
        self.depth -= 1
        close = self.expect(")")
        return SystemCall(name, (arg,), cycles, self.span(tok.start, close.end))


def _respan(node, span):
    from dataclasses import replace
    return replace(node, span=span)


def _structural_checks(decl: AssertionDecl, source: str) -> list:
    diags = []
    if decl.clocking is None:
        for node in temporal_nodes(decl.property):
            what = "implication |=>" if isinstance(node, Implication) else "temporal construct"
            diags.append(dg.make(source, node.span.start, node.span.end, "E009",
                                 f"{what} {{frag}} needs a clocking event",
                                 hint="add @(posedge clk) or remove the clock-related parts"))
    return diags


def parse_assertion(source: str) -> AssertionDecl:
    """Parse one assertion statement.

    Raises :class:`AssertionSyntaxError` with at least one diagnostic on
    failure; no other exception escapes for any string input.
    """
    if not source.strip():
        raise AssertionSyntaxError([dg.make(source or " ", 0, max(len(source), 1), "E007",
                                            "empty input {frag} is not an assertion")])
    try:
        tokens = tokenize(source)
        decl = _Parser(source, tokens).statement()
    except LexError as e:
        raise AssertionSyntaxError([e.diagnostic]) from None
    except _Abort as e:
        raise AssertionSyntaxError([e.diagnostic]) from None
    except RecursionError:
        raise AssertionSyntaxError([dg.make(source, 0, len(source), "E006",
                                            "expression nesting too deep in {frag}")]) from None
    diags = _structural_checks(decl, source)
    if diags:
        raise AssertionSyntaxError(diags)
    return decl


def parse_bool_expr(source: str):
    """Parse a bare boolean expression (used by behavioral model files)."""
    try:
        tokens = tokenize(source)
        p = _Parser(source, tokens)
        p.depth = 1
        node = p.expr(0)
        if p.tok.kind != "eof":
            p.fail(p.tok, "E008", "unexpected text {frag} after the expression")
        if not _is_bool(node):
            raise _Abort(dg.make(source, 0, len(source), "E002",
                                 "{frag} is not a boolean expression"))
        for n in _walk_calls(node):
            raise _Abort(dg.make(source, n.span.start, n.span.end, "E009",
                                 "sampled-value function {frag} is not allowed here"))
        return node
    except LexError as e:
        raise AssertionSyntaxError([e.diagnostic]) from None
    except _Abort as e:
        raise AssertionSyntaxError([e.diagnostic]) from None


def _walk_calls(node):
    from .ast import walk
    return [n for n in walk(node) if isinstance(n, SystemCall)]
