from .ast import (
    AssertionDecl, Binary, Bool, Clocking, Conditional, Delay, DisableIff,
    Identifier, Implication, Not, NumericLiteral, Paren, Seq, Span, SystemCall,
    Unary, is_combinational, strip_parens, structurally_equal, walk,
)
from .diagnostics import Diagnostic, render_all, render_diagnostic
from .parser import AssertionSyntaxError, parse_assertion, parse_bool_expr
from .printer import format_bool, pretty_print

__all__ = [
    "AssertionDecl", "AssertionSyntaxError", "Binary", "Bool", "Clocking",
    "Conditional", "Delay", "Diagnostic", "DisableIff", "Identifier",
    "Implication", "Not", "NumericLiteral", "Paren", "Seq", "Span",
    "SystemCall", "Unary", "format_bool", "is_combinational", "parse_assertion",
    "parse_bool_expr", "pretty_print", "render_all", "render_diagnostic",
    "strip_parens", "structurally_equal", "walk",
]
