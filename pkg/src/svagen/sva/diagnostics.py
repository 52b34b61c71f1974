"""Span-carrying diagnostics and their LLM-oriented rendering.

Messages never point at an error by ordinal position ("the 5th token");
instead they quote the offending fragment inline, and the rendered form
repeats the whole source line as context.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .ast import Span

ERROR = "error"
WARNING = "warning"

# Stable codes; the repair loop and tests key on these.
CODES = {
    "E001": "unbalanced parentheses",
    "E002": "unexpected token",
    "E003": "illegal character",
    "E004": "malformed literal",
    "E005": "misplaced disable iff",
    "E006": "unsupported construct",
    "E007": "not an assertion statement",
    "E008": "trailing text after statement",
    "E009": "temporal construct without clock",
    "E010": "invalid range or count",
    "E011": "unknown system function",
    "E012": "missing semicolon",
    "E_COMB_DELAY": "delay has no combinational reading",
    "S001": "unknown identifier",
    "S002": "bit-select out of range",
    "S003": "clock is not a clock signal",
    "R001": "no module found",
    "R002": "multiple modules",
    "R003": "unparseable port list",
    "R004": "non-ANSI port declaration",
}


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    category: str  # lex | parse | semantic
    code: str
    message: str
    span: Span
    quoted_fragment: str
    hint: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "severity": self.severity,
            "category": self.category,
            "code": self.code,
            "message": self.message,
            "span": [self.span.start, self.span.end, self.span.line, self.span.column],
            "quoted_fragment": self.quoted_fragment,
            "hint": self.hint,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Diagnostic":
        return cls(d["severity"], d["category"], d["code"], d["message"],
                   Span(*d["span"]), d["quoted_fragment"], d.get("hint"))


def quote(fragment: str) -> str:
    return f"«{fragment}»"


def span_at(source: str, start: int, end: int) -> Span:
    """Build a span with 1-based line/column computed from ``source``."""
    start = max(0, min(start, len(source)))
    end = max(start, min(end, len(source)))
    line = source.count("\n", 0, start) + 1
    line_start = source.rfind("\n", 0, start) + 1
    return Span(start, end, line, start - line_start + 1)


def make(source: str, start: int, end: int, code: str, message: str,
         *, category: str = "parse", severity: str = ERROR,
         hint: str | None = None) -> Diagnostic:
    """Create a diagnostic whose message embeds the quoted fragment.

    ``message`` may contain ``{frag}``, which is replaced by the guillemet
    quoted fragment; otherwise the quote is prefixed as ``near «...»``.
    Zero-width spans are widened to cover one character so that there is
    always something to quote.
    """
    if start == end:
        if end < len(source):
            end = start + 1
        elif start > 0:
            start = end - 1
    span = span_at(source, start, end)
    fragment = source[span.start:span.end]
    q = quote(fragment)
    text = message.replace("{frag}", q) if "{frag}" in message else f"{message} near {q}"
    return Diagnostic(severity, category, code, text, span, fragment, hint)


def context_lines(source: str, span: Span) -> str:
    first = source.rfind("\n", 0, span.start) + 1
    last = source.find("\n", max(span.end - 1, span.start))
    if last == -1:
        last = len(source)
    return source[first:last]


def render_diagnostic(diag: Diagnostic, source: str) -> str:
    ctx = " ".join(part.strip() for part in context_lines(source, diag.span).splitlines())
    out = f"{diag.severity}[{diag.code}]: {diag.message} in: {ctx}"
    if diag.hint:
        out += f"\n  hint: {diag.hint}"
    return out


def render_all(diags: Iterable[Diagnostic], source: str) -> str:
    return "\n\n".join(render_diagnostic(d, source) for d in diags)
