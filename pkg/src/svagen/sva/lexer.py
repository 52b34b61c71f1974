"""Tokenizer for the SVA subset.

Operators outside the subset (``===``, ``<<``, ``[*`` ...) still lex as
tokens so the parser can report them as unsupported rather than as garbage.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from . import diagnostics as dg

KEYWORDS = {"assert", "property", "disable", "iff", "posedge", "negedge", "not"}

# Recognized SystemVerilog words we deliberately do not support.
UNSUPPORTED_KEYWORDS = {
    "throughout", "within", "intersect", "and", "or", "first_match",
    "s_eventually", "eventually", "always", "s_always", "until", "s_until",
    "until_with", "nexttime", "s_nexttime", "implies", "sequence",
    "endsequence", "endproperty", "assume", "cover", "restrict", "else",
    "if", "case", "strong", "weak", "accept_on", "reject_on", "sync_accept_on",
    "sync_reject_on", "expect", "default", "clocking", "edge",
}

SUPPORTED_OPS = [
    "|->", "|=>", "##", "&&", "||", "==", "!=", "<=", ">=",
    "(", ")", "[", "]", ":", ";", ",", "@", "!", "~", "-", "+",
    "&", "|", "^", "<", ">", "?",
]
UNSUPPORTED_OPS = [
    "===", "!==", "=>", "<<<", ">>>", "<<", ">>", "**", "->", "<->", "[*", "[=", "[->",
    "~&", "~|", "~^", "^~", "*", "/", "%", "=", "{", "}", "#", ".*",
]
_ALL_OPS = sorted(SUPPORTED_OPS + UNSUPPORTED_OPS, key=len, reverse=True)
_OP_RE = re.compile("|".join(re.escape(op) for op in _ALL_OPS))

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*(?:\.[A-Za-z_][A-Za-z0-9_$]*)*")
_SYSTEM_RE = re.compile(r"\$[A-Za-z_][A-Za-z0-9_]*")
_BASED_RE = re.compile(r"(\d[\d_]*)?\s*'\s*([sS]?)([bBdDhHoO])\s*([0-9a-fA-FxXzZ?_]+)")
_FILL_RE = re.compile(r"'([01xXzZ])(?![0-9A-Za-z_])")
_DEC_RE = re.compile(r"\d[\d_]*")
_WS_RE = re.compile(r"\s+")
_LINE_COMMENT_RE = re.compile(r"//[^\n]*")
_BLOCK_COMMENT_RE = re.compile(r"/\*.*?\*/", re.S)

_BASE_DIGITS = {"b": "01", "o": "01234567", "d": "0123456789", "h": "0123456789abcdef"}
_BASE_RADIX = {"b": 2, "o": 8, "d": 10, "h": 16}


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | system | number | op | badop | eof
    text: str
    start: int
    end: int
    value: object = None  # (value, width, base, fill) for numbers


class LexError(Exception):
    def __init__(self, diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


def _number(source: str, m: re.Match) -> Token:
    size_text, _signed, base, digits = m.groups()
    base = base.lower()
    clean = digits.replace("_", "").lower()
    if any(c in "xz?" for c in clean):
        raise LexError(dg.make(source, m.start(), m.end(), "E004",
                               "x/z digits are not supported in literal {frag}",
                               category="lex", hint="use only 0/1 digits"))
    if not clean or any(c not in _BASE_DIGITS[base] for c in clean):
        raise LexError(dg.make(source, m.start(), m.end(), "E004",
                               f"digit not valid for base '{base}' in literal {{frag}}",
                               category="lex"))
    value = int(clean, _BASE_RADIX[base])
    width = None
    if size_text is not None:
        width = int(size_text.replace("_", ""))
        if width < 1 or width > 32:
            raise LexError(dg.make(source, m.start(), m.end(), "E004",
                                   "literal width must be between 1 and 32 in {frag}",
                                   category="lex"))
        if value >= 1 << width:
            raise LexError(dg.make(source, m.start(), m.end(), "E004",
                                   f"value does not fit in {width} bits in literal {{frag}}",
                                   category="lex", hint=f"widen the size prefix or shorten the digits"))
    elif value >= 1 << 32:
        raise LexError(dg.make(source, m.start(), m.end(), "E004",
                               "unsized literal {frag} does not fit in 32 bits", category="lex"))
    return Token("number", m.group(0), m.start(), m.end(), (value, width, base, False))


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens, raising :class:`LexError` on the first bad character."""
    toks: list[Token] = []
    pos, n = 0, len(source)
    while pos < n:
        m = _WS_RE.match(source, pos) or _LINE_COMMENT_RE.match(source, pos) \
            or _BLOCK_COMMENT_RE.match(source, pos)
        if m:
            pos = m.end()
            continue
        if source.startswith("/*", pos):
            raise LexError(dg.make(source, pos, n, "E003", "unterminated block comment {frag}",
                                   category="lex"))
        m = _BASED_RE.match(source, pos)
        if m:
            toks.append(_number(source, m))
            pos = m.end()
            continue
        m = _FILL_RE.match(source, pos)
        if m:
            digit = m.group(1)
            if digit not in "01":
                raise LexError(dg.make(source, m.start(), m.end(), "E004",
                                       "x/z fill literal {frag} is not supported", category="lex"))
            toks.append(Token("number", m.group(0), m.start(), m.end(), (int(digit), None, None, True)))
            pos = m.end()
            continue
        m = _DEC_RE.match(source, pos)
        if m:
            if int(m.group(0).replace("_", "")) >= 1 << 32:
                raise LexError(dg.make(source, m.start(), m.end(), "E004",
                                       "unsized literal {frag} does not fit in 32 bits", category="lex"))
            toks.append(Token("number", m.group(0), m.start(), m.end(),
                              (int(m.group(0).replace("_", "")), None, None, False)))
            pos = m.end()
            continue
        m = _IDENT_RE.match(source, pos)
        if m:
            text = m.group(0)
            kind = "keyword" if text in KEYWORDS else "ident"
            toks.append(Token(kind, text, m.start(), m.end()))
            pos = m.end()
            continue
        m = _SYSTEM_RE.match(source, pos)
        if m:
            toks.append(Token("system", m.group(0), m.start(), m.end()))
            pos = m.end()
            continue
        m = _OP_RE.match(source, pos)
        if m:
            text = m.group(0)
            kind = "op" if text in SUPPORTED_OPS else "badop"
            toks.append(Token(kind, text, m.start(), m.end()))
            pos = m.end()
            continue
        raise LexError(dg.make(source, pos, pos + 1, "E003", "illegal character {frag}",
                               category="lex"))
    toks.append(Token("eof", "", n, n))
    return toks
