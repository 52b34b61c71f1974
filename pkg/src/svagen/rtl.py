"""Port/signal table extraction from Verilog and name resolution for assertions.

Only the module header and top-level net/variable declarations are read;
bodies are skipped.  Behavior lives in the checker's behavioral models.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .sva import diagnostics as dg
from .sva.ast import AssertionDecl, Identifier, walk

DEFAULT_CLOCK_NAMES = ("clk", "clock", "clk_i", "clock_i")
DEFAULT_RESET_NAMES = ("rst", "reset", "rst_n", "reset_n", "areset", "aresetn")

SEQUENTIAL = "sequential"
COMBINATIONAL = "combinational"


@dataclass(frozen=True)
class SignalDecl:
    name: str
    direction: str  # input | output | inout | internal
    msb: int = 0
    lsb: int = 0

    @property
    def width(self) -> int:
        return abs(self.msb - self.lsb) + 1

    def in_range(self, index: int) -> bool:
        return min(self.msb, self.lsb) <= index <= max(self.msb, self.lsb)


@dataclass(frozen=True)
class ModuleInterface:
    module_name: str
    signals: tuple
    clock: Optional[str] = None
    reset: Optional[str] = None
    mode: str = COMBINATIONAL

    def __post_init__(self):
        if self.clock is not None:
            sig = self.signal(self.clock)
            if sig is None or sig.width != 1:
                raise ValueError(f"clock {self.clock!r} must be a declared 1-bit signal")
        if (self.mode == SEQUENTIAL) != (self.clock is not None):
            raise ValueError("mode is sequential exactly when a clock is present")

    def signal(self, name: str) -> Optional[SignalDecl]:
        for s in self.signals:
            if s.name == name:
                return s
        return None

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.signals]

    def widths(self) -> dict[str, int]:
        return {s.name: s.width for s in self.signals}

    def signal_table(self) -> str:
        rows = []
        for s in self.signals:
            rng = f"[{s.msb}:{s.lsb}]" if s.width > 1 or s.msb != 0 else ""
            rows.append(f"{s.direction} {rng} {s.name}".replace("  ", " "))
        return "\n".join(rows)

    def to_dict(self) -> dict:
        return {
            "module_name": self.module_name,
            "signals": [[s.name, s.direction, s.msb, s.lsb] for s in self.signals],
            "clock": self.clock, "reset": self.reset, "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModuleInterface":
        signals = tuple(SignalDecl(n, direction, msb, lsb) for n, direction, msb, lsb in d["signals"])
        return cls(d["module_name"], signals, d.get("clock"), d.get("reset"), d["mode"])


class InterfaceError(Exception):
    def __init__(self, diagnostic: dg.Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


_COMMENT_RE = re.compile(r"//[^\n]*|/\*.*?\*/", re.S)
_MODULE_RE = re.compile(r"\bmodule\s+([A-Za-z_][A-Za-z0-9_$]*)\s*(#\s*\(.*?\)\s*)?\(", re.S)
_DIRECTIONS = ("input", "output", "inout")
_TYPE_WORDS = {"wire", "reg", "logic", "signed", "unsigned", "var", "tri", "integer", "bit"}
_RANGE_RE = re.compile(r"\[\s*([^\]:]+?)\s*:\s*([^\]]+?)\s*\]")
_DECL_RE = re.compile(r"(?:^|(?<=;))\s*(reg|wire|logic)\b([^;]*);", re.S | re.M)
_INT_EXPR_RE = re.compile(r"^\s*\d+(\s*[-+]\s*\d+)*\s*$")


def _blank_comments(text: str) -> str:
    # keep offsets stable so diagnostic spans point into the original source
    return _COMMENT_RE.sub(lambda m: re.sub(r"[^\n]", " ", m.group(0)), text)


def _int_expr(text: str) -> Optional[int]:
    if not _INT_EXPR_RE.match(text):
        return None
    total, sign = 0, 1
    for tok in re.findall(r"\d+|[-+]", text):
        if tok == "+":
            sign = 1
        elif tok == "-":
            sign = -1
        else:
            total += sign * int(tok)
    return total


def _matching_paren(text: str, open_index: int) -> int:
    depth = 0
    for i in range(open_index, len(text)):
        if text[i] == "(":
            depth += 1
        elif text[i] == ")":
            depth -= 1
            if depth == 0:
                return i
    return -1


def _parse_range(source: str, m: re.Match, offset: int):
    msb, lsb = _int_expr(m.group(1)), _int_expr(m.group(2))
    if msb is None or lsb is None:
        raise InterfaceError(dg.make(source, offset + m.start(), offset + m.end(), "R003",
                                     "range {frag} is not a constant integer range",
                                     category="parse", hint="parameterized widths are not elaborated"))
    return msb, lsb


def _parse_ports(source: str, text: str, offset: int) -> list[SignalDecl]:
    ports: list[SignalDecl] = []
    if not text.strip():
        return ports
    direction = None
    msb = lsb = 0
    pos = 0
    for chunk in text.split(","):
        chunk_start = offset + pos
        pos += len(chunk) + 1
        words = chunk.strip()
        if not words:
            raise InterfaceError(dg.make(source, chunk_start, chunk_start + len(chunk) + 1, "R003",
                                         "empty entry {frag} in port list", category="parse"))
        rng = _RANGE_RE.search(chunk)
        tokens = _RANGE_RE.sub(" ", chunk).split()
        if tokens and tokens[0] in _DIRECTIONS:
            direction = tokens[0]
            msb, lsb = _parse_range(source, rng, chunk_start) if rng else (0, 0)
            tokens = [t for t in tokens[1:] if t not in _TYPE_WORDS]
        elif rng is not None:
            raise InterfaceError(dg.make(source, chunk_start, chunk_start + len(chunk), "R003",
                                         "range without a direction in port entry {frag}",
                                         category="parse"))
        if direction is None:
            raise InterfaceError(dg.make(source, chunk_start, chunk_start + len(chunk), "R004",
                                         "port {frag} has no direction; only ANSI-style headers are supported",
                                         category="parse",
                                         hint="declare ports as 'input [3:0] a' inside the module header"))
        name = tokens[-1] if tokens else ""
        name = name.split("=")[0].strip()
        if len(tokens) != 1 or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_$]*", name):
            raise InterfaceError(dg.make(source, chunk_start, chunk_start + len(chunk), "R003",
                                         "cannot read port entry {frag}", category="parse"))
        ports.append(SignalDecl(name, direction, msb, lsb))
    return ports


def _parse_body(source: str, body: str, offset: int, known: set) -> list[SignalDecl]:
    found = []
    for m in _DECL_RE.finditer(body):
        decl = m.group(2)
        rng = _RANGE_RE.match(decl.strip())
        msb, lsb = (0, 0)
        if rng:
            msb, lsb = _parse_range(source, rng, offset + m.start(2) + (len(decl) - len(decl.lstrip())))
            decl = decl.strip()[rng.end():]
        for item in decl.split(","):
            item = re.sub(r"=.*", "", item, flags=re.S)
            item = _RANGE_RE.sub("", item)  # unpacked dimensions ignored
            words = [w for w in item.split() if w not in _TYPE_WORDS]
            if len(words) != 1:
                continue
            name = words[0]
            if name in known:
                continue
            known.add(name)
            found.append(SignalDecl(name, "internal", msb, lsb))
    return found


def _pick(names: Iterable[str], candidates: Iterable[str]) -> Optional[str]:
    lowered = {c.lower() for c in candidates}
    for n in names:
        if n.lower() in lowered:
            return n
    return None


def extract_interface(verilog_source: str, clock_names=DEFAULT_CLOCK_NAMES,
                      reset_names=DEFAULT_RESET_NAMES) -> ModuleInterface:
    text = _blank_comments(verilog_source)
    modules = list(_MODULE_RE.finditer(text))
    if not modules:
        src = verilog_source or " "
        raise InterfaceError(dg.make(src, 0, min(len(src), 40), "R001",
                                     "no 'module ... (' header found in {frag}", category="parse"))
    if len(modules) > 1:
        m = modules[1]
        raise InterfaceError(dg.make(verilog_source, m.start(), m.end(), "R002",
                                     "second module {frag} found; exactly one module is expected",
                                     category="parse"))
    m = modules[0]
    open_index = m.end() - 1
    close_index = _matching_paren(text, open_index)
    if close_index == -1:
        raise InterfaceError(dg.make(verilog_source, m.start(), m.end(), "R003",
                                     "port list of {frag} is never closed", category="parse"))
    end = text.find("endmodule", close_index)
    if end == -1:
        raise InterfaceError(dg.make(verilog_source, m.start(), m.end(), "R001",
                                     "module {frag} has no 'endmodule'", category="parse"))
    ports = _parse_ports(verilog_source, text[open_index + 1:close_index], open_index + 1)
    body_start = text.find(";", close_index) + 1
    internal = _parse_body(verilog_source, text[body_start:end], body_start, {p.name for p in ports})
    signals = tuple(ports + internal)
    names = [s.name for s in signals]
    if len(set(names)) != len(names):
        raise InterfaceError(dg.make(verilog_source, m.start(), m.end(), "R003",
                                     "duplicate signal names in {frag}", category="parse"))
    clock = _pick(names, clock_names)
    if clock is not None and dict(zip(names, signals))[clock].width != 1:
        raise InterfaceError(dg.make(verilog_source, m.start(), m.end(), "R003",
                                     f"clock '{clock}' of {{frag}} must be 1 bit wide", category="parse"))
    reset = _pick(names, reset_names)
    return ModuleInterface(m.group(1), signals, clock, reset,
                           SEQUENTIAL if clock is not None else COMBINATIONAL)


def detect_mode(iface: ModuleInterface, clock_names=DEFAULT_CLOCK_NAMES) -> str:
    return SEQUENTIAL if _pick(iface.names, clock_names) is not None else COMBINATIONAL


def resolve_names(decl: AssertionDecl, iface: ModuleInterface) -> list[dg.Diagnostic]:
    """Semantic check of an assertion against the module's signal table."""
    src = decl.raw_text
    diags = []
    if decl.clocking is not None:
        c = decl.clocking
        sp = c.span
        if c.signal != iface.clock:
            sig = iface.signal(c.signal)
            if sig is None and iface.clock is None:
                what = "the design has no clock; clocking event on {frag} is invalid"
            elif sig is None:
                what = f"unknown clock {{frag}}; the clock is '{iface.clock}'"
            else:
                what = "clocking event {frag} does not use the design clock"
            hint = f"use @(posedge {iface.clock})" if iface.clock else "remove the clocking event"
            diags.append(_sem(src, sp, "S003", what, hint))
    for ident in (n for n in walk(decl.property) if isinstance(n, Identifier)):
        sig = iface.signal(ident.name)
        if sig is None:
            hint = None
            if "." in ident.name:
                hint = "hierarchical names are not visible; use the bare signal name from the module"
            close = _closest(ident.name.split(".")[-1], iface.names)
            if close:
                hint = f"did you mean '{close}'?"
            diags.append(_sem(src, ident.span, "S001", "unknown identifier {frag}", hint,
                              names=iface.names))
            continue
        if ident.index is not None and not sig.in_range(ident.index):
            diags.append(_sem(src, ident.span, "S002",
                              f"bit-select {{frag}} is outside the declared range [{sig.msb}:{sig.lsb}]"))
        if ident.part is not None and not (sig.in_range(ident.part[0]) and sig.in_range(ident.part[1])):
            diags.append(_sem(src, ident.span, "S002",
                              f"part-select {{frag}} is outside the declared range [{sig.msb}:{sig.lsb}]"))
    return diags


def _sem(src, span, code, message, hint=None, names=None):
    if span is None or not src:
        raise ValueError("semantic checks need an assertion parsed from source")
    return dg.make(src, span.start, span.end, code, message, category="semantic", hint=hint)


def _closest(name: str, names: list[str]) -> Optional[str]:
    import difflib
    match = difflib.get_close_matches(name, names, n=1, cutoff=0.6)
    return match[0] if match else None
