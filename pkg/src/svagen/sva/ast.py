"""AST for the supported SVA subset.

Three layers: boolean expressions, sequences (delay chains) and properties
(implication, negation, one outer ``disable iff``).  Source spans are carried
for diagnostics but never take part in equality, so two trees built from
differently formatted text compare equal when their structure matches.
``Paren`` nodes are kept for fidelity to the source; use
:func:`structurally_equal` to compare modulo grouping.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass, replace
from typing import Iterator, Optional, Tuple, Union


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    line: int = 1
    column: int = 1

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"span start {self.start} > end {self.end}")
        if self.line < 1 or self.column < 1:
            raise ValueError("line and column are 1-based")

    def cover(self, other: "Span | None") -> "Span":
        if other is None:
            return self
        first = self if self.start <= other.start else other
        return Span(first.start, max(self.end, other.end), first.line, first.column)


def _span():
    return field(default=None, compare=False, repr=False)


# --- boolean layer ---------------------------------------------------------

@dataclass(frozen=True)
class Identifier:
    name: str
    index: Optional[int] = None
    part: Optional[Tuple[int, int]] = None  # (high, low)
    span: Optional[Span] = _span()

    def __post_init__(self):
        if self.index is not None and self.part is not None:
            raise ValueError("an identifier has either a bit-select or a part-select")
        if self.part is not None and self.part[0] < self.part[1]:
            raise ValueError("part-select high must be >= low")


@dataclass(frozen=True)
class NumericLiteral:
    """``width``/``base`` are None for unsized decimals; ``fill`` marks '0 / '1."""

    value: int
    width: Optional[int] = None
    base: Optional[str] = None
    fill: bool = False
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "BoolExpr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "BoolExpr"
    rhs: "BoolExpr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Conditional:
    cond: "BoolExpr"
    then: "BoolExpr"
    other: "BoolExpr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Paren:
    inner: "BoolExpr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class SystemCall:
    name: str
    args: Tuple["BoolExpr", ...]
    cycles: Optional[int] = None  # only for $past
    span: Optional[Span] = _span()

    def __post_init__(self):
        if self.cycles is not None and self.cycles < 1:
            raise ValueError("$past cycle count must be >= 1")


BoolExpr = Union[Identifier, NumericLiteral, Unary, Binary, Conditional, Paren, SystemCall]

UNARY_OPS = ("!", "~", "-")
BINARY_OPS = ("&&", "||", "&", "|", "^", "==", "!=", "<", "<=", ">", ">=", "+", "-")
LOGICAL_OPS = ("&&", "||")
COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")
SYSTEM_FUNCTIONS = ("$past", "$rose", "$fell", "$stable")


# --- sequence layer --------------------------------------------------------

@dataclass(frozen=True)
class Bool:
    expr: BoolExpr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Delay:
    """``lhs ##[min:max] rhs``; ``lhs`` is None for a leading delay."""

    lhs: Optional["SequenceExpr"]
    min_cycles: int
    max_cycles: Optional[int]
    rhs: "SequenceExpr"
    span: Optional[Span] = _span()

    def __post_init__(self):
        if self.min_cycles < 0:
            raise ValueError("delay must be >= 0")
        if self.max_cycles is not None and self.max_cycles < self.min_cycles:
            raise ValueError("delay range max must be >= min")

    @property
    def upper(self) -> int:
        return self.min_cycles if self.max_cycles is None else self.max_cycles


SequenceExpr = Union[Bool, Delay]


# --- property layer --------------------------------------------------------

@dataclass(frozen=True)
class Seq:
    seq: SequenceExpr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Implication:
    kind: str  # "|->" or "|=>"
    antecedent: SequenceExpr
    consequent: "PropertyExpr"
    span: Optional[Span] = _span()

    @property
    def overlapped(self) -> bool:
        return self.kind == "|->"


@dataclass(frozen=True)
class Not:
    inner: "PropertyExpr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class DisableIff:
    condition: BoolExpr
    body: "PropertyExpr"
    span: Optional[Span] = _span()


PropertyExpr = Union[Seq, Implication, Not, DisableIff]


@dataclass(frozen=True)
class Clocking:
    edge: str  # "posedge" | "negedge"
    signal: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class AssertionDecl:
    property: PropertyExpr
    clocking: Optional[Clocking] = None
    label: Optional[str] = None
    immediate: bool = False
    source_span: Optional[Span] = field(default=None, compare=False, repr=False)
    raw_text: str = field(default="", compare=False, repr=False)


Node = Union[BoolExpr, SequenceExpr, PropertyExpr, AssertionDecl, Clocking]


def children(node) -> Iterator:
    for f in fields(node):
        if f.name == "span" or f.name == "source_span":
            continue
        value = getattr(node, f.name)
        if is_dataclass(value):
            yield value
        elif isinstance(value, tuple):
            for item in value:
                if is_dataclass(item):
                    yield item


def walk(node) -> Iterator:
    """Pre-order traversal over every AST node."""
    yield node
    for child in children(node):
        yield from walk(child)


def strip_parens(node):
    if isinstance(node, Paren):
        return strip_parens(node.inner)
    if not is_dataclass(node):
        return node
    changes = {}
    for f in fields(node):
        value = getattr(node, f.name)
        if is_dataclass(value) and not isinstance(value, Span):
            changes[f.name] = strip_parens(value)
        elif isinstance(value, tuple) and value and is_dataclass(value[0]):
            changes[f.name] = tuple(strip_parens(v) for v in value)
    return replace(node, **changes) if changes else node


def structurally_equal(a, b) -> bool:
    return strip_parens(a) == strip_parens(b)


def temporal_nodes(node) -> list:
    """Every construct that needs a clock: delays, ``|=>``, sampled-value calls."""
    found = []
    for n in walk(node):
        if isinstance(n, Delay) or isinstance(n, SystemCall):
            found.append(n)
        elif isinstance(n, Implication) and not n.overlapped:
            found.append(n)
    return found


def is_combinational(decl: AssertionDecl) -> bool:
    return decl.clocking is None and not temporal_nodes(decl.property)


def identifiers(node) -> list[Identifier]:
    return [n for n in walk(node) if isinstance(n, Identifier)]
