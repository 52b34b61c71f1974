"""Parser, printer and round-trip behaviour of the SVA frontend."""
import random

import pytest
from hypothesis import given, settings, strategies as st

from svagen.sva import (
    AssertionSyntaxError, Binary, Bool, Clocking, Conditional, Delay, DisableIff, Identifier,
    Implication, Not, NumericLiteral, Paren, Seq, SystemCall, Unary, is_combinational,
    parse_assertion, parse_bool_expr, pretty_print, strip_parens, structurally_equal,
)
from svagen.sva.generate import AstGenerator

VALID = [
    "assert property (@(posedge clk) a |-> b);",
    "assert property (@(posedge clk) a |=> b);",
    "assert property (@(negedge clk_i) req ##1 ack |-> done);",
    "assert property (@(posedge clk) req |-> ##[1:3] ack);",
    "assert property (@(posedge clk) disable iff (rst) a |-> b);",
    "assert property (@(posedge clk) disable iff (!rst_n) not (a ##2 b));",
    "assert property (@(posedge clk) $rose(start) |=> busy);",
    "assert property (@(posedge clk) $past(x, 2) == y);",
    "assert property (@(posedge clk) $stable(cnt) || $fell(en));",
    "p1: assert property (@(posedge clk) a |-> b |-> c);",
    "assert property (a |-> b);",
    "assert (a != b);",
    "assert (sel ? y == b : y == a);",
    "assert property (@(posedge clk) data[3:0] == 4'hF && flag[2]);",
    "assert property (@(posedge clk) cnt <= 4'd9 && cnt >= '0);",
    "assert property (@(posedge clk) ##2 a);",
    "assert property (@(posedge clk) a ##0 b |-> c);",
    "assert property (@(posedge clk) ~a == -b + 3'b101 - 8'o17);",
    "assert property (@(posedge clk) (a | b) & c ^ d);",
    "// leading comment\nassert property (@(posedge clk) /* inline */ a |-> b);",
]


@pytest.mark.parametrize("text", VALID)
def test_round_trip_of_hand_written_assertions(text):
    decl = parse_assertion(text)
    printed = pretty_print(decl)
    again = parse_assertion(printed)
    assert structurally_equal(again, decl)
    # printing is a fixed point after one pass
    assert pretty_print(again) == printed


def test_implication_is_right_associative():
    decl = parse_assertion("assert property (a |-> b |-> c);")
    p = decl.property
    assert isinstance(p, Implication) and isinstance(p.consequent, Implication)
    assert p.antecedent == Bool(Identifier("a"), p.antecedent.span)


@pytest.mark.parametrize("text, top", [
    ("a || b && c", "||"),
    ("a && b | c", "&&"),
    ("a | b ^ c", "|"),
    ("a ^ b & c", "^"),
    ("a & b == c", "&"),
    ("a == b < c", "=="),
    ("a < b + c", "<"),
    ("a + b - c", "-"),  # left-associative: (a + b) - c
])
def test_binary_precedence(text, top):
    e = strip_parens(parse_bool_expr(text))
    assert isinstance(e, Binary) and e.op == top


def test_minus_is_left_associative():
    e = strip_parens(parse_bool_expr("a - b - c"))
    assert isinstance(e.lhs, Binary) and e.lhs.op == "-"
    assert e.rhs == Identifier("c", span=e.rhs.span)


def test_ternary_binds_loosest_and_nests_right():
    e = strip_parens(parse_bool_expr("s ? a : t ? b : c"))
    assert isinstance(e, Conditional)
    assert isinstance(e.other, Conditional)
    e = strip_parens(parse_bool_expr("x || y ? a : b"))
    assert isinstance(e.cond, Binary) and e.cond.op == "||"


def test_delay_binds_looser_than_booleans():
    decl = parse_assertion("assert property (@(posedge clk) a && b ##1 c || d |-> e);")
    ante = decl.property.antecedent
    assert isinstance(ante, Delay)
    assert isinstance(ante.lhs.expr, Binary) and ante.lhs.expr.op == "&&"
    assert isinstance(ante.rhs.expr, Binary) and ante.rhs.expr.op == "||"


def test_leading_delay_and_range():
    decl = parse_assertion("assert property (@(posedge clk) ##[2:4] a);")
    d = decl.property.seq
    assert d.lhs is None and (d.min_cycles, d.max_cycles, d.upper) == (2, 4, 4)


def test_literals():
    cases = {
        "4'b1010": NumericLiteral(10, 4, "b"),
        "8'hFF": NumericLiteral(255, 8, "h"),
        "3'o7": NumericLiteral(7, 3, "o"),
        "12": NumericLiteral(12),
        "'1": NumericLiteral(1, fill=True),
        "16'd1_000": NumericLiteral(1000, 16, "d"),
    }
    for text, want in cases.items():
        got = parse_bool_expr(text)
        assert got == NumericLiteral(want.value, want.width, want.base, want.fill, got.span), text


def test_system_calls():
    e = parse_assertion("assert property (@(posedge clk) $past(a, 3));").property.seq.expr
    assert e == SystemCall("$past", (Identifier("a", span=e.args[0].span),), 3, e.span)
    e = parse_assertion("assert property (@(posedge clk) $rose(x));").property.seq.expr
    assert e.cycles is None


def test_bare_expressions_reject_sampled_calls():
    # model files describe one cycle; they cannot look back
    with pytest.raises(AssertionSyntaxError) as exc:
        parse_bool_expr("$past(a, 3)")
    assert exc.value.diagnostics[0].code == "E009"


def test_clocking_label_and_disable():
    decl = parse_assertion("chk: assert property (@(negedge clk) disable iff (rst) a);")
    assert decl.label == "chk"
    assert decl.clocking == Clocking("negedge", "clk", decl.clocking.span)
    assert isinstance(decl.property, DisableIff)


def test_not_property():
    decl = parse_assertion("assert property (@(posedge clk) not (a ##1 b));")
    assert isinstance(decl.property, Not)


def test_immediate_assertion_is_combinational():
    decl = parse_assertion("assert (a || !b);")
    assert decl.immediate and is_combinational(decl)
    assert not is_combinational(parse_assertion("assert property (@(posedge clk) a |=> b);"))


def test_pretty_print_fully_parenthesizes():
    decl = parse_assertion("assert property (@(posedge clk) a && b |-> c);")
    assert pretty_print(decl) == "assert property (@(posedge clk) ((a) && (b)) |-> (c));"


def test_paren_nodes_are_kept_but_ignored_by_structural_equality():
    a = parse_bool_expr("((a))")
    assert isinstance(a, Paren)
    assert structurally_equal(a, parse_bool_expr("a"))


def test_raw_text_and_span_do_not_affect_equality():
    a = parse_assertion("assert property (a |-> b);")
    b = parse_assertion("assert   property(a|->b);")
    assert structurally_equal(a, b)
    assert a.raw_text != b.raw_text


@pytest.mark.parametrize("text", [
    "",
    "assert property (a |-> b",
    "assert property ();",
    "property (a);",
    "assert property (a |-> b); assert property (c);",
])
def test_rejects(text):
    with pytest.raises(AssertionSyntaxError) as exc:
        parse_assertion(text)
    assert exc.value.diagnostics


def test_unary_chain():
    e = strip_parens(parse_bool_expr("!~-a"))
    assert isinstance(e, Unary) and e.op == "!"
    assert isinstance(e.operand, Unary) and e.operand.op == "~"


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_generated_round_trip(seed, depth):
    gen = AstGenerator(random.Random(seed), ["a", "b", "req", "ack", "data"], {"data": 8})
    decl = gen.assertion(depth)
    text = pretty_print(decl)
    assert structurally_equal(parse_assertion(text), decl)
