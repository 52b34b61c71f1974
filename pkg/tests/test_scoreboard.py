import csv
import io
import json
from dataclasses import fields, replace

import pytest

from svagen.checker.report import (
    ReportError, TclError, emit_report, emit_tcl, read_json_report, render_report,
)
from svagen.checker.scoreboard import (
    CORRECT, INCORRECT, SYNTAX_ERROR, AssertionRecord, Tally, TallyError, Verdict, aggregate,
    classify,
)
from svagen.checker.stimulus import StimulusPlan

from conftest import bundled, golden

# published run shape: 892 generated, 364 never compiled, 234 fixed by repair,
# 294 clean from the start. The functional split of the 528 is not published;
# 300/228 is an arbitrary choice that only has to add up.
PAPER_COUNTS = dict(generated=892, syntax_incorrect=364, syntax_correct=528,
                    fixed_by_repair=234, clean_initially=294)


def paper_records():
    recs = []
    for i in range(364):
        recs.append(AssertionRecord("hdlbits", f"s{i}", False, "exhausted", SYNTAX_ERROR))
    for i in range(234):
        recs.append(AssertionRecord("hdlbits", f"r{i}", False, "fixed", CORRECT if i < 120 else INCORRECT))
    for i in range(294):
        recs.append(AssertionRecord("hdlbits", f"c{i}", True, "fixed", CORRECT if i < 180 else INCORRECT))
    return recs


def test_table_counts_from_records():
    per, total = aggregate(paper_records())
    assert {k: getattr(total, k) for k in PAPER_COUNTS} == PAPER_COUNTS
    assert total.syntax_incorrect + total.syntax_correct == 892
    assert total.fixed_by_repair + total.clean_initially == 528
    assert total.functionally_correct + total.functionally_incorrect == 528
    assert total.violations() == []
    assert per["hdlbits"] == total


@pytest.mark.parametrize("name", [f.name for f in fields(Tally) if f.name != "vacuous_passes"])
@pytest.mark.parametrize("delta", [-1, 1])
def test_any_off_by_one_breaks_an_invariant(name, delta):
    _, total = aggregate(paper_records())
    bad = replace(total, **{name: getattr(total, name) + delta})
    assert bad.violations()
    with pytest.raises(TallyError):
        bad.validate()


def test_empty_tally():
    per, total = aggregate([])
    assert per == {} and total == Tally()


@pytest.mark.parametrize("rec", [
    AssertionRecord("d", "u", True, "fixed", SYNTAX_ERROR),
    AssertionRecord("d", "u", False, "loop_detected", CORRECT),
    AssertionRecord("d", "u", False, "fixed", "maybe"),
])
def test_inconsistent_records_are_rejected(rec):
    with pytest.raises(TallyError):
        aggregate([rec])


def test_vacuous_passes_are_a_subset_of_correct():
    recs = [AssertionRecord("d", "a", True, "fixed", CORRECT, vacuous=True),
            AssertionRecord("d", "b", True, "fixed", CORRECT)]
    _, total = aggregate(recs)
    assert (total.functionally_correct, total.vacuous_passes) == (2, 1)


def test_verdict_invariants():
    with pytest.raises(ValueError):
        Verdict(SYNTAX_ERROR)
    with pytest.raises(ValueError):
        Verdict(INCORRECT)
    v = Verdict(CORRECT, sequences_checked=3)
    assert Verdict.from_dict(json.loads(json.dumps(v.to_dict()))) == v


def test_contradiction_fails_at_cycle_zero(fsm):
    model, iface, _ = fsm
    v = classify("assert property (1'b0);", model, iface, StimulusPlan())
    assert v.kind == INCORRECT and v.violation_cycle == 0


def test_missing_paren_is_a_syntax_verdict(fsm):
    model, iface, _ = fsm
    v = classify("assert property (@(posedge clk) dout;", model, iface, StimulusPlan())
    assert v.kind == SYNTAX_ERROR and v.diagnostics[0].code == "E001"


def test_decade_counter_range_at_reduced_depth():
    model, iface, _ = bundled("decade_counter")
    v = classify("assert property (@(posedge clk) count <= 9);", model, iface, StimulusPlan())
    assert v.kind == CORRECT
    assert any("exhaustive over 12 of 20 cycles" in n for n in v.notes)


# --- reports -----------------------------------------------------------------

def test_single_row_csv():
    t = Tally(6, 3, 3, 0, 3, 2, 1)
    assert render_report({"design1": t}, "csv").splitlines()[1] == "design1,2,1,3"


def test_rows_are_sorted_and_markdown_has_totals():
    tallies = {"zeta": Tally(1, 0, 1, 0, 1, 1, 0), "alpha": Tally(2, 1, 1, 1, 0, 0, 1)}
    rows = list(csv.reader(io.StringIO(render_report(tallies, "csv"))))
    assert [r[0] for r in rows[1:]] == ["alpha", "zeta"]
    md = render_report(tallies, "markdown").splitlines()
    assert len(md) == 2 + 2 + 1 and md[-1] == "| **total** | 1 | 1 | 1 | 0 |"


def test_json_round_trip(tmp_path):
    per, total = aggregate(paper_records())
    text = emit_report(per, "json", tmp_path / "r.json")
    assert (tmp_path / "r.json").read_text() == text
    back, back_total = read_json_report(text)
    assert back == per and back_total == total


def test_tampered_json_is_rejected():
    per, _ = aggregate(paper_records())
    doc = json.loads(render_report(per, "json"))
    doc["designs"][0]["functionally_correct"] += 1
    with pytest.raises(ReportError):
        read_json_report(json.dumps(doc))
    with pytest.raises(ReportError):
        render_report(per, "xml")


# --- tcl ---------------------------------------------------------------------

def test_sequential_tcl_golden():
    text = emit_tcl("fsm_1101", "fsm_1101/rtl.v", ["fsm_1101/assertions/u00.sva"], "clk", "reset")
    golden("fsm_1101.tcl", text)
    assert "clock clk\n" in text and "reset -expression {reset}\n" in text


def test_combinational_tcl_golden():
    text = emit_tcl("mux2", "mux2/rtl.v", ["mux2/assertions/u00.sva", "mux2/assertions/u02.sva"])
    golden("mux2.tcl", text)
    assert "clock" not in text and "reset" not in text


def test_active_low_reset_and_missing_clock():
    assert "reset -expression {!rst_n}" in emit_tcl("d", "d.v", [], "clk", "rst_n")
    with pytest.raises(TclError):
        emit_tcl("d", "d.v", [], None, sequential=True)
    assert emit_tcl("d", "d.v", ["a.sva"], "clk") == emit_tcl("d", "d.v", ["a.sva"], "clk")
