"""Acceptance checks, one test per criterion.

Each test records its outcome in ``conftest.ACCEPTANCE`` so the terminal
summary prints a single PASS/FAIL line per criterion, then asserts.
"""
import itertools
import random
import socket
import time
from contextlib import contextmanager
from dataclasses import fields, replace

from svagen.checker.evaluate import eval_expr
from svagen.checker.model import Trace, simulate
from svagen.checker.report import emit_tcl
from svagen.checker.scoreboard import CORRECT, INCORRECT, Tally, aggregate, classify
from svagen.checker.stimulus import StimulusPlan
from svagen.checker.temporal import FAILS, check_on_trace
from svagen.cli import main
from svagen.dataset import (
    EmbedderConfig, PairCandidate, emit_finetune_jsonl, filter_pairs, mine_pairs, synthesize_pairs,
)
from svagen.llm import Gateway, ProviderConfig
from svagen.repair import FIXED, LOOP_DETECTED, RepairPolicy, RepairSession, run_repair
from svagen.rewrite import to_combinational
from svagen.sva import (
    AssertionDecl, Clocking, Delay, DisableIff, Implication, Not, SystemCall, parse_assertion,
    pretty_print, render_all, structurally_equal,
)
from svagen.sva.ast import walk
from svagen.sva.generate import AstGenerator

import conftest
from conftest import FIXTURES, GOLDEN, bundled, load_json
from suites import COMB_CASES, FSM_CORRECT, FSM_MUTANTS, all_envs, comb_model, oracle_holds
from test_diagnostics import CASES, POSITIONAL
from test_repair import BROKEN, BROKEN2, GOOD, UNIT
from test_scoreboard import PAPER_COUNTS, paper_records


@contextmanager
def criterion(n, what):
    conftest.ACCEPTANCE[n] = (False, what)
    t0 = time.perf_counter()
    yield
    conftest.ACCEPTANCE[n] = (True, f"{what} ({time.perf_counter() - t0:.1f}s)")


def _golden_equals(name, text):
    return (GOLDEN / name).read_text(encoding="utf-8") == text


# 1 -----------------------------------------------------------------------------

def test_1_parser_round_trip():
    with criterion(1, "10,000 generated ASTs round-trip, < 30 s"):
        t0 = time.perf_counter()
        vocab = ["a", "b", "req", "ack", "data", "state"]
        widths = {"data": 8, "state": 2}
        for seed in range(10_000):
            rng = random.Random(seed)
            decl = AstGenerator(rng, vocab, widths).assertion(rng.randint(1, 4))
            assert structurally_equal(parse_assertion(pretty_print(decl)), decl), seed
        assert time.perf_counter() - t0 < 30


# 2 -----------------------------------------------------------------------------

def test_2_diagnostic_contract():
    with criterion(2, "25 broken assertions quote their fragment, no positional wording, golden match"):
        assert len(CASES) == 25
        blocks = []
        for case in CASES:
            src = case["source"]
            try:
                parse_assertion(src)
            except Exception as exc:
                diags = exc.diagnostics
            else:
                raise AssertionError(f"parsed: {src}")
            d = diags[0]
            assert (d.code, d.quoted_fragment) == (case["code"], case["fragment"])
            assert src[d.span.start:d.span.end] == d.quoted_fragment
            assert f"«{d.quoted_fragment}»" in d.message
            text = render_all(diags, src)
            assert not POSITIONAL.search(text)
            blocks.append(text)
        assert _golden_equals("diagnostics.txt", "\n\n".join(blocks) + "\n")


# 3 -----------------------------------------------------------------------------

WIDTHS = {"a": 1, "b": 1, "c": 2, "d": 4}


def test_3_rewrite_fidelity():
    with criterion(3, "a |-> b rewrite, 1,000-input idempotence walk, exhaustive 8-bit agreement"):
        decl = parse_assertion("assert property (@(posedge clk) a |-> b);")
        assert pretty_print(to_combinational(decl)) == "assert((!(a)) || (b));"

        for seed in range(1000):
            rng = random.Random(seed)
            gen = AstGenerator(rng, list(WIDTHS), WIDTHS)
            prop = gen.property(3, False)
            if rng.random() < 0.3:
                prop = DisableIff(gen.bool_expr(1, False), prop)
            once = to_combinational(AssertionDecl(prop, Clocking("posedge", "clk")))
            assert structurally_equal(to_combinational(once), once)
            assert not any(isinstance(n, (Delay, SystemCall, Implication, Not, DisableIff))
                           for n in walk(once.property))

        # delay-free, sampled-free, disable-free: the rewritten expression is
        # true exactly when a one-cycle trace of the original does not fail
        envs = [dict(zip(WIDTHS, bits)) for bits in
                itertools.product(*(range(1 << w) for w in WIDTHS.values()))]
        assert len(envs) == 256
        widths = dict(WIDTHS, clk=1)
        for seed in range(200):
            decl = AssertionDecl(AstGenerator(random.Random(seed), list(WIDTHS), WIDTHS).property(3, False),
                                 Clocking("posedge", "clk"))
            expr = to_combinational(decl).property.seq.expr
            for env in envs:
                trace = Trace(1, {k: [v] for k, v in dict(env, clk=1).items()})
                holds = check_on_trace(decl, trace, widths).statuses[0] != FAILS
                assert holds == (eval_expr(expr, env, widths) != 0)


# 4 -----------------------------------------------------------------------------

def test_4_table_arithmetic():
    with criterion(4, "892 = 364 + 528, 528 = 234 + 294, every ±1 mutation caught"):
        _, total = aggregate(paper_records())
        assert {k: getattr(total, k) for k in PAPER_COUNTS} == PAPER_COUNTS
        assert total.generated == 892
        assert total.syntax_incorrect + total.syntax_correct == 892
        assert total.fixed_by_repair + total.clean_initially == 528
        assert total.violations() == []
        for f in fields(Tally):
            if f.name == "vacuous_passes":
                continue
            for delta in (-1, 1):
                assert replace(total, **{f.name: getattr(total, f.name) + delta}).violations(), f.name


# 5 -----------------------------------------------------------------------------

def test_5_checker_against_oracles():
    with criterion(5, "50 combinational cases vs truth table, FSM correct set and 5 mutants, < 2 min"):
        t0 = time.perf_counter()
        assert len(COMB_CASES) == 50
        for design, text, predicate in COMB_CASES:
            model, iface = comb_model(design)
            assert sum(1 for _ in all_envs(design)) <= 1 << 16
            verdict = classify(text, model, iface, StimulusPlan())
            assert verdict.kind == (CORRECT if oracle_holds(design, predicate) else INCORRECT), text
            if verdict.kind == CORRECT:
                assert verdict.sequences_checked == sum(1 for _ in all_envs(design))

        model, iface, _ = bundled("fsm_1101")
        plan = StimulusPlan(horizon=12, random_budget=0)
        for text in FSM_CORRECT:
            v = classify(text, model, iface, plan)
            assert v.kind == CORRECT and v.sequences_checked == 4096, text
        for name in sorted(FSM_MUTANTS):
            bad = model.with_changes(**FSM_MUTANTS[name])
            verdicts = [(t, classify(t, bad, iface, plan)) for t in FSM_CORRECT]
            caught = [(t, v) for t, v in verdicts if v.kind == INCORRECT]
            assert caught, name
            text, v = caught[0]
            steps = [{"reset": v.counterexample.value("reset", t), "din": v.counterexample.value("din", t)}
                     for t in range(v.counterexample.length)]
            tr = simulate(bad, steps)
            tr.columns["clk"] = [1] * tr.length
            assert check_on_trace(parse_assertion(text), tr).violated_at == v.violation_cycle
        assert time.perf_counter() - t0 < 120


# 6 -----------------------------------------------------------------------------

def test_6_repair_loop():
    with criterion(6, "clean stops at 0, repeat caught by 2, cap held over 1,000 scripts"):
        iface = bundled("fsm_1101")[1]

        def gw(*responses, responder=None):
            return Gateway(ProviderConfig("scripted"), responses=list(responses), responder=responder)

        g = gw()
        s = run_repair(RepairSession.start(UNIT, iface, GOOD), RepairPolicy(), g)
        assert (s.status, s.iteration, g.calls) == (FIXED, 0, 0)

        s = run_repair(RepairSession.start(UNIT, iface, BROKEN), RepairPolicy(), gw(BROKEN2, BROKEN2, GOOD))
        assert s.status == LOOP_DETECTED and s.iteration <= 2

        pool = [GOOD, BROKEN, BROKEN2, "no assertion here", "assert property (@(posedge clk) dot);",
                "assert property (@(posedge clk) din ##1 (dout);"]
        rng = random.Random(2024)
        for _ in range(1000):
            policy = RepairPolicy(max_iterations=rng.randint(1, 6), loop_window=rng.randint(2, 4))
            g = gw(*[rng.choice(pool) for _ in range(rng.randint(0, 8))],
                   responder=lambda req: rng.choice(pool))
            s = run_repair(RepairSession.start(UNIT, iface, rng.choice(pool[1:])), policy, g)
            assert s.iteration <= policy.max_iterations and g.calls <= policy.max_iterations


# 7 -----------------------------------------------------------------------------

def test_7_dataset(tmp_path):
    with criterion(7, "7 mined candidates, 0.6 threshold boundaries, byte-identical JSONL, 500 synthetic"):
        found = mine_pairs(FIXTURES / "corpus")
        assert len(found) == 7

        vec = tmp_path / "vec.txt"
        vec.write_text("4 3\nx 1 0 0\ny 0 1 0\nz 0 0 1\np 3 4 0\n")
        emb = EmbedderConfig("external", dimension=3, vectors_path=str(vec))
        cands = [PairCandidate("x z", "assert property (x |-> y);", "t.sv", 1),   # 0.5
                 PairCandidate("x y", "assert property (x |-> y);", "t.sv", 2),   # 1.0
                 PairCandidate("p", "assert property (x);", "t.sv", 3)]           # 0.6
        m = filter_pairs(cands, emb, 0.6)
        assert [c.source_line for c in m.kept_pairs] == [2, 3]
        assert [c.source_line for c in m.dropped] == [1]

        outs = []
        for name in ("a", "b"):
            mf = filter_pairs(mine_pairs(FIXTURES / "corpus") + synthesize_pairs(50, 3, ["req", "ack"]),
                              threshold=0.3)
            emit_finetune_jsonl(mf, tmp_path / f"{name}.jsonl")
            outs.append((tmp_path / f"{name}.jsonl").read_bytes())
        assert outs[0] == outs[1] and outs[0]

        pairs = synthesize_pairs(500, 7, ["req", "ack", "busy"])
        assert len(pairs) == 500
        for p in pairs:
            parse_assertion(p.assertion_text)


# 8 -----------------------------------------------------------------------------

def test_8_end_to_end_replay(tmp_path, monkeypatch, capsys):
    def no_network(*a, **k):
        raise AssertionError("network access attempted")

    monkeypatch.setattr(socket.socket, "connect", no_network)
    monkeypatch.setattr(socket, "create_connection", no_network)
    with criterion(8, "replayed pipeline over 5 designs matches goldens, >= 4 designs with a correct "
                      "assertion, < 1 min"):
        t0 = time.perf_counter()
        assert main(["--out", str(tmp_path), "pipeline", "--all", "--backend", "replay"]) == 0
        capsys.readouterr()
        [run_dir] = [p for p in tmp_path.iterdir() if p.is_dir()]
        assert _golden_equals("e2e_tally.json", (run_dir / "tally.json").read_text())
        assert _golden_equals("e2e_report.md", (run_dir / "report.md").read_text())
        designs = load_json(run_dir / "tally.json")["designs"]
        assert len(designs) == 5
        assert sum(t["functionally_correct"] >= 1 for t in designs.values()) >= 4
        assert time.perf_counter() - t0 < 60


# 9 -----------------------------------------------------------------------------

def test_9_tcl_emission():
    with criterion(9, "sequential and combinational TCL goldens, clock line only when sequential"):
        seq = emit_tcl("fsm_1101", "fsm_1101/rtl.v", ["fsm_1101/assertions/u00.sva"], "clk", "reset")
        comb = emit_tcl("mux2", "mux2/rtl.v", ["mux2/assertions/u00.sva", "mux2/assertions/u02.sva"])
        assert _golden_equals("fsm_1101.tcl", seq) and _golden_equals("mux2.tcl", comb)
        assert "clock clk\n" in seq
        assert "clock" not in comb
