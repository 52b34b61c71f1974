"""Author the bundled replay fixtures.

A scripted responder plays the language model: it answers each request from
hand-written tables keyed on the request content, and the gateway records every
exchange. The answers deliberately include the usual failure modes (wrong signal
names, unsupported constructs, missing semicolons, a missing ``disable iff``, a
model that repeats itself) so the replayed pipeline exercises repair and every
verdict kind.

    python tools/author_fixtures.py            # rewrite the bundled fixtures
    python tools/author_fixtures.py --check    # fail if they would change
"""
from __future__ import annotations

import argparse
import json
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from svagen.config import bundled_fixtures, bundled_manifest, default_config, load_manifest
from svagen.decompose import fan_out
from svagen.llm.gateway import Gateway, ProviderConfig
from svagen.llm.schemas import validate_json_response
from svagen.pipeline import run_pipeline


def fenced(text: str) -> str:
    return f"```systemverilog\n{text}\n```"


NO_FSM = "There is no finite state machine described in the text.\n\n[]"

DESIGNS = {
    "mux2": {
        "question_a": NO_FSM,
        "question_b": json.dumps([
            {"antecedent": "sel is 0", "consequent": "the output y equals a"},
            {"antecedent": "sel is 1", "consequent": "the output y equals b"},
        ], indent=2),
        "question_c": json.dumps([
            {"variable_name": "y", "condition_list": [
                {"condition": "sel is 0", "range_or_value": "a"},
                {"condition": "sel is 1", "range_or_value": "b"},
            ]},
        ], indent=2),
        "generate": [
            fenced("assert property (@(posedge clk) (sel == 0) |-> (y == a));"),
            fenced("assert property (@(posedge clk) sel |-> ##1 (y == b));"),
            "Here is the assertion:\n" + fenced("assert property (!sel |-> out == a);"),
            fenced("assert property (sel |-> y == a);"),
        ],
    },
    "parity": {
        "question_a": NO_FSM,
        "question_b": json.dumps([
            {"antecedent": "data is 0", "consequent": "p is 0"},
        ], indent=2),
        # trailing commas, as the example JSON in the prompt has them
        "question_c": """[
  {
    "variable_name": "p",
    "condition_list": [
      {"condition": "data contains an odd number of ones", "range_or_value": "1",},
      {"condition": "data contains an even number of ones", "range_or_value": "0",},
    ],
  },
]""",
        "generate": [
            fenced("assert property (data == 8'd0 |-> p == 1'b0);"),
            fenced("assert property ($countones(data) % 2 == 1 |-> p == 1);"),
            fenced("assert property (p == even_parity(data));"),
        ],
    },
    "fsm_1101": {
        "question_a": json.dumps([{
            "states": ["S0", "S1", "S2", "S3"],
            "transitions": [
                {"current_state": "S0", "conditions": "din is 1",
                 "next_state_condition_true": "S1", "next_state_condition_false": "S0"},
                {"current_state": "S1", "conditions": "din is 1",
                 "next_state_condition_true": "S2", "next_state_condition_false": "S0"},
                {"current_state": "S2", "conditions": "din is 0",
                 "next_state_condition_true": "S3", "next_state_condition_false": "S2"},
                {"current_state": "S3", "conditions": "din is 1",
                 "next_state_condition_true": "S1", "next_state_condition_false": "S0"},
            ],
            "outputs": [
                {"current_state": "S3", "output_name": "dout", "conditions": "din is 1",
                 "output_value_condition_true": "1 in the next cycle",
                 "output_value_condition_false": "0"},
            ],
        }], indent=2),
        "question_b": json.dumps([
            {"antecedent": "reset is high", "consequent": "the FSM returns to S0 and dout is cleared"},
        ], indent=2),
        "question_c": json.dumps([
            {"variable_name": "state", "condition_list": [{"condition": "", "range_or_value": "0 to 3"}]},
        ], indent=2),
        "generate": [
            fenced("assert property (@(posedge clk) disable iff (reset) (state == 2'd0 && din) |=> state == 2'd1);"),
            fenced("assert property (@(posedge clk) disable iff (reset) (state == S1 && din) |=> state == S2);"),
            fenced("assert property (@(posedge clk) disable iff (reset) (state == 2'd2 && !din) |=> (state == 2'd3));"),
            fenced("assert property (@(posedge clk) (state == 2'd3 && din) |=> state == 2'd1);"),
            fenced("assert property (@(posedge clk) disable iff (reset) (state == 2'd3 && din) |=> out);"),
            fenced("assert property (@(posedge clk) reset |=> (state == 2'd0 && dout == 1'b0));"),
            fenced("assert property (@(posedge clk) state <= 2'd3);"),
        ],
    },
    "decade_counter": {
        "question_a": NO_FSM,
        "question_b": json.dumps([
            {"antecedent": "reset is high", "consequent": "count becomes 0"},
            {"antecedent": "slowena is high and count is 9", "consequent": "count wraps around to 0"},
            {"antecedent": "slowena is low", "consequent": "count keeps its value"},
        ], indent=2),
        "question_c": json.dumps([
            {"variable_name": "count", "condition_list": [{"condition": "", "range_or_value": "0 to 9"}]},
        ], indent=2),
        "generate": [
            fenced("assert property (@(posedge clk) reset |=> count == 0);"),
            fenced("assert property (@(posedge clk) disable iff (reset) (slowena && count == 9) |=> count == 0);"),
            fenced("assert property (@(posedge clk) !slowena |=> count == $past(count));"),
            fenced("assert property (@(posedge clk) count >= 0 && count <= 9)"),
        ],
    },
    "updown_counter": {
        "question_a": NO_FSM,
        "question_b": json.dumps([
            {"antecedent": "reset is high", "consequent": "count becomes 0"},
            {"antecedent": "up is 1, down is 0 and count is 7", "consequent": "count stays at 7"},
            {"antecedent": "down is 1, up is 0 and count is 0", "consequent": "count stays at 0"},
            {"antecedent": "up and down are both 0 or both 1", "consequent": "count keeps its value"},
        ], indent=2),
        "question_c": json.dumps([
            {"variable_name": "count", "condition_list": [{"condition": "", "range_or_value": "0 to 7"}]},
        ], indent=2),
        "generate": [
            fenced("assert property (@(posedge clk) reset |=> count == 3'd0);"),
            fenced("assert property (@(posedge clk) disable iff (reset) (up && !down && count == 3'd7) |=> count == 3'd7);"),
            fenced("assert property (@(posedge clk) disable iff (reset) (down & !up & count == 0) |=> count == 0);"),
            fenced("assert property (@(posedge clk) disable iff (reset) (up == down) |=> $stable(count));"),
            fenced("assert property (@(posedge clk) count inside {[0:7]});"),
        ],
    },
}

# alignment answers that differ from echoing the input
ALIGN = {
    "assert property (!sel |-> out == a);": "assert property (!sel |-> y == a);",
    "assert property (@(posedge clk) disable iff (reset) (state == 2'd3 && din) |=> out);":
        "assert property (@(posedge clk) disable iff (reset) (state == 2'd3 && din) |=> dout);",
}

# repair answers keyed on the assertion shown in the prompt; anything missing
# gets echoed back, which the loop detector catches
REPAIR = {
    "assert property (@(posedge clk) sel |-> ##1 (y == b));": "assert (!sel || (y == b));",
    "assert property ($countones(data) % 2 == 1 |-> p == 1);":
        "assert (!(data[0] ^ data[1] ^ data[2] ^ data[3] ^ data[4] ^ data[5] ^ data[6] ^ data[7]) || p);",
    "assert property (@(posedge clk) disable iff (reset) (state == S1 && din) |=> state == S2);":
        "assert property (@(posedge clk) disable iff (reset) (state == 2'd1 && din) |=> state == 2'd2);",
    "assert property (@(posedge clk) count >= 0 && count <= 9)":
        "assert property (@(posedge clk) count >= 0 && count <= 9);",
    "assert property (@(posedge clk) count inside {[0:7]});":
        "assert property (@(posedge clk) count >= 0 && count <= 7)",
    "assert property (@(posedge clk) count >= 0 && count <= 7)":
        "assert property (@(posedge clk) count <= 3'd7);",
}

_QUESTION_LEADS = {
    "specify the following": "question_a",
    "specify every conditional": "question_b",
    "Specify every variable": "question_c",
}


def _block(text: str, header: str) -> str:
    body = text.split(f"{header}\n", 1)[1]
    return body.split("\n\n", 1)[0].strip()


class Responder:
    def __init__(self, designs: dict):
        self.designs = designs
        self.comments = {}
        for design_id, d in designs.items():
            answers = {q: validate_json_response(q, d[q]) for q in _QUESTION_LEADS.values()}
            units = fan_out(answers)
            if len(units) != len(d["generate"]):
                raise SystemExit(f"{design_id}: {len(units)} units but {len(d['generate'])} answers")
            for unit, answer in zip(units, d["generate"]):
                self.comments[unit.rendered_comment] = answer

    def _design(self, text: str) -> dict:
        for design_id, d in self.designs.items():
            if f"The module {design_id} " in text:
                return d
        raise KeyError("no design named in the question text")

    def __call__(self, req) -> str:
        user = req.messages[-1].content
        for lead, qid in _QUESTION_LEADS.items():
            if user.startswith(lead):
                return self._design(user)[qid]
        if user.startswith("The assertion below was written"):
            assertion = _block(user, "Assertion:")
            return fenced(ALIGN.get(assertion, assertion))
        if user.startswith("The assertion below does not compile"):
            assertion = _block(user, "Assertion:")
            return fenced(REPAIR.get(assertion, assertion))
        return self.comments[user]


def author(out_path: Path) -> int:
    cfg = default_config()
    cfg = replace(cfg, provider=ProviderConfig("scripted"))
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if out_path.exists():
        out_path.unlink()
    gateway = Gateway(cfg.provider, responder=Responder(DESIGNS), record_path=out_path)
    with tempfile.TemporaryDirectory() as tmp:
        results = run_pipeline(cfg, load_manifest(bundled_manifest()), Path(tmp), gateway)
        for r in results:
            if not r.ok:
                raise SystemExit(f"{r.design_id}: {r.stage}: {r.error}")
        print(Path(tmp, "report.md").read_text(), end="")
    lines = out_path.read_text(encoding="utf-8").splitlines()
    lines.sort(key=lambda line: json.loads(line)["fingerprint"])
    out_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return len(lines)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=bundled_fixtures())
    ap.add_argument("--check", action="store_true")
    args = ap.parse_args(argv)
    if args.check:
        with tempfile.TemporaryDirectory() as tmp:
            fresh = Path(tmp) / "replay.jsonl"
            author(fresh)
            same = fresh.read_bytes() == args.out.read_bytes()
        print("fixtures up to date" if same else "fixtures differ")
        return 0 if same else 1
    n = author(args.out)
    print(f"{n} exchanges -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
