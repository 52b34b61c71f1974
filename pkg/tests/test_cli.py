import itertools
import json
import random
import subprocess
import sys
from pathlib import Path

import pytest

from svagen.cli import main
from svagen.config import bundled_manifest
from svagen.pipeline import split_assertions

from conftest import FIXTURES, golden, load_json

ASSERTIONS = FIXTURES / "assertions"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def only_run_dir(out_dir: Path) -> Path:
    [d] = [p for p in Path(out_dir).iterdir() if p.is_dir()]
    return d


def write_config(tmp_path, doc):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


def empty_fixtures(tmp_path):
    (tmp_path / "empty.jsonl").write_text("")
    return write_config(tmp_path, {"provider": {"backend": "replay", "fixture_path": "empty.jsonl"}})


# --- decompose ------------------------------------------------------------------

def test_decompose_mux_from_replay(tmp_path, capsys):
    code, out, _ = run(capsys, "--out", tmp_path, "decompose", "mux2")
    assert code == 0
    path = only_run_dir(tmp_path) / "mux2" / "decomposition.json"
    doc = load_json(path)
    assert sum(u["kind"] == "conditional" for u in doc["units"]) >= 1
    golden("mux2_decomposition.json", path.read_text())


def test_decompose_fsm_has_a_unit_per_transition(tmp_path, capsys):
    assert run(capsys, "decompose", "fsm_1101", "--out", tmp_path)[0] == 0
    doc = load_json(only_run_dir(tmp_path) / "fsm_1101" / "decomposition.json")
    transitions = [u for u in doc["units"] if u["kind"] == "fsm_transition"]
    assert len(transitions) >= 4
    assert len({u["payload"]["current_state"] for u in transitions}) == len(transitions)


def test_dry_run_makes_no_calls(tmp_path, capsys):
    cfg = empty_fixtures(tmp_path)
    code, out, _ = run(capsys, "--config", cfg, "decompose", "parity", "--dry-run")
    assert code == 0
    assert out.count("=== question_") == 3
    assert "specify every conditional statement" in out


def test_replay_miss_is_exit_3(tmp_path, capsys):
    cfg = empty_fixtures(tmp_path)
    code, _, err = run(capsys, "--config", cfg, "--out", tmp_path / "o", "decompose", "mux2")
    assert code == 3 and "replay miss" in err


# --- pipeline -------------------------------------------------------------------

def test_single_design_gateway_failure_is_exit_3(tmp_path, capsys):
    cfg = empty_fixtures(tmp_path)
    assert run(capsys, "--config", cfg, "--out", tmp_path / "o", "pipeline", "mux2")[0] == 3


def test_all_designs_failing_is_exit_4(tmp_path, capsys):
    cfg = empty_fixtures(tmp_path)
    code, out, _ = run(capsys, "--config", cfg, "--out", tmp_path / "o", "pipeline", "--all")
    assert code == 4
    run_dir = only_run_dir(tmp_path / "o")
    assert (run_dir / "mux2" / "error.txt").is_file()
    designs = {d["design_id"]: d for d in load_json(run_dir / "run.json")["designs"]}
    assert set(designs) == {"decade_counter", "fsm_1101", "mux2", "parity", "updown_counter"}
    assert all(not d["ok"] and d["stage"] == "decompose" for d in designs.values())


def test_empty_manifest_gives_a_zero_tally(tmp_path, capsys):
    (tmp_path / "manifest.json").write_text('{"designs": []}')
    cfg = write_config(tmp_path, {"provider": {"backend": "scripted"},
                                  "paths": {"designs_manifest": "manifest.json"}})
    code, _, _ = run(capsys, "--config", cfg, "--out", tmp_path / "o", "pipeline", "--all")
    assert code == 0
    tally = load_json(only_run_dir(tmp_path / "o") / "tally.json")
    assert tally["total"]["generated"] == 0 and tally["designs"] == {}


def test_max_iterations_override(tmp_path, capsys):
    code, _, _ = run(capsys, "--out", tmp_path, "pipeline", "parity", "--max-iterations", "1")
    assert code == 0
    run_dir = only_run_dir(tmp_path)
    assert load_json(run_dir / "run.json")["config"]["repair"]["max_iterations"] == 1
    for f in (run_dir / "parity" / "units").glob("*.json"):
        assert load_json(f)["session"]["iteration"] <= 1


def test_bad_max_iterations_is_a_config_error(tmp_path, capsys):
    assert run(capsys, "--out", tmp_path, "pipeline", "mux2", "--max-iterations", "0")[0] == 2


def test_unknown_design_and_bad_config(tmp_path, capsys):
    assert run(capsys, "--out", tmp_path, "pipeline", "nope")[0] == 2
    cfg = write_config(tmp_path, {"provider": {"backend": "scripted", "api_key": "sk-1"}})
    code, _, err = run(capsys, "--config", cfg, "pipeline", "mux2")
    assert code == 2 and "api_key" in err


def test_http_without_endpoint_is_a_config_error(tmp_path, capsys):
    assert run(capsys, "--backend", "http", "--out", tmp_path, "pipeline", "mux2")[0] == 2


def test_record_writes_sorted_fixtures(tmp_path, capsys):
    rec = tmp_path / "rec.jsonl"
    assert run(capsys, "--out", tmp_path / "o", "--record", rec, "decompose", "parity")[0] == 0
    fps = [json.loads(line)["fingerprint"] for line in rec.read_text().splitlines()]
    assert len(fps) == 3 and fps == sorted(fps)


# --- score ----------------------------------------------------------------------

def rows(out):
    return [line.split("\t") for line in out.splitlines() if line.startswith("a")]


def test_score_known_good_file(tmp_path, capsys):
    code, out, _ = run(capsys, "--out", tmp_path, "score", "decade_counter",
                       ASSERTIONS / "decade_counter_good.sva")
    assert code == 0
    assert [r[1] for r in rows(out)] == ["functionally_correct"] * 5
    run_dir = only_run_dir(tmp_path)
    assert (run_dir / "report.csv").read_text().splitlines()[1] == "decade_counter,5,0,0"


def test_score_mixed_file(tmp_path, capsys):
    code, out, _ = run(capsys, "--out", tmp_path, "score", "decade_counter", ASSERTIONS / "mixed.sva")
    assert code == 0
    assert [r[1] for r in rows(out)] == ["functionally_correct",
                                         "functionally_incorrect (violated at cycle 0)", "syntax_error"]


def test_score_broken_file_exits_zero(tmp_path, capsys):
    code, out, _ = run(capsys, "--out", tmp_path, "score", "decade_counter", ASSERTIONS / "broken.sva")
    assert code == 0 and rows(out)[0][1] == "syntax_error"
    verdicts = load_json(only_run_dir(tmp_path) / "verdicts.json")
    assert verdicts[0]["verdict"]["diagnostics"][0]["code"] == "E001"


def test_split_assertions():
    text = "// assert (x);\nassert (a);\np: assert property (b |-> c);\n"
    assert split_assertions(text) == ["assert (a);", "p: assert property (b |-> c);"]


def _counter(reset, ena):
    count = [0]
    for r, e in zip(reset[:-1], ena[:-1]):
        c = count[-1]
        count.append(0 if r else ((0 if c == 9 else c + 1) if e else c))
    return count


def _good_file_oracle(c, r, e):
    """Plain-Python reading of the five statements in decade_counter_good.sva."""
    L = len(c)
    for t in range(L):
        if c[t] > 9:
            return False
        if t + 1 >= L:
            continue  # next-cycle obligations are pending at the end
        if r[t] and c[t + 1] != 0:
            return False
        if r[t] or r[t + 1]:
            continue  # disable iff (reset) aborts the other attempts
        if not e[t] and c[t + 1] != c[t]:
            return False
        if e[t] and c[t] == 9 and c[t + 1] != 0:
            return False
        if e[t] and c[t] < 9 and c[t + 1] != c[t] + 1:
            return False
    return True


def test_known_good_file_is_oracle_verified():
    seqs = [([0] * 12, list(bits)) for bits in itertools.product((0, 1), repeat=12)]
    rng = random.Random(4)
    for _ in range(1000):
        seqs.append(([int(rng.random() < 0.125) for _ in range(20)], [rng.randint(0, 1) for _ in range(20)]))
    assert all(_good_file_oracle(_counter(r, e), r, e) for r, e in seqs)
    # and the oracle is not vacuous: a counter that skips 9 is rejected
    r, e = [0] * 12, [1] * 12
    bad = [min(x, 8) if x != 9 else 0 for x in _counter(r, e)]
    assert not _good_file_oracle(bad, r, e)


# --- dataset --------------------------------------------------------------------

def test_dataset_synth_uses_the_global_seed(tmp_path, capsys):
    code, out, _ = run(capsys, "--seed", 7, "--out", tmp_path, "dataset", "synth", "--n", 500)
    assert code == 0 and out.startswith("500 synthetic pairs")
    m = load_json(only_run_dir(tmp_path) / "manifest.json")
    assert len(m["kept_pairs"]) == 500
    assert m["kept_pairs"][0]["source_path"] == "synthetic/seed7"


def test_dataset_mine(tmp_path, capsys):
    code, out, _ = run(capsys, "--out", tmp_path, "dataset", "mine", FIXTURES / "corpus")
    assert code == 0 and out.startswith("7 candidates, 0 kept")
    assert len(load_json(only_run_dir(tmp_path) / "candidates.json")) == 7


def test_dataset_mine_missing_corpus(tmp_path, capsys):
    assert run(capsys, "--out", tmp_path, "dataset", "mine", tmp_path / "nope")[0] == 2


def test_dataset_emit(tmp_path, capsys):
    assert run(capsys, "--out", tmp_path / "a", "dataset", "synth", "--n", 5, "--synth-seed", 2)[0] == 0
    manifest = only_run_dir(tmp_path / "a") / "manifest.json"
    code, out, _ = run(capsys, "--out", tmp_path / "b", "dataset", "emit", "--manifest", manifest)
    assert code == 0 and out.startswith("5 examples")
    run_dir = only_run_dir(tmp_path / "b")
    assert len((run_dir / "finetune.jsonl").read_text().splitlines()) == 5
    assert load_json(run_dir / "finetune_job.json")["epochs"] == 3


def test_dataset_emit_empty(tmp_path, capsys):
    code, out, _ = run(capsys, "--out", tmp_path, "dataset", "emit")
    assert code == 0 and out.startswith("0 examples")
    assert (only_run_dir(tmp_path) / "finetune.jsonl").read_bytes() == b""


# --- tcl / report ---------------------------------------------------------------

def test_tcl_command(capsys):
    code, out, _ = run(capsys, "tcl", "fsm_1101", "--assertion", "u00.sva")
    assert code == 0 and "clock clk" in out and "analyze -sv u00.sva" in out
    code, out, _ = run(capsys, "tcl", "mux2")
    assert code == 0 and "clock" not in out


def test_report_command(tmp_path, capsys):
    assert run(capsys, "--out", tmp_path, "pipeline", "mux2")[0] == 0
    code, out, _ = run(capsys, "report", only_run_dir(tmp_path), "--format", "csv")
    assert code == 0 and out.splitlines()[0].startswith("design,")
    assert run(capsys, "report", tmp_path / "missing")[0] == 2


def test_options_after_the_subcommand(tmp_path, capsys):
    assert run(capsys, "decompose", "mux2", "--dry-run", "--backend", "scripted")[0] == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "svagen.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("decompose", "pipeline", "dataset", "score", "tcl", "report"):
        assert cmd in proc.stdout


# --- end to end -----------------------------------------------------------------

def _tree(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_pipeline_all_matches_goldens(tmp_path, capsys):
    code, out, _ = run(capsys, "--out", tmp_path, "pipeline", "--all")
    assert code == 0
    assert out.splitlines()[:5] == [
        "decade_counter: 4 assertions, ok", "fsm_1101: 7 assertions, ok", "mux2: 4 assertions, ok",
        "parity: 3 assertions, ok", "updown_counter: 5 assertions, ok"]
    run_dir = only_run_dir(tmp_path)
    golden("e2e_tally.json", (run_dir / "tally.json").read_text())
    golden("e2e_report.md", (run_dir / "report.md").read_text())
    tally = load_json(run_dir / "tally.json")["total"]
    assert tally["generated"] == 23
    assert tally["functionally_correct"] + tally["functionally_incorrect"] + tally["syntax_incorrect"] == 23


def test_runs_are_reproducible(tmp_path, capsys):
    for name in ("one", "two"):
        assert run(capsys, "--out", tmp_path / name, "pipeline", "--all")[0] == 0
    a, b = only_run_dir(tmp_path / "one"), only_run_dir(tmp_path / "two")
    assert a.name.split("-")[1] == b.name.split("-")[1]
    ta, tb = _tree(a), _tree(b)
    assert ta.keys() == tb.keys()
    # run.json records the output root; everything else is byte-identical
    assert [k for k in ta if ta[k] != tb[k]] == ["run.json"]
    ja, jb = load_json(a / "run.json"), load_json(b / "run.json")
    for j in (ja, jb):
        del j["config"]["paths"]["output_dir"]
    assert ja == jb
