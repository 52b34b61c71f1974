"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 gateway or replay error,
4 one or more designs failed. Verdicts of any kind count as success.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .checker.model import ModelError
from .checker.report import FORMATS, emit_report, emit_tcl, read_json_report, render_report
from .checker.scoreboard import aggregate
from .checker.stimulus import PlanError
from .config import default_config, load_config, with_backend
from .dataset import (DatasetManifest, emit_finetune_jsonl, filter_pairs, job_descriptor,
                      mine_pairs, synthesize_pairs)
from .decompose import DecomposeError, decompose, question_requests
from .llm.gateway import ConfigError, Gateway, GatewayError
from .llm.prompts import PromptError
from .pipeline import (REPORT_FORMATS, load_design, make_run_dir, run_manifest, run_pipeline,
                       score_file, score_records, write_decomposition, write_json)
from .repair import RepairPolicy
from .rtl import InterfaceError

EXIT_OK, EXIT_CONFIG, EXIT_GATEWAY, EXIT_PARTIAL = 0, 2, 3, 4

DEFAULT_VOCAB = "req,ack,valid,ready,busy,done,start,err"

def _global_options(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--config", help="run configuration (JSON)", **d)
    p.add_argument("--backend", choices=("http", "replay", "scripted"), **d)
    p.add_argument("--record", nargs="?", const="", metavar="PATH",
                   help="append every completion to a fixture file (default: inside the run dir)", **d)
    p.add_argument("--out", help="output directory for run directories", **d)
    p.add_argument("--seed", type=int, help="stimulus seed (and default synth seed)", **d)
    p.add_argument("-v", "--verbose", action="store_true", **d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svagen", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="split a design spec into comment units")
    p.add_argument("design")
    p.add_argument("--dry-run", action="store_true", help="print the rendered prompts only")

    p = sub.add_parser("pipeline", parents=[common], help="run the full flow")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("design", nargs="?")
    g.add_argument("--all", action="store_true")
    p.add_argument("--max-iterations", type=int)

    p = sub.add_parser("dataset", parents=[common], help="build fine-tuning data")
    dsub = p.add_subparsers(dest="dataset_command", required=True)
    m = dsub.add_parser("mine", parents=[common])
    m.add_argument("corpus")
    m.add_argument("--threshold", type=float)
    s = dsub.add_parser("synth", parents=[common])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--synth-seed", dest="synth_seed", type=int)
    s.add_argument("--vocab", default=DEFAULT_VOCAB, help="comma-separated signal names")
    s.add_argument("--max-depth", type=int, default=3)
    e = dsub.add_parser("emit", parents=[common])
    e.add_argument("--manifest", action="append", default=[])
    e.add_argument("--base-model", default="gpt-3.5-turbo")
    e.add_argument("--epochs", type=int, default=3)

    p = sub.add_parser("score", parents=[common], help="classify a file of assertions")
    p.add_argument("design")
    p.add_argument("assertions")

    p = sub.add_parser("tcl", parents=[common], help="print an FPV TCL script")
    p.add_argument("design")
    p.add_argument("--assertion", action="append", default=[])

    p = sub.add_parser("report", parents=[common], help="re-render a run's report")
    p.add_argument("run_dir")
    p.add_argument("--format", choices=FORMATS, default="markdown")
    return parser


def _config(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else default_config()
    if getattr(args, "backend", None):
        cfg = with_backend(cfg, args.backend)
    if getattr(args, "out", None):
        cfg = replace(cfg, paths=replace(cfg.paths, output_dir=str(Path(args.out))))
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, stimulus=replace(cfg.stimulus, seed=args.seed))
    if getattr(args, "max_iterations", None) is not None:
        try:
            cfg = replace(cfg, repair=RepairPolicy(args.max_iterations, cfg.repair.loop_window))
        except ValueError as e:
            raise ConfigError(f"--max-iterations: {e}") from None
    return cfg


def _entry(cfg, design_id):
    for e in cfg.designs():
        if e.design_id == design_id:
            return e
    raise ConfigError(f"unknown design {design_id!r} (not in {cfg.paths.designs_manifest})")


def _gateway(cfg, args, run_dir: Path) -> Gateway:
    record = getattr(args, "record", None)
    if record is None:
        return Gateway(cfg.provider)
    return Gateway(cfg.provider, record_path=Path(record) if record else run_dir / "recorded.jsonl")


def _sort_recording(gateway: Gateway) -> None:
    # concurrent calls append in arbitrary order; store by fingerprint instead
    path = gateway.record_path
    if path is None or not path.exists():
        return
    lines = path.read_text(encoding="utf-8").splitlines()
    lines.sort(key=lambda line: json.loads(line)["fingerprint"])
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def _new_run(cfg, command: str, extra=None) -> Path:
    run_dir = make_run_dir(cfg.paths.output_dir, cfg.config_hash())
    write_json(run_dir / "run.json", run_manifest(cfg, command, extra))
    return run_dir


def cmd_decompose(args) -> int:
    cfg = _config(args)
    entry = _entry(cfg, args.design)
    spec = entry.spec_path.read_text(encoding="utf-8")
    if args.dry_run:
        for tid, req in question_requests(spec, cfg.model_id, cfg.paths.prompts_dir).items():
            print(f"=== {tid} ({req.request_fingerprint[:12]})")
            for msg in req.messages:
                print(f"--- {msg.role}")
                print(msg.content)
        return EXIT_OK
    run_dir = _new_run(cfg, "decompose", {"designs": [entry.design_id]})
    gateway = _gateway(cfg, args, run_dir)
    try:
        result = decompose(spec, gateway, spec_id=entry.design_id, model_id=cfg.model_id,
                           prompts_dir=cfg.paths.prompts_dir,
                           workers=1 if cfg.provider.backend == "scripted" else 3)
    except DecomposeError as e:
        print(f"error: {entry.design_id}: {e}", file=sys.stderr)
        return EXIT_PARTIAL
    finally:
        _sort_recording(gateway)
    path = write_decomposition(result, run_dir / entry.design_id)
    print(f"{len(result.units)} units -> {path}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    entries = cfg.designs() if args.all else [_entry(cfg, args.design)]
    run_dir = make_run_dir(cfg.paths.output_dir, cfg.config_hash())
    gateway = _gateway(cfg, args, run_dir)
    results = run_pipeline(cfg, entries, run_dir, gateway)
    _sort_recording(gateway)
    failed = [r for r in results if not r.ok]
    for r in results:
        status = "ok" if r.ok else f"FAILED at {r.stage}: {r.error}"
        print(f"{r.design_id}: {len(r.units)} assertions, {status}")
    print(f"run directory: {run_dir}")
    if not failed:
        return EXIT_OK
    for r in failed:
        print(f"error: {r.design_id}: {r.error}", file=sys.stderr)
    if not args.all and isinstance(failed[0].error, GatewayError):
        return EXIT_GATEWAY
    return EXIT_PARTIAL


def cmd_dataset(args) -> int:
    cfg = _config(args)
    warnings: list = []
    if args.dataset_command == "mine":
        corpus = Path(args.corpus)
        if not corpus.is_dir():
            raise ConfigError(f"corpus directory {corpus} does not exist")
        threshold = cfg.threshold if args.threshold is None else args.threshold
        run_dir = _new_run(cfg, "dataset mine", {"corpus": str(corpus), "threshold": threshold})
        candidates = mine_pairs(corpus, warnings)
        manifest = filter_pairs(candidates, cfg.embedder, threshold)
        write_json(run_dir / "candidates.json", [c.to_dict() for c in candidates])
        (run_dir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
        print(f"{len(candidates)} candidates, {len(manifest.kept_pairs)} kept -> {run_dir / 'manifest.json'}")
    elif args.dataset_command == "synth":
        seed = args.synth_seed if args.synth_seed is not None else getattr(args, "seed", None) or 0
        vocab = [v.strip() for v in args.vocab.split(",") if v.strip()]
        try:
            pairs = synthesize_pairs(args.n, seed, vocab, max_depth=args.max_depth)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        run_dir = _new_run(cfg, "dataset synth", {"n": args.n, "synth_seed": seed, "vocab": vocab})
        manifest = filter_pairs(pairs, cfg.embedder, cfg.threshold)
        (run_dir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
        print(f"{len(manifest.kept_pairs)} synthetic pairs -> {run_dir / 'manifest.json'}")
    else:
        merged = DatasetManifest([], cfg.threshold)
        for path in args.manifest:
            try:
                merged = merged.merge(DatasetManifest.load(path))
            except (OSError, ValueError, KeyError, TypeError) as e:
                raise ConfigError(f"cannot read dataset manifest {path}: {e}") from None
        run_dir = _new_run(cfg, "dataset emit", {"manifests": list(args.manifest)})
        out = run_dir / "finetune.jsonl"
        n = emit_finetune_jsonl(merged, out)
        job = job_descriptor(merged, out.name, args.base_model, args.epochs)
        (run_dir / "finetune_job.json").write_text(job.to_json(), encoding="utf-8")
        print(f"{n} examples -> {out}")
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_score(args) -> int:
    cfg = _config(args)
    design = load_design(_entry(cfg, args.design), cfg)
    try:
        text = Path(args.assertions).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {args.assertions}: {e}") from None
    scored = score_file(design, text, cfg)
    run_dir = _new_run(cfg, "score", {"designs": [args.design], "assertions": str(args.assertions)})
    write_json(run_dir / "verdicts.json",
               [{"assertion": stmt, "verdict": v.to_dict()} for stmt, v in scored])
    per, _ = aggregate(score_records(args.design, scored))
    for fmt, name in REPORT_FORMATS.items():
        emit_report(per, fmt, run_dir / name)
    for i, (stmt, v) in enumerate(scored):
        where = "" if v.violation_cycle is None else f" (violated at cycle {v.violation_cycle})"
        print(f"a{i:02d}\t{v.kind}{where}\t{' '.join(stmt.split())}")
    print(f"run directory: {run_dir}")
    return EXIT_OK


def cmd_tcl(args) -> int:
    cfg = _config(args)
    entry = _entry(cfg, args.design)
    design = load_design(entry, cfg)
    iface = design.iface
    sys.stdout.write(emit_tcl(entry.design_id, entry.rtl_path, args.assertion, iface.clock,
                              iface.reset, sequential=iface.clock is not None,
                              top=iface.module_name, horizon=cfg.stimulus.horizon))
    return EXIT_OK


def cmd_report(args) -> int:
    path = Path(args.run_dir) / "report.json"
    try:
        tallies, _ = read_json_report(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from None
    sys.stdout.write(render_report(tallies, args.format))
    return EXIT_OK


COMMANDS = {"decompose": cmd_decompose, "pipeline": cmd_pipeline, "dataset": cmd_dataset,
            "score": cmd_score, "tcl": cmd_tcl, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except GatewayError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_GATEWAY
    except (ConfigError, PlanError, ModelError, PromptError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InterfaceError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
