"""End-to-end flow per design, with every intermediate written to a run directory."""
from __future__ import annotations

import json
import logging
import re
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Optional

from . import __version__
from .checker.model import BehavioralModel, ModelError
from .checker.report import emit_report, emit_tcl
from .checker.scoreboard import (SYNTAX_ERROR, AssertionRecord, Tally, Verdict, aggregate,
                                 check_consistency, classify)
from .checker.stimulus import PlanError
from .config import DesignEntry, RunConfig
from .decompose import DecomposeError, DecompositionResult, decompose
from .llm.gateway import Gateway, GatewayError, strip_fences
from .llm.prompts import template_versions
from .repair import (FIXED, ExtractionError, RepairPolicy, RepairSession, generate_initial,
                     run_repair, semantic_align)
from .rtl import COMBINATIONAL, InterfaceError, ModuleInterface, extract_interface

log = logging.getLogger(__name__)

RUN_SCHEMA = "svagen.run/1"
STAGE_ERRORS = (GatewayError, DecomposeError, ModelError, InterfaceError, PlanError, OSError, ValueError)
REPORT_FORMATS = {"json": "report.json", "csv": "report.csv", "markdown": "report.md"}


def write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                    encoding="utf-8")


def make_run_dir(output_dir, config_hash: str, now: Optional[datetime] = None) -> Path:
    """Fresh ``<timestamp>-<hash>`` directory; a numeric suffix avoids collisions."""
    stamp = (now or datetime.now()).strftime("%Y%m%dT%H%M%S")
    base = Path(output_dir)
    base.mkdir(parents=True, exist_ok=True)
    path = base / f"{stamp}-{config_hash}"
    n = 1
    while True:
        try:
            path.mkdir()
            return path
        except FileExistsError:
            n += 1
            path = base / f"{stamp}-{config_hash}-{n}"


def run_manifest(cfg: RunConfig, command: str, extra: Optional[dict] = None) -> dict:
    # no timestamp here so repeated runs produce identical trees
    doc = {
        "schema": RUN_SCHEMA,
        "command": command,
        "version": __version__,
        "config_hash": cfg.config_hash(),
        "config": cfg.to_dict(),
        "seeds": {"stimulus": cfg.stimulus.seed, "embedder": cfg.embedder.seed},
        "horizon": cfg.stimulus.horizon,
        "template_versions": template_versions(cfg.paths.prompts_dir),
    }
    doc.update(extra or {})
    return doc


@dataclass
class LoadedDesign:
    entry: DesignEntry
    spec_text: str
    rtl_source: str
    model: BehavioralModel
    iface: ModuleInterface


def load_design(entry: DesignEntry, cfg: RunConfig) -> LoadedDesign:
    rtl = entry.rtl_path.read_text(encoding="utf-8")
    iface = extract_interface(rtl, cfg.clock_names, cfg.reset_names)
    model = BehavioralModel.load(entry.model_path)
    check_consistency(model, iface)
    if (model.mode == COMBINATIONAL) != (iface.mode == COMBINATIONAL):
        raise ModelError(f"{entry.design_id}: model is {model.mode} but the RTL is {iface.mode}")
    return LoadedDesign(entry, entry.spec_path.read_text(encoding="utf-8"), rtl, model, iface)


@dataclass
class UnitResult:
    unit_id: str
    session: RepairSession
    verdict: Verdict
    generated: str
    aligned: str

    def to_dict(self) -> dict:
        return {"unit_id": self.unit_id, "comment": self.session.unit.rendered_comment,
                "generated": self.generated, "aligned": self.aligned,
                "session": self.session.to_dict(), "verdict": self.verdict.to_dict()}


@dataclass
class DesignResult:
    design_id: str
    units: list = field(default_factory=list)
    error: Optional[BaseException] = None
    stage: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def records(self) -> list:
        return [AssertionRecord(self.design_id, u.unit_id, u.session.initially_clean, u.session.status,
                                u.verdict.kind, u.verdict.vacuous) for u in self.units]


def final_verdict(session: RepairSession, design: LoadedDesign, cfg: RunConfig) -> Verdict:
    if session.status != FIXED:
        return Verdict(SYNTAX_ERROR, list(session.candidates[-1].diagnostics))
    return classify(session.final_assertion, design.model, design.iface, cfg.stimulus,
                    cfg.reset_names)


def _draft(unit, design: LoadedDesign, gateway, cfg: RunConfig, warnings: list) -> tuple[str, str]:
    prompts = cfg.paths.prompts_dir
    try:
        generated = generate_initial(unit, gateway, cfg.model_id, prompts_dir=prompts, warnings=warnings)
    except ExtractionError:
        # the repair loop gets to complain about whatever came back
        generated = "<no assertion in response>"
        warnings.append("generation: no assert statement in response")
    try:
        aligned = semantic_align(generated, design.rtl_source, gateway, cfg.model_id,
                                 prompts_dir=prompts, warnings=warnings)
    except ExtractionError:
        aligned = generated
        warnings.append("alignment: no assert statement in response; kept the generated text")
    return generated, aligned


def process_unit(index: int, unit, design: LoadedDesign, gateway, cfg: RunConfig) -> UnitResult:
    warnings: list = []
    generated, aligned = _draft(unit, design, gateway, cfg, warnings)
    session = RepairSession.start(unit, design.iface, aligned)
    session.warnings.extend(warnings)
    policy = RepairPolicy.for_interface(design.iface, max_iterations=cfg.repair.max_iterations,
                                        loop_window=cfg.repair.loop_window)
    run_repair(session, policy, gateway, cfg.model_id, prompts_dir=cfg.paths.prompts_dir)
    return UnitResult(f"u{index:02d}", session, final_verdict(session, design, cfg), generated, aligned)


def _workers(cfg: RunConfig) -> int:
    # a scripted backend answers in call order, so it only makes sense serially
    return 1 if cfg.provider.backend == "scripted" else cfg.workers


def _map(fn, items, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def write_decomposition(result: DecompositionResult, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "decomposition.json"
    path.write_text(result.to_json(), encoding="utf-8")
    return path


def run_design(entry: DesignEntry, cfg: RunConfig, gateway, run_dir: Path) -> DesignResult:
    """Run one design; stage failures are captured in the result rather than raised."""
    out = run_dir / entry.design_id
    out.mkdir(parents=True, exist_ok=True)
    result = DesignResult(entry.design_id)
    stage = "load"
    try:
        design = load_design(entry, cfg)
        shutil.copyfile(entry.rtl_path, out / "rtl.v")
        stage = "decompose"
        decomposition = decompose(design.spec_text, gateway, spec_id=entry.design_id,
                                  model_id=cfg.model_id, prompts_dir=cfg.paths.prompts_dir,
                                  workers=1 if _workers(cfg) == 1 else 3)
        write_decomposition(decomposition, out)
        stage = "units"
        result.units = _map(lambda iu: process_unit(iu[0], iu[1], design, gateway, cfg),
                            list(enumerate(decomposition.units)), _workers(cfg))
        stage = "write"
        _write_units(result, design, cfg, out)
    except STAGE_ERRORS as e:
        log.error("%s: %s failed: %s", entry.design_id, stage, e)
        result.error, result.stage = e, stage
        (out / "error.txt").write_text(f"stage: {stage}\n{type(e).__name__}: {e}\n", encoding="utf-8")
    return result


def _write_units(result: DesignResult, design: LoadedDesign, cfg: RunConfig, out: Path) -> None:
    units_dir = out / "units"
    units_dir.mkdir(exist_ok=True)
    sva_dir = out / "assertions"
    assertion_paths = []
    summary = []
    for u in result.units:
        write_json(units_dir / f"{u.unit_id}.json", u.to_dict())
        final = u.session.final_assertion
        if final is not None:
            sva_dir.mkdir(exist_ok=True)
            rel = Path("assertions") / f"{u.unit_id}.sva"
            (out / rel).write_text(final + "\n", encoding="utf-8")
            assertion_paths.append(rel.as_posix())
        summary.append({"unit_id": u.unit_id, "comment": u.session.unit.rendered_comment,
                        "final_assertion": final, "repair_status": u.session.status,
                        "iterations": u.session.iteration, "verdict": u.verdict.kind,
                        "violation_cycle": u.verdict.violation_cycle, "vacuous": u.verdict.vacuous})
    write_json(out / "verdicts.json", summary)
    iface = design.iface
    tcl = emit_tcl(result.design_id, "rtl.v", assertion_paths, iface.clock, iface.reset,
                   sequential=iface.mode != COMBINATIONAL, top=iface.module_name,
                   horizon=cfg.stimulus.horizon)
    (out / "fpv.tcl").write_text(tcl, encoding="utf-8")


def write_tally(results: list, run_dir: Path) -> dict:
    """Aggregate completed designs and write tally.json plus the three reports."""
    records = [r for res in results if res.ok for r in res.records]
    per, total = aggregate(records)
    for res in results:  # designs with zero units still get a row
        if res.ok and res.design_id not in per:
            per[res.design_id] = Tally()
    per = {k: per[k] for k in sorted(per)}
    write_json(run_dir / "tally.json", {"designs": {k: t.to_dict() for k, t in per.items()},
                                        "total": total.to_dict()})
    for fmt, name in REPORT_FORMATS.items():
        emit_report(per, fmt, run_dir / name)
    return per


def run_pipeline(cfg: RunConfig, entries: list, run_dir: Path, gateway: Optional[Gateway] = None,
                 command: str = "pipeline") -> list:
    gateway = gateway or Gateway(cfg.provider)
    workers = _workers(cfg)
    design_workers = 1 if workers == 1 else min(workers, max(1, len(entries)))
    results = _map(lambda e: run_design(e, cfg, gateway, run_dir), entries, design_workers)
    write_tally(results, run_dir)
    status = [{"design_id": r.design_id, "ok": r.ok, "stage": r.stage,
               "error": None if r.ok else f"{type(r.error).__name__}: {r.error}"} for r in results]
    write_json(run_dir / "run.json", run_manifest(cfg, command, {"designs": status}))
    return results


# --- scoring hand-written assertion files --------------------------------------

_STMT_START = re.compile(r"(?:\b[A-Za-z_]\w*\s*:\s*)?\bassert\b")


def split_assertions(text: str) -> list[str]:
    """Statements of an assertion file, each running up to the next ``assert``."""
    body = "\n".join(line for line in strip_fences(text).splitlines()
                     if not line.lstrip().startswith("//"))
    starts = [m.start() for m in _STMT_START.finditer(body)]
    if not starts:
        return [body.strip()] if body.strip() else []
    bounds = starts + [len(body)]
    return [body[a:b].strip() for a, b in zip(bounds, bounds[1:])]


def score_file(design: LoadedDesign, text: str, cfg: RunConfig) -> list[tuple[str, Verdict]]:
    return [(stmt, classify(stmt, design.model, design.iface, cfg.stimulus, cfg.reset_names))
            for stmt in split_assertions(text)]


def score_records(design_id: str, scored: list) -> list[AssertionRecord]:
    # hand-written text has no repair history: clean statements count as fixed at iteration 0
    out = []
    for i, (_, v) in enumerate(scored):
        clean = v.kind != SYNTAX_ERROR
        out.append(AssertionRecord(design_id, f"a{i:02d}", clean, FIXED if clean else "not_repaired",
                                   v.kind, v.vacuous))
    return out
