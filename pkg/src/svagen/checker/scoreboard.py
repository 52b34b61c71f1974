"""Three-way verdicts for assertions and the tallies built from them."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Optional

import numpy as np

from ..rtl import DEFAULT_RESET_NAMES, ModuleInterface, resolve_names
from ..sva.ast import identifiers
from ..sva.diagnostics import Diagnostic
from ..sva.parser import AssertionSyntaxError, parse_assertion
from .batch import check_batch
from .model import BehavioralModel, ModelError, Trace, TraceBatch, simulate_batch
from .stimulus import StimulusPlan, build_stimuli
from .temporal import HOLDS

SYNTAX_ERROR = "syntax_error"
INCORRECT = "functionally_incorrect"
CORRECT = "functionally_correct"
VERDICT_KINDS = (SYNTAX_ERROR, INCORRECT, CORRECT)


@dataclass
class Verdict:
    kind: str
    diagnostics: list = field(default_factory=list)
    counterexample: Optional[Trace] = None
    violation_cycle: Optional[int] = None
    vacuous: bool = False  # passed without a single non-vacuous match
    sequences_checked: int = 0
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in VERDICT_KINDS:
            raise ValueError(f"unknown verdict kind {self.kind!r}")
        if (self.kind == INCORRECT) != (self.counterexample is not None):
            raise ValueError("a counterexample goes with functionally_incorrect and nothing else")
        if self.kind == SYNTAX_ERROR and not self.diagnostics:
            raise ValueError("syntax_error verdicts carry diagnostics")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "counterexample": self.counterexample.to_dict() if self.counterexample else None,
            "violation_cycle": self.violation_cycle,
            "vacuous": self.vacuous,
            "sequences_checked": self.sequences_checked,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Verdict":
        cex = d.get("counterexample")
        return cls(d["kind"], [Diagnostic.from_dict(x) for x in d.get("diagnostics", [])],
                   Trace(cex["length"], cex["columns"]) if cex else None,
                   d.get("violation_cycle"), d.get("vacuous", False),
                   d.get("sequences_checked", 0), list(d.get("notes", [])))


def check_consistency(model: BehavioralModel, iface: ModuleInterface) -> None:
    """Every interface signal except the clock must be a model column."""
    missing = [n for n in iface.names if n != iface.clock and n not in model.signal_names]
    if missing:
        raise ModelError(f"model {model.name} lacks interface signals {missing}")


def _with_clock(batch: TraceBatch, iface: ModuleInterface) -> TraceBatch:
    # sampling happens on the active edge, where the clock reads 1
    if iface.clock and iface.clock not in batch.columns:
        batch.columns[iface.clock] = np.ones((batch.batch, batch.length), dtype=np.int64)
        batch.widths[iface.clock] = 1
    return batch


def classify(decl_text: str, model: BehavioralModel, iface: ModuleInterface,
             plan: StimulusPlan, reset_names=DEFAULT_RESET_NAMES) -> Verdict:
    try:
        decl = parse_assertion(decl_text)
    except AssertionSyntaxError as e:
        return Verdict(SYNTAX_ERROR, list(e.diagnostics))
    diags = resolve_names(decl, iface)
    if diags:
        return Verdict(SYNTAX_ERROR, diags)
    check_consistency(model, iface)
    known = set(model.signal_names) | {iface.clock}
    for ident in identifiers(decl.property):
        if ident.name not in known:
            raise ModelError(f"model {model.name} has no signal {ident.name!r}")

    stimuli = build_stimuli(model, plan, reset_names)
    checked = 0
    nonvacuous = False
    for group in (stimuli.exhaustive, stimuli.random):
        if len(group) == 0:
            continue
        batch = _with_clock(simulate_batch(model, group), iface)
        result = check_batch(decl, batch)
        checked += len(group)
        nonvacuous = nonvacuous or bool((result.statuses == HOLDS).any())
        failing = result.failing
        if len(failing):
            row = int(failing[0])
            return Verdict(INCORRECT, counterexample=batch.trace(row),
                           violation_cycle=int(result.violated_at[row]),
                           sequences_checked=checked, notes=stimuli.notes)
    return Verdict(CORRECT, vacuous=not nonvacuous, sequences_checked=checked, notes=stimuli.notes)


# --- tallies -----------------------------------------------------------------

class TallyError(Exception):
    pass


@dataclass
class Tally:
    generated: int = 0
    syntax_incorrect: int = 0
    syntax_correct: int = 0
    fixed_by_repair: int = 0
    clean_initially: int = 0
    functionally_correct: int = 0
    functionally_incorrect: int = 0
    vacuous_passes: int = 0  # subset of functionally_correct; a warning, not a verdict

    def violations(self) -> list[str]:
        out = []
        if self.generated != self.syntax_incorrect + self.syntax_correct:
            out.append(f"generated {self.generated} != syntax_incorrect {self.syntax_incorrect}"
                       f" + syntax_correct {self.syntax_correct}")
        if self.syntax_correct != self.fixed_by_repair + self.clean_initially:
            out.append(f"syntax_correct {self.syntax_correct} != fixed_by_repair "
                       f"{self.fixed_by_repair} + clean_initially {self.clean_initially}")
        if self.syntax_correct != self.functionally_correct + self.functionally_incorrect:
            out.append(f"syntax_correct {self.syntax_correct} != functionally_correct "
                       f"{self.functionally_correct} + functionally_incorrect {self.functionally_incorrect}")
        if any(getattr(self, f.name) < 0 for f in fields(self)):
            out.append("negative count")
        return out

    def validate(self) -> "Tally":
        problems = self.violations()
        if problems:
            raise TallyError("; ".join(problems))
        return self

    def __add__(self, other: "Tally") -> "Tally":
        return Tally(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Tally":
        return cls(**{f.name: int(d[f.name]) for f in fields(cls)})


@dataclass(frozen=True)
class AssertionRecord:
    design_id: str
    unit_id: str
    initial_clean: bool  # initial candidate compiled without diagnostics
    repair_status: str  # fixed | exhausted | loop_detected (fixed when initially clean)
    verdict: str
    vacuous: bool = False


def _count(record: AssertionRecord, tally: Tally) -> None:
    tally.generated += 1
    if record.verdict not in VERDICT_KINDS:
        raise TallyError(f"{record.design_id}/{record.unit_id}: unknown verdict {record.verdict!r}")
    if record.verdict == SYNTAX_ERROR:
        if record.initial_clean or record.repair_status == "fixed":
            raise TallyError(f"{record.design_id}/{record.unit_id}: syntax_error verdict "
                             f"after a clean compile")
        tally.syntax_incorrect += 1
        return
    if record.repair_status != "fixed":
        raise TallyError(f"{record.design_id}/{record.unit_id}: verdict {record.verdict} for an "
                         f"assertion whose repair ended {record.repair_status}")
    tally.syntax_correct += 1
    if record.initial_clean:
        tally.clean_initially += 1
    else:
        tally.fixed_by_repair += 1
    if record.verdict == CORRECT:
        tally.functionally_correct += 1
        tally.vacuous_passes += int(record.vacuous)
    else:
        tally.functionally_incorrect += 1


def aggregate(records: Iterable[AssertionRecord]) -> tuple[dict, Tally]:
    """Per-design tallies (sorted by design id) and their sum."""
    per: dict = {}
    for r in records:
        _count(r, per.setdefault(r.design_id, Tally()))
    per = {k: per[k].validate() for k in sorted(per)}
    total = Tally()
    for t in per.values():
        total = total + t
    return per, total.validate()
