"""Assertion generation and the compile / annotate / re-prompt repair loop."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .decompose import DEFAULT_MODEL, CommentUnit
from .llm.gateway import ChatMessage, CompletionRequest, strip_fences
from .llm.prompts import render_prompt
from .rewrite import COMBINATIONAL_RULES, RewriteError, to_combinational
from .rtl import COMBINATIONAL, ModuleInterface, resolve_names
from .sva.diagnostics import Diagnostic, render_all
from .sva.parser import AssertionSyntaxError, parse_assertion
from .sva.printer import pretty_print

IN_PROGRESS, FIXED, EXHAUSTED, LOOP_DETECTED = "in_progress", "fixed", "exhausted", "loop_detected"
STATUSES = (IN_PROGRESS, FIXED, EXHAUSTED, LOOP_DETECTED)

_ASSERT_RE = re.compile(r"\bassert\b")


class ExtractionError(Exception):
    pass


def extract_assertion(text: str, warnings: Optional[list] = None) -> str:
    """First ``assert`` statement in a model response, up to its closing ``;``.

    When several statements are present the first wins and a warning is
    appended to ``warnings``.
    """
    body = strip_fences(text)
    starts = [m.start() for m in _ASSERT_RE.finditer(body)]
    if not starts:
        raise ExtractionError("response contains no assert statement")
    start = starts[0]
    depth = 0
    end = len(body)
    for i in range(start, len(body)):
        ch = body[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == ";" and depth <= 0:
            end = i + 1
            break
        elif ch == "\n" and depth <= 0 and i + 1 < len(body) and _ASSERT_RE.match(body, i + 1):
            end = i
            break
    later = [s for s in starts if s >= end]
    if later and warnings is not None:
        warnings.append(f"{1 + len(later)} assert statements in response; kept the first")
    return body[start:end].strip()


def _ask(gateway, model_id: str, messages) -> str:
    return gateway.complete(CompletionRequest(model_id, tuple(messages)))


def generate_request(unit: CommentUnit, model_id: str = DEFAULT_MODEL, prompts_dir=None):
    return CompletionRequest(model_id, tuple(render_prompt("generate", {"comment": unit.rendered_comment},
                                                           prompts_dir)))


def generate_initial(unit: CommentUnit, gateway, model_id: str = DEFAULT_MODEL, *,
                     prompts_dir=None, warnings: Optional[list] = None) -> str:
    response = gateway.complete(generate_request(unit, model_id, prompts_dir))
    return extract_assertion(response, warnings)


def semantic_align(assertion_text: str, rtl_source: str, gateway, model_id: str = DEFAULT_MODEL,
                   *, prompts_dir=None, warnings: Optional[list] = None) -> str:
    messages = render_prompt("align", {"assertion": assertion_text, "rtl": rtl_source.rstrip("\n")},
                             prompts_dir)
    return extract_assertion(_ask(gateway, model_id, messages), warnings)


@dataclass
class RepairPolicy:
    max_iterations: int = 5
    loop_window: int = 2
    apply_combinational_rewrite: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.loop_window < 2:
            raise ValueError("loop_window must be >= 2")

    @classmethod
    def for_interface(cls, iface: ModuleInterface, **kw) -> "RepairPolicy":
        return cls(apply_combinational_rewrite=iface.mode == COMBINATIONAL, **kw)


@dataclass
class Candidate:
    text: str  # as returned by the model
    source: str = ""  # text the diagnostics point into (the rewrite output when it applies)
    diagnostics: Optional[list] = None  # None until compiled

    def to_dict(self) -> dict:
        return {"text": self.text, "source": self.source,
                "diagnostics": None if self.diagnostics is None else
                [d.to_dict() for d in self.diagnostics]}

    @classmethod
    def from_dict(cls, d: dict) -> "Candidate":
        diags = d.get("diagnostics")
        return cls(d["text"], d.get("source", ""),
                   None if diags is None else [Diagnostic.from_dict(x) for x in diags])


def compile_candidate(text: str, iface: ModuleInterface, combinational: bool) -> tuple[str, list]:
    """(source text the diagnostics refer to, diagnostics)."""
    try:
        decl = parse_assertion(text)
    except AssertionSyntaxError as e:
        return text, list(e.diagnostics)
    if combinational:
        try:
            rewritten = to_combinational(decl)
        except RewriteError as e:
            return text, [e.diagnostic]
        if rewritten is not decl:
            text = pretty_print(rewritten)
            decl = parse_assertion(text)
    return text, resolve_names(decl, iface)


def normalize(text: str) -> str:
    return " ".join(text.split())


@dataclass
class RepairSession:
    unit: CommentUnit
    interface: ModuleInterface
    candidates: list = field(default_factory=list)
    iteration: int = 0
    status: str = IN_PROGRESS
    transcript: list = field(default_factory=list)  # [(messages, response)]
    warnings: list = field(default_factory=list)

    @classmethod
    def start(cls, unit: CommentUnit, iface: ModuleInterface, initial_text: str) -> "RepairSession":
        return cls(unit, iface, [Candidate(initial_text)])

    @property
    def final_assertion(self) -> Optional[str]:
        if self.status != FIXED:
            return None
        return self.candidates[-1].source

    @property
    def initially_clean(self) -> bool:
        first = self.candidates[0] if self.candidates else None
        return bool(first and first.diagnostics == [])

    def to_dict(self) -> dict:
        return {
            "unit": self.unit.to_dict(),
            "interface": self.interface.to_dict(),
            "candidates": [c.to_dict() for c in self.candidates],
            "iteration": self.iteration,
            "status": self.status,
            "transcript": [{"prompt": [m.to_dict() for m in msgs], "response": resp}
                           for msgs, resp in self.transcript],
            "warnings": list(self.warnings),
            "final_assertion": self.final_assertion,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RepairSession":
        return cls(
            CommentUnit.from_dict(d["unit"]), ModuleInterface.from_dict(d["interface"]),
            [Candidate.from_dict(c) for c in d["candidates"]], d["iteration"], d["status"],
            [(tuple(ChatMessage(m["role"], m["content"]) for m in t["prompt"]), t["response"])
             for t in d["transcript"]],
            list(d.get("warnings", [])),
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "RepairSession":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def repair_messages(cand: Candidate, iface: ModuleInterface, combinational: bool, prompts_dir=None):
    rules = f"\n{COMBINATIONAL_RULES}\n" if combinational else ""
    return render_prompt("repair", {
        "assertion": cand.source,
        "diagnostics": render_all(cand.diagnostics, cand.source),
        "signal_table": iface.signal_table(),
        "rules": rules,
    }, prompts_dir)


def run_repair(session: RepairSession, policy: RepairPolicy, gateway,
               model_id: str = DEFAULT_MODEL, *, prompts_dir=None) -> RepairSession:
    """Drive ``session`` to a terminal status.

    Gateway errors propagate with the session left ``in_progress`` so it can
    be saved and resumed.
    """
    if not session.candidates:
        raise ValueError("session has no initial candidate")
    comb = policy.apply_combinational_rewrite
    while True:
        cand = session.candidates[-1]
        if cand.diagnostics is None:
            cand.source, cand.diagnostics = compile_candidate(cand.text, session.interface, comb)
        if session.status != IN_PROGRESS:
            return session
        if not cand.diagnostics:
            session.status = FIXED
            return session
        if session.iteration >= policy.max_iterations:
            session.status = EXHAUSTED
            return session
        messages = repair_messages(cand, session.interface, comb, prompts_dir)
        response = _ask(gateway, model_id, messages)
        session.transcript.append((tuple(messages), response))
        try:
            text = extract_assertion(response, session.warnings)
        except ExtractionError:
            session.warnings.append(f"iteration {session.iteration + 1}: no assert statement in response")
            text = strip_fences(response).strip() or response
        recent = {normalize(c.text) for c in session.candidates[-policy.loop_window:]}
        session.candidates.append(Candidate(text))
        session.iteration += 1
        if normalize(text) in recent:
            session.status = LOOP_DETECTED
