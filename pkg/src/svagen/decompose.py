"""Split a design specification into atomic comment units via three questions."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .llm.gateway import ChatMessage, CompletionRequest
from .llm.prompts import render_prompt
from .llm.schemas import SchemaError, validate_json_response

QUESTIONS = (("A", "question_a"), ("B", "question_b"), ("C", "question_c"))
KINDS = ("fsm_transition", "fsm_output", "conditional", "variable_range")
DEFAULT_MODEL = "gpt-3.5-turbo"


class DecomposeError(Exception):
    pass


@dataclass
class CommentUnit:
    kind: str
    source_question: str
    payload: dict
    rendered_comment: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown unit kind {self.kind!r}")
        if not self.rendered_comment:
            self.rendered_comment = render_comment(self)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "source_question": self.source_question,
                "payload": dict(self.payload), "rendered_comment": self.rendered_comment}

    @classmethod
    def from_dict(cls, d: dict) -> "CommentUnit":
        return cls(d["kind"], d["source_question"], dict(d["payload"]), d["rendered_comment"])


@dataclass
class DecompositionResult:
    spec_id: str
    units: list
    raw_answers: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"spec_id": self.spec_id, "units": [u.to_dict() for u in self.units],
                "raw_answers": self.raw_answers}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "DecompositionResult":
        return cls(d["spec_id"], [CommentUnit.from_dict(u) for u in d["units"]], d["raw_answers"])


def _clean(text) -> str:
    return str(text or "").strip().rstrip(".").strip()


def render_comment(unit: CommentUnit) -> str:
    p = unit.payload
    if unit.kind == "fsm_transition":
        cond = _clean(p.get("conditions"))
        head = f"When in state {_clean(p.get('current_state'))}, "
        head += f"if {cond}, " if cond else ""
        text = head + f"the FSM moves to {_clean(p.get('next_state_condition_true'))}"
        other = _clean(p.get("next_state_condition_false"))
        return text + (f"; otherwise it moves to {other}." if other else ".")
    if unit.kind == "fsm_output":
        cond = _clean(p.get("conditions"))
        head = f"When in state {_clean(p.get('current_state'))}, "
        head += f"if {cond}, " if cond else ""
        text = head + f"output {_clean(p.get('output_name'))} is " \
                      f"{_clean(p.get('output_value_condition_true'))}"
        other = _clean(p.get("output_value_condition_false"))
        return text + (f"; otherwise it is {other}." if other else ".")
    if unit.kind == "conditional":
        return f"If {_clean(p.get('antecedent'))}, then {_clean(p.get('consequent'))}."
    name = _clean(p.get("variable_name"))
    rng = _clean(p.get("range_or_value"))
    cond = _clean(p.get("condition"))
    if not rng:
        return f"The variable {name} has no stated range" + (f" when {cond}." if cond else ".")
    if cond:
        return f"When {cond}, the variable {name} stays in the range {rng}."
    return f"The variable {name} always stays in the range {rng}."


def fan_out(answers: dict) -> list[CommentUnit]:
    """Units in the order A-transitions, A-outputs, B, C."""
    units = []
    fsms = answers.get("question_a", [])
    for fsm in fsms:
        for t in fsm["transitions"]:
            units.append(CommentUnit("fsm_transition", "A", dict(t)))
    for fsm in fsms:
        for o in fsm["outputs"]:
            units.append(CommentUnit("fsm_output", "A", dict(o)))
    for c in answers.get("question_b", []):
        units.append(CommentUnit("conditional", "B", dict(c)))
    for var in answers.get("question_c", []):
        for cond in var.get("condition_list", []):
            payload = {"variable_name": var["variable_name"], **cond}
            units.append(CommentUnit("variable_range", "C", payload))
    return units


def expected_unit_count(answers: dict) -> int:
    fsms = answers.get("question_a", [])
    return (sum(len(f["transitions"]) + len(f["outputs"]) for f in fsms)
            + len(answers.get("question_b", []))
            + sum(len(v.get("condition_list", [])) for v in answers.get("question_c", [])))


def question_requests(spec_text: str, model_id: str = DEFAULT_MODEL, prompts_dir=None) -> dict:
    return {tid: CompletionRequest(model_id, tuple(render_prompt(tid, {"spec_text": spec_text},
                                                                 prompts_dir)))
            for _, tid in QUESTIONS}


def _ask(gateway, req: CompletionRequest, schema_id: str):
    text = gateway.complete(req)
    try:
        return validate_json_response(schema_id, text)
    except SchemaError as first:
        retry = CompletionRequest(req.model_id, req.messages + (
            ChatMessage("assistant", text),
            ChatMessage("user", f"The answer is not valid: {first}. Reply again with the JSON "
                                f"document only, using exactly the field names of the example."),
        ), req.temperature, req.max_tokens)
        text = gateway.complete(retry)
        try:
            return validate_json_response(schema_id, text)
        except SchemaError as second:
            raise DecomposeError(f"{schema_id}: invalid answer after one re-ask: {second}") from None


def decompose(spec_text: str, gateway, *, spec_id: str = "spec", model_id: str = DEFAULT_MODEL,
              prompts_dir=None, workers: int = 3) -> DecompositionResult:
    """Ask the three questions (concurrently unless ``workers`` is 1) and fan out.

    With ``workers=1`` the calls are made in A, B, C order, which a scripted
    backend relies on.
    """
    if not spec_text.strip():
        raise DecomposeError("specification text is empty")
    reqs = question_requests(spec_text, model_id, prompts_dir)
    if workers <= 1:
        answers = {tid: _ask(gateway, req, tid) for tid, req in reqs.items()}
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(reqs))) as pool:
            futures = {tid: pool.submit(_ask, gateway, req, tid) for tid, req in reqs.items()}
            answers = {tid: fut.result() for tid, fut in futures.items()}
    units = fan_out(answers)
    assert len(units) == expected_unit_count(answers)
    return DecompositionResult(spec_id, units, answers)
