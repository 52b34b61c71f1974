"""Validation of the JSON answers to the three decomposition questions."""
from __future__ import annotations

import json
import re

from .gateway import strip_fences

SCHEMA_IDS = ("question_a", "question_b", "question_c")


class SchemaError(ValueError):
    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{message} at path `{path or '$'}`" if path is not None else message)
        self.path = path


# field -> (type, required)
_TRANSITION = {
    "current_state": (str, True),
    "conditions": (str, True),
    "next_state_condition_true": (str, True),
    "next_state_condition_false": (str, False),
}
_OUTPUT = {
    "current_state": (str, True),
    "output_name": (str, True),
    "conditions": (str, True),
    "output_value_condition_true": (str, True),
    "output_value_condition_false": (str, False),
}
_FSM = {
    "states": ([str], True),
    "transitions": ([_TRANSITION], True),
    "outputs": ([_OUTPUT], True),
}
_CONDITIONAL = {"antecedent": (str, True), "consequent": (str, True)}
_RANGE = {"condition": (str, False), "range_or_value": (str, False)}
_VARIABLE = {"variable_name": (str, True), "condition_list": ([_RANGE], False)}

SCHEMAS = {"question_a": [_FSM], "question_b": [_CONDITIONAL], "question_c": [_VARIABLE]}

_TRAILING_COMMA = re.compile(r",(\s*[\]}])")


def _check(value, shape, path: str):
    if shape is str:
        if not isinstance(value, str):
            raise SchemaError(f"expected a string, got {type(value).__name__}", path)
        return value
    if isinstance(shape, list):
        if not isinstance(value, list):
            raise SchemaError(f"expected an array, got {type(value).__name__}", path)
        return [_check(v, shape[0], f"{path}[{i}]") for i, v in enumerate(value)]
    if not isinstance(value, dict):
        raise SchemaError(f"expected an object, got {type(value).__name__}", path)
    for key in value:
        if key not in shape:
            raise SchemaError(f"unknown field {key!r}", f"{path}.{key}")
    out = {}
    for key, (sub, required) in shape.items():
        if key not in value:
            if required:
                raise SchemaError(f"missing field {key!r}", f"{path}.{key}")
            continue
        out[key] = _check(value[key], sub, f"{path}.{key}")
    return out


def _extract_json(text: str) -> str:
    body = strip_fences(text).strip()
    if body[:1] in "[{":
        return body
    # prose around the document: take the outermost bracketed span
    starts = [i for i in (body.find("["), body.find("{")) if i >= 0]
    if not starts:
        return body
    start = min(starts)
    end = max(body.rfind("]"), body.rfind("}"))
    return body[start:end + 1] if end > start else body[start:]


def parse_lenient(text: str):
    """Parse JSON, forgiving trailing commas like those in the example sketches."""
    raw = _extract_json(text)
    try:
        return json.loads(raw)
    except ValueError:
        pass
    try:
        return json.loads(_TRAILING_COMMA.sub(r"\1", raw))
    except ValueError as e:
        raise SchemaError(f"unparseable JSON ({e.msg}, line {e.lineno} column {e.colno})",
                          None) from None


def validate_json_response(schema_id: str, text: str):
    """Parsed and checked answer; a single top-level object is wrapped in a list."""
    if schema_id not in SCHEMAS:
        raise ValueError(f"unknown schema {schema_id!r}")
    doc = parse_lenient(text)
    if isinstance(doc, dict):
        doc = [doc]
    return _check(doc, SCHEMAS[schema_id], "")
