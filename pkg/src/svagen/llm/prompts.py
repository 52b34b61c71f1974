"""Prompt templates stored as versioned text files.

A template is split into messages by ``### <role>`` lines.  ``{{name}}`` is
replaced by a binding and ``{{> other}}`` by the text of another template
file.  Bound values are inserted literally (never re-expanded).
"""
from __future__ import annotations

import hashlib
import re
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from .gateway import ROLES, ChatMessage

TEMPLATE_IDS = ("question_a", "question_b", "question_c", "generate", "align", "repair")

_SECTION_RE = re.compile(r"^### (\w+)[ \t]*$", re.M)
_PLACEHOLDER_RE = re.compile(r"\{\{\s*(>?)\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}")


class PromptError(Exception):
    pass


def default_dir() -> Path:
    return Path(str(resources.files("svagen").joinpath("prompts")))


def read_template(template_id: str, prompts_dir=None) -> str:
    path = Path(prompts_dir or default_dir()) / f"{template_id}.txt"
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise PromptError(f"template {template_id!r} not found in {path.parent}") from e


def template_version(template_id: str, prompts_dir=None) -> str:
    """Short content hash; includes any partials the template pulls in."""
    text = read_template(template_id, prompts_dir)
    h = hashlib.sha256(text.encode("utf-8"))
    for kind, name in _PLACEHOLDER_RE.findall(text):
        if kind == ">":
            h.update(read_template(name, prompts_dir).encode("utf-8"))
    return h.hexdigest()[:12]


def template_versions(prompts_dir=None) -> dict:
    return {t: template_version(t, prompts_dir) for t in TEMPLATE_IDS}


def placeholders(template_id: str, prompts_dir=None) -> list[str]:
    text = read_template(template_id, prompts_dir)
    return sorted({name for kind, name in _PLACEHOLDER_RE.findall(text) if not kind})


def render_prompt(template_id: str, bindings: Mapping[str, str],
                  prompts_dir: Optional[Path] = None) -> list[ChatMessage]:
    text = read_template(template_id, prompts_dir)
    missing = [n for n in placeholders(template_id, prompts_dir) if n not in bindings]
    if missing:
        raise PromptError(f"template {template_id!r} needs bindings for {missing}")

    def fill(m: re.Match) -> str:
        kind, name = m.groups()
        if kind:
            return read_template(name, prompts_dir).rstrip("\n")
        return str(bindings[name])

    rendered = _PLACEHOLDER_RE.sub(fill, text)
    heads = list(_SECTION_RE.finditer(rendered))
    if not heads:
        raise PromptError(f"template {template_id!r} has no '### <role>' sections")
    messages = []
    for i, h in enumerate(heads):
        role = h.group(1)
        if role not in ROLES:
            raise PromptError(f"template {template_id!r}: unknown role {role!r}")
        end = heads[i + 1].start() if i + 1 < len(heads) else len(rendered)
        body = rendered[h.end():end].strip("\n")
        if not body.strip():
            raise PromptError(f"template {template_id!r}: {role} message renders empty")
        messages.append(ChatMessage(role, body))
    return messages
