import json
import os
from pathlib import Path

import pytest

from svagen.checker.model import BehavioralModel
from svagen.config import bundled_manifest, load_manifest
from svagen.rtl import extract_interface

TESTS = Path(__file__).parent
GOLDEN = TESTS / "golden"
FIXTURES = TESTS / "fixtures"

# set SVAGEN_REGEN_GOLDEN=1 to rewrite golden files instead of comparing
REGEN = os.environ.get("SVAGEN_REGEN_GOLDEN") == "1"

ACCEPTANCE: dict = {}


def golden(name: str, actual: str) -> None:
    path = GOLDEN / name
    if REGEN or not path.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(actual, encoding="utf-8")
    assert actual == path.read_text(encoding="utf-8"), f"golden mismatch: {name}"


def bundled(design_id: str):
    """(model, interface, rtl source) of a bundled design."""
    for e in load_manifest(bundled_manifest()):
        if e.design_id == design_id:
            rtl = e.rtl_path.read_text()
            return BehavioralModel.load(e.model_path), extract_interface(rtl), rtl
    raise KeyError(design_id)


@pytest.fixture
def fsm():
    return bundled("fsm_1101")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {line}")


def load_json(path):
    return json.loads(Path(path).read_text())
