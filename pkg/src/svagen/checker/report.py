"""Per-design reports (json / csv / markdown) and FPV TCL scripts."""
from __future__ import annotations

import csv
import io
import json
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

import jinja2

from .scoreboard import Tally

REPORT_SCHEMA = "svagen.report/1"
FORMATS = ("json", "csv", "markdown")
CSV_HEADER = ["design", "functionally_correct", "functionally_incorrect", "syntax_error"]


class ReportError(Exception):
    pass


def _rows(tallies: Mapping[str, Tally]):
    for design in sorted(tallies):
        t = tallies[design]
        yield design, t


def render_report(tallies: Mapping[str, Tally], fmt: str) -> str:
    if fmt not in FORMATS:
        raise ReportError(f"unknown report format {fmt!r}")
    total = Tally()
    for _, t in _rows(tallies):
        total = total + t
    if fmt == "json":
        doc = {
            "schema": REPORT_SCHEMA,
            "designs": [
                {"design": d, "functionally_correct": t.functionally_correct,
                 "functionally_incorrect": t.functionally_incorrect,
                 "syntax_error": t.syntax_incorrect, "vacuous_pass_warnings": t.vacuous_passes,
                 "tally": t.to_dict()}
                for d, t in _rows(tallies)
            ],
            "total": total.to_dict(),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for d, t in _rows(tallies):
            w.writerow([d, t.functionally_correct, t.functionally_incorrect, t.syntax_incorrect])
        return buf.getvalue()
    lines = [
        "| design | functionally correct | functionally incorrect | syntax error | vacuous passes (warning) |",
        "|---|---:|---:|---:|---:|",
    ]
    for d, t in _rows(tallies):
        lines.append(f"| {d} | {t.functionally_correct} | {t.functionally_incorrect} | "
                     f"{t.syntax_incorrect} | {t.vacuous_passes} |")
    lines.append(f"| **total** | {total.functionally_correct} | {total.functionally_incorrect} | "
                 f"{total.syntax_incorrect} | {total.vacuous_passes} |")
    return "\n".join(lines) + "\n"


def emit_report(tallies: Mapping[str, Tally], fmt: str, path=None) -> str:
    """Render and optionally write the report; returns the text."""
    text = render_report(tallies, fmt)
    if path is not None:
        Path(path).write_text(text)
    return text


def read_json_report(text: str) -> tuple[dict, Tally]:
    """Parse a json report, checking its shape and arithmetic."""
    doc = json.loads(text)
    if doc.get("schema") != REPORT_SCHEMA or set(doc) != {"schema", "designs", "total"}:
        raise ReportError("not a report document")
    tallies = {}
    for row in doc["designs"]:
        t = Tally.from_dict(row["tally"]).validate()
        if (row["functionally_correct"], row["functionally_incorrect"], row["syntax_error"]) != \
                (t.functionally_correct, t.functionally_incorrect, t.syntax_incorrect):
            raise ReportError(f"row {row['design']} disagrees with its tally")
        tallies[row["design"]] = t
    return tallies, Tally.from_dict(doc["total"]).validate()


# --- TCL ---------------------------------------------------------------------

class TclError(Exception):
    pass


def _template() -> jinja2.Template:
    text = resources.files("svagen").joinpath("templates/fpv.tcl.tmpl").read_text()
    env = jinja2.Environment(trim_blocks=True, lstrip_blocks=True, keep_trailing_newline=True,
                             undefined=jinja2.StrictUndefined, autoescape=False)
    return env.from_string(text)


def _reset_expr(reset: str) -> str:
    return f"!{reset}" if reset.lower().endswith(("_n", "resetn")) else reset


def emit_tcl(design_id: str, rtl_path, assertion_paths: Sequence, clock: Optional[str] = None,
             reset: Optional[str] = None, *, sequential: Optional[bool] = None,
             top: Optional[str] = None, horizon: int = 20) -> str:
    """TCL script for an external FPV engine.

    ``sequential`` defaults to whether a clock is given; asking for a
    sequential script without a clock is an error.
    """
    if sequential is None:
        sequential = clock is not None
    if sequential and not clock:
        raise TclError(f"{design_id}: sequential design needs a clock")
    if not sequential:
        clock = reset = None
    return _template().render(
        design_id=design_id, rtl_path=str(rtl_path), assertion_paths=[str(p) for p in assertion_paths],
        top=top or design_id, clock=clock, reset=reset,
        reset_expr=_reset_expr(reset) if reset else "", horizon=horizon,
    )
