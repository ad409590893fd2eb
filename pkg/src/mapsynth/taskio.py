"""Task documents, report serialization, and trace export.

A task document is JSON mirroring the UI's three sections::

    {"catalog": "mondial-mini",          # optional; CLI flag overrides
     "arity": 3,                          # config
     "rows": [["California || Nevada", "Lake Tahoe", ""]],   # sample grid
     "metadata": ["", "", "DataType=='decimal' AND MinValue>='0'"]}

Reports and traces serialize to versioned JSON so runs can be persisted and
compared across policies.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from .engine import SynthesisReport, SynthesisTask, TaskError, task_from_strings
from .schema_graph import CandidateQuery

DOC_VERSION = 1


def parse_task_document(payload: dict) -> tuple[Optional[str], SynthesisTask]:
    """Returns (catalog name or None, task). Raises TaskError on bad input."""
    if not isinstance(payload, dict):
        raise TaskError("task document must be a JSON object")
    rows = payload.get("rows", [])
    metadata = payload.get("metadata", [])
    arity = payload.get("arity")
    if arity is None:
        raise TaskError("task document needs an 'arity' field")
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise TaskError("'rows' must be a list of constraint-string lists")
    if not isinstance(metadata, list):
        raise TaskError("'metadata' must be a list of constraint strings")
    task = task_from_strings(rows, metadata, arity=int(arity))
    catalog = payload.get("catalog")
    return catalog, task


def load_task_file(path: str | Path) -> tuple[Optional[str], SynthesisTask]:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise TaskError(f"cannot read task file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise TaskError(f"malformed task file {path}: {exc}") from exc
    return parse_task_document(payload)


def query_to_json(q: CandidateQuery) -> dict:
    return {
        "sql": q.to_sql(),
        "relations": [{"relation": i.relation, "ordinal": i.ordinal,
                       "alias": q.instance_alias(i)}
                      for i in sorted(q.tree.nodes)],
        "joins": [{"left": f"{q.instance_alias(a.instance)}.{a.column}",
                   "right": f"{q.instance_alias(b.instance)}.{b.column}"}
                  for a, b in q.edges_sorted()],
        "projection": [f"{q.instance_alias(s.instance)}.{s.column}"
                       for s in q.projection],
    }


def report_to_json(report: SynthesisReport, include_trace: bool = False) -> dict:
    out = {
        "version": DOC_VERSION,
        "queries": [query_to_json(q) for q in report.queries],
        "filters_validated": report.filters_validated,
        "filters_pruned": report.filters_pruned,
        "elapsed_ms": round(report.elapsed * 1000, 3),
        "timed_out": report.timed_out,
        "policy": report.policy,
        "seed": report.seed,
        "candidates_total": report.candidates_total,
        "candidates_pruned": report.candidates_pruned,
    }
    if include_trace:
        out["trace"] = list(report.trace)
    return out


def report_text(report: SynthesisReport) -> str:
    lines = []
    if report.timed_out:
        lines.append("TIMED OUT: partial results below are verified, "
                     "but the search did not finish.")
    lines.append(f"{len(report.queries)} satisfying quer"
                 f"{'y' if len(report.queries) == 1 else 'ies'} "
                 f"({report.candidates_total} candidates, "
                 f"{report.filters_validated} filters validated, "
                 f"{report.filters_pruned} pruned, "
                 f"{report.elapsed * 1000:.0f} ms, policy={report.policy})")
    for n, q in enumerate(report.queries):
        lines.append(f"  [{n}] {q.to_sql()}")
    return "\n".join(lines) + "\n"


def write_trace(path: str | Path, report: SynthesisReport) -> None:
    """Scheduling trace as JSON lines, one validation per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for event in report.trace:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
