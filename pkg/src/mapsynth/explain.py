"""Explanation graphs: why a discovered query satisfies the constraints.

A graph has one node per relation instance (rendered as orange rectangles),
one node per projected attribute (green ellipses), one edge per join
condition, and one blue box per selected constraint anchored at the attribute
where that constraint is satisfied. Two serializations exist: Graphviz dot for
tooling, and a versioned JSON wire format the web client consumes.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

from .constraints import metadata_to_text, value_to_text
from .engine import SynthesisTask
from .schema_graph import CandidateQuery

WIRE_VERSION = 1

NODE_STYLE = {
    "relation": {"shape": "rectangle", "color": "orange"},
    "attribute": {"shape": "ellipse", "color": "palegreen"},
    "constraint": {"shape": "box", "color": "lightblue"},
}


@dataclass(frozen=True)
class RelationNode:
    id: str
    label: str


@dataclass(frozen=True)
class AttributeNode:
    id: str
    label: str
    owner: str            # relation node id
    targets: tuple[int, ...]  # target column positions served by this attribute


@dataclass(frozen=True)
class JoinEdgeView:
    source: str
    target: str
    label: str


@dataclass(frozen=True)
class ConstraintBox:
    id: str
    label: str
    anchor: str           # attribute node id where the constraint is satisfied
    kind: str             # "value" | "metadata"
    row: Optional[int]
    column: int


@dataclass(frozen=True)
class ExplanationGraph:
    relation_nodes: tuple[RelationNode, ...]
    attribute_nodes: tuple[AttributeNode, ...]
    join_edges: tuple[JoinEdgeView, ...]
    constraint_boxes: tuple[ConstraintBox, ...]


def task_constraint_entries(task: SynthesisTask) -> list[dict]:
    """The task's non-empty constraints in display order: sample rows first
    (row-major), then metadata columns. The positions here are the indices a
    client selects by."""
    entries = []
    for i, row in enumerate(task.samples):
        for j, c in enumerate(row):
            if not c.is_empty:
                entries.append({"kind": "value", "row": i, "column": j,
                                "text": value_to_text(c)})
    for j, c in enumerate(task.metadata):
        if not c.is_empty:
            entries.append({"kind": "metadata", "row": None, "column": j,
                            "text": metadata_to_text(c)})
    return entries


def to_graph(q: CandidateQuery, task: SynthesisTask,
             selected_constraints: Optional[Iterable[int]] = None) -> ExplanationGraph:
    """Build the annotated graph for a verified query.

    ``selected_constraints`` indexes into task_constraint_entries; None selects
    everything. Boxes anchor to the attribute actually used by the query's
    projection for that target column."""
    entries = task_constraint_entries(task)
    if selected_constraints is None:
        chosen = list(range(len(entries)))
    else:
        chosen = list(selected_constraints)
        for k in chosen:
            if not 0 <= k < len(entries):
                raise IndexError(f"selected constraint index {k} out of range "
                                 f"(task has {len(entries)})")

    rel_nodes = []
    rel_ids = {}
    for inst in sorted(q.tree.nodes):
        alias = q.instance_alias(inst)
        rel_ids[inst] = f"rel:{alias}"
        rel_nodes.append(RelationNode(f"rel:{alias}", alias))

    attr_nodes = []
    attr_ids = {}
    by_slot: dict = {}
    for j, slot in enumerate(q.projection):
        by_slot.setdefault(slot, []).append(j)
    for slot in sorted(by_slot):
        alias = q.instance_alias(slot.instance)
        node_id = f"attr:{alias}.{slot.column}"
        attr_ids[slot] = node_id
        attr_nodes.append(AttributeNode(node_id, slot.column, rel_ids[slot.instance],
                                        tuple(by_slot[slot])))

    edges = []
    for a, b in q.edges_sorted():
        edges.append(JoinEdgeView(
            rel_ids[a.instance], rel_ids[b.instance],
            f"{a.column} = {b.column}"))

    boxes = []
    for n, k in enumerate(chosen):
        entry = entries[k]
        slot = q.projection[entry["column"]]
        boxes.append(ConstraintBox(
            id=f"box:{k}",
            label=entry["text"],
            anchor=attr_ids[slot],
            kind=entry["kind"],
            row=entry["row"],
            column=entry["column"],
        ))

    return ExplanationGraph(tuple(rel_nodes), tuple(attr_nodes),
                            tuple(edges), tuple(boxes))


# --- serialization ----------------------------------------------------------------

def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def render_text(g: ExplanationGraph, format: str = "structured") -> str:
    if format == "structured":
        return to_wire(g)
    if format != "dot":
        raise ValueError(f"unknown format {format!r}")
    lines = ["graph explanation {"]
    for node in g.relation_nodes:
        style = NODE_STYLE["relation"]
        lines.append(f'  "{_dot_escape(node.id)}" [label="{_dot_escape(node.label)}", '
                     f'shape={style["shape"]}, style=filled, fillcolor={style["color"]}];')
    for node in g.attribute_nodes:
        style = NODE_STYLE["attribute"]
        lines.append(f'  "{_dot_escape(node.id)}" [label="{_dot_escape(node.label)}", '
                     f'shape={style["shape"]}, style=filled, fillcolor={style["color"]}];')
        lines.append(f'  "{_dot_escape(node.owner)}" -- "{_dot_escape(node.id)}" [style=dashed];')
    for box in g.constraint_boxes:
        style = NODE_STYLE["constraint"]
        lines.append(f'  "{_dot_escape(box.id)}" [label="{_dot_escape(box.label)}", '
                     f'shape={style["shape"]}, style=filled, fillcolor={style["color"]}];')
        lines.append(f'  "{_dot_escape(box.id)}" -- "{_dot_escape(box.anchor)}" [style=dotted];')
    for edge in g.join_edges:
        lines.append(f'  "{_dot_escape(edge.source)}" -- "{_dot_escape(edge.target)}" '
                     f'[label="{_dot_escape(edge.label)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_wire(g: ExplanationGraph) -> str:
    """Versioned JSON wire format; byte-deterministic for identical graphs."""
    nodes = []
    for node in g.relation_nodes:
        nodes.append({"id": node.id, "kind": "relation", "label": node.label,
                      **NODE_STYLE["relation"]})
    for node in g.attribute_nodes:
        nodes.append({"id": node.id, "kind": "attribute", "label": node.label,
                      "owner": node.owner, "targets": list(node.targets),
                      **NODE_STYLE["attribute"]})
    payload = {
        "version": WIRE_VERSION,
        "kind": "explanation_graph",
        "nodes": nodes,
        "edges": [asdict(e) for e in g.join_edges],
        "boxes": [{"id": b.id, "label": b.label, "anchor": b.anchor,
                   "kind": b.kind, "row": b.row, "column": b.column,
                   **NODE_STYLE["constraint"]} for b in g.constraint_boxes],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def parse_wire(text: str) -> ExplanationGraph:
    payload = json.loads(text)
    if payload.get("version") != WIRE_VERSION:
        raise ValueError(f"unsupported wire version {payload.get('version')!r}")
    if payload.get("kind") != "explanation_graph":
        raise ValueError("not an explanation graph document")
    rel_nodes, attr_nodes = [], []
    for node in payload["nodes"]:
        if node["kind"] == "relation":
            rel_nodes.append(RelationNode(node["id"], node["label"]))
        elif node["kind"] == "attribute":
            attr_nodes.append(AttributeNode(node["id"], node["label"],
                                            node["owner"], tuple(node["targets"])))
        else:
            raise ValueError(f"unknown node kind {node['kind']!r}")
    edges = tuple(JoinEdgeView(e["source"], e["target"], e["label"])
                  for e in payload["edges"])
    boxes = tuple(ConstraintBox(b["id"], b["label"], b["anchor"], b["kind"],
                                b["row"], b["column"]) for b in payload["boxes"])
    return ExplanationGraph(tuple(rel_nodes), tuple(attr_nodes), edges, boxes)
