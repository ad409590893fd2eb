/**
 * Layered SVG rendering of explanation graphs.
 *
 * Row 0: relation rectangles. Row 1: projected-attribute ellipses under their
 * owning relation. Row 2: constraint boxes under the attribute where each
 * constraint holds. Join edges connect relation rectangles; dashed links tie
 * attributes to owners, dotted links tie boxes to anchors. Shapes and colors
 * come from the wire data, so the service stays the single source of styling
 * truth.
 */

import type { WireGraph, WireNode } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const NODE_W = 132;
const NODE_H = 40;
const BOX_W = 190;
const BOX_H = 34;
const H_GAP = 56;
const ROW_GAP = 74;
const MARGIN = 24;

interface Placed {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface GraphLayout {
  width: number;
  height: number;
  positions: Map<string, Placed>;
}

/** Deterministic layered layout; identical graphs place identically. */
export function layoutGraph(graph: WireGraph): GraphLayout {
  const positions = new Map<string, Placed>();
  const relations = graph.nodes.filter((n) => n.kind === "relation");
  const attributes = graph.nodes.filter((n) => n.kind === "attribute");

  relations.forEach((rel, i) => {
    positions.set(rel.id, {
      x: MARGIN + i * (NODE_W + H_GAP),
      y: MARGIN,
      w: NODE_W,
      h: NODE_H,
    });
  });

  const perOwner = new Map<string, WireNode[]>();
  for (const attr of attributes) {
    const owner = attr.owner ?? "";
    const bucket = perOwner.get(owner) ?? [];
    bucket.push(attr);
    perOwner.set(owner, bucket);
  }
  let attrCursor = MARGIN;
  for (const rel of relations) {
    const owned = perOwner.get(rel.id) ?? [];
    const ownerPos = positions.get(rel.id)!;
    let x = Math.max(attrCursor, ownerPos.x - ((owned.length - 1) * (NODE_W + 12)) / 2);
    for (const attr of owned) {
      positions.set(attr.id, { x, y: MARGIN + ROW_GAP, w: NODE_W, h: NODE_H });
      x += NODE_W + 12;
    }
    attrCursor = Math.max(attrCursor, x + 8);
  }

  let boxCursor = MARGIN;
  for (const box of graph.boxes) {
    const anchor = positions.get(box.anchor);
    const x = Math.max(boxCursor, (anchor ? anchor.x : MARGIN) - (BOX_W - NODE_W) / 2);
    positions.set(box.id, { x, y: MARGIN + 2 * ROW_GAP, w: BOX_W, h: BOX_H });
    boxCursor = x + BOX_W + 14;
  }

  let width = 2 * MARGIN;
  let height = 2 * MARGIN;
  for (const p of positions.values()) {
    width = Math.max(width, p.x + p.w + MARGIN);
    height = Math.max(height, p.y + p.h + MARGIN);
  }
  return { width, height, positions };
}

function el(tag: string, attrs: Record<string, string>): Element {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node;
}

function center(p: Placed): { cx: number; cy: number } {
  return { cx: p.x + p.w / 2, cy: p.y + p.h / 2 };
}

function line(a: Placed, b: Placed, dash: string | null, cls: string): Element {
  const ca = center(a);
  const cb = center(b);
  const attrs: Record<string, string> = {
    x1: String(ca.cx),
    y1: String(ca.cy),
    x2: String(cb.cx),
    y2: String(cb.cy),
    stroke: "#666",
    "stroke-width": "1.4",
    class: cls,
  };
  if (dash) attrs["stroke-dasharray"] = dash;
  return el("line", attrs);
}

function labelText(x: number, y: number, text: string, cls: string): Element {
  const node = el("text", {
    x: String(x),
    y: String(y),
    "text-anchor": "middle",
    "dominant-baseline": "middle",
    "font-size": "12",
    class: cls,
  });
  node.textContent = text;
  return node;
}

/** Render the graph into a fresh <svg>; caller mounts it. */
export function renderGraph(graph: WireGraph): SVGSVGElement {
  const layout = layoutGraph(graph);
  const svg = document.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
  svg.setAttribute("width", String(layout.width));
  svg.setAttribute("height", String(layout.height));
  svg.setAttribute("data-graph", "explanation");

  // edges first so nodes draw on top
  for (const edge of graph.edges) {
    const a = layout.positions.get(edge.source)!;
    const b = layout.positions.get(edge.target)!;
    const ln = line(a, b, null, "join-edge");
    ln.setAttribute("data-kind", "join-edge");
    svg.appendChild(ln);
    const mid = { x: (center(a).cx + center(b).cx) / 2, y: (center(a).cy + center(b).cy) / 2 };
    svg.appendChild(labelText(mid.x, mid.y - 8, edge.label, "join-label"));
  }
  for (const node of graph.nodes) {
    if (node.kind !== "attribute" || !node.owner) continue;
    const a = layout.positions.get(node.owner)!;
    const b = layout.positions.get(node.id)!;
    svg.appendChild(line(a, b, "6,4", "owner-edge"));
  }
  for (const box of graph.boxes) {
    const a = layout.positions.get(box.anchor)!;
    const b = layout.positions.get(box.id)!;
    svg.appendChild(line(a, b, "2,4", "anchor-edge"));
  }

  for (const node of graph.nodes) {
    const p = layout.positions.get(node.id)!;
    const { cx, cy } = center(p);
    let shape: Element;
    if (node.kind === "relation") {
      shape = el("rect", {
        x: String(p.x), y: String(p.y), width: String(p.w), height: String(p.h),
        rx: "4", fill: node.color || "orange", stroke: "#333",
      });
    } else {
      shape = el("ellipse", {
        cx: String(cx), cy: String(cy), rx: String(p.w / 2), ry: String(p.h / 2),
        fill: node.color || "palegreen", stroke: "#333",
      });
    }
    shape.setAttribute("data-kind", node.kind);
    shape.setAttribute("data-id", node.id);
    svg.appendChild(shape);
    svg.appendChild(labelText(cx, cy, node.label, `${node.kind}-label`));
  }

  for (const box of graph.boxes) {
    const p = layout.positions.get(box.id)!;
    const { cx, cy } = center(p);
    const shape = el("rect", {
      x: String(p.x), y: String(p.y), width: String(p.w), height: String(p.h),
      fill: box.color || "lightblue", stroke: "#335",
    });
    shape.setAttribute("data-kind", "constraint-box");
    shape.setAttribute("data-id", box.id);
    svg.appendChild(shape);
    const label = box.label.length > 30 ? box.label.slice(0, 27) + "…" : box.label;
    const text = labelText(cx, cy, label, "box-label");
    text.appendChild(
      (() => {
        const title = document.createElementNS(SVG_NS, "title");
        title.textContent = box.label;
        return title;
      })(),
    );
    svg.appendChild(text);
  }

  return svg;
}
