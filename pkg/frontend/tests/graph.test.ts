import { describe, expect, it } from "vitest";

import type { WireGraph } from "../src/api.js";
import { layoutGraph, renderGraph } from "../src/graph.js";

const sample: WireGraph = {
  nodes: [
    { id: "rel:lake", kind: "relation", label: "lake", shape: "rectangle", color: "orange" },
    { id: "rel:geo", kind: "relation", label: "geo", shape: "rectangle", color: "orange" },
    {
      id: "attr:lake.area", kind: "attribute", label: "area",
      shape: "ellipse", color: "palegreen", owner: "rel:lake", targets: [2],
    },
  ],
  edges: [{ source: "rel:lake", target: "rel:geo", label: "name = lake" }],
  boxes: [
    {
      id: "box:0", label: ">= 0", anchor: "attr:lake.area", kind: "metadata",
      row: null, column: 2, shape: "box", color: "lightblue",
    },
  ],
};

describe("layout", () => {
  it("is deterministic", () => {
    const a = layoutGraph(sample);
    const b = layoutGraph(sample);
    expect([...a.positions.entries()]).toEqual([...b.positions.entries()]);
  });

  it("places attributes below their owner and boxes below attributes", () => {
    const layout = layoutGraph(sample);
    const rel = layout.positions.get("rel:lake")!;
    const attr = layout.positions.get("attr:lake.area")!;
    const box = layout.positions.get("box:0")!;
    expect(attr.y).toBeGreaterThan(rel.y);
    expect(box.y).toBeGreaterThan(attr.y);
  });

  it("keeps every element inside the reported bounds", () => {
    const layout = layoutGraph(sample);
    for (const p of layout.positions.values()) {
      expect(p.x).toBeGreaterThanOrEqual(0);
      expect(p.y).toBeGreaterThanOrEqual(0);
      expect(p.x + p.w).toBeLessThanOrEqual(layout.width);
      expect(p.y + p.h).toBeLessThanOrEqual(layout.height);
    }
  });
});

describe("render", () => {
  it("draws the wire styling, not hardcoded colors", () => {
    const tinted: WireGraph = JSON.parse(JSON.stringify(sample));
    tinted.nodes[0].color = "tomato";
    const svg = renderGraph(tinted);
    const rect = svg.querySelector('[data-id="rel:lake"]')!;
    expect(rect.getAttribute("fill")).toBe("tomato");
  });

  it("renders labels for nodes, edges and boxes", () => {
    const svg = renderGraph(sample);
    const texts = [...svg.querySelectorAll("text")].map((t) => t.textContent);
    expect(texts).toContain("lake");
    expect(texts).toContain("area");
    expect(texts.some((t) => t?.includes("name = lake"))).toBe(true);
    expect(texts.some((t) => t?.includes(">= 0"))).toBe(true);
  });
});
