// Wire-format contract: the renderer must accept every structured-graph
// golden file the service test suite produces, and reject drifted documents.
import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { parseGraph } from "../src/api.js";
import { renderGraph } from "../src/graph.js";

const GOLDEN_DIR = join(__dirname, "..", "..", "tests", "golden");

const goldenFiles = readdirSync(GOLDEN_DIR).filter((f) => f.endsWith(".json"));

describe("structured graph contract", () => {
  it("has golden files to pin against", () => {
    expect(goldenFiles.length).toBeGreaterThan(0);
  });

  for (const file of goldenFiles) {
    it(`accepts and renders ${file}`, () => {
      const raw = JSON.parse(readFileSync(join(GOLDEN_DIR, file), "utf-8"));
      const graph = parseGraph(raw);
      expect(graph.nodes.length).toBeGreaterThan(0);
      const svg = renderGraph(graph);
      expect(svg.querySelectorAll('[data-kind="relation"]').length).toBe(
        graph.nodes.filter((n) => n.kind === "relation").length,
      );
      expect(svg.querySelectorAll('[data-kind="attribute"]').length).toBe(
        graph.nodes.filter((n) => n.kind === "attribute").length,
      );
      expect(svg.querySelectorAll('[data-kind="constraint-box"]').length).toBe(
        graph.boxes.length,
      );
      expect(svg.querySelectorAll('[data-kind="join-edge"]').length).toBe(
        graph.edges.length,
      );
    });
  }

  it("rejects other wire versions", () => {
    const raw = JSON.parse(readFileSync(join(GOLDEN_DIR, goldenFiles[0]), "utf-8"));
    raw.version = 2;
    expect(() => parseGraph(raw)).toThrow(/version/);
  });

  it("rejects boxes anchored to unknown nodes", () => {
    const raw = JSON.parse(readFileSync(join(GOLDEN_DIR, goldenFiles[0]), "utf-8"));
    if (raw.boxes.length > 0) {
      raw.boxes[0].anchor = "attr:nowhere.nothing";
      expect(() => parseGraph(raw)).toThrow(/unknown/);
    }
  });

  it("rejects non-graph documents", () => {
    expect(() => parseGraph({ version: 1, kind: "something_else" })).toThrow(/kind/);
    expect(() => parseGraph(null)).toThrow();
  });
});
