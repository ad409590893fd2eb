// Unit tests for the UI state machine with a stubbed fetch.
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { App, constraintEntries } from "../src/app.js";
import { ApiClient, type TaskDocument } from "../src/api.js";

const CATALOGS = { version: 1, catalogs: [{ name: "mondial-mini", relations: 3, columns: 8 }] };

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("constraintEntries", () => {
  it("enumerates sample rows row-major, then metadata", () => {
    const task: TaskDocument = {
      arity: 3,
      rows: [["California || Nevada", "Lake Tahoe", ""]],
      metadata: ["", "", "DataType=='decimal' AND MinValue>='0'"],
    };
    const entries = constraintEntries(task);
    expect(entries.map((e) => e.kind)).toEqual(["value", "value", "metadata"]);
    expect(entries[0]).toMatchObject({ row: 0, column: 0 });
    expect(entries[2]).toMatchObject({ row: null, column: 2 });
  });

  it("skips blank cells entirely", () => {
    expect(constraintEntries({ arity: 2, rows: [["", "  "]], metadata: ["", ""] })).toEqual([]);
  });
});

describe("App", () => {
  let root: HTMLElement;
  let fetchMock: ReturnType<typeof vi.fn>;

  beforeEach(() => {
    root = document.createElement("div");
    document.body.appendChild(root);
    fetchMock = vi.fn();
    vi.stubGlobal("fetch", fetchMock);
  });

  afterEach(() => {
    vi.unstubAllGlobals();
    root.remove();
  });

  async function mount(): Promise<App> {
    fetchMock.mockResolvedValueOnce(jsonResponse(200, CATALOGS));
    const app = new App(root, new ApiClient("http://service"), { pollIntervalMs: 5 });
    await app.init();
    return app;
  }

  it("builds the three sections and a grid matching the configuration", async () => {
    const app = await mount();
    expect(root.querySelector("#configuration")).toBeTruthy();
    expect(root.querySelector("#description")).toBeTruthy();
    expect(root.querySelector("#result")).toBeTruthy();
    expect(root.querySelectorAll("#constraint-grid input[data-row]").length).toBe(3);
    expect(root.querySelectorAll("#metadata-row input").length).toBe(3);

    app.state.arity = 2;
    app.state.sampleRows = 2;
    app.resizeGrid();
    app.renderDescriptionGrid();
    expect(root.querySelectorAll("#constraint-grid input[data-row]").length).toBe(4);
    expect(root.querySelectorAll("#metadata-row input").length).toBe(2);
  });

  it("blocks submission when arity is invalid", async () => {
    const app = await mount();
    app.state.arity = 0;
    await app.startSearch();
    const error = root.querySelector<HTMLParagraphElement>("#config-error")!;
    expect(error.hidden).toBe(false);
    expect(error.textContent).toMatch(/at least one column/);
    expect(fetchMock).toHaveBeenCalledTimes(1); // only the catalog listing
  });

  it("marks the offending cell on a 400 parse error", async () => {
    const app = await mount();
    app.state.grid[0][1] = ">= abc";
    fetchMock.mockResolvedValueOnce(
      jsonResponse(400, {
        version: 1,
        error: "row 1, column 2: ordering operator '>=' needs a numeric constant",
        cell: { row: 0, column: 1 },
      }),
    );
    await app.startSearch();
    const input = root.querySelector('input[data-row="0"][data-col="1"]')!;
    expect(input.classList.contains("cell-error")).toBe(true);
    expect(root.querySelector<HTMLParagraphElement>("#cell-error")!.hidden).toBe(false);
  });

  it("polls a session to completion and lists queries", async () => {
    const app = await mount();
    app.state.grid[0][0] = "Lake Tahoe";
    fetchMock.mockResolvedValueOnce(jsonResponse(202, { version: 1, session: "s1" }));
    fetchMock.mockResolvedValueOnce(jsonResponse(200, { id: "s1", status: "running" }));
    fetchMock.mockResolvedValueOnce(
      jsonResponse(200, {
        id: "s1",
        status: "done",
        report: {
          queries: [{ sql: "SELECT lake.name FROM lake", projection: ["lake.name"], joins: [] }],
          filters_validated: 4, filters_pruned: 1, elapsed_ms: 12.5,
          timed_out: false, policy: "bayes",
        },
      }),
    );
    await app.startSearch();
    await vi.waitFor(() => {
      expect(root.querySelectorAll("#query-list li").length).toBe(1);
    });
    expect(root.querySelector("#result-summary")!.textContent).toMatch(/1 satisfying/);
  });

  it("shows a failure banner when the search times out", async () => {
    const app = await mount();
    app.state.grid[0][0] = "Lake Tahoe";
    fetchMock.mockResolvedValueOnce(jsonResponse(202, { version: 1, session: "s2" }));
    fetchMock.mockResolvedValueOnce(
      jsonResponse(200, {
        id: "s2",
        status: "done",
        report: {
          queries: [], filters_validated: 9, filters_pruned: 0,
          elapsed_ms: 500, timed_out: true, policy: "bayes",
        },
      }),
    );
    await app.startSearch();
    await vi.waitFor(() => {
      expect(root.querySelector("#failure-banner")).toBeTruthy();
    });
    expect(root.querySelector("#failure-banner")!.textContent).toMatch(/timed out/);
  });

  it("returns to configuration when the session disappears", async () => {
    const app = await mount();
    app.state.grid[0][0] = "Lake Tahoe";
    fetchMock.mockResolvedValueOnce(jsonResponse(202, { version: 1, session: "gone" }));
    fetchMock.mockResolvedValueOnce(jsonResponse(404, { version: 1, error: "unknown session" }));
    await app.startSearch();
    await vi.waitFor(() => {
      expect(app.state.sessionId).toBeNull();
    });
    expect(root.querySelector("#configuration")).toBeTruthy();
  });
});
