// End-to-end walkthrough against a live local service: configure, describe
// the demo constraints, search, pick the discovered join query, and inspect
// its constraint-annotated graph.
import { type ChildProcess, spawn } from "node:child_process";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";

import { mountApp, type App } from "../src/app.js";

const REPO_ROOT = join(__dirname, "..", "..");

let proc: ChildProcess;
let baseUrl: string;

beforeAll(async () => {
  proc = spawn(
    "python3",
    ["-m", "mapsynth.cli", "serve", "--catalog-dir", join(REPO_ROOT, "fixtures"), "--port", "0"],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  baseUrl = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("service did not start")), 20000);
    let buffer = "";
    proc.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const m = buffer.match(/http:\/\/([\d.]+):(\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve(`http://${m[1]}:${m[2]}`);
      }
    });
    proc.stderr!.on("data", (chunk: Buffer) => process.stderr.write(chunk));
    proc.on("exit", (code) => reject(new Error(`service exited early (${code})`)));
  });
});

afterAll(() => {
  proc?.kill("SIGTERM");
});

function setInput(root: HTMLElement, selector: string, value: string): void {
  const input = root.querySelector<HTMLInputElement>(selector);
  if (!input) throw new Error(`no input ${selector}`);
  input.value = value;
  input.dispatchEvent(new Event("input", { bubbles: true }));
  input.dispatchEvent(new Event("change", { bubbles: true }));
}

describe("demo walkthrough", () => {
  let root: HTMLElement;
  let app: App;

  it("step 1: configure catalog, three target columns, one sample row, metadata on", async () => {
    root = document.createElement("div");
    document.body.appendChild(root);
    app = await mountApp(root, baseUrl, { pollIntervalMs: 50 });

    const select = root.querySelector<HTMLSelectElement>("#catalog-select")!;
    expect([...select.options].map((o) => o.value)).toContain("mondial-mini");
    select.value = "mondial-mini";
    select.dispatchEvent(new Event("change", { bubbles: true }));

    setInput(root, "#arity-input", "3");
    setInput(root, "#rows-input", "1");
    const toggle = root.querySelector<HTMLInputElement>("#metadata-toggle")!;
    expect(toggle.checked).toBe(true);

    expect(root.querySelectorAll("#constraint-grid input[data-row]").length).toBe(3);
    expect(root.querySelectorAll("#metadata-row input").length).toBe(3);
  });

  it("step 2: type the multiresolution constraints into the grid", () => {
    setInput(root, 'input[data-row="0"][data-col="0"]', "California || Nevada");
    setInput(root, 'input[data-row="0"][data-col="1"]', "Lake Tahoe");
    setInput(root, 'input[data-meta-col="2"]', "DataType=='decimal' AND MinValue>='0'");
    expect(app.state.grid[0]).toEqual(["California || Nevada", "Lake Tahoe", ""]);
    expect(app.state.metadata[2]).toBe("DataType=='decimal' AND MinValue>='0'");
  });

  it("step 3: start searching and wait for the result list", async () => {
    root.querySelector<HTMLButtonElement>("#start-button")!.click();
    await vi.waitFor(
      () => {
        expect(root.querySelectorAll("#query-list li").length).toBeGreaterThan(0);
      },
      { timeout: 20000, interval: 100 },
    );
    const sqls = [...root.querySelectorAll("#query-list a")].map((a) => a.textContent);
    expect(sqls).toContain(
      "SELECT geo_lake.province, lake.name, lake.area FROM geo_lake, lake " +
        "WHERE geo_lake.lake = lake.name",
    );
  });

  it("step 4: pick the desired query and read its annotated graph", async () => {
    const target = [...root.querySelectorAll<HTMLAnchorElement>("#query-list a")].find(
      (a) => a.textContent ===
        "SELECT geo_lake.province, lake.name, lake.area FROM geo_lake, lake " +
        "WHERE geo_lake.lake = lake.name",
    )!;
    target.click();
    await vi.waitFor(
      () => {
        expect(root.querySelector("#graph-host svg")).toBeTruthy();
      },
      { timeout: 10000, interval: 50 },
    );

    expect(root.querySelector("#sql-view")!.textContent).toMatch(/SELECT geo_lake.province/);

    const svg = root.querySelector("#graph-host svg")!;
    expect(svg.querySelectorAll('[data-kind="relation"]').length).toBe(2);
    expect(svg.querySelectorAll('[data-kind="attribute"]').length).toBe(3);
    expect(svg.querySelectorAll('[data-kind="join-edge"]').length).toBe(1);
    expect(svg.querySelectorAll('[data-kind="constraint-box"]').length).toBe(3);
  });

  it("step 4c: deselecting all constraints clears the blue boxes", async () => {
    const checkboxes = [...root.querySelectorAll<HTMLInputElement>(
      "#constraint-list input[type=checkbox]")];
    expect(checkboxes.length).toBe(3);
    for (const box of checkboxes) {
      box.checked = false;
      box.dispatchEvent(new Event("change", { bubbles: true }));
    }
    await vi.waitFor(
      () => {
        const svg = root.querySelector("#graph-host svg")!;
        expect(svg.querySelectorAll('[data-kind="constraint-box"]').length).toBe(0);
      },
      { timeout: 10000, interval: 50 },
    );
    const svg = root.querySelector("#graph-host svg")!;
    expect(svg.querySelectorAll('[data-kind="relation"]').length).toBe(2);
  });

  it("rejects a malformed constraint with a per-cell error", async () => {
    setInput(root, 'input[data-row="0"][data-col="1"]', ">= abc");
    root.querySelector<HTMLButtonElement>("#start-button")!.click();
    await vi.waitFor(
      () => {
        expect(root.querySelector<HTMLParagraphElement>("#cell-error")!.hidden).toBe(false);
      },
      { timeout: 10000, interval: 50 },
    );
    const input = root.querySelector('input[data-row="0"][data-col="1"]')!;
    expect(input.classList.contains("cell-error")).toBe(true);
  });
});
