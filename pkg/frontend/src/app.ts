/**
 * Three-section single-page client: Configuration (catalog, target schema
 * size, sample row count, metadata on/off), Description (the constraint
 * grid), and Result (query list plus the constraint-annotated graph).
 *
 * The app renders only what the service returns; the one client-side
 * derivation is the constraint checkbox list, which enumerates the submitted
 * task's non-empty constraints in the service's documented order (sample
 * rows row-major, then metadata columns).
 */

import { ApiClient, ApiError, CatalogSummary, Report, TaskDocument } from "./api.js";
import { renderGraph } from "./graph.js";

export interface ConstraintEntry {
  kind: "value" | "metadata";
  row: number | null;
  column: number;
  text: string;
}

/** Indices here are what the service expects in ?constraints=. */
export function constraintEntries(task: TaskDocument): ConstraintEntry[] {
  const entries: ConstraintEntry[] = [];
  task.rows.forEach((row, i) => {
    row.forEach((text, j) => {
      if (text.trim() !== "") entries.push({ kind: "value", row: i, column: j, text });
    });
  });
  task.metadata.forEach((text, j) => {
    if (text.trim() !== "") entries.push({ kind: "metadata", row: null, column: j, text });
  });
  return entries;
}

export interface AppOptions {
  pollIntervalMs?: number;
}

interface UiState {
  catalogs: CatalogSummary[];
  catalog: string | null;
  arity: number;
  sampleRows: number;
  metadataEnabled: boolean;
  grid: string[][];
  metadata: string[];
  sessionId: string | null;
  task: TaskDocument | null;
  report: Report | null;
  failure: string | null;
  selectedQuery: number | null;
  selectedConstraints: Set<number>;
}

export class App {
  readonly state: UiState = {
    catalogs: [],
    catalog: null,
    arity: 3,
    sampleRows: 1,
    metadataEnabled: true,
    grid: [],
    metadata: [],
    sessionId: null,
    task: null,
    report: null,
    failure: null,
    selectedQuery: null,
    selectedConstraints: new Set(),
  };

  private pollTimer: ReturnType<typeof setTimeout> | null = null;
  private readonly pollIntervalMs: number;

  constructor(
    readonly root: HTMLElement,
    readonly api: ApiClient,
    options: AppOptions = {},
  ) {
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;
  }

  async init(): Promise<void> {
    this.state.catalogs = await this.api.listCatalogs();
    if (this.state.catalogs.length > 0) this.state.catalog = this.state.catalogs[0].name;
    this.resizeGrid();
    this.render();
  }

  // --- state transitions ----------------------------------------------------

  resizeGrid(): void {
    const { arity, sampleRows } = this.state;
    const rows: string[][] = [];
    for (let i = 0; i < sampleRows; i++) {
      const prev = this.state.grid[i] ?? [];
      const row: string[] = [];
      for (let j = 0; j < arity; j++) row.push(prev[j] ?? "");
      rows.push(row);
    }
    this.state.grid = rows;
    const meta: string[] = [];
    for (let j = 0; j < arity; j++) meta.push(this.state.metadata[j] ?? "");
    this.state.metadata = meta;
  }

  buildTask(): TaskDocument {
    return {
      arity: this.state.arity,
      rows: this.state.grid.map((r) => [...r]),
      metadata: this.state.metadataEnabled ? [...this.state.metadata] : this.state.metadata.map(() => ""),
    };
  }

  async startSearch(): Promise<void> {
    this.clearCellErrors();
    if (this.state.arity < 1) {
      this.setConfigError("the target schema needs at least one column");
      return;
    }
    if (!this.state.catalog) {
      this.setConfigError("pick a source catalog first");
      return;
    }
    this.setConfigError(null);
    const task = this.buildTask();
    this.state.failure = null;
    this.state.report = null;
    this.state.selectedQuery = null;
    try {
      const session = await this.api.startSynthesis(this.state.catalog, task);
      this.state.task = task;
      this.state.sessionId = session;
      const entries = constraintEntries(task);
      this.state.selectedConstraints = new Set(entries.map((_, k) => k));
      this.renderResultSection();
      this.schedulePoll();
    } catch (err) {
      if (err instanceof ApiError && err.cell) {
        this.markCellError(err.cell.row, err.cell.column, err.cell.metadataColumn, err.message);
      } else {
        this.state.failure = err instanceof Error ? err.message : String(err);
        this.renderResultSection();
      }
    }
  }

  private schedulePoll(): void {
    if (this.pollTimer !== null) clearTimeout(this.pollTimer);
    this.pollTimer = setTimeout(() => void this.poll(), this.pollIntervalMs);
  }

  async poll(): Promise<void> {
    const id = this.state.sessionId;
    if (!id) return;
    let view;
    try {
      view = await this.api.getSession(id);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        // session evaporated (service restart): back to configuration
        this.state.sessionId = null;
        this.state.report = null;
        this.state.failure = null;
        this.render();
        return;
      }
      this.state.failure = err instanceof Error ? err.message : String(err);
      this.renderResultSection();
      return;
    }
    if (view.status === "running") {
      this.schedulePoll();
      return;
    }
    if (view.status === "failed") {
      this.state.failure = view.error ?? "synthesis failed";
      this.renderResultSection();
      return;
    }
    this.state.report = view.report ?? null;
    if (view.report?.timed_out) {
      this.state.failure = "search timed out before finishing; results below are partial";
    }
    this.renderResultSection();
  }

  async selectQuery(k: number): Promise<void> {
    this.state.selectedQuery = k;
    await this.refreshGraph();
    this.renderResultSection();
  }

  async toggleConstraint(index: number, on: boolean): Promise<void> {
    if (on) this.state.selectedConstraints.add(index);
    else this.state.selectedConstraints.delete(index);
    await this.refreshGraph();
  }

  private async refreshGraph(): Promise<void> {
    const { sessionId, selectedQuery } = this.state;
    const host = this.root.querySelector("#graph-host");
    if (!host || sessionId === null || selectedQuery === null) return;
    const constraints = [...this.state.selectedConstraints].sort((a, b) => a - b);
    try {
      const graph = await this.api.getGraph(sessionId, selectedQuery, constraints);
      host.replaceChildren(renderGraph(graph));
    } catch (err) {
      host.replaceChildren();
      const p = document.createElement("p");
      p.className = "error";
      p.textContent = err instanceof Error ? err.message : String(err);
      host.appendChild(p);
    }
  }

  // --- rendering -------------------------------------------------------------

  render(): void {
    this.root.replaceChildren();
    this.root.appendChild(this.configSection());
    this.root.appendChild(this.descriptionSection());
    const result = document.createElement("section");
    result.id = "result";
    result.appendChild(this.heading("Result"));
    const body = document.createElement("div");
    body.id = "result-body";
    result.appendChild(body);
    this.root.appendChild(result);
    this.renderDescriptionGrid();
    this.renderResultSection();
  }

  private heading(text: string): HTMLElement {
    const h = document.createElement("h2");
    h.textContent = text;
    return h;
  }

  private configSection(): HTMLElement {
    const section = document.createElement("section");
    section.id = "configuration";
    section.appendChild(this.heading("Configuration"));

    const catalogSelect = document.createElement("select");
    catalogSelect.id = "catalog-select";
    for (const cat of this.state.catalogs) {
      const option = document.createElement("option");
      option.value = cat.name;
      option.textContent = `${cat.name} (${cat.relations} relations)`;
      if (cat.name === this.state.catalog) option.selected = true;
      catalogSelect.appendChild(option);
    }
    catalogSelect.addEventListener("change", () => {
      this.state.catalog = catalogSelect.value;
    });
    section.appendChild(this.labeled("Source database", catalogSelect));

    const arity = document.createElement("input");
    arity.id = "arity-input";
    arity.type = "number";
    arity.min = "1";
    arity.value = String(this.state.arity);
    arity.addEventListener("change", () => {
      this.state.arity = Number(arity.value);
      if (this.state.arity >= 1) this.setConfigError(null);
      this.resizeGrid();
      this.renderDescriptionGrid();
    });
    section.appendChild(this.labeled("Columns in target schema", arity));

    const rows = document.createElement("input");
    rows.id = "rows-input";
    rows.type = "number";
    rows.min = "1";
    rows.value = String(this.state.sampleRows);
    rows.addEventListener("change", () => {
      this.state.sampleRows = Math.max(1, Number(rows.value));
      this.resizeGrid();
      this.renderDescriptionGrid();
    });
    section.appendChild(this.labeled("Sample constraint rows", rows));

    const metadata = document.createElement("input");
    metadata.id = "metadata-toggle";
    metadata.type = "checkbox";
    metadata.checked = this.state.metadataEnabled;
    metadata.addEventListener("change", () => {
      this.state.metadataEnabled = metadata.checked;
      this.renderDescriptionGrid();
    });
    section.appendChild(this.labeled("Specify metadata constraints", metadata));

    const error = document.createElement("p");
    error.id = "config-error";
    error.className = "error";
    error.hidden = true;
    section.appendChild(error);
    return section;
  }

  private labeled(text: string, control: HTMLElement): HTMLElement {
    const label = document.createElement("label");
    const span = document.createElement("span");
    span.textContent = text + " ";
    label.appendChild(span);
    label.appendChild(control);
    return label;
  }

  private setConfigError(message: string | null): void {
    const el = this.root.querySelector<HTMLParagraphElement>("#config-error");
    if (!el) return;
    el.hidden = message === null;
    el.textContent = message ?? "";
  }

  private descriptionSection(): HTMLElement {
    const section = document.createElement("section");
    section.id = "description";
    section.appendChild(this.heading("Description"));
    const gridHost = document.createElement("div");
    gridHost.id = "grid-host";
    section.appendChild(gridHost);

    const start = document.createElement("button");
    start.id = "start-button";
    start.textContent = "Start Searching!";
    start.addEventListener("click", () => void this.startSearch());
    section.appendChild(start);

    const cellError = document.createElement("p");
    cellError.id = "cell-error";
    cellError.className = "error";
    cellError.hidden = true;
    section.appendChild(cellError);
    return section;
  }

  renderDescriptionGrid(): void {
    const host = this.root.querySelector("#grid-host");
    if (!host) return;
    host.replaceChildren();

    const table = document.createElement("table");
    table.id = "constraint-grid";
    const head = document.createElement("tr");
    head.appendChild(document.createElement("th"));
    for (let j = 0; j < this.state.arity; j++) {
      const th = document.createElement("th");
      th.textContent = `column ${j + 1}`;
      head.appendChild(th);
    }
    table.appendChild(head);

    this.state.grid.forEach((row, i) => {
      const tr = document.createElement("tr");
      const th = document.createElement("th");
      th.textContent = `sample ${i + 1}`;
      tr.appendChild(th);
      row.forEach((value, j) => {
        const td = document.createElement("td");
        const input = document.createElement("input");
        input.type = "text";
        input.value = value;
        input.dataset.row = String(i);
        input.dataset.col = String(j);
        input.placeholder = "value constraint";
        input.addEventListener("input", () => {
          this.state.grid[i][j] = input.value;
        });
        td.appendChild(input);
        tr.appendChild(td);
      });
      table.appendChild(tr);
    });

    if (this.state.metadataEnabled) {
      const tr = document.createElement("tr");
      tr.id = "metadata-row";
      const th = document.createElement("th");
      th.textContent = "metadata";
      tr.appendChild(th);
      this.state.metadata.forEach((value, j) => {
        const td = document.createElement("td");
        const input = document.createElement("input");
        input.type = "text";
        input.value = value;
        input.dataset.metaCol = String(j);
        input.placeholder = "metadata constraint";
        input.addEventListener("input", () => {
          this.state.metadata[j] = input.value;
        });
        td.appendChild(input);
        tr.appendChild(td);
      });
      table.appendChild(tr);
    }
    host.appendChild(table);
  }

  private clearCellErrors(): void {
    for (const input of this.root.querySelectorAll("input.cell-error")) {
      input.classList.remove("cell-error");
    }
    const el = this.root.querySelector<HTMLParagraphElement>("#cell-error");
    if (el) {
      el.hidden = true;
      el.textContent = "";
    }
  }

  private markCellError(
    row: number | undefined,
    column: number | undefined,
    metadataColumn: number | undefined,
    message: string,
  ): void {
    let selector: string | null = null;
    if (metadataColumn !== undefined) selector = `input[data-meta-col="${metadataColumn}"]`;
    else if (row !== undefined && column !== undefined) {
      selector = `input[data-row="${row}"][data-col="${column}"]`;
    }
    if (selector) {
      const input = this.root.querySelector<HTMLInputElement>(selector);
      if (input) input.classList.add("cell-error");
    }
    const el = this.root.querySelector<HTMLParagraphElement>("#cell-error");
    if (el) {
      el.hidden = false;
      el.textContent = message;
    }
  }

  renderResultSection(): void {
    const body = this.root.querySelector("#result-body");
    if (!body) return;
    body.replaceChildren();

    if (this.state.failure) {
      const banner = document.createElement("p");
      banner.id = "failure-banner";
      banner.className = "error";
      banner.textContent = this.state.failure;
      body.appendChild(banner);
    }

    if (this.state.sessionId && !this.state.report && !this.state.failure) {
      const status = document.createElement("p");
      status.id = "result-status";
      status.textContent = "searching…";
      body.appendChild(status);
      return;
    }
    if (!this.state.report) return;

    const report = this.state.report;
    const summary = document.createElement("p");
    summary.id = "result-summary";
    summary.textContent =
      `${report.queries.length} satisfying queries — ` +
      `${report.filters_validated} filters validated, ${report.filters_pruned} pruned, ` +
      `${Math.round(report.elapsed_ms)} ms (${report.policy})`;
    body.appendChild(summary);

    const list = document.createElement("ol");
    list.id = "query-list";
    report.queries.forEach((q, k) => {
      const item = document.createElement("li");
      const link = document.createElement("a");
      link.href = "#";
      link.textContent = q.sql;
      link.dataset.query = String(k);
      if (k === this.state.selectedQuery) item.classList.add("selected");
      link.addEventListener("click", (ev) => {
        ev.preventDefault();
        void this.selectQuery(k);
      });
      item.appendChild(link);
      list.appendChild(item);
    });
    body.appendChild(list);

    if (this.state.selectedQuery !== null) {
      const q = report.queries[this.state.selectedQuery];
      const sql = document.createElement("pre");
      sql.id = "sql-view";
      sql.textContent = q.sql;
      body.appendChild(sql);

      if (this.state.task) {
        const entries = constraintEntries(this.state.task);
        const constraintList = document.createElement("ul");
        constraintList.id = "constraint-list";
        entries.forEach((entry, index) => {
          const item = document.createElement("li");
          const checkbox = document.createElement("input");
          checkbox.type = "checkbox";
          checkbox.checked = this.state.selectedConstraints.has(index);
          checkbox.dataset.constraint = String(index);
          checkbox.addEventListener("change", () => {
            void this.toggleConstraint(index, checkbox.checked);
          });
          const label = document.createElement("label");
          const where = entry.kind === "value"
            ? `row ${entry.row! + 1}, column ${entry.column + 1}`
            : `metadata, column ${entry.column + 1}`;
          label.textContent = ` ${entry.text} (${where})`;
          item.appendChild(checkbox);
          item.appendChild(label);
          constraintList.appendChild(item);
        });
        body.appendChild(constraintList);
      }

      const host = document.createElement("div");
      host.id = "graph-host";
      body.appendChild(host);
      void this.refreshGraph();
    }
  }
}

export async function mountApp(
  root: HTMLElement,
  baseUrl: string,
  options: AppOptions = {},
): Promise<App> {
  const app = new App(root, new ApiClient(baseUrl), options);
  await app.init();
  return app;
}
