/**
 * Typed client for the mapsynth HTTP API (wire version 1).
 *
 * Every response passes through a runtime validator before the UI touches it:
 * the client renders only data the service actually sent, and version drift
 * fails loudly instead of drawing garbage.
 */

export const WIRE_VERSION = 1;

export interface CatalogSummary {
  name: string;
  relations: number;
  columns: number;
}

export interface ColumnInfo {
  name: string;
  type: string;
}

export interface RelationInfo {
  name: string;
  row_count: number;
  columns: ColumnInfo[];
}

export interface CatalogSchema {
  name: string;
  relations: RelationInfo[];
  join_edges: { left: string; right: string }[];
}

export interface TaskDocument {
  arity: number;
  rows: string[][];
  metadata: string[];
}

export interface SynthesisOptions {
  policy?: string;
  budget?: number;
  max_edges?: number;
  seed?: number;
  match_mode?: string;
}

export interface QuerySummary {
  sql: string;
  projection: string[];
  joins: { left: string; right: string }[];
}

export interface Report {
  queries: QuerySummary[];
  filters_validated: number;
  filters_pruned: number;
  elapsed_ms: number;
  timed_out: boolean;
  policy: string;
}

export type SessionStatus = "running" | "done" | "failed";

export interface SessionView {
  id: string;
  status: SessionStatus;
  report?: Report;
  error?: string;
}

export interface CellError {
  message: string;
  row?: number;
  column?: number;
  metadataColumn?: number;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number, readonly cell?: CellError) {
    super(message);
  }
}

export interface WireNode {
  id: string;
  kind: "relation" | "attribute";
  label: string;
  shape: string;
  color: string;
  owner?: string;
  targets?: number[];
}

export interface WireEdge {
  source: string;
  target: string;
  label: string;
}

export interface WireBox {
  id: string;
  label: string;
  anchor: string;
  kind: "value" | "metadata";
  row: number | null;
  column: number;
  shape: string;
  color: string;
}

export interface WireGraph {
  nodes: WireNode[];
  edges: WireEdge[];
  boxes: WireBox[];
}

function fail(context: string): never {
  throw new Error(`malformed graph document: ${context}`);
}

/** Validate a structured explanation-graph payload (throws on any drift). */
export function parseGraph(raw: unknown): WireGraph {
  if (!raw || typeof raw !== "object") fail("not an object");
  const doc = raw as Record<string, unknown>;
  if (doc.version !== WIRE_VERSION) fail(`unsupported version ${String(doc.version)}`);
  if (doc.kind !== "explanation_graph") fail(`unexpected kind ${String(doc.kind)}`);
  if (!Array.isArray(doc.nodes) || !Array.isArray(doc.edges) || !Array.isArray(doc.boxes)) {
    fail("nodes/edges/boxes must be arrays");
  }

  const nodes: WireNode[] = (doc.nodes as Record<string, unknown>[]).map((n) => {
    if (n.kind !== "relation" && n.kind !== "attribute") fail(`node kind ${String(n.kind)}`);
    if (typeof n.id !== "string" || typeof n.label !== "string") fail("node id/label");
    if (n.kind === "attribute" && typeof n.owner !== "string") fail("attribute owner");
    return {
      id: n.id,
      kind: n.kind,
      label: n.label,
      shape: String(n.shape ?? ""),
      color: String(n.color ?? ""),
      owner: typeof n.owner === "string" ? n.owner : undefined,
      targets: Array.isArray(n.targets) ? n.targets.map(Number) : undefined,
    };
  });
  const ids = new Set(nodes.map((n) => n.id));
  for (const node of nodes) {
    if (node.kind === "attribute" && node.owner && !ids.has(node.owner)) {
      fail(`attribute ${node.id} owned by unknown node ${node.owner}`);
    }
  }

  const edges: WireEdge[] = (doc.edges as Record<string, unknown>[]).map((e) => {
    if (typeof e.source !== "string" || typeof e.target !== "string") fail("edge endpoints");
    if (!ids.has(e.source) || !ids.has(e.target)) fail("edge references unknown node");
    return { source: e.source, target: e.target, label: String(e.label ?? "") };
  });

  const boxes: WireBox[] = (doc.boxes as Record<string, unknown>[]).map((b) => {
    if (typeof b.id !== "string" || typeof b.anchor !== "string") fail("box id/anchor");
    if (!ids.has(b.anchor)) fail(`box ${b.id} anchored to unknown node`);
    if (b.kind !== "value" && b.kind !== "metadata") fail(`box kind ${String(b.kind)}`);
    return {
      id: b.id,
      label: String(b.label ?? ""),
      anchor: b.anchor,
      kind: b.kind,
      row: b.row === null || b.row === undefined ? null : Number(b.row),
      column: Number(b.column),
      shape: String(b.shape ?? ""),
      color: String(b.color ?? ""),
    };
  });

  return { nodes, edges, boxes };
}

async function readError(resp: Response): Promise<ApiError> {
  let message = `${resp.status} ${resp.statusText}`;
  let cell: CellError | undefined;
  try {
    const body = (await resp.json()) as Record<string, unknown>;
    if (typeof body.error === "string") message = body.error;
    if (body.cell && typeof body.cell === "object") {
      const c = body.cell as Record<string, unknown>;
      cell = {
        message,
        row: typeof c.row === "number" ? c.row : undefined,
        column: typeof c.column === "number" ? c.column : undefined,
        metadataColumn: typeof c.metadata_column === "number" ? c.metadata_column : undefined,
      };
    }
  } catch {
    /* non-JSON error body: keep the status line */
  }
  return new ApiError(message, resp.status, cell);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path);
    if (!resp.ok) throw await readError(resp);
    return (await resp.json()) as T;
  }

  async listCatalogs(): Promise<CatalogSummary[]> {
    const body = await this.getJson<{ catalogs: CatalogSummary[] }>("/catalogs");
    return body.catalogs;
  }

  async getSchema(name: string): Promise<CatalogSchema> {
    return this.getJson<CatalogSchema>(`/catalogs/${encodeURIComponent(name)}/schema`);
  }

  async startSynthesis(
    catalog: string,
    task: TaskDocument,
    options?: SynthesisOptions,
  ): Promise<string> {
    const resp = await fetch(this.baseUrl + "/synthesize", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ catalog, task, options }),
    });
    if (resp.status !== 202) throw await readError(resp);
    const body = (await resp.json()) as { session: string };
    return body.session;
  }

  async getSession(id: string): Promise<SessionView> {
    return this.getJson<SessionView>(`/sessions/${encodeURIComponent(id)}`);
  }

  async getGraph(id: string, query: number, constraints: number[] | null): Promise<WireGraph> {
    const param =
      constraints === null ? "" : `?constraints=${constraints.map(String).join(",")}`;
    const raw = await this.getJson<unknown>(
      `/sessions/${encodeURIComponent(id)}/queries/${query}/graph${param}`,
    );
    return parseGraph(raw);
  }
}
