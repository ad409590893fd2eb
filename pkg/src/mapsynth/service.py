"""HTTP service backing the web client and remote batch use.

Endpoints (JSON bodies, versioned):

    GET  /catalogs
    GET  /catalogs/{name}/schema
    POST /synthesize            {"catalog": ..., "task": {...}, "options": {...}}
    GET  /sessions/{id}
    GET  /sessions/{id}/queries/{k}
    GET  /sessions/{id}/queries/{k}/graph?constraints=0,1&format=structured|dot

POST /synthesize answers 202 with a session id; synthesis runs on a worker
thread and the session is polled until its report appears. Reports are
serialized once, so repeated reads return identical bytes.
"""

from __future__ import annotations

import json
import re
import signal
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from .catalog import Catalog, CatalogError, load_catalog
from .cli import find_catalogs
from .constraints import MatchOptions
from .engine import SynthConfig, SynthesisTask, TaskError, synthesize
from . import explain, taskio

API_VERSION = 1


class Session:
    def __init__(self, session_id: str, catalog_name: str, task: SynthesisTask):
        self.id = session_id
        self.catalog_name = catalog_name
        self.task = task
        self.lock = threading.Lock()
        self.report = None          # SynthesisReport once finished
        self.report_json: Optional[dict] = None
        self.error: Optional[str] = None
        self.graph_cache: dict = {}

    @property
    def status(self) -> str:
        if self.error is not None:
            return "failed"
        return "done" if self.report is not None else "running"


class SynthesisService:
    def __init__(self, catalog_dir: Path, default_budget: float = 60.0,
                 synth_workers: int = 1, pool_size: int = 4):
        self.catalogs: dict[str, Catalog] = {}
        for name, config in find_catalogs(Path(catalog_dir)).items():
            self.catalogs[name] = load_catalog(config)
        if not self.catalogs:
            raise CatalogError(f"no catalogs found under {catalog_dir}")
        self.default_budget = default_budget
        self.synth_workers = synth_workers
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()
        self.pool = ThreadPoolExecutor(max_workers=pool_size)

    def shutdown(self) -> None:
        self.pool.shutdown(wait=False)

    # --- handlers -----------------------------------------------------------

    def list_catalogs(self) -> dict:
        items = []
        for name, cat in sorted(self.catalogs.items()):
            items.append({
                "name": name,
                "relations": len(cat.relations),
                "columns": sum(len(r.columns) for r in cat.relations.values()),
            })
        return {"version": API_VERSION, "catalogs": items}

    def catalog_schema(self, name: str) -> dict:
        cat = self.catalogs[name]
        return {
            "version": API_VERSION,
            "name": name,
            "relations": [
                {"name": rel.name,
                 "row_count": rel.row_count,
                 "columns": [{"name": col,
                              "type": cat.stats[(rel.name, col)].inferred_type}
                             for col in rel.columns]}
                for rel in cat.relations.values()
            ],
            "join_edges": [{"left": str(e.left), "right": str(e.right)}
                           for e in cat.join_edges],
        }

    def start_synthesis(self, payload: dict) -> str:
        doc = dict(payload.get("task") or {})
        if payload.get("catalog"):
            doc["catalog"] = payload["catalog"]
        catalog_name, task = taskio.parse_task_document(doc)
        if not catalog_name:
            raise TaskError("request needs a 'catalog' field")
        if catalog_name not in self.catalogs:
            raise CatalogError(f"unknown catalog {catalog_name!r}")
        options = payload.get("options") or {}
        config = SynthConfig(
            max_edges=int(options.get("max_edges", 4)),
            budget=float(options.get("budget", self.default_budget)),
            policy=str(options.get("policy", "bayes")),
            seed=int(options.get("seed", 0)),
            workers=int(options.get("workers", self.synth_workers)),
            match=MatchOptions(
                mode=str(options.get("match_mode", "cell")),
                case_sensitive=bool(options.get("case_sensitive", False))),
        )
        session = Session(uuid.uuid4().hex, catalog_name, task)
        with self.lock:
            self.sessions[session.id] = session
        self.pool.submit(self._run, session, config)
        return session.id

    def _run(self, session: Session, config: SynthConfig) -> None:
        try:
            report = synthesize(session.task, self.catalogs[session.catalog_name], config)
            with session.lock:
                session.report = report
                session.report_json = taskio.report_to_json(report)
        except Exception as exc:  # surface engine errors to the client
            with session.lock:
                session.error = f"{type(exc).__name__}: {exc}"

    def session_view(self, session: Session) -> dict:
        with session.lock:
            out = {"version": API_VERSION, "id": session.id,
                   "catalog": session.catalog_name, "status": session.status}
            if session.report_json is not None:
                out["report"] = session.report_json
            if session.error is not None:
                out["error"] = session.error
        return out

    def query_view(self, session: Session, k: int) -> dict:
        q = session.report.queries[k]
        return {"version": API_VERSION, "index": k, **taskio.query_to_json(q)}

    def graph_view(self, session: Session, k: int, constraints: Optional[tuple],
                   fmt: str) -> str:
        with session.lock:
            cached = session.graph_cache.get((k, constraints, fmt))
            if cached is not None:
                return cached
        q = session.report.queries[k]
        selected = list(constraints) if constraints is not None else None
        graph = explain.to_graph(q, session.task, selected)
        text = explain.render_text(graph, fmt)
        with session.lock:
            session.graph_cache[(k, constraints, fmt)] = text
        return text


class _Handler(BaseHTTPRequestHandler):
    service: SynthesisService  # set by serve()

    def log_message(self, *args):  # quiet by default
        pass

    def _send(self, code: int, body: str, content_type: str = "application/json") -> None:
        data = body.encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def _send_json(self, code: int, payload: dict) -> None:
        self._send(code, json.dumps(payload, sort_keys=True) + "\n")

    def _error(self, code: int, message: str, cell: Optional[dict] = None) -> None:
        payload = {"version": API_VERSION, "error": message}
        if cell is not None:
            payload["cell"] = cell
        self._send_json(code, payload)

    def _session_or_404(self, session_id: str) -> Optional[Session]:
        session = self.service.sessions.get(session_id)
        if session is None:
            self._error(404, f"unknown session {session_id!r}")
        return session

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self):
        url = urlparse(self.path)
        path = url.path.rstrip("/") or "/"
        try:
            if path == "/catalogs":
                return self._send_json(200, self.service.list_catalogs())

            m = re.fullmatch(r"/catalogs/([^/]+)/schema", path)
            if m:
                name = m.group(1)
                if name not in self.service.catalogs:
                    return self._error(404, f"unknown catalog {name!r}")
                return self._send_json(200, self.service.catalog_schema(name))

            m = re.fullmatch(r"/sessions/([^/]+)", path)
            if m:
                session = self._session_or_404(m.group(1))
                if session:
                    self._send_json(200, self.service.session_view(session))
                return

            m = re.fullmatch(r"/sessions/([^/]+)/queries/(\d+)(/graph)?", path)
            if m:
                session = self._session_or_404(m.group(1))
                if not session:
                    return
                if session.status != "done":
                    return self._error(409, f"session is {session.status}")
                k = int(m.group(2))
                if not 0 <= k < len(session.report.queries):
                    return self._error(404, f"query index {k} out of range")
                if not m.group(3):
                    return self._send_json(200, self.service.query_view(session, k))
                params = parse_qs(url.query, keep_blank_values=True)
                constraints = None
                if "constraints" in params:
                    raw = ",".join(params["constraints"])
                    constraints = tuple(int(x) for x in raw.split(",") if x.strip() != "")
                fmt = params.get("format", ["structured"])[0]
                if fmt not in ("structured", "dot"):
                    return self._error(400, f"unknown format {fmt!r}")
                try:
                    text = self.service.graph_view(session, k, constraints, fmt)
                except IndexError as exc:
                    return self._error(400, str(exc))
                ctype = "application/json" if fmt == "structured" else "text/plain"
                return self._send(200, text, ctype)

            self._error(404, f"no route for {path!r}")
        except Exception as exc:
            self._error(500, f"{type(exc).__name__}: {exc}")

    def do_POST(self):
        url = urlparse(self.path)
        if url.path.rstrip("/") != "/synthesize":
            return self._error(404, f"no route for {url.path!r}")
        try:
            length = int(self.headers.get("Content-Length") or 0)
            payload = json.loads(self.rfile.read(length) or b"{}")
        except (ValueError, json.JSONDecodeError) as exc:
            return self._error(400, f"malformed JSON body: {exc}")
        try:
            session_id = self.service.start_synthesis(payload)
        except TaskError as exc:
            return self._error(400, str(exc), cell=exc.cell)
        except (CatalogError, ValueError) as exc:
            return self._error(400, str(exc))
        self._send_json(202, {"version": API_VERSION, "session": session_id})


def make_server(catalog_dir, host: str = "127.0.0.1", port: int = 0,
                default_budget: float = 60.0) -> ThreadingHTTPServer:
    """Bind a server (port 0 picks an ephemeral port). Callers drive it with
    serve_forever/shutdown; tests run it on a thread."""
    service = SynthesisService(Path(catalog_dir), default_budget=default_budget)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((host, port), handler)
    server.service = service
    return server


def serve(catalog_dir, host: str = "127.0.0.1", port: int = 8765,
          config_file=None) -> None:
    budget = 60.0
    if config_file:
        cfg = json.loads(Path(config_file).read_text(encoding="utf-8"))
        host = cfg.get("host", host)
        port = int(cfg.get("port", port))
        budget = float(cfg.get("budget", budget))
    server = make_server(catalog_dir, host, port, default_budget=budget)

    def _stop(signum, frame):
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGINT, _stop)
    signal.signal(signal.SIGTERM, _stop)
    actual_host, actual_port = server.server_address[:2]
    print(f"mapsynth service on http://{actual_host}:{actual_port} "
          f"({len(server.service.catalogs)} catalogs)", flush=True)
    try:
        server.serve_forever()
    finally:
        server.service.shutdown()
        server.server_close()
