import json
import threading
import time

import pytest
import requests

from mapsynth.service import make_server

from conftest import FIXTURES

DEMO_TASK = {
    "arity": 3,
    "rows": [["California || Nevada", "Lake Tahoe", ""]],
    "metadata": ["", "", "DataType=='decimal' AND MinValue>='0'"],
}


@pytest.fixture(scope="module")
def server_url():
    server = make_server(FIXTURES, port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield f"http://{host}:{port}"
    server.shutdown()
    server.service.shutdown()
    server.server_close()
    thread.join(timeout=5)


def start_session(url, task=DEMO_TASK, catalog="mondial-mini", options=None):
    body = {"catalog": catalog, "task": task}
    if options:
        body["options"] = options
    resp = requests.post(f"{url}/synthesize", json=body)
    assert resp.status_code == 202, resp.text
    return resp.json()["session"]


def wait_done(url, session_id, timeout=15.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        view = requests.get(f"{url}/sessions/{session_id}").json()
        if view["status"] != "running":
            return view
        time.sleep(0.05)
    raise AssertionError("session never finished")


def test_list_catalogs(server_url):
    payload = requests.get(f"{server_url}/catalogs").json()
    assert payload["version"] == 1
    names = {c["name"]: c for c in payload["catalogs"]}
    assert "mondial-mini" in names
    assert names["mondial-mini"]["relations"] == 3
    assert names["mondial-mini"]["columns"] == 8


def test_catalog_schema(server_url):
    payload = requests.get(f"{server_url}/catalogs/mondial-mini/schema").json()
    rel = {r["name"]: r for r in payload["relations"]}
    assert rel["lake"]["row_count"] == 3
    area = next(c for c in rel["lake"]["columns"] if c["name"] == "area")
    assert area["type"] == "decimal"
    assert {"left": "lake.name", "right": "geo_lake.lake"} in payload["join_edges"]


def test_unknown_catalog_is_404(server_url):
    assert requests.get(f"{server_url}/catalogs/nope/schema").status_code == 404


def test_synthesize_session_lifecycle(server_url):
    session_id = start_session(server_url, options={"budget": 10.0})
    view = wait_done(server_url, session_id)
    assert view["status"] == "done"
    report = view["report"]
    assert report["timed_out"] is False
    sqls = [q["sql"] for q in report["queries"]]
    assert ("SELECT geo_lake.province, lake.name, lake.area "
            "FROM geo_lake, lake WHERE geo_lake.lake = lake.name") in sqls


def test_finished_session_reads_are_idempotent(server_url):
    session_id = start_session(server_url)
    wait_done(server_url, session_id)
    a = requests.get(f"{server_url}/sessions/{session_id}").text
    b = requests.get(f"{server_url}/sessions/{session_id}").text
    assert a == b


def test_query_detail_and_graph(server_url):
    session_id = start_session(server_url)
    view = wait_done(server_url, session_id)
    target = ("SELECT geo_lake.province, lake.name, lake.area "
              "FROM geo_lake, lake WHERE geo_lake.lake = lake.name")
    k = [q["sql"] for q in view["report"]["queries"]].index(target)

    detail = requests.get(f"{server_url}/sessions/{session_id}/queries/{k}").json()
    assert detail["sql"] == target
    assert detail["projection"] == ["geo_lake.province", "lake.name", "lake.area"]

    resp = requests.get(
        f"{server_url}/sessions/{session_id}/queries/{k}/graph?constraints=0,1,2")
    graph = resp.json()
    assert graph["version"] == 1
    kinds = [n["kind"] for n in graph["nodes"]]
    assert kinds.count("relation") == 2 and kinds.count("attribute") == 3
    assert len(graph["boxes"]) == 3

    dot = requests.get(
        f"{server_url}/sessions/{session_id}/queries/{k}/graph?format=dot")
    assert dot.headers["Content-Type"].startswith("text/plain")
    assert "shape=rectangle" in dot.text

    # cached graph: identical bytes on re-read
    again = requests.get(
        f"{server_url}/sessions/{session_id}/queries/{k}/graph?constraints=0,1,2")
    assert again.text == resp.text


def test_parse_error_reports_cell(server_url):
    bad = {"arity": 2, "rows": [["ok", ">= abc"]], "metadata": ["", ""]}
    resp = requests.post(f"{server_url}/synthesize",
                         json={"catalog": "mondial-mini", "task": bad})
    assert resp.status_code == 400
    payload = resp.json()
    assert payload["cell"] == {"row": 0, "column": 1}


def test_unknown_session_and_bad_body(server_url):
    assert requests.get(f"{server_url}/sessions/zzz").status_code == 404
    resp = requests.post(f"{server_url}/synthesize", data="{not json",
                         headers={"Content-Type": "application/json"})
    assert resp.status_code == 400


def test_budget_honored_by_service(server_url):
    session_id = start_session(server_url, options={"budget": 0.4, "max_edges": 4})
    t0 = time.monotonic()
    view = wait_done(server_url, session_id, timeout=5.0)
    # the demo finishes well under 400 ms; either way the session resolves
    # within the budget plus one validation granularity
    assert time.monotonic() - t0 < 2.0
    assert view["status"] == "done"
