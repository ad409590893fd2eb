"""Command line interface.

Exit codes: 0 success (including an empty result), 2 bad input (task file,
constraints, catalog), 3 synthesis timed out, 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .catalog import Catalog, CatalogError, load_catalog
from .constraints import MatchOptions
from .engine import SynthConfig, TaskError, synthesize
from . import explain, taskio

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_TIMEOUT = 3

CATALOG_DIR_ENV = "MAPSYNTH_CATALOG_DIR"


def _catalog_dir(args) -> Path:
    if args.catalog_dir:
        return Path(args.catalog_dir)
    env = os.environ.get(CATALOG_DIR_ENV)
    if env:
        return Path(env)
    return Path("fixtures")


def find_catalogs(root: Path) -> dict[str, Path]:
    """Catalog configs under the directory: any <dir>/catalog.json."""
    found = {}
    if not root.is_dir():
        return found
    for config in sorted(root.glob("*/catalog.json")):
        try:
            name = json.loads(config.read_text(encoding="utf-8")).get("name") \
                or config.parent.name
        except (OSError, json.JSONDecodeError):
            continue
        found[name] = config
    return found


def open_catalog(args) -> Catalog:
    root = _catalog_dir(args)
    catalogs = find_catalogs(root)
    if args.catalog not in catalogs:
        known = ", ".join(sorted(catalogs)) or "none"
        raise CatalogError(f"unknown catalog {args.catalog!r} under {root} "
                           f"(available: {known})")
    return load_catalog(catalogs[args.catalog])


def _synth_config(args) -> SynthConfig:
    return SynthConfig(
        max_edges=args.max_edges,
        budget=args.budget,
        policy=args.policy,
        seed=args.seed,
        workers=args.workers,
        match=MatchOptions(mode=args.match_mode, case_sensitive=args.case_sensitive),
        trace=bool(getattr(args, "trace", None)),
    )


def _add_synth_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policy", choices=("bayes", "baseline", "random"), default="bayes")
    p.add_argument("--budget", type=float, default=60.0,
                   help="time budget in seconds (default 60)")
    p.add_argument("--max-edges", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--match-mode", choices=("cell", "token"), default="cell")
    p.add_argument("--case-sensitive", action="store_true")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--catalog-dir", default=None,
                   help=f"directory of catalogs (default ${CATALOG_DIR_ENV} or ./fixtures)")


def cmd_load(args) -> int:
    catalog = open_catalog(args)
    total_rows = sum(r.row_count for r in catalog.relations.values())
    print(f"catalog {catalog.name}: {len(catalog.relations)} relations, "
          f"{len(catalog.join_edges)} join edges, {total_rows} rows")
    for rel in catalog.relations.values():
        cols = ", ".join(rel.columns)
        print(f"  {rel.name}({cols}) — {rel.row_count} rows")
    return EXIT_OK


def _load_task(args, catalog_hint_required=True):
    catalog_name, task = taskio.load_task_file(args.task)
    if args.catalog:
        catalog_name = args.catalog
    if not catalog_name:
        raise TaskError("no catalog given: put 'catalog' in the task file "
                        "or pass --catalog")
    args.catalog = catalog_name
    return task


def cmd_synthesize(args) -> int:
    task = _load_task(args)
    catalog = open_catalog(args)
    report = synthesize(task, catalog, _synth_config(args))
    sys.stdout.write(taskio.report_text(report))
    if args.persist:
        Path(args.persist).write_text(
            json.dumps(taskio.report_to_json(report), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
    if args.trace:
        taskio.write_trace(args.trace, report)
    return EXIT_TIMEOUT if report.timed_out else EXIT_OK


def cmd_explain(args) -> int:
    task = _load_task(args)
    catalog = open_catalog(args)
    report = synthesize(task, catalog, _synth_config(args))
    if report.timed_out:
        print("synthesis timed out before completing", file=sys.stderr)
        return EXIT_TIMEOUT
    if not 0 <= args.query < len(report.queries):
        print(f"query index {args.query} out of range "
              f"({len(report.queries)} queries found)", file=sys.stderr)
        return EXIT_BAD_INPUT
    q = report.queries[args.query]
    selected = None
    if args.constraints is not None:
        selected = [int(k) for k in args.constraints.split(",") if k.strip() != ""]
    graph = explain.to_graph(q, task, selected)
    sys.stdout.write(explain.render_text(graph, args.format))
    return EXIT_OK


def cmd_bench(args) -> int:
    from .workloads import bench

    catalog = open_catalog(args) if args.catalog else None
    policies = tuple(p.strip() for p in args.policies.split(",") if p.strip())
    result = bench(range(args.base_seed, args.base_seed + args.seeds),
                   policies=policies, catalog=catalog,
                   max_edges=args.max_edges, budget=args.budget,
                   corrupt_prob=args.corrupt_prob)
    header = f"{'policy':<10} {'workloads':>9} {'median':>8} {'mean':>8} {'time_s':>8} {'timeouts':>8}"
    print(header)
    print("-" * len(header))
    for row in result.rows():
        print(f"{row['policy']:<10} {row['workloads']:>9} "
              f"{row['median_validations']:>8} {row['mean_validations']:>8} "
              f"{row['total_time_s']:>8} {row['timeouts']:>8}")
    if args.per_seed:
        for policy, results in result.per_policy.items():
            counts = " ".join(str(r.validations) for r in results)
            print(f"{policy}: {counts}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve

    serve(catalog_dir=_catalog_dir(args), host=args.host, port=args.port,
          config_file=args.config)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mapsynth",
        description="Discover project-join queries satisfying value and "
                    "metadata constraints over a CSV catalog.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("load", help="validate a catalog and print its schema")
    p.add_argument("--catalog", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("synthesize", help="run synthesis for a task file")
    p.add_argument("--task", required=True, help="task document (JSON)")
    p.add_argument("--catalog", default=None)
    p.add_argument("--persist", default=None, help="write the report as JSON")
    p.add_argument("--trace", default=None, help="write the scheduling trace (JSON lines)")
    _add_common(p)
    _add_synth_flags(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("explain", help="render a discovered query as a graph")
    p.add_argument("--task", required=True)
    p.add_argument("--catalog", default=None)
    p.add_argument("--query", type=int, required=True, help="query index from synthesize")
    p.add_argument("--constraints", default=None,
                   help="comma-separated constraint indices (default: all)")
    p.add_argument("--format", choices=("dot", "structured"), default="dot")
    _add_common(p)
    _add_synth_flags(p)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("bench", help="A/B the scheduling policies on seeded workloads")
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--policies", default="bayes,baseline,random")
    p.add_argument("--catalog", default=None,
                   help="run on a fixed catalog instead of per-seed synthetic ones")
    p.add_argument("--max-edges", type=int, default=2)
    p.add_argument("--budget", type=float, default=30.0)
    p.add_argument("--corrupt-prob", type=float, default=0.6)
    p.add_argument("--per-seed", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--config", default=None, help="JSON file with service defaults")
    _add_common(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TaskError, CatalogError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
