"""Seeded synthetic catalogs and tasks for benchmarks and randomized testing.

Catalogs are chains or stars of small relations whose join columns share key
pools (so joins actually match) and whose data columns reuse a common
vocabulary (so related-column matching stays ambiguous). Tasks start from real
result tuples of a random query and are then loosened (disjunctions, ranges,
blanks) and optionally corrupted with decoy values that exist somewhere in the
catalog but not in the sampled tuple's context — those create failing filters,
which is what makes validation order matter.
"""

from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .catalog import Catalog, build_catalog
from .constraints import parse_value_constraint
from .engine import (
    SynthConfig,
    SynthesisTask,
    execute_pj,
    make_task,
    synthesize,
    task_from_strings,
)
from .estimator import train_models
from .schema_graph import Instance, JoinTree, Slot, build_schema_graph

_VOCAB = ["amber", "basalt", "cedar", "delta", "ember", "fjord", "garnet",
          "harbor", "indigo", "juniper", "krill", "lagoon", "mesa", "nectar"]


def random_catalog(rng: random.Random, min_relations: int = 3, max_relations: int = 5,
                   min_rows: int = 6, max_rows: int = 18) -> Catalog:
    n_rel = rng.randint(min_relations, max_relations)
    star = rng.random() < 0.4
    names = [f"t{i}" for i in range(n_rel)]

    key_pools = {i: [f"k{i}_{v}" for v in range(rng.randint(3, 8))]
                 for i in range(n_rel)}

    tables = []
    for i, name in enumerate(names):
        cols = ["pk", "word", "num"]
        if i > 0:
            cols.append("link")
        rows = []
        for _ in range(rng.randint(min_rows, max_rows)):
            hub = 0 if star else i - 1
            row = [rng.choice(key_pools[i]),
                   rng.choice(_VOCAB[:rng.randint(6, len(_VOCAB))]),
                   str(rng.randint(0, 500))]
            if i > 0:
                row.append(rng.choice(key_pools[hub]))
            rows.append(row)
        tables.append((name, cols, rows))

    edges = []
    for i in range(1, n_rel):
        hub = 0 if star else i - 1
        edges.append((f"{names[i]}.link", f"{names[hub]}.pk"))
    return build_catalog(f"synthetic-{rng.randint(0, 10**6)}", tables, edges)


def _random_sampled_query(rng: random.Random, catalog: Catalog, arity: int):
    """A random small join with a projection, returning (projection, result).

    At least two target columns come from the same relation whenever the
    arity allows: multi-column overlap inside one relation is what gives the
    cheap single-relation filters something to say."""
    graph = build_schema_graph(catalog)
    rels = list(graph.nodes)
    max_hops = rng.randint(0, min(2, len(graph.edges)))
    nodes = {Instance(rng.choice(rels), 0)}
    edges = set()
    for _ in range(max_hops):
        frontier = [e for e in graph.edges
                    if (Instance(e.left.relation, 0) in nodes)
                    != (Instance(e.right.relation, 0) in nodes)]
        if not frontier:
            break
        e = rng.choice(sorted(frontier))
        edges.add((Slot(Instance(e.left.relation, 0), e.left.column),
                   Slot(Instance(e.right.relation, 0), e.right.column)))
        nodes.add(Instance(e.left.relation, 0))
        nodes.add(Instance(e.right.relation, 0))
    tree = JoinTree(frozenset(nodes), frozenset(edges))

    anchor = rng.choice(sorted(nodes))

    def data_columns(relation):
        return [c for c in catalog.relations[relation].columns
                if c not in ("pk", "link")]

    anchor_cols = data_columns(anchor.relation)
    slots = [Slot(inst, col) for inst in sorted(nodes)
             for col in data_columns(inst.relation)]
    projection = []
    for k in range(arity):
        if k < 2 and anchor_cols:
            projection.append(Slot(anchor, rng.choice(anchor_cols)))
        else:
            projection.append(rng.choice(slots))
    rng.shuffle(projection)
    return tuple(projection), execute_pj(tree, projection, catalog)


def _gap_range_decoy(rng: random.Random, catalog: Catalog, projection,
                     global_gap: bool):
    """A (column index, range constraint) that min/max statistics admit but no
    cell satisfies. With global_gap the range dodges every numeric value in
    the catalog, so all candidates for that column die under cheap filters;
    otherwise it only dodges the sampled column's values."""
    numeric_targets = []
    for j, slot in enumerate(projection):
        stats = catalog.stats[(slot.instance.relation, slot.column)]
        if stats.inferred_type in ("int", "decimal") and stats.distinct_count >= 3:
            numeric_targets.append((j, slot))
    rng.shuffle(numeric_targets)
    for j, slot in numeric_targets:
        rel = catalog.relations[slot.instance.relation]
        if global_gap:
            pool = {c.number for r in catalog.relations.values()
                    for row in r.rows for c in row if c.number is not None}
            span = catalog.stats[(slot.instance.relation, slot.column)]
            nums = sorted(v for v in pool
                          if span.numeric_floor <= v <= span.numeric_ceiling)
        else:
            nums = sorted({c.number for c in rel.column_cells(slot.column)
                           if c.number is not None})
        gaps = [(a, b) for a, b in zip(nums, nums[1:]) if b - a > 1.5]
        if not gaps:
            continue
        a, b = gaps[rng.randrange(len(gaps))]
        lo, hi = a + (b - a) * 0.25, a + (b - a) * 0.75
        return j, f">= {round(lo, 2)} && <= {round(hi, 2)}"
    return None


def _co_occurrence_decoy(rng: random.Random, catalog: Catalog, projection,
                         row_cells: list[str]):
    """A (column index, value) pair that keeps the column individually
    matchable but breaks co-occurrence with a sibling column in the same
    relation — the kind of stale-knowledge mistake cheap filters catch."""
    by_rel: dict = {}
    for j, slot in enumerate(projection):
        by_rel.setdefault(slot.instance, []).append(j)
    shared = [(inst, js) for inst, js in by_rel.items() if len(js) >= 2]
    if not shared:
        return None
    inst, js = shared[rng.randrange(len(shared))]
    rng.shuffle(js)
    j, j_other = js[0], js[1]
    other_constraint = parse_value_constraint(row_cells[j_other])
    if other_constraint.is_empty:
        return None
    rel = catalog.relations[inst.relation]
    ci = rel.column_index(projection[j].column)
    co = rel.column_index(projection[j_other].column)
    candidates = []
    for value in sorted({r[ci].raw for r in rel.rows if r[ci].raw.strip()}):
        rows_with = [r for r in rel.rows if r[ci].raw == value]
        from .constraints import eval_value_constraint
        if not any(eval_value_constraint(other_constraint, r[co]) for r in rows_with):
            candidates.append(value)
    if not candidates:
        return None
    return j, candidates[rng.randrange(len(candidates))]


def random_task(rng: random.Random, catalog: Catalog,
                corrupt_prob: float = 0.6) -> SynthesisTask:
    arity = rng.randint(2, 3)
    projection, result = _random_sampled_query(rng, catalog, arity)
    if not result:
        rel = catalog.relations[sorted(catalog.relations)[0]]
        projection = tuple(Slot(Instance(rel.name, 0), rel.columns[i % len(rel.columns)])
                           for i in range(arity))
        result = execute_pj(JoinTree(frozenset({Instance(rel.name, 0)}), frozenset()),
                            projection, catalog)

    all_values = sorted({cell.raw for rel in catalog.relations.values()
                         for row in rel.rows for cell in row if cell.raw.strip()})

    def column_pool(j):
        slot = projection[j]
        return sorted({c.raw for c in
                       catalog.relations[slot.instance.relation]
                       .column_cells(slot.column) if c.raw.strip()})

    def frequency_weight(tup):
        weight = 0
        for j, cell in enumerate(tup):
            slot = projection[j]
            stats = catalog.stats[(slot.instance.relation, slot.column)]
            weight += stats.value_frequencies.get(cell.key, 0)
        return weight

    rows = []
    for _ in range(rng.randint(1, 2)):
        # users tend to remember common values: prefer high-frequency tuples
        picks = [result[rng.randrange(len(result))] for _ in range(3)]
        tup = max(picks, key=frequency_weight)
        cells = []
        for j, cell in enumerate(tup):
            style = rng.random()
            if cell.number is not None:
                if style < 0.3:
                    cells.append("")
                elif style < 0.8:
                    lo = cell.number - rng.randint(0, 30)
                    hi = cell.number + rng.randint(0, 30)
                    cells.append(f">= {lo} && <= {hi}")
                else:
                    cells.append(cell.raw)
            else:
                if style < 0.25:
                    cells.append("")
                elif style < 0.6:
                    alt = rng.choice(column_pool(j) or all_values)
                    cells.append(f"{cell.raw} || {alt}")
                else:
                    cells.append(cell.raw)
        rows.append(cells)

    if rng.random() < corrupt_prob:
        i = rng.randrange(len(rows))
        decoy = None
        mode = rng.random()
        if mode < 0.4:
            decoy = _gap_range_decoy(rng, catalog, projection, global_gap=True)
        elif mode < 0.6:
            decoy = _gap_range_decoy(rng, catalog, projection, global_gap=False)
        if decoy is None and mode < 0.8:
            decoy = _co_occurrence_decoy(rng, catalog, projection, rows[i])
        if decoy is not None:
            j, value = decoy
            rows[i][j] = value
        else:
            # global decoy: exists somewhere in the catalog, rarely in context
            rows[i][rng.randrange(arity)] = rng.choice(all_values)

    metadata = []
    for j in range(arity):
        slot = projection[j]
        stats = catalog.stats[(slot.instance.relation, slot.column)]
        roll = rng.random()
        if roll < 0.2 and stats.inferred_type in ("int", "decimal"):
            metadata.append(f"DataType == '{stats.inferred_type}'")
        elif roll < 0.3:
            metadata.append(f"MaxLength <= {stats.max_length + rng.randint(0, 5)}")
        else:
            metadata.append("")

    if all(not c for row in rows for c in row) and all(not m for m in metadata):
        rows[0][0] = result[0][0].raw
    return task_from_strings(rows, metadata, arity)


@dataclass
class WorkloadResult:
    seed: int
    policy: str
    validations: int
    queries: int
    elapsed: float
    timed_out: bool


@dataclass
class BenchResult:
    per_policy: dict[str, list[WorkloadResult]] = field(default_factory=dict)

    def medians(self) -> dict[str, float]:
        return {p: statistics.median(r.validations for r in rs)
                for p, rs in self.per_policy.items()}

    def rows(self) -> list[dict]:
        out = []
        for policy, results in self.per_policy.items():
            out.append({
                "policy": policy,
                "workloads": len(results),
                "median_validations": statistics.median(r.validations for r in results),
                "mean_validations": round(statistics.fmean(r.validations for r in results), 2),
                "total_time_s": round(sum(r.elapsed for r in results), 3),
                "timeouts": sum(1 for r in results if r.timed_out),
            })
        return out


def bench(seeds: Sequence[int], policies: Sequence[str] = ("bayes", "baseline", "random"),
          catalog: Optional[Catalog] = None, max_edges: int = 2,
          budget: float = 30.0, corrupt_prob: float = 0.6,
          workers: int = 1) -> BenchResult:
    """Run each seeded workload under every policy; same task, same catalog,
    same trained models, only the validation order differs."""
    result = BenchResult({p: [] for p in policies})
    for seed in seeds:
        rng = random.Random(seed)
        cat = catalog if catalog is not None else random_catalog(rng)
        task = random_task(rng, cat, corrupt_prob)
        models = train_models(cat)
        for policy in policies:
            cfg = SynthConfig(max_edges=max_edges, budget=budget, policy=policy,
                              seed=seed, workers=workers)
            t0 = time.monotonic()
            report = synthesize(task, cat, cfg, models=models)
            result.per_policy[policy].append(WorkloadResult(
                seed, policy, report.filters_validated, len(report.queries),
                time.monotonic() - t0, report.timed_out))
    return result
