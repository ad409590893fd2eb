"""End-to-end synthesis: match columns, enumerate candidates, validate filters
under a scheduling policy, and verify every query before returning it.

The pipeline never trusts the pruning machinery for soundness: a candidate is
reported only after its full query has been re-executed and checked against
every constraint. Pruning only decides how little work gets us there.
"""

from __future__ import annotations

import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import Optional, Sequence

from .catalog import Catalog, ColumnRef
from .constraints import (
    DEFAULT_MATCH,
    ConstraintSyntaxError,
    MatchOptions,
    MetadataConstraint,
    ValueConstraint,
    ValuePredicate,
    eval_metadata_constraint,
    eval_value_constraint,
    parse_metadata_constraint,
    parse_value_constraint,
)
from .estimator import Models, Scheduler, train_models
from .filters import Filter, FilterDAG, FilterKey
from .schema_graph import (
    CandidateQuery,
    JoinTree,
    Slot,
    build_schema_graph,
    enumerate_candidates,
)
from .values import Cell, canon_number, normalize_text


class TaskError(ValueError):
    """Structurally invalid synthesis task. ``cell`` locates the offending
    grid position ({"row": i, "column": j} or {"metadata_column": j}) when a
    constraint string failed to parse."""

    def __init__(self, message: str, cell: Optional[dict] = None):
        super().__init__(message)
        self.cell = cell


@dataclass(frozen=True)
class SynthesisTask:
    arity: int
    samples: tuple[tuple[ValueConstraint, ...], ...]
    metadata: tuple[MetadataConstraint, ...]


def make_task(arity: int, samples: Sequence[Sequence[ValueConstraint]],
              metadata: Sequence[MetadataConstraint]) -> SynthesisTask:
    if arity < 1:
        raise TaskError("target schema needs at least one column")
    samples = tuple(tuple(row) for row in samples)
    metadata = tuple(metadata)
    for n, row in enumerate(samples):
        if len(row) != arity:
            raise TaskError(f"sample row {n + 1} has {len(row)} cells, expected {arity}")
    if len(metadata) != arity:
        raise TaskError(f"metadata list has {len(metadata)} entries, expected {arity}")
    if all(c.is_empty for row in samples for c in row) and \
            all(c.is_empty for c in metadata):
        raise TaskError("task has no constraints at all")
    return SynthesisTask(arity, samples, metadata)


def task_from_strings(rows: Sequence[Sequence[str]], metadata: Sequence[str],
                      arity: Optional[int] = None) -> SynthesisTask:
    """Parse a grid of constraint strings into a task.

    Parse failures are reported with their (row, column) position so a UI can
    attach them to the offending cell.
    """
    if arity is None:
        arity = len(metadata) if metadata else (len(rows[0]) if rows else 0)
    samples = []
    for i, row in enumerate(rows):
        cells = []
        for j, text in enumerate(row):
            try:
                cells.append(parse_value_constraint(text))
            except ConstraintSyntaxError as exc:
                raise TaskError(f"row {i + 1}, column {j + 1}: {exc}",
                                cell={"row": i, "column": j}) from exc
        samples.append(cells)
    parsed_meta = []
    for j, text in enumerate(list(metadata) + [""] * (arity - len(metadata))):
        try:
            parsed_meta.append(parse_metadata_constraint(text))
        except ConstraintSyntaxError as exc:
            raise TaskError(f"metadata column {j + 1}: {exc}",
                            cell={"metadata_column": j}) from exc
    return make_task(arity, samples, parsed_meta)


@dataclass(frozen=True)
class SynthConfig:
    max_edges: int = 4
    budget: float = 60.0
    policy: str = "bayes"
    seed: int = 0
    workers: int = 1
    batch_size: int = 256
    match: MatchOptions = DEFAULT_MATCH
    alias_limit: int = 2
    trace: bool = False


@dataclass(frozen=True)
class SynthesisReport:
    queries: tuple[CandidateQuery, ...]
    filters_validated: int
    filters_pruned: int
    elapsed: float
    timed_out: bool
    policy: str
    seed: int
    candidates_total: int
    candidates_pruned: int
    pruned_queries: tuple[CandidateQuery, ...] = ()
    trace: tuple[dict, ...] = ()


# --- related-column matching -------------------------------------------------

def _predicate_key(pred: ValuePredicate) -> str:
    lit = pred.constant
    return canon_number(lit.number) if lit.number is not None else normalize_text(lit.text)


def _column_may_satisfy(constraint: ValueConstraint, ref: ColumnRef, catalog: Catalog,
                        options: MatchOptions, lookup_cache: dict) -> bool:
    """Necessary condition for the column to contain a satisfying cell.

    Equality goes through the inverted index (exact); ordering uses numeric
    bounds (exact for existence); conjunctions are checked leaf-wise, which may
    overapproximate but never misses a truly matching column.
    """
    if constraint.is_empty:
        return True
    stats = catalog.stats[ref]

    def walk(node) -> bool:
        if not isinstance(node, ValuePredicate):
            hits = (walk(ch) for ch in node.children)
            return all(hits) if node.op == "and" else any(hits)
        if node.op == "=":
            cached = lookup_cache.get(node)
            if cached is None:
                from .catalog import lookup_value
                cached = lookup_value(catalog, node, options)
                lookup_cache[node] = cached
            return ref in cached
        if node.op == "!=":
            if stats.row_count == 0:
                return False
            if stats.distinct_count == 1:
                only = next(iter(stats.value_frequencies))
                return only != _predicate_key(node)
            return True
        if node.constant.number is None:
            return False
        lo, hi = stats.numeric_floor, stats.numeric_ceiling
        if lo is None or hi is None:
            return False
        c = node.constant.number
        return {"<": lo < c, "<=": lo <= c, ">": hi > c, ">=": hi >= c}[node.op]

    return walk(constraint.root)


def related_columns(catalog: Catalog, task: SynthesisTask,
                    options: MatchOptions = DEFAULT_MATCH) -> list[frozenset[ColumnRef]]:
    """Per target column, the source columns that could possibly serve it.

    A column qualifies when its statistics satisfy the column's metadata
    constraint and, for every sample row, it may contain a satisfying cell.
    An empty set for any target column means the task is unsatisfiable.
    """
    lookup_cache: dict = {}
    result = []
    for j in range(task.arity):
        cols = set()
        for ref in catalog.columns():
            if not eval_metadata_constraint(task.metadata[j], catalog.stats[ref]):
                continue
            if all(_column_may_satisfy(row[j], ref, catalog, options, lookup_cache)
                   for row in task.samples):
                cols.add(ref)
        result.append(frozenset(cols))
    return result


# --- execution ----------------------------------------------------------------

def execute_pj(tree: JoinTree, projection: Sequence[Slot],
               catalog: Catalog) -> list[tuple[Cell, ...]]:
    """Hash-join the tree's edges in a deterministic order, then project.

    Join keys are normalized cell keys; empty cells never join (NULL-ish).
    Duplicates are preserved and row order is deterministic.
    """
    insts = sorted(tree.nodes)
    adjacency: dict = {i: [] for i in insts}
    for a, b in sorted(tree.edges):
        adjacency[a.instance].append((b.instance, a, b))
        adjacency[b.instance].append((a.instance, b, a))

    first = insts[0]
    attached = {first: 0}
    rows = catalog.relations[first.relation].rows
    partials: list[tuple[int, ...]] = [(i,) for i in range(len(rows))]

    remaining = set(insts[1:])
    while remaining:
        pick = None
        for inst in sorted(remaining):
            links = [(other, here, there) for other, here, there in adjacency[inst]
                     if other in attached]
            if links:
                pick = (inst, links[0])
                break
        inst, (other, here, there) = pick
        # `there` is the slot on the already-attached side, `here` on the new one
        new_rel = catalog.relations[inst.relation]
        col_idx = new_rel.column_index(here.column)
        buckets: dict[str, list[int]] = {}
        for n, row in enumerate(new_rel.rows):
            key = row[col_idx].key
            if key:
                buckets.setdefault(key, []).append(n)

        old_rel = catalog.relations[there.instance.relation]
        old_pos = attached[there.instance]
        old_col = old_rel.column_index(there.column)
        extended = []
        for partial in partials:
            key = old_rel.rows[partial[old_pos]][old_col].key
            if not key:
                continue
            for n in buckets.get(key, ()):
                extended.append(partial + (n,))
        partials = extended
        attached[inst] = len(attached)
        remaining.remove(inst)

    out = []
    slot_access = [(attached[s.instance],
                    catalog.relations[s.instance.relation],
                    catalog.relations[s.instance.relation].column_index(s.column))
                   for s in projection]
    for partial in partials:
        out.append(tuple(rel.rows[partial[pos]][ci] for pos, rel, ci in slot_access))
    return out


def validate_filter(f: Filter, catalog: Catalog, task: SynthesisTask,
                    options: MatchOptions = DEFAULT_MATCH) -> bool:
    """Run the filter's short query; pass iff every sample row finds a tuple
    satisfying the row's constraints on the filter's projected columns.

    A row whose constraints are all out of scope here still demands that some
    tuple exists; with no sample rows at all the filter passes vacuously, the
    same way verify_query does."""
    if not task.samples:
        return True
    result = execute_pj(f.subtree, [slot for _, slot in f.induced], catalog)
    if not result:
        return False
    for row in task.samples:
        needed = [(pos, row[j]) for pos, (j, _) in enumerate(f.induced)
                  if not row[j].is_empty]
        if not needed:
            continue
        if not any(all(eval_value_constraint(c, tup[pos], options)
                       for pos, c in needed)
                   for tup in result):
            return False
    return True


def verify_query(q: CandidateQuery, task: SynthesisTask, catalog: Catalog,
                 options: MatchOptions = DEFAULT_MATCH) -> bool:
    """Full end-to-end check, independent of the filter machinery: every
    sample row matches some result tuple and every projected column's stats
    satisfy its metadata constraint."""
    for j, slot in enumerate(q.projection):
        stats = catalog.stats[ColumnRef(slot.instance.relation, slot.column)]
        if not eval_metadata_constraint(task.metadata[j], stats):
            return False
    result = execute_pj(q.tree, q.projection, catalog)
    for row in task.samples:
        if not any(all(eval_value_constraint(c, cell, options)
                       for c, cell in zip(row, tup))
                   for tup in result):
            return False
    return True


# --- scheduled validation -------------------------------------------------------

PENDING, INFLIGHT, PASS, FAIL, IPASS, IFAIL = range(6)


class _RunState:
    def __init__(self):
        self.candidates: list[CandidateQuery] = []
        self.status: list[str] = []  # "open" | "final" | "pruned"
        self.dag = FilterDAG()
        self.fstate: dict[FilterKey, int] = {}
        self.validated = 0
        self.trace: list[dict] = []

    def open_candidates(self) -> set[int]:
        return {i for i, s in enumerate(self.status) if s == "open"}

    def add_candidate(self, cand: CandidateQuery) -> None:
        idx = len(self.candidates)
        self.candidates.append(cand)
        self.status.append("open")
        keys = self.dag.add_candidate(idx, cand)
        for key in keys:
            state = self.fstate.setdefault(key, PENDING)
            if state in (FAIL, IFAIL):
                self.status[idx] = "pruned"

    def live_filters(self) -> list[Filter]:
        undecided = self.open_candidates()
        return [f for key, f in self.dag.filters.items()
                if self.fstate[key] == PENDING and f.parent_candidates & undecided]

    def apply(self, f: Filter, passed: bool, scheduler: Scheduler,
              score) -> None:
        self.validated += 1
        undecided = self.open_candidates()
        if passed:
            self.fstate[f.key] = PASS
            for key in self.dag.descendants(f.key):
                if self.fstate[key] in (PENDING, INFLIGHT):
                    self.fstate[key] = IPASS
            for idx in sorted(f.parent_candidates & undecided):
                if self.dag.maximal_for[idx] == f.key:
                    self.status[idx] = "final"
        else:
            self.fstate[f.key] = FAIL
            for key in self.dag.ancestors(f.key):
                if self.fstate[key] in (PENDING, INFLIGHT):
                    self.fstate[key] = IFAIL
            for idx in sorted(f.parent_candidates & undecided):
                self.status[idx] = "pruned"
        if score is not None:
            self.trace.append({
                "seq": self.validated,
                "filter": f.describe(),
                "edges": f.edge_count,
                "fail_prob": round(score.fail_prob, 6),
                "cost": round(score.cost, 3),
                "pruned_count": score.pruned_count,
                "priority": round(score.priority, 9),
                "result": "pass" if passed else "fail",
                "policy": scheduler.policy,
            })


def _validation_loop(state: _RunState, scheduler: Scheduler, catalog: Catalog,
                     task: SynthesisTask, config: SynthConfig,
                     deadline: float, pool: Optional[ThreadPoolExecutor]) -> bool:
    """Validate filters until every candidate is decided. Returns True when the
    budget ran out. Deadline is honored between validations."""
    inflight: dict = {}
    while True:
        if time.monotonic() > deadline:
            for fut in inflight:
                fut.cancel()
            if inflight:
                wait(list(inflight))
            return True
        undecided = state.open_candidates()
        if not undecided and not inflight:
            return False
        live = state.live_filters()
        if pool is None:
            f = scheduler.next_filter(state.dag, live, undecided)
            if f is None:
                return False
            score = scheduler.score(f, undecided, state.dag.max_edge_count)
            state.fstate[f.key] = INFLIGHT
            passed = validate_filter(f, catalog, task, config.match)
            state.apply(f, passed, scheduler, score)
            continue
        while live and len(inflight) < config.workers:
            f = scheduler.next_filter(state.dag, live, undecided)
            if f is None:
                break
            score = scheduler.score(f, undecided, state.dag.max_edge_count)
            state.fstate[f.key] = INFLIGHT
            fut = pool.submit(validate_filter, f, catalog, task, config.match)
            inflight[fut] = (f, score)
            live = state.live_filters()
        if not inflight:
            if not undecided:
                return False
            # nothing live but candidates open: cannot happen while maximal
            # filters stay pending; bail out defensively
            return False
        done, _ = wait(list(inflight), return_when=FIRST_COMPLETED)
        for fut in done:
            f, score = inflight.pop(fut)
            state.apply(f, fut.result(), scheduler, score)


def synthesize(task: SynthesisTask, catalog: Catalog,
               config: SynthConfig = SynthConfig(),
               models: Optional[Models] = None) -> SynthesisReport:
    """Discover every project-join query (within the edge budget) whose result
    satisfies the task, stopping early when the time budget runs out."""
    start = time.monotonic()
    deadline = start + config.budget

    related = related_columns(catalog, task, config.match)
    if any(not r for r in related):
        return SynthesisReport((), 0, 0, time.monotonic() - start, False,
                               config.policy, config.seed, 0, 0)

    if models is None:
        models = train_models(catalog)
    scheduler = Scheduler(catalog, task, models, config.policy, config.seed)
    graph = build_schema_graph(catalog)
    stream = enumerate_candidates(graph, related, config.max_edges, config.alias_limit)

    state = _RunState()
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    timed_out = False
    try:
        exhausted = False
        while not exhausted:
            pulled = 0
            while pulled < config.batch_size:
                if time.monotonic() > deadline:
                    timed_out = True
                    break
                cand = next(stream, None)
                if cand is None:
                    exhausted = True
                    break
                state.add_candidate(cand)
                pulled += 1
            if timed_out:
                break
            if pulled == 0 and exhausted:
                break
            timed_out = _validation_loop(state, scheduler, catalog, task,
                                         config, deadline, pool)
            if timed_out:
                break
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    finals = [state.candidates[i] for i, s in enumerate(state.status) if s == "final"]
    queries = tuple(sorted(
        (q for q in finals if verify_query(q, task, catalog, config.match)),
        key=lambda q: q.sort_key()))
    pruned_idx = [i for i, s in enumerate(state.status) if s == "pruned"]
    total_filters = len(state.dag.filters)
    pending = sum(1 for s in state.fstate.values() if s in (PENDING, INFLIGHT))
    return SynthesisReport(
        queries=queries,
        filters_validated=state.validated,
        filters_pruned=total_filters - state.validated - pending,
        elapsed=time.monotonic() - start,
        timed_out=timed_out,
        policy=config.policy,
        seed=config.seed,
        candidates_total=len(state.candidates),
        candidates_pruned=len(pruned_idx),
        pruned_queries=tuple(state.candidates[i] for i in pruned_idx)
        if config.trace else (),
        trace=tuple(state.trace) if config.trace else (),
    )
