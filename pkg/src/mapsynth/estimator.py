"""Filter scoring for the validation scheduler.

Failure probability comes from per-relation value-frequency models combined
across joins with exact edge match rates; cost is a row-count/selectivity
proxy; the scheduler maximizes priority = fail_prob * pruned_count / cost.

Formulas (documented substitutes, isolated here for replacement):
  * per-column match probability of an equality constant v:
      count(v)/N when v is tracked, the leftover top-K mass for tracked-out
      values, and the Laplace unit mass 1/(N+V) for values never seen.
  * expected matching tuples of a filter for one sample row:
      N_exp = (prod of column match probabilities) * (prod of edge match
      rates) * (prod of relation row counts), assuming independence.
  * a row fails with probability exp(-N_exp); the filter fails when any row
    does; results are clamped to [1e-6, 1 - 1e-6].
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .catalog import Catalog, ColumnRef
from .constraints import (
    ORDERING_OPS,
    ValueConstraint,
    ValuePredicate,
)
from .filters import Filter, FilterDAG
from .values import canon_number, normalize_text, parse_number

PROB_FLOOR = 1e-6
PROB_CEIL = 1.0 - 1e-6

POLICIES = ("bayes", "baseline", "random")


@dataclass(frozen=True)
class RelationModel:
    relation: str
    row_count: int
    # column -> normalized value -> exact match probability count/N
    tracked: dict[str, dict[str, float]]
    # column -> probability for a value never seen in the column
    unseen: dict[str, float]
    # column -> probability for a value outside the tracked top-K
    untracked: dict[str, float]


@dataclass(frozen=True)
class JoinIndicator:
    edge_id: tuple[ColumnRef, ColumnRef]
    match_rate: float


@dataclass(frozen=True)
class Models:
    relations: dict[str, RelationModel]
    indicators: dict[tuple[ColumnRef, ColumnRef], float]


@dataclass(frozen=True)
class FilterScore:
    fail_prob: float
    cost: float
    pruned_count: int
    priority: float


def edge_id(rel_a: str, col_a: str, rel_b: str, col_b: str) -> tuple[ColumnRef, ColumnRef]:
    a, b = ColumnRef(rel_a, col_a), ColumnRef(rel_b, col_b)
    return (a, b) if a <= b else (b, a)


def train_models(catalog: Catalog) -> Models:
    """Exact frequency models per relation plus exact join match rates.

    At desk scale nothing is approximated: tracked probabilities are true
    counts over row_count, and each edge's match rate is |R join S| / (|R|*|S|).
    """
    relations = {}
    for rel in catalog.relations.values():
        tracked: dict[str, dict[str, float]] = {}
        unseen: dict[str, float] = {}
        untracked: dict[str, float] = {}
        n = rel.row_count
        for col in rel.columns:
            stats = catalog.stats[ColumnRef(rel.name, col)]
            if n == 0:
                tracked[col], unseen[col], untracked[col] = {}, 0.0, 0.0
                continue
            probs = {key: count / n for key, count in stats.value_frequencies.items()}
            tracked[col] = probs
            unseen[col] = 1.0 / (n + stats.distinct_count)
            if stats.tracked_complete:
                untracked[col] = unseen[col]
            else:
                leftover = max(0.0, 1.0 - sum(probs.values()))
                missing = stats.distinct_count - len(probs)
                untracked[col] = leftover / missing if missing else unseen[col]
        relations[rel.name] = RelationModel(rel.name, n, tracked, unseen, untracked)

    indicators = {}
    for edge in catalog.join_edges:
        left = catalog.relations[edge.left.relation]
        right = catalog.relations[edge.right.relation]
        li = left.column_index(edge.left.column)
        ri = right.column_index(edge.right.column)
        left_counts: dict[str, int] = {}
        for row in left.rows:
            key = row[li].key
            if key:
                left_counts[key] = left_counts.get(key, 0) + 1
        matches = sum(left_counts.get(row[ri].key, 0) for row in right.rows if row[ri].key)
        denom = left.row_count * right.row_count
        eid = edge_id(edge.left.relation, edge.left.column,
                      edge.right.relation, edge.right.column)
        indicators[eid] = matches / denom if denom else 0.0
    return Models(relations, indicators)


def value_match_prob(models: Models, ref: ColumnRef, constraint: ValueConstraint) -> float:
    """Probability that one random cell of the column satisfies the constraint."""
    if constraint.is_empty:
        return 1.0
    model = models.relations[ref.relation]
    probs = model.tracked.get(ref.column, {})

    def pred_prob(pred: ValuePredicate) -> float:
        lit = pred.constant
        if pred.op in ORDERING_OPS:
            mass = 0.0
            for key, p in probs.items():
                num = parse_number(key)
                if num is None:
                    continue
                if _holds(num, pred.op, lit.number):
                    mass += p
            tracked_mass = sum(probs.values())
            if tracked_mass < 1.0 - 1e-12:
                mass += 0.5 * (1.0 - tracked_mass)  # agnostic about untracked tail
            return min(mass, 1.0)
        key = canon_number(lit.number) if lit.number is not None else normalize_text(lit.text)
        p = probs.get(key)
        if p is None:
            p = model.untracked[ref.column] if probs else model.unseen.get(ref.column, 0.0)
        return (1.0 - p) if pred.op == "!=" else p

    def walk(node) -> float:
        if isinstance(node, ValuePredicate):
            return pred_prob(node)
        if node.op == "and":
            out = 1.0
            for child in node.children:
                out *= walk(child)
            return out
        miss = 1.0
        for child in node.children:
            miss *= 1.0 - walk(child)
        return 1.0 - miss

    return max(0.0, min(1.0, walk(constraint.root)))


def _holds(lhs: float, op: str, rhs: float) -> bool:
    return ((op == ">" and lhs > rhs) or (op == ">=" and lhs >= rhs)
            or (op == "<" and lhs < rhs) or (op == "<=" and lhs <= rhs))


def expected_matches(f: Filter, row: Sequence[ValueConstraint], models: Models) -> float:
    """N_exp: expected tuples of the filter's query matching one sample row."""
    p = 1.0
    for j, slot in f.induced:
        constraint = row[j]
        if constraint.is_empty:
            continue
        p *= value_match_prob(models, ColumnRef(slot.instance.relation, slot.column),
                              constraint)
    for a, b in f.subtree.edges:
        eid = edge_id(a.instance.relation, a.column, b.instance.relation, b.column)
        p *= models.indicators.get(eid, 0.0)
    for inst in f.subtree.nodes:
        p *= models.relations[inst.relation].row_count
    return p


def estimate_fail_prob(f: Filter, samples, models: Models) -> float:
    """Probability the filter fails at least one sample row."""
    nonempty_relations = all(models.relations[i.relation].row_count > 0
                             for i in f.subtree.nodes)
    has_constraint = any(not row[j].is_empty for row in samples for j, _ in f.induced)
    if not f.subtree.edges and not has_constraint and nonempty_relations:
        return PROB_FLOOR  # nothing to violate: projection of a non-empty relation
    survive = 1.0
    for row in samples:
        n_exp = expected_matches(f, row, models)
        row_fail = math.exp(-n_exp)
        survive *= 1.0 - row_fail
    return min(max(1.0 - survive, PROB_FLOOR), PROB_CEIL)


def estimate_cost(f: Filter, catalog: Catalog, models: Models) -> float:
    """Row-count proxy: scanned rows plus estimated join output sizes."""
    cost = float(sum(catalog.relations[i.relation].row_count for i in f.subtree.nodes))
    for a, b in f.subtree.edges:
        eid = edge_id(a.instance.relation, a.column, b.instance.relation, b.column)
        rate = models.indicators.get(eid, 0.0)
        cost += rate * catalog.relations[a.instance.relation].row_count \
            * catalog.relations[b.instance.relation].row_count
    return cost if cost > 0 else 1.0


class Scheduler:
    """Picks the next filter to validate under one of three policies.

    bayes ranks by model-estimated failure probability, baseline by join path
    length (edge count, normalized by the longest filter in the DAG), random
    draws uniformly with a seeded generator. All three share the priority
    formula fail_prob * pruned_count / cost.
    """

    def __init__(self, catalog: Catalog, task, models: Models,
                 policy: str = "bayes", seed: int = 0):
        if policy not in POLICIES:
            raise ValueError(f"unknown policy {policy!r}")
        self.catalog = catalog
        self.task = task
        self.models = models
        self.policy = policy
        self.rng = random.Random(seed)
        self._fail_cache: dict = {}
        self._cost_cache: dict = {}

    def fail_prob(self, f: Filter, max_edge_count: int) -> float:
        if self.policy == "baseline":
            return f.edge_count / max(1, max_edge_count)
        cached = self._fail_cache.get(f.key)
        if cached is None:
            cached = estimate_fail_prob(f, self.task.samples, self.models)
            self._fail_cache[f.key] = cached
        return cached

    def cost(self, f: Filter) -> float:
        cached = self._cost_cache.get(f.key)
        if cached is None:
            cached = estimate_cost(f, self.catalog, self.models)
            self._cost_cache[f.key] = cached
        return cached

    def score(self, f: Filter, undecided: set[int], max_edge_count: int) -> FilterScore:
        pruned = len(f.parent_candidates & undecided)
        fail = self.fail_prob(f, max_edge_count)
        cost = self.cost(f)
        return FilterScore(fail, cost, pruned, fail * pruned / cost)

    def next_filter(self, dag: FilterDAG, live: Sequence[Filter],
                    undecided: set[int]) -> Optional[Filter]:
        if not live:
            return None
        ordered = sorted(live, key=lambda f: f.key)
        if self.policy == "random":
            return ordered[self.rng.randrange(len(ordered))]
        return min(ordered, key=lambda f: (
            -self.score(f, undecided, dag.max_edge_count).priority,
            self.cost(f), f.key))
