"""Schema graph, join trees, and exhaustive project-join candidate enumeration.

Candidates are streamed smallest-tree first so the engine can interleave
validation with enumeration. Relations may appear twice in a tree (one level
of self-join aliasing); structurally identical candidates that differ only in
alias numbering are collapsed to a canonical form and emitted once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations, product
from typing import Iterator, NamedTuple, Sequence

from .catalog import Catalog, ColumnRef, JoinEdge

ALIAS_LIMIT = 2


class Instance(NamedTuple):
    """One occurrence of a relation in a join tree."""

    relation: str
    ordinal: int


class Slot(NamedTuple):
    """A column of a specific relation instance."""

    instance: Instance
    column: str


def _norm_edge(a: Slot, b: Slot) -> tuple[Slot, Slot]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class JoinTree:
    nodes: frozenset[Instance]
    edges: frozenset[tuple[Slot, Slot]]

    def is_valid(self) -> bool:
        if len(self.edges) != len(self.nodes) - 1:
            return False
        for a, b in self.edges:
            if a.instance not in self.nodes or b.instance not in self.nodes:
                return False
        return _connected(self.nodes, self.edges)

    def leaves(self) -> set[Instance]:
        if len(self.nodes) == 1:
            return set(self.nodes)
        degree = {n: 0 for n in self.nodes}
        for a, b in self.edges:
            degree[a.instance] += 1
            degree[b.instance] += 1
        return {n for n, d in degree.items() if d == 1}


@dataclass(frozen=True)
class CandidateQuery:
    """A join tree plus one projected source column per target column."""

    tree: JoinTree
    projection: tuple[Slot, ...]

    def sort_key(self):
        return (len(self.tree.edges), canonical_key(self.tree, self.projection))

    def instance_alias(self, inst: Instance) -> str:
        twins = [n for n in self.tree.nodes if n.relation == inst.relation]
        if len(twins) == 1:
            return inst.relation
        return f"{inst.relation}_{inst.ordinal}"

    def to_sql(self) -> str:
        select = ", ".join(
            f"{self.instance_alias(s.instance)}.{s.column}" for s in self.projection)
        from_parts = []
        for inst in sorted(self.tree.nodes):
            alias = self.instance_alias(inst)
            from_parts.append(
                inst.relation if alias == inst.relation
                else f"{inst.relation} AS {alias}")
        sql = f"SELECT {select} FROM {', '.join(from_parts)}"
        conds = sorted(
            f"{self.instance_alias(a.instance)}.{a.column} = "
            f"{self.instance_alias(b.instance)}.{b.column}"
            for a, b in self.edges_sorted())
        if conds:
            sql += " WHERE " + " AND ".join(conds)
        return sql

    def edges_sorted(self):
        return sorted(self.tree.edges)


@dataclass(frozen=True)
class SchemaGraph:
    nodes: tuple[str, ...]
    edges: tuple[JoinEdge, ...]


def build_schema_graph(catalog: Catalog) -> SchemaGraph:
    return SchemaGraph(tuple(catalog.relations), catalog.join_edges)


def _connected(nodes: frozenset[Instance], edges) -> bool:
    if not nodes:
        return False
    adjacency: dict[Instance, set[Instance]] = {n: set() for n in nodes}
    for a, b in edges:
        adjacency[a.instance].add(b.instance)
        adjacency[b.instance].add(a.instance)
    seen = set()
    stack = [next(iter(sorted(nodes)))]
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        stack.extend(adjacency[cur] - seen)
    return seen == set(nodes)


def canonical_key(tree: JoinTree, projection: Sequence[Slot]):
    """Smallest serialization over all dense per-relation alias renumberings."""
    by_rel: dict[str, list[int]] = {}
    for inst in tree.nodes:
        by_rel.setdefault(inst.relation, []).append(inst.ordinal)
    rel_names = sorted(by_rel)
    perm_choices = [list(permutations(range(len(by_rel[r])))) for r in rel_names]

    best = None
    for combo in product(*perm_choices):
        mapping = {}
        for rel, perm in zip(rel_names, combo):
            for src, dst in zip(sorted(by_rel[rel]), perm):
                mapping[Instance(rel, src)] = Instance(rel, dst)

        def remap(slot: Slot) -> Slot:
            return Slot(mapping[slot.instance], slot.column)

        edges = tuple(sorted(_norm_edge(remap(a), remap(b)) for a, b in tree.edges))
        proj = tuple(remap(s) for s in projection)
        key = (tuple(sorted(mapping.values())), edges, proj)
        if best is None or key < best:
            best = key
    return best


def enumerate_candidates(graph: SchemaGraph,
                         related: Sequence[frozenset[ColumnRef] | set[ColumnRef]],
                         max_edges: int = 4,
                         alias_limit: int = ALIAS_LIMIT) -> Iterator[CandidateQuery]:
    """Stream every non-isomorphic candidate query within the edge budget.

    A candidate picks one related source column per target column and joins
    the hosting relation instances with a tree of at most ``max_edges`` edges;
    every leaf of the tree must host at least one projected column.
    """
    if any(not s for s in related):
        return

    instances = [Instance(r, o) for r in sorted(graph.nodes) for o in range(alias_limit)]

    lifted: set[tuple[Slot, Slot]] = set()
    for edge in graph.edges:
        for oi in range(alias_limit):
            for oj in range(alias_limit):
                a = Instance(edge.left.relation, oi)
                b = Instance(edge.right.relation, oj)
                if a == b:
                    continue
                lifted.add(_norm_edge(Slot(a, edge.left.column), Slot(b, edge.right.column)))
    lifted_sorted = sorted(lifted)

    related_sorted = [sorted(s) for s in related]
    seen: set = set()

    for size in range(1, max_edges + 2):
        for combo in combinations(instances, size):
            chosen = set(combo)
            # only dense alias numbering; renumberings are isomorphic anyway
            if any(inst.ordinal > 0 and Instance(inst.relation, inst.ordinal - 1)
                   not in chosen for inst in combo):
                continue

            options = []
            for refs in related_sorted:
                opts = [Slot(inst, ref.column)
                        for ref in refs
                        for inst in combo if inst.relation == ref.relation]
                if not opts:
                    break
                options.append(opts)
            if len(options) != len(related_sorted):
                continue

            node_set = frozenset(combo)
            local_edges = [e for e in lifted_sorted
                           if e[0].instance in chosen and e[1].instance in chosen]
            if len(local_edges) < size - 1:
                continue

            for edge_subset in combinations(local_edges, size - 1):
                if not _connected(node_set, edge_subset):
                    continue
                tree = JoinTree(node_set, frozenset(edge_subset))
                leaves = tree.leaves()
                for proj in product(*options):
                    hosts = {s.instance for s in proj}
                    if any(leaf not in hosts for leaf in leaves):
                        continue
                    key = canonical_key(tree, proj)
                    if key in seen:
                        continue
                    seen.add(key)
                    yield CandidateQuery(tree, tuple(proj))
