"""Filters: connected subtrees of candidate join trees with induced projections.

A filter is the unit of cheap validation. Filters are shared: when two
candidates contain the same (subtree, projected-columns) pair up to alias
renaming, one filter carries both memberships, so a single failure can prune
many candidates at once. Containment edges (child strictly inside parent)
support both directions of inference: a failing child fails its parents, a
passing parent passes its children.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .schema_graph import CandidateQuery, JoinTree, Slot, _connected, canonical_key

FilterKey = tuple


@dataclass
class Filter:
    key: FilterKey
    subtree: JoinTree
    induced: tuple[tuple[int, Slot], ...]  # (target column index, source slot)
    parent_candidates: set[int] = field(default_factory=set)
    parents: set[FilterKey] = field(default_factory=set)   # strictly containing filters
    children: set[FilterKey] = field(default_factory=set)  # strictly contained filters

    @property
    def edge_count(self) -> int:
        return len(self.subtree.edges)

    @property
    def target_columns(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.induced)

    def describe(self) -> str:
        cols = ", ".join(f"c{j}={slot.instance.relation}.{slot.column}"
                         for j, slot in self.induced)
        rels = " ⋈ ".join(sorted({i.relation for i in self.subtree.nodes}))
        return f"[{rels} | {cols}]"


def filter_key(subtree: JoinTree, induced) -> FilterKey:
    slots = tuple(slot for _, slot in induced)
    return (tuple(j for j, _ in induced), canonical_key(subtree, slots))


@dataclass
class FilterDAG:
    filters: dict[FilterKey, Filter] = field(default_factory=dict)
    maximal_for: dict[int, FilterKey] = field(default_factory=dict)
    max_edge_count: int = 0

    def add_candidate(self, idx: int, cand: CandidateQuery) -> list[FilterKey]:
        """Register every connected subtree of the candidate that carries at
        least one projected column; returns the candidate's filter keys."""
        nodes = sorted(cand.tree.nodes)
        realizations: dict[frozenset, FilterKey] = {}
        for size in range(1, len(nodes) + 1):
            for subset in combinations(nodes, size):
                chosen = frozenset(subset)
                edges = frozenset(e for e in cand.tree.edges
                                  if e[0].instance in chosen and e[1].instance in chosen)
                if not _connected(chosen, edges):
                    continue
                induced = tuple((j, slot) for j, slot in enumerate(cand.projection)
                                if slot.instance in chosen)
                if not induced:
                    continue
                subtree = JoinTree(chosen, edges)
                key = filter_key(subtree, induced)
                realizations[chosen] = key
                node = self.filters.get(key)
                if node is None:
                    node = Filter(key, subtree, induced)
                    self.filters[key] = node
                    self.max_edge_count = max(self.max_edge_count, node.edge_count)
                node.parent_candidates.add(idx)

        for small, small_key in realizations.items():
            for big, big_key in realizations.items():
                if small < big:
                    self.filters[small_key].parents.add(big_key)
                    self.filters[big_key].children.add(small_key)

        full_key = realizations[frozenset(cand.tree.nodes)]
        self.maximal_for[idx] = full_key
        return list(realizations.values())

    def ancestors(self, key: FilterKey) -> set[FilterKey]:
        return self._closure(key, "parents")

    def descendants(self, key: FilterKey) -> set[FilterKey]:
        return self._closure(key, "children")

    def _closure(self, key: FilterKey, direction: str) -> set[FilterKey]:
        out: set[FilterKey] = set()
        stack = list(getattr(self.filters[key], direction))
        while stack:
            k = stack.pop()
            if k in out:
                continue
            out.add(k)
            stack.extend(getattr(self.filters[k], direction) - out)
        return out
