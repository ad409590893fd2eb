"""Independent brute-force oracles used to check enumeration and synthesis.

These deliberately reimplement the logic with different algorithms: subsets +
union-find instead of incremental growth, pairwise isomorphism search instead
of canonical keys, and direct query execution instead of filter scheduling.
"""

from itertools import combinations, permutations, product

from mapsynth.catalog import ColumnRef
from mapsynth.constraints import eval_metadata_constraint, eval_value_constraint
from mapsynth.engine import execute_pj, verify_query
from mapsynth.schema_graph import CandidateQuery, Instance, JoinTree, Slot


def _is_tree(nodes, edges):
    if len(edges) != len(nodes) - 1:
        return False
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        if a.instance not in parent or b.instance not in parent:
            return False
        ra, rb = find(a.instance), find(b.instance)
        if ra == rb:
            return False
        parent[ra] = rb
    roots = {find(n) for n in nodes}
    return len(roots) == 1


def isomorphic(c1: CandidateQuery, c2: CandidateQuery) -> bool:
    """True when some per-relation alias bijection maps c1 onto c2."""
    if len(c1.tree.nodes) != len(c2.tree.nodes) or len(c1.tree.edges) != len(c2.tree.edges):
        return False
    by_rel1, by_rel2 = {}, {}
    for inst in c1.tree.nodes:
        by_rel1.setdefault(inst.relation, []).append(inst)
    for inst in c2.tree.nodes:
        by_rel2.setdefault(inst.relation, []).append(inst)
    if set(by_rel1) != set(by_rel2):
        return False
    if any(len(by_rel1[r]) != len(by_rel2[r]) for r in by_rel1):
        return False

    rels = sorted(by_rel1)
    for perm_combo in product(*[permutations(by_rel2[r]) for r in rels]):
        mapping = {}
        for rel, perm in zip(rels, perm_combo):
            for src, dst in zip(sorted(by_rel1[rel]), perm):
                mapping[src] = dst

        def remap(slot):
            return Slot(mapping[slot.instance], slot.column)

        edges1 = {frozenset((remap(a), remap(b))) for a, b in c1.tree.edges}
        edges2 = {frozenset((a, b)) for a, b in c2.tree.edges}
        if edges1 == edges2 and tuple(remap(s) for s in c1.projection) == c2.projection:
            return True
    return False


def brute_force_candidates(graph, related, max_edges, alias_limit=2):
    """Every valid candidate, found the slow way, deduplicated by isomorphism."""
    instances = [Instance(r, o) for r in graph.nodes for o in range(alias_limit)]
    lifted = set()
    for edge in graph.edges:
        for a in instances:
            for b in instances:
                if a.relation != edge.left.relation or b.relation != edge.right.relation:
                    continue
                if a == b:
                    continue
                lifted.add(frozenset((Slot(a, edge.left.column), Slot(b, edge.right.column))))
    lifted = [tuple(sorted(e)) for e in lifted]

    found = []
    for size in range(1, max_edges + 2):
        for nodes in combinations(sorted(instances), size):
            node_set = frozenset(nodes)
            usable = [e for e in lifted
                      if e[0].instance in node_set and e[1].instance in node_set]
            for edges in combinations(usable, size - 1):
                if not _is_tree(node_set, edges):
                    continue
                degree = {n: 0 for n in node_set}
                for a, b in edges:
                    degree[a.instance] += 1
                    degree[b.instance] += 1
                leaves = ({n for n, d in degree.items() if d == 1}
                          if size > 1 else set(node_set))
                per_target = []
                for refs in related:
                    opts = [Slot(inst, ref.column) for ref in sorted(refs)
                            for inst in nodes if inst.relation == ref.relation]
                    per_target.append(opts)
                if any(not o for o in per_target):
                    continue
                for proj in product(*per_target):
                    hosts = {s.instance for s in proj}
                    if any(leaf not in hosts for leaf in leaves):
                        continue
                    cand = CandidateQuery(JoinTree(node_set, frozenset(edges)), tuple(proj))
                    if not any(isomorphic(cand, other) for other in found):
                        found.append(cand)
    return found


def same_candidate_set(got, expected):
    """Bijective matching under isomorphism; returns a diagnostic string or None."""
    got, expected = list(got), list(expected)
    if len(got) != len(expected):
        return f"count mismatch: got {len(got)}, expected {len(expected)}"
    remaining = list(expected)
    for cand in got:
        match = next((o for o in remaining if isomorphic(cand, o)), None)
        if match is None:
            return f"unexpected candidate {cand.to_sql()}"
        remaining.remove(match)
    return None


def brute_force_related(catalog, task, options):
    """Exact per-target-column matching by scanning every cell directly."""
    result = []
    for j in range(task.arity):
        cols = set()
        for ref in catalog.columns():
            if not eval_metadata_constraint(task.metadata[j], catalog.stats[ref]):
                continue
            cells = catalog.relations[ref.relation].column_cells(ref.column)
            if all(row[j].is_empty or any(eval_value_constraint(row[j], c, options)
                                          for c in cells)
                   for row in task.samples):
                cols.add(ref)
        result.append(frozenset(cols))
    return result


def brute_force_synthesize(task, catalog, max_edges, options):
    """No-pruning oracle: verify every enumerable candidate directly."""
    from mapsynth.schema_graph import build_schema_graph
    graph = build_schema_graph(catalog)
    related = brute_force_related(catalog, task, options)
    if any(not r for r in related):
        return []
    out = []
    for cand in brute_force_candidates(graph, related, max_edges):
        if verify_query(cand, task, catalog, options):
            out.append(cand)
    return out
