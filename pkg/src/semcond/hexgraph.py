"""Hierarchy-and-exclusion (HEX) graphs over label variables.

A HEX graph has one node per label coordinate, directed hierarchy edges
(parent, child) meaning the child implies the parent, and undirected
exclusion edges meaning the two labels can never both be on.  Translated to
logic, edge (i, j) in the hierarchy contributes the clause ``yi | ~yj`` and
an exclusion pair {i, j} contributes ``~yi | ~yj``.

Besides ingestion and validation the module implements the standard graph
surgery used before compilation: deriving exclusions between provably
disjoint subtrees, pruning pass-through nodes, and sparsifying the hierarchy
to its transitive reduction.  Reachability is always computed on the full
closure, so the transforms are insensitive to whether the input hierarchy
was given dense or sparse.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .errors import GraphCycleError, HexFormatError
from .logic import Formula, Not, Or, Signature, Var, conj


@dataclass(frozen=True)
class HexGraph:
    """Immutable HEX graph; edges are stored as sorted 0-based index pairs."""

    names: tuple[str, ...]
    hierarchy: tuple[tuple[int, int], ...]  # (parent, child)
    exclusion: tuple[tuple[int, int], ...]  # unordered, kept as (min, max)

    @property
    def n(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise HexFormatError(f"unknown node {name!r}") from None

    def parents(self, v: int) -> list[int]:
        return [p for p, c in self.hierarchy if c == v]

    def children(self, v: int) -> list[int]:
        return [c for p, c in self.hierarchy if p == v]

    def to_dict(self) -> dict:
        """Canonical JSON-ready form (edges by name, deterministically sorted)."""
        return {
            "nodes": list(self.names),
            "hierarchy": [[self.names[p], self.names[c]] for p, c in self.hierarchy],
            "exclusion": [[self.names[i], self.names[j]] for i, j in self.exclusion],
        }

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def ingest_hex(nodes, hierarchy, exclusion) -> HexGraph:
    """Validate and normalize raw node/edge lists (by name) into a HexGraph.

    Rejects duplicate or missing nodes, unknown endpoints, self-loops, pairs
    appearing both as hierarchy and exclusion edges, and hierarchies with
    directed cycles.
    """
    nodes = [str(x) for x in nodes]
    if not nodes:
        raise HexFormatError("a HEX graph needs at least one node")
    if len(set(nodes)) != len(nodes):
        dupes = sorted({x for x in nodes if nodes.count(x) > 1})
        raise HexFormatError(f"duplicate node names: {dupes}")
    index = {name: i for i, name in enumerate(nodes)}

    def resolve(pair, kind):
        if len(pair) != 2:
            raise HexFormatError(f"{kind} edge {pair!r} is not a pair")
        a, b = str(pair[0]), str(pair[1])
        for x in (a, b):
            if x not in index:
                raise HexFormatError(f"{kind} edge endpoint {x!r} is not a node")
        if a == b:
            raise HexFormatError(f"{kind} self-loop on {a!r}")
        return index[a], index[b]

    hier = sorted({resolve(p, "hierarchy") for p in hierarchy})
    excl = sorted({tuple(sorted(resolve(p, "exclusion"))) for p in exclusion})

    hier_pairs = {tuple(sorted(e)) for e in hier}
    overlap = hier_pairs & set(excl)
    if overlap:
        i, j = sorted(overlap)[0]
        raise HexFormatError(
            f"pair ({nodes[i]!r}, {nodes[j]!r}) appears as both hierarchy and exclusion"
        )

    _check_acyclic(len(nodes), hier, nodes)
    return HexGraph(tuple(nodes), tuple(hier), tuple(excl))


def hex_from_dict(d: dict) -> HexGraph:
    """Build from the JSON object form {"nodes", "hierarchy", "exclusion"}."""
    if not isinstance(d, dict) or "nodes" not in d:
        raise HexFormatError("expected an object with a 'nodes' list")
    return ingest_hex(d.get("nodes", []), d.get("hierarchy", []), d.get("exclusion", []))


def _check_acyclic(n, edges, names):
    indeg = [0] * n
    out = [[] for _ in range(n)]
    for p, c in edges:
        out[p].append(c)
        indeg[c] += 1
    queue = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while queue:
        v = queue.pop()
        seen += 1
        for c in out[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    if seen != n:
        stuck = sorted(names[v] for v in range(n) if indeg[v] > 0)
        raise GraphCycleError(f"hierarchy contains a directed cycle through {stuck}")


def descendant_maps(h: HexGraph) -> list[set[int]]:
    """descendants-or-self per node, computed on full reachability.

    Iterative (reverse topological order) so kilonode-deep chains do not hit
    the recursion limit.
    """
    out = [[] for _ in range(h.n)]
    indeg = [0] * h.n
    for p, c in h.hierarchy:
        out[p].append(c)
        indeg[c] += 1
    order = [v for v in range(h.n) if indeg[v] == 0]
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        for c in out[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                order.append(c)
    reach: list[set[int]] = [set() for _ in range(h.n)]
    for v in reversed(order):
        acc = {v}
        for c in out[v]:
            acc |= reach[c]
        reach[v] = acc
    return reach


def derive_exclusions(h: HexGraph) -> HexGraph:
    """Add an exclusion for every pair whose descendant-or-self sets are disjoint.

    Disjointness implies the pair is unrelated in the hierarchy, so no clause
    conflicts with an existing edge.  Existing exclusions are kept.
    """
    desc = descendant_maps(h)
    masks = [0] * h.n
    for v, s in enumerate(desc):
        m = 0
        for u in s:
            m |= 1 << u
        masks[v] = m
    excl = set(h.exclusion)
    for i in range(h.n):
        for j in range(i + 1, h.n):
            if masks[i] & masks[j] == 0:
                excl.add((i, j))
    return HexGraph(h.names, h.hierarchy, tuple(sorted(excl)))


def prune_pass_through(h: HexGraph) -> HexGraph:
    """Remove chain nodes with exactly one parent and one child, to a fixpoint.

    Only nodes free of exclusion edges are eligible; dropping an excluded
    node would change which label combinations are admissible on the
    surviving variables.  The parent is reconnected to the child, which
    preserves the model set projected onto the remaining coordinates.
    """
    names = list(h.names)
    hier = set(h.hierarchy)
    excl = set(h.exclusion)
    alive = list(range(h.n))

    changed = True
    while changed:
        changed = False
        for v in list(alive):
            ps = [p for p, c in hier if c == v]
            cs = [c for p, c in hier if p == v]
            touched = any(v in pair for pair in excl)
            if len(ps) == 1 and len(cs) == 1 and not touched:
                alive.remove(v)
                hier.discard((ps[0], v))
                hier.discard((v, cs[0]))
                hier.add((ps[0], cs[0]))
                changed = True

    remap = {old: new for new, old in enumerate(alive)}
    new_hier = sorted((remap[p], remap[c]) for p, c in hier if p in remap and c in remap)
    new_excl = sorted(
        tuple(sorted((remap[i], remap[j]))) for i, j in excl if i in remap and j in remap
    )
    return HexGraph(tuple(names[v] for v in alive), tuple(new_hier), tuple(new_excl))


def densify_hierarchy(h: HexGraph) -> HexGraph:
    """Replace the hierarchy with its transitive closure."""
    desc = descendant_maps(h)
    edges = sorted((p, c) for p in range(h.n) for c in desc[p] if c != p)
    return HexGraph(h.names, tuple(edges), h.exclusion)


def sparsify_hierarchy(h: HexGraph) -> HexGraph:
    """Replace the hierarchy with its transitive reduction.

    Because the implication clauses compose transitively, the reduced edge
    set has exactly the same models as the dense one.
    """
    desc = descendant_maps(h)
    kept = []
    edges = set(h.hierarchy)
    for p, c in sorted(edges):
        redundant = any(
            (p, w) in edges and w != c and c in desc[w] for w in range(h.n)
        )
        if not redundant:
            kept.append((p, c))
    return HexGraph(h.names, tuple(kept), h.exclusion)


def expanded_exclusions(h: HexGraph) -> set[tuple[int, int]]:
    """All implied exclusions: descendants of excluded nodes exclude each other."""
    desc = descendant_maps(h)
    out: set[tuple[int, int]] = set()
    for i, j in h.exclusion:
        for u in desc[i]:
            for v in desc[j]:
                if u != v:
                    out.add((min(u, v), max(u, v)))
    return out


def reduced_exclusions(h: HexGraph) -> set[tuple[int, int]]:
    """A minimal generating subset of the expanded exclusion relation."""
    full = expanded_exclusions(h)
    anc: list[set[int]] = [set() for _ in range(h.n)]
    for v, s in enumerate(descendant_maps(h)):
        for u in s:
            anc[u].add(v)
    kept = set()
    for i, j in full:
        implied = any(
            (min(p, q), max(p, q)) in full and (min(p, q), max(p, q)) != (i, j)
            for p in anc[i]
            for q in anc[j]
        )
        if not implied:
            kept.add((i, j))
    return kept


def hex_to_formula(h: HexGraph) -> Formula:
    """Conjunction of one clause per edge; the empty graph yields true."""
    clauses = [Or((Var(p + 1), Not(Var(c + 1)))) for p, c in h.hierarchy]
    clauses += [Or((Not(Var(i + 1)), Not(Var(j + 1)))) for i, j in h.exclusion]
    return Formula(conj(clauses), Signature(h.n, h.names))
