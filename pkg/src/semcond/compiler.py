"""Compilation of HEX constraints into a junction tree for exact inference.

Every hierarchy or exclusion edge is a two-variable clause, so the primal
constraint graph simply connects the endpoints of every edge.  Compilation
triangulates that graph with min-fill elimination (lowest index on ties),
collects the maximal cliques, links them into a junction tree by maximum
separator weight, and tabulates the locally valid assignments of every
clique once, up front.  Inference then only ever touches those sparse valid
state tables, never 2^k anything.

The compiled artifact is deterministic: identical graphs produce
byte-identical serialized output, and the source graph travels along with a
content hash so downstream results can be traced back to their constraint.
"""

from __future__ import annotations

import heapq
import json
import pathlib
from collections import deque

import numpy as np

from .errors import HexFormatError, InputError, TreewidthCapError
from .hexgraph import (
    HexGraph,
    densify_hierarchy,
    expanded_exclusions,
    hex_from_dict,
    reduced_exclusions,
    sparsify_hierarchy,
)
from .logic import Formula, all_states, as_label_vector, parse_formula

MAX_CLIQUE_VARS = 22

FORMAT_NAME = "semcond-knowledge"
FORMAT_VERSION = 1


def _min_fill_clusters(n: int, adj: list[set[int]]) -> list[tuple[int, ...]]:
    """Eliminate vertices by min-fill (ties to the lowest index).

    Returns the elimination clusters; the graph is triangulated in place.
    A lazy heap keeps long chains near-linear: entries are revalidated
    against a per-vertex stamp when popped.
    """
    work = [set(s) for s in adj]
    remaining = set(range(n))
    stamp = [0] * n

    def fill(v: int) -> int:
        nb = sorted(work[v])
        count = 0
        for i, x in enumerate(nb):
            for y in nb[i + 1 :]:
                if y not in work[x]:
                    count += 1
        return count

    heap = [(fill(v), v, 0) for v in range(n)]
    heapq.heapify(heap)
    clusters = []
    while remaining:
        f, v, s = heapq.heappop(heap)
        if v not in remaining:
            continue
        if s != stamp[v]:
            heapq.heappush(heap, (fill(v), v, stamp[v]))
            continue
        nb = sorted(work[v])
        clusters.append(tuple(sorted([v] + nb)))
        for i, x in enumerate(nb):
            for y in nb[i + 1 :]:
                if y not in work[x]:
                    work[x].add(y)
                    work[y].add(x)
        touched = set(nb)
        for x in nb:
            work[x].discard(v)
            touched |= work[x]
        remaining.remove(v)
        work[v] = set()
        for x in touched & remaining:
            stamp[x] += 1
            heapq.heappush(heap, (fill(x), x, stamp[x]))
    return clusters


def _maximal_cliques(clusters: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    unique = sorted(set(clusters), key=lambda c: (len(c), c))
    kept = []
    for i, c in enumerate(unique):
        cs = set(c)
        if not any(cs < set(d) for d in unique[i + 1 :]):
            kept.append(c)
    return sorted(kept)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def _spanning_tree(cliques: list[tuple[int, ...]]) -> list[tuple[int, int]]:
    """Maximum-separator-weight spanning tree over the cliques.

    Candidate edges only exist between cliques sharing variables; leftover
    components (variable-disjoint) are attached to clique 0 with empty
    separators, which cannot break the running intersection property.
    """
    by_var: dict[int, list[int]] = {}
    for ci, cv in enumerate(cliques):
        for v in cv:
            by_var.setdefault(v, []).append(ci)
    weight: dict[tuple[int, int], int] = {}
    for cs in by_var.values():
        for i in range(len(cs)):
            for j in range(i + 1, len(cs)):
                pair = (cs[i], cs[j])
                weight[pair] = weight.get(pair, 0) + 1
    uf = _UnionFind(len(cliques))
    edges = []
    for (i, j), w in sorted(weight.items(), key=lambda kv: (-kv[1], kv[0])):
        if uf.union(i, j):
            edges.append((i, j))
    for ci in range(1, len(cliques)):
        if uf.union(0, ci):
            edges.append((0, ci))
    return edges


def _valid_codes(clique: tuple[int, ...], clause_map: dict) -> np.ndarray:
    """Locally consistent assignments of a clique, as little-endian bit codes."""
    w = len(clique)
    codes = np.arange(2**w, dtype=np.int64)
    keep = np.ones(codes.shape[0], dtype=bool)
    pos = {v: i for i, v in enumerate(clique)}
    for i, u in enumerate(clique):
        for v in clique[i + 1 :]:
            for kind, a, b in clause_map.get((u, v), ()):
                bit_a = (codes >> pos[a]) & 1
                bit_b = (codes >> pos[b]) & 1
                if kind == "h":  # a is the parent: forbid child without parent
                    keep &= ~((bit_a == 0) & (bit_b == 1))
                else:  # exclusion: never both on
                    keep &= ~((bit_a == 1) & (bit_b == 1))
    return codes[keep]


class _MessagePlan:
    """Precomputed index arrays for one direction of one tree edge.

    The emitter's valid states are grouped by their separator assignment
    (a little-endian code over the separator variables); messages are then
    segmented reductions over those groups.  The receiver's states gather by
    binary search into the emitter's code table; separator assignments the
    emitter cannot realize are flagged missing and read as -inf.
    """

    def __init__(self, emit_vars, emit_bits, recv_vars, recv_bits, sep_vars):
        sep = np.asarray(sep_vars, dtype=np.int64)
        powers = 1 << np.arange(sep.shape[0], dtype=np.int64)
        e_pos = np.searchsorted(emit_vars, sep)
        r_pos = np.searchsorted(recv_vars, sep)
        proj_e = emit_bits[:, e_pos].astype(np.int64) @ powers
        proj_r = recv_bits[:, r_pos].astype(np.int64) @ powers
        self.codes = np.unique(proj_e)
        idx_e = np.searchsorted(self.codes, proj_e)
        self.order = np.argsort(idx_e, kind="stable")
        sorted_idx = idx_e[self.order]
        self.starts = np.searchsorted(sorted_idx, np.arange(self.codes.shape[0]))
        self.seg_ids = sorted_idx
        clipped = np.clip(np.searchsorted(self.codes, proj_r), 0, self.codes.shape[0] - 1)
        self.recv_missing = self.codes[clipped] != proj_r
        self.recv_idx = np.where(self.recv_missing, 0, clipped)
        self.n_sep = self.codes.shape[0]
        self.emit_state_sep = idx_e


class _CliquePlan:
    def __init__(self, vars_, codes):
        self.vars = np.asarray(vars_, dtype=np.int64)
        w = self.vars.shape[0]
        self.codes = np.asarray(codes, dtype=np.int64)
        self.bits = ((self.codes[:, None] >> np.arange(w, dtype=np.int64)) & 1).astype(
            np.uint8
        )
        self.parent = -1
        self.children: list[int] = []
        self.up: _MessagePlan | None = None  # this clique -> parent
        self.down: _MessagePlan | None = None  # parent -> this clique
        self.sep_vars: tuple[int, ...] = ()
        self.home_vars = np.empty(0, dtype=np.int64)
        self.home_bits = np.empty((self.codes.shape[0], 0), dtype=np.float64)


class CompiledKnowledge:
    """A HEX constraint compiled for exact message passing.

    Holds the source graph (with a content digest), the junction tree with
    per-clique valid-state tables, and the dense/sparse views of the
    hierarchy and exclusion relations.  Instances are cheap to query and
    meant to be compiled once, saved, and reloaded.
    """

    def __init__(self, source: HexGraph, cliques, valid_codes, tree_edges, root=0):
        self.source = source
        self.k = source.n
        self.names = source.names
        self.cliques = tuple(tuple(int(v) for v in c) for c in cliques)
        self.tree_edges = tuple((int(p), int(c)) for p, c in tree_edges)
        self.root = int(root)
        self._plans = [
            _CliquePlan(c, codes) for c, codes in zip(self.cliques, valid_codes)
        ]
        self._wire_tree()
        self._assign_homes()
        self._matrix_cache: dict[str, np.ndarray] = {}
        self._map_plan = None

    # -- construction ---------------------------------------------------

    def _wire_tree(self):
        order = [self.root]
        placed = {self.root}
        for p, c in self.tree_edges:
            if p not in placed or c in placed:
                raise InputError("junction tree edges are not in parent-first order")
            self._plans[c].parent = p
            self._plans[p].children.append(c)
            placed.add(c)
            order.append(c)
        if sorted(order) != list(range(len(self.cliques))):
            raise InputError("junction tree edges do not span the cliques")
        self.downward_order = order  # parents always precede children
        self.upward_order = order[::-1]
        for c in range(len(self.cliques)):
            plan = self._plans[c]
            plan.children.sort()
            if plan.parent >= 0:
                pp = self._plans[plan.parent]
                sep = sorted(set(self.cliques[c]) & set(self.cliques[plan.parent]))
                plan.up = _MessagePlan(plan.vars, plan.bits, pp.vars, pp.bits, sep)
                plan.down = _MessagePlan(pp.vars, pp.bits, plan.vars, plan.bits, sep)
                plan.sep_vars = tuple(sep)

    def _assign_homes(self):
        home: dict[int, int] = {}
        for ci, cv in enumerate(self.cliques):
            for v in cv:
                if v not in home:
                    home[v] = ci
        if sorted(home) != list(range(self.k)):
            raise InputError("cliques do not cover every variable")
        for ci, plan in enumerate(self._plans):
            mine = [v for v in self.cliques[ci] if home[v] == ci]
            plan.home_vars = np.asarray(mine, dtype=np.int64)
            pos = np.searchsorted(plan.vars, plan.home_vars)
            plan.home_bits = plan.bits[:, pos].astype(np.float64)
        self.home_clique = home

    # -- queries over structure ------------------------------------------

    @property
    def max_clique_size(self) -> int:
        return max(len(c) for c in self.cliques)

    def entails(self, y) -> bool:
        """Whether a label vector satisfies the compiled constraint."""
        y = as_label_vector(y, self.k)
        for plan in self._plans:
            w = plan.vars.shape[0]
            code = int(y[plan.vars].astype(np.int64) @ (1 << np.arange(w, dtype=np.int64)))
            i = int(np.searchsorted(plan.codes, code))
            if i >= plan.codes.shape[0] or plan.codes[i] != code:
                return False
        return True

    def consistent_states(self) -> np.ndarray:
        """All satisfying label vectors (lexicographic order), via the tables.

        Exhaustive over 2^k, so only usable at small k; serves as the
        decoded view of the compiled artifact for cross-checks.
        """
        states = all_states(self.k)
        keep = np.ones(states.shape[0], dtype=bool)
        for plan in self._plans:
            w = plan.vars.shape[0]
            powers = 1 << np.arange(w, dtype=np.int64)
            codes = states[:, plan.vars].astype(np.int64) @ powers
            keep &= np.isin(codes, plan.codes)
        return states[keep]

    # -- relation matrices -------------------------------------------------

    def _matrix(self, key: str) -> np.ndarray:
        if key not in self._matrix_cache:
            n = self.k
            out = np.zeros((n, n), dtype=bool)
            if key == "hierarchy_dense":
                for p, c in densify_hierarchy(self.source).hierarchy:
                    out[p, c] = True
            elif key == "hierarchy_sparse":
                for p, c in sparsify_hierarchy(self.source).hierarchy:
                    out[p, c] = True
            elif key == "exclusion_dense":
                for i, j in expanded_exclusions(self.source):
                    out[i, j] = out[j, i] = True
            elif key == "exclusion_sparse":
                for i, j in reduced_exclusions(self.source):
                    out[i, j] = out[j, i] = True
            self._matrix_cache[key] = out
        return self._matrix_cache[key]

    @property
    def hierarchy_dense(self) -> np.ndarray:
        """Reachability matrix of the hierarchy (transitive closure)."""
        return self._matrix("hierarchy_dense")

    @property
    def hierarchy_sparse(self) -> np.ndarray:
        """Adjacency of the transitive reduction."""
        return self._matrix("hierarchy_sparse")

    @property
    def exclusion_dense(self) -> np.ndarray:
        """Symmetric matrix of all implied exclusions."""
        return self._matrix("exclusion_dense")

    @property
    def exclusion_sparse(self) -> np.ndarray:
        """Symmetric matrix of a minimal generating exclusion set."""
        return self._matrix("exclusion_sparse")

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "kind": "junction_tree",
            "k": self.k,
            "source": self.source.to_dict(),
            "source_sha256": self.source.digest(),
            "cliques": [list(c) for c in self.cliques],
            "valid_states": [plan.codes.tolist() for plan in self._plans],
            "tree_edges": [list(e) for e in self.tree_edges],
            "root": self.root,
        }


def compile_hex(h: HexGraph) -> CompiledKnowledge:
    """Build the junction tree and valid-state tables for a HEX graph."""
    n = h.n
    adj: list[set[int]] = [set() for _ in range(n)]
    clause_map: dict[tuple[int, int], list] = {}
    for p, c in h.hierarchy:
        adj[p].add(c)
        adj[c].add(p)
        clause_map.setdefault((min(p, c), max(p, c)), []).append(("h", p, c))
    for i, j in h.exclusion:
        adj[i].add(j)
        adj[j].add(i)
        clause_map.setdefault((i, j), []).append(("e", i, j))

    clusters = _min_fill_clusters(n, adj)
    oversized = [c for c in clusters if len(c) > MAX_CLIQUE_VARS]
    if oversized:
        raise TreewidthCapError(
            f"triangulation produced a clique of {len(max(oversized, key=len))} "
            f"variables, above the cap of {MAX_CLIQUE_VARS}; exact inference "
            "on this graph is out of reach"
        )
    cliques = _maximal_cliques(clusters)
    undirected = _spanning_tree(cliques)

    neighbors: dict[int, list[int]] = {i: [] for i in range(len(cliques))}
    for i, j in undirected:
        neighbors[i].append(j)
        neighbors[j].append(i)
    tree_edges = []
    seen = {0}
    queue = deque([0])
    while queue:
        p = queue.popleft()
        for c in sorted(neighbors[p]):
            if c not in seen:
                seen.add(c)
                tree_edges.append((p, c))
                queue.append(c)

    valid = [_valid_codes(c, clause_map) for c in cliques]
    return CompiledKnowledge(h, cliques, valid, tree_edges, root=0)


# -- artifact files ---------------------------------------------------------


def knowledge_kind(obj) -> str:
    if isinstance(obj, CompiledKnowledge):
        return "junction_tree"
    if isinstance(obj, Formula):
        return "formula"
    raise TypeError(f"not a knowledge object: {type(obj).__name__}")


def save_knowledge(obj, path) -> None:
    """Write a compiled graph or a formula as a versioned JSON artifact."""
    if isinstance(obj, CompiledKnowledge):
        payload = obj.to_json_dict()
    elif isinstance(obj, Formula):
        payload = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "kind": "formula",
            "k": obj.k,
            "names": list(obj.signature.names) if obj.signature.names else None,
            "formula": str(obj),
        }
    else:
        raise TypeError(f"cannot save a {type(obj).__name__} as knowledge")
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    pathlib.Path(path).write_text(text + "\n", encoding="utf-8")


def load_knowledge(path):
    """Read a knowledge artifact; returns CompiledKnowledge or Formula."""
    try:
        payload = json.loads(pathlib.Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read knowledge artifact {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != FORMAT_NAME:
        raise InputError(f"{path} is not a {FORMAT_NAME} artifact")
    if payload.get("version") != FORMAT_VERSION:
        raise InputError(
            f"unsupported artifact version {payload.get('version')!r} in {path}"
        )
    kind = payload.get("kind")
    if kind == "formula":
        names = payload.get("names")
        return parse_formula(
            payload["formula"], int(payload["k"]), tuple(names) if names else None
        )
    if kind == "junction_tree":
        source = hex_from_dict(payload["source"])
        if source.digest() != payload.get("source_sha256"):
            raise InputError(f"provenance hash mismatch in {path}")
        try:
            return CompiledKnowledge(
                source,
                [tuple(c) for c in payload["cliques"]],
                [np.asarray(v, dtype=np.int64) for v in payload["valid_states"]],
                [tuple(e) for e in payload["tree_edges"]],
                root=payload.get("root", 0),
            )
        except (KeyError, HexFormatError) as exc:
            raise InputError(f"malformed junction-tree artifact {path}: {exc}") from exc
    raise InputError(f"unknown knowledge kind {kind!r} in {path}")
