"""Finite multigraphs with a fixed canonical ordering of vertices and edges.

Loops and parallel edges are allowed everywhere.  The order in which
vertices and edges were given is part of the value: it fixes every tie in
the algorithms built on top (BFS trees, chord order, echelon bases,
backtracking searches), so that all outputs are reproducible.  Whenever an
algorithm speaks of the "lower" of two ids it means the one earlier in the
canonical order.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional


class GraphError(ValueError):
    """Malformed graph data or violated precondition."""


class DisconnectedGraphError(GraphError):
    """An operation that needs a connected graph got a disconnected one."""


class MalformedWalkError(GraphError):
    """A walk violates the incidence structure of its host graph."""


class _Undecided:
    """Explicit 'search budget exceeded' result.  Never a wrong answer."""

    __slots__ = ()

    def __repr__(self):
        return "UNDECIDED"

    def __bool__(self):
        raise TypeError("an undecided result has no truth value; compare with 'is UNDECIDED'")


UNDECIDED = _Undecided()


class Multigraph:
    """A finite multigraph given by ordered vertex ids and (edge id, endpoint pair) entries."""

    __slots__ = ("vertices", "edges", "ends", "_vpos", "_epos", "_inc", "_bits")

    def __init__(self, vertices: Iterable, edges: Iterable):
        self.vertices = tuple(vertices)
        self._vpos = {v: i for i, v in enumerate(self.vertices)}
        if len(self._vpos) != len(self.vertices):
            raise GraphError("duplicate vertex id")
        eids = []
        ends = {}
        for e, pair in edges:
            u, v = pair
            if e in ends:
                raise GraphError("duplicate edge id %r" % (e,))
            if u not in self._vpos or v not in self._vpos:
                raise GraphError("edge %r has an endpoint outside the vertex set" % (e,))
            ends[e] = (u, v)
            eids.append(e)
        self.edges = tuple(eids)
        self.ends = ends
        self._epos = {e: i for i, e in enumerate(self.edges)}
        inc = {v: [] for v in self.vertices}
        for e in self.edges:
            u, v = ends[e]
            inc[u].append((e, v))
            if v != u:
                inc[v].append((e, u))
        self._inc = {v: tuple(p) for v, p in inc.items()}
        self._bits = None

    # -- basic accessors ---------------------------------------------------

    def n_vertices(self) -> int:
        return len(self.vertices)

    def n_edges(self) -> int:
        return len(self.edges)

    def vpos(self, v) -> int:
        return self._vpos[v]

    def epos(self, e) -> int:
        return self._epos[e]

    def has_vertex(self, v) -> bool:
        return v in self._vpos

    def is_loop(self, e) -> bool:
        u, v = self.ends[e]
        return u == v

    def incident(self, v):
        """(edge, other endpoint) pairs at v in canonical edge order; loops appear once."""
        return self._inc[v]

    def degree(self, v) -> int:
        d = 0
        for e, w in self._inc[v]:
            d += 2 if w == v else 1
        return d

    def other_end(self, e, v):
        u, w = self.ends[e]
        if v == u:
            return w
        if v == w:
            return u
        raise GraphError("vertex %r is not an endpoint of edge %r" % (v, e))

    def edges_between(self, u, v):
        """Edges with endpoint set {u, v}, in canonical order."""
        return tuple(e for e, w in self._inc[u] if w == v) if u != v else tuple(
            e for e, w in self._inc[u] if w == u)

    # -- traversal ---------------------------------------------------------

    def distances(self, start, cap: Optional[int] = None) -> dict:
        """BFS distances from start, truncated at cap when given."""
        if start not in self._vpos:
            raise GraphError("unknown vertex %r" % (start,))
        dist = {start: 0}
        q = deque([start])
        while q:
            u = q.popleft()
            d = dist[u]
            if cap is not None and d >= cap:
                continue
            for e, w in self._inc[u]:
                if w not in dist:
                    dist[w] = d + 1
                    q.append(w)
        return dist

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        return len(self.distances(self.vertices[0])) == len(self.vertices)

    def components(self):
        """Vertex sets of connected components, each a tuple in canonical order."""
        seen = set()
        comps = []
        for v in self.vertices:
            if v in seen:
                continue
            reach = self.distances(v)
            seen |= set(reach)
            comps.append(tuple(u for u in self.vertices if u in reach))
        return comps

    # -- derived graphs ----------------------------------------------------

    def subgraph(self, vertices, edges) -> "Multigraph":
        """Subgraph on the given vertex and edge ids, keeping canonical order."""
        vset = set(vertices)
        eset = set(edges)
        for e in eset:
            u, v = self.ends[e]
            if u not in vset or v not in vset:
                raise GraphError("edge %r leaves the chosen vertex set" % (e,))
        return Multigraph(
            (v for v in self.vertices if v in vset),
            ((e, self.ends[e]) for e in self.edges if e in eset),
        )

    def induced(self, vertices) -> "Multigraph":
        vset = set(vertices)
        es = [e for e in self.edges
              if self.ends[e][0] in vset and self.ends[e][1] in vset]
        return self.subgraph(vset, es)

    def relabel(self, vmap, emap=None) -> "Multigraph":
        """Copy with renamed ids (order preserved)."""
        emap = emap or {}
        return Multigraph(
            (vmap.get(v, v) for v in self.vertices),
            ((emap.get(e, e), (vmap.get(self.ends[e][0], self.ends[e][0]),
                               vmap.get(self.ends[e][1], self.ends[e][1])))
             for e in self.edges),
        )

    # -- bitmask view (used by the separation machinery) ---------------------

    def bits(self):
        """Cached per-vertex adjacency and incidence bitmasks."""
        if self._bits is None:
            n = len(self.vertices)
            adj = [0] * n
            inc_e = [0] * n
            epairs = []
            for e in self.edges:
                u, v = self.ends[e]
                iu, iv = self._vpos[u], self._vpos[v]
                ie = self._epos[e]
                adj[iu] |= 1 << iv
                adj[iv] |= 1 << iu
                inc_e[iu] |= 1 << ie
                inc_e[iv] |= 1 << ie
                epairs.append((iu, iv))
            self._bits = _BitView(
                vall=(1 << n) - 1,
                eall=(1 << len(self.edges)) - 1,
                adj=tuple(adj),
                inc_e=tuple(inc_e),
                epairs=tuple(epairs),
            )
        return self._bits

    def vertex_mask(self, vs) -> int:
        m = 0
        for v in vs:
            m |= 1 << self._vpos[v]
        return m

    def vertices_of_mask(self, mask: int):
        out = []
        while mask:
            b = mask & -mask
            out.append(self.vertices[b.bit_length() - 1])
            mask ^= b
        return tuple(out)

    def edge_mask_within(self, vmask: int) -> int:
        """Mask of the edges with both endpoints inside vmask."""
        b = self.bits()
        missing = b.vall & ~vmask
        out = b.eall
        while missing:
            low = missing & -missing
            out &= ~b.inc_e[low.bit_length() - 1]
            missing ^= low
        return out

    # -- equality and serialization -----------------------------------------

    def __eq__(self, other):
        return (isinstance(other, Multigraph)
                and self.vertices == other.vertices
                and self.edges == other.edges
                and self.ends == other.ends)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "Multigraph(%d vertices, %d edges)" % (len(self.vertices), len(self.edges))

    def to_json_obj(self) -> dict:
        return {
            "vertices": [str(v) for v in self.vertices],
            "edges": [{"id": str(e), "ends": [str(self.ends[e][0]), str(self.ends[e][1])]}
                      for e in self.edges],
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "Multigraph":
        try:
            vs = obj["vertices"]
            es = [(d["id"], tuple(d["ends"])) for d in obj["edges"]]
        except (KeyError, TypeError) as exc:
            raise GraphError("bad graph JSON: %s" % exc) from exc
        for _, pair in es:
            if len(pair) != 2:
                raise GraphError("edge ends must list exactly two vertices")
        return Multigraph(vs, es)

    def dumps(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, sort_keys=True)

    @staticmethod
    def loads(text: str) -> "Multigraph":
        return Multigraph.from_json_obj(json.loads(text))


@dataclass(frozen=True)
class _BitView:
    vall: int
    eall: int
    adj: tuple
    inc_e: tuple
    epairs: tuple


# ---------------------------------------------------------------------------
# walks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Walk:
    """Alternating vertex/edge sequence v0 e0 v1 ... e(k-1) vk, possibly trivial."""

    vertices: tuple
    edges: tuple

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def start(self):
        return self.vertices[0]

    @property
    def end(self):
        return self.vertices[-1]

    def is_closed(self) -> bool:
        return self.vertices[0] == self.vertices[-1]

    def reverse(self) -> "Walk":
        return Walk(tuple(reversed(self.vertices)), tuple(reversed(self.edges)))

    def concat(self, other: "Walk") -> "Walk":
        if self.end != other.start:
            raise MalformedWalkError("cannot concatenate: endpoints disagree")
        return Walk(self.vertices + other.vertices[1:], self.edges + other.edges)

    @staticmethod
    def trivial(v) -> "Walk":
        return Walk((v,), ())


def check_walk(g: Multigraph, w: Walk) -> None:
    """Raise MalformedWalkError unless w is a walk in g."""
    if len(w.vertices) != len(w.edges) + 1 or not w.vertices:
        raise MalformedWalkError("walk has mismatched vertex/edge counts")
    for v in w.vertices:
        if not g.has_vertex(v):
            raise MalformedWalkError("walk visits unknown vertex %r" % (v,))
    for i, e in enumerate(w.edges):
        if e not in g.ends:
            raise MalformedWalkError("walk uses unknown edge %r" % (e,))
        u, v = g.ends[e]
        step = {w.vertices[i], w.vertices[i + 1]}
        if step != {u, v}:
            raise MalformedWalkError("edge %r does not join consecutive walk vertices" % (e,))


def reduce_walk(g: Multigraph, w: Walk) -> Walk:
    """The reduction of w: iterated deletion of back-and-forth subwalks u e v e u.

    Deletion order does not matter (the result is the free-group normal
    form), so a single stack pass suffices.  Two consecutive traversals of
    one loop cancel like any other edge pair.
    """
    check_walk(g, w)
    vs = [w.vertices[0]]
    es = []
    for e, v in zip(w.edges, w.vertices[1:]):
        if es and es[-1] == e and vs[-2] == v:
            es.pop()
            vs.pop()
        else:
            es.append(e)
            vs.append(v)
    return Walk(tuple(vs), tuple(es))


def homotopic(g: Multigraph, w1: Walk, w2: Walk) -> bool:
    """Walks are homotopic when their reductions coincide."""
    return reduce_walk(g, w1) == reduce_walk(g, w2)


# ---------------------------------------------------------------------------
# balls
# ---------------------------------------------------------------------------

def ball(g: Multigraph, centers, rho: int) -> Multigraph:
    """The combinatorial (rho/2)-ball around the vertex set `centers`.

    It holds the vertices at distance at most floor(rho/2) from some
    center x together with the edges yz satisfying
    d(x,y) + 1 + d(z,x) <= rho; equivalently, everything lying on a closed
    walk of length at most rho at some center.  An empty center set yields
    the empty graph.
    """
    if rho < 0:
        raise GraphError("ball radius parameter must be >= 0")
    half = rho // 2
    keep_v = set()
    keep_e = set()
    for x in centers:
        dist = g.distances(x, cap=half)
        keep_v.update(dist)
        for e in g.edges:
            u, v = g.ends[e]
            du = dist.get(u)
            dv = dist.get(v)
            if du is not None and dv is not None and du + 1 + dv <= rho:
                keep_e.add(e)
    return g.subgraph(keep_v, keep_e)


# ---------------------------------------------------------------------------
# cycles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CycleSubgraph:
    """A cycle as a cyclic vertex/edge sequence; edges[i] joins vertices[i], vertices[i+1].

    Loops are cycles of length 1, a parallel edge pair is a cycle of
    length 2.  The stored sequence is canonical: it starts at the lowest
    vertex and runs toward its lower neighbour.
    """

    vertices: tuple
    edges: tuple

    @property
    def length(self) -> int:
        return len(self.edges)

    def walk_once_around(self) -> Walk:
        return Walk(self.vertices + (self.vertices[0],), self.edges)

    def edge_set(self) -> frozenset:
        return frozenset(self.edges)


def _cycle_from_edge_set(g: Multigraph, eset) -> CycleSubgraph:
    edges = sorted(eset, key=g.epos)
    if len(edges) == 1:
        e = edges[0]
        u, v = g.ends[e]
        if u != v:
            raise GraphError("single non-loop edge is not a cycle")
        return CycleSubgraph((u,), (e,))
    if len(edges) == 2:
        e, f = edges
        if set(g.ends[e]) != set(g.ends[f]) or g.is_loop(e):
            raise GraphError("two edges form a cycle only as a parallel pair")
        u, v = sorted(g.ends[e], key=g.vpos)
        return CycleSubgraph((u, v), (e, f))
    inc = {}
    for e in edges:
        u, v = g.ends[e]
        inc.setdefault(u, []).append((e, v))
        inc.setdefault(v, []).append((e, u))
    for v, pairs in inc.items():
        if len(pairs) != 2:
            raise GraphError("edge set is not 2-regular at %r" % (v,))
    start = min(inc, key=g.vpos)
    first = min(inc[start], key=lambda p: g.vpos(p[1]))
    vs = [start]
    es = [first[0]]
    cur = first[1]
    prev_edge = first[0]
    while cur != start:
        vs.append(cur)
        a, b = inc[cur]
        nxt = a if a[0] != prev_edge else b
        es.append(nxt[0])
        prev_edge = nxt[0]
        cur = nxt[1]
    if len(vs) != len(edges):
        raise GraphError("edge set is not a single cycle")
    return CycleSubgraph(tuple(vs), tuple(es))


def _cycles_through(g: Multigraph, s, r: int, min_anchor: bool):
    """Edge sets of cycles of length <= r through s.

    With min_anchor the search only reports cycles whose lowest vertex is
    s (used to list each cycle of the graph exactly once).
    """
    spos = g.vpos(s)
    out = set()
    if r >= 1:
        for e, w in g.incident(s):
            if w == s:
                out.add(frozenset((e,)))
    if r < 2:
        return out
    dist = g.distances(s, cap=r)
    path_v = [s]
    path_set = {s}
    path_e = []

    def extend(u):
        depth = len(path_e)
        for e, w in g.incident(u):
            if w == u:
                continue
            if e in path_e:
                continue
            if w == s:
                if depth == 0:
                    continue
                if depth == 1:
                    if g.epos(path_e[0]) < g.epos(e):
                        out.add(frozenset((path_e[0], e)))
                else:
                    if g.vpos(path_v[1]) < g.vpos(u):
                        out.add(frozenset(path_e + [e]))
                continue
            if w in path_set:
                continue
            if min_anchor and g.vpos(w) <= spos:
                continue
            d = dist.get(w)
            if d is None or depth + 1 + d > r:
                continue
            if depth + 2 > r:
                continue
            path_v.append(w)
            path_set.add(w)
            path_e.append(e)
            extend(w)
            path_e.pop()
            path_set.remove(w)
            path_v.pop()

    extend(s)
    return out


def enumerate_short_cycles(g: Multigraph, r: int):
    """All cycle subgraphs of length <= r, each once, in canonical order."""
    if r < 1:
        return []
    found = set()
    for s in g.vertices:
        found |= _cycles_through(g, s, r, min_anchor=True)
    cycles = [_cycle_from_edge_set(g, es) for es in found]
    cycles.sort(key=lambda c: (c.length, tuple(sorted(g.epos(e) for e in c.edges))))
    return cycles


def cycles_through_vertex(g: Multigraph, v, r: int):
    """All cycle subgraphs of length <= r that contain v, canonically ordered."""
    if r < 1:
        return []
    found = _cycles_through(g, v, r, min_anchor=False)
    cycles = [_cycle_from_edge_set(g, es) for es in found]
    cycles.sort(key=lambda c: (c.length, tuple(sorted(g.epos(e) for e in c.edges))))
    return cycles


# ---------------------------------------------------------------------------
# spanning trees and the cycle space
# ---------------------------------------------------------------------------

def spanning_tree(g: Multigraph, x0) -> tuple:
    """Edge ids of the BFS tree rooted at x0, ties broken by canonical order."""
    if not g.has_vertex(x0):
        raise GraphError("unknown root %r" % (x0,))
    parent = {x0: None}
    tree = []
    q = deque([x0])
    while q:
        u = q.popleft()
        for e, w in g.incident(u):
            if w not in parent:
                parent[w] = (e, u)
                tree.append(e)
                q.append(w)
    if len(parent) != len(g.vertices):
        raise DisconnectedGraphError("graph is not connected")
    return tuple(sorted(tree, key=g.epos))


def _tree_parents(g: Multigraph, tree, x0) -> dict:
    tset = set(tree)
    parent = {x0: None}
    q = deque([x0])
    while q:
        u = q.popleft()
        for e, w in g.incident(u):
            if e in tset and w not in parent:
                parent[w] = (e, u)
                q.append(w)
    if len(parent) != len(g.vertices):
        raise GraphError("edge set is not a spanning tree")
    if len(tset) != len(g.vertices) - 1:
        raise GraphError("edge set is not a spanning tree")
    return parent


def tree_path_walk(g: Multigraph, parent: dict, a, b) -> Walk:
    """The unique tree walk from a to b (through their meeting point)."""
    up_a = [a]
    cur = a
    seen = {a: 0}
    while parent[cur] is not None:
        cur = parent[cur][1]
        seen[cur] = len(up_a)
        up_a.append(cur)
    up_b = [b]
    cur = b
    while cur not in seen:
        cur = parent[cur][1]
        up_b.append(cur)
    meet = cur
    vs = up_a[: seen[meet] + 1]
    es = []
    for v in vs[:-1]:
        es.append(parent[v][0])
    down = list(reversed(up_b[: up_b.index(meet) + 1]))
    for v in down[1:]:
        es.append(parent[v][0])
        vs.append(v)
    return Walk(tuple(vs), tuple(es))


def fundamental_walks(g: Multigraph, tree, x0):
    """One closed walk at x0 per chord, in canonical chord order.

    The chord is traversed from its lower endpoint first; the rest of the
    walk runs along the tree.
    """
    parent = _tree_parents(g, tree, x0)
    tset = set(tree)
    walks = []
    for e in g.edges:
        if e in tset:
            continue
        u, v = g.ends[e]
        if g.vpos(v) < g.vpos(u):
            u, v = v, u
        to_u = tree_path_walk(g, parent, x0, u)
        back = tree_path_walk(g, parent, v, x0)
        mid = Walk((u, v), (e,))
        walks.append(to_u.concat(mid).concat(back))
    return walks


@dataclass(frozen=True)
class BinaryCycleSpace:
    """GF(2) cycle space of a multigraph, basis in reduced echelon form.

    Vectors are integers whose bit i refers to edge i in the canonical
    order of `edge_ids`.
    """

    edge_ids: tuple
    basis: tuple

    @property
    def dim(self) -> int:
        return len(self.basis)

    def reduce(self, vec: int) -> int:
        for row in self.basis:
            piv = row & -row
            if vec & piv:
                vec ^= row
        return vec

    def contains(self, vec: int) -> bool:
        return self.reduce(vec) == 0


def _echelonize(rows):
    basis = {}
    for vec in rows:
        for piv, row in basis.items():
            if vec & piv:
                vec ^= row
        if vec:
            piv = vec & -vec
            for p2 in list(basis):
                if basis[p2] & piv:
                    basis[p2] ^= vec
            basis[piv] = vec
    return tuple(basis[p] for p in sorted(basis))


def edge_vector(g: Multigraph, edges) -> int:
    vec = 0
    for e in edges:
        vec |= 1 << g.epos(e)
    return vec


def cycle_space_basis(g: Multigraph) -> BinaryCycleSpace:
    """Basis from the fundamental cycles of a canonical spanning forest."""
    rows = []
    seen = set()
    for root in g.vertices:
        if root in seen:
            continue
        comp = g.distances(root)
        seen |= set(comp)
        parent = {root: None}
        tset = set()
        q = deque([root])
        while q:
            u = q.popleft()
            for e, w in g.incident(u):
                if w not in parent:
                    parent[w] = (e, u)
                    tset.add(e)
                    q.append(w)
        for e in g.edges:
            u, v = g.ends[e]
            if e in tset or u not in comp:
                continue
            path = tree_path_walk(g, parent, u, v)
            vec = 1 << g.epos(e)
            for f in path.edges:
                vec ^= 1 << g.epos(f)
            rows.append(vec)
    return BinaryCycleSpace(g.edges, _echelonize(rows))


def short_cycles_span(g: Multigraph, r: int) -> bool:
    """Do the cycles of length <= r span the whole binary cycle space?"""
    space = cycle_space_basis(g)
    target = space.dim
    if target == 0:
        return True
    basis = {}
    for cyc in enumerate_short_cycles(g, r):
        vec = edge_vector(g, cyc.edges)
        for piv, row in basis.items():
            if vec & piv:
                vec ^= row
        if vec:
            basis[vec & -vec] = vec
            if len(basis) == target:
                return True
    return False


# ---------------------------------------------------------------------------
# isomorphism and automorphisms
# ---------------------------------------------------------------------------

class Isomorphism:
    """A pair of bijections (vertices, edges) commuting with incidence."""

    __slots__ = ("vertex_map", "edge_map")

    def __init__(self, vertex_map: dict, edge_map: dict):
        self.vertex_map = dict(vertex_map)
        self.edge_map = dict(edge_map)

    def __eq__(self, other):
        return (isinstance(other, Isomorphism)
                and self.vertex_map == other.vertex_map
                and self.edge_map == other.edge_map)

    def __hash__(self):
        return hash(frozenset(self.vertex_map.items()))

    def __repr__(self):
        return "Isomorphism(%r)" % (self.vertex_map,)

    def apply_vertex(self, v):
        return self.vertex_map[v]

    def apply_edge(self, e):
        return self.edge_map[e]

    def compose(self, other: "Isomorphism") -> "Isomorphism":
        """self after other."""
        return Isomorphism(
            {v: self.vertex_map[w] for v, w in other.vertex_map.items()},
            {e: self.edge_map[f] for e, f in other.edge_map.items()},
        )

    def inverse(self) -> "Isomorphism":
        return Isomorphism(
            {w: v for v, w in self.vertex_map.items()},
            {f: e for e, f in self.edge_map.items()},
        )

    @staticmethod
    def identity(g: Multigraph) -> "Isomorphism":
        return Isomorphism({v: v for v in g.vertices}, {e: e for e in g.edges})


def is_valid_isomorphism(g1: Multigraph, g2: Multigraph, iso: Isomorphism) -> bool:
    if sorted(iso.vertex_map, key=g1.vpos) != list(g1.vertices):
        return False
    if sorted(iso.vertex_map.values(), key=g2.vpos) != list(g2.vertices):
        return False
    if sorted(iso.edge_map, key=g1.epos) != list(g1.edges):
        return False
    if sorted(iso.edge_map.values(), key=g2.epos) != list(g2.edges):
        return False
    for e, f in iso.edge_map.items():
        u, v = g1.ends[e]
        if {iso.vertex_map[u], iso.vertex_map[v]} != set(g2.ends[f]):
            return False
    return True


def _initial_colors(g: Multigraph):
    cols = []
    for v in g.vertices:
        loops = sum(1 for e, w in g.incident(v) if w == v)
        cols.append((g.degree(v), loops))
    return cols


def _refine_colors(g1, g2):
    """Synchronized 1-dimensional color refinement; None when class sizes split apart."""
    c1 = _initial_colors(g1)
    c2 = _initial_colors(g2)
    while True:
        key = {}
        for cols in (c1, c2):
            for c in cols:
                key.setdefault(c, len(key))
        c1 = [key[c] for c in c1]
        c2 = [key[c] for c in c2]
        from collections import Counter
        if Counter(c1) != Counter(c2):
            return None
        sig1 = []
        for i, v in enumerate(g1.vertices):
            nb = sorted(c1[g1.vpos(w)] for e, w in g1.incident(v))
            sig1.append((c1[i], tuple(nb)))
        sig2 = []
        for i, v in enumerate(g2.vertices):
            nb = sorted(c2[g2.vpos(w)] for e, w in g2.incident(v))
            sig2.append((c2[i], tuple(nb)))
        key2 = {}
        for sig in (sig1, sig2):
            for s in sig:
                key2.setdefault(s, len(key2))
        n1 = [key2[s] for s in sig1]
        n2 = [key2[s] for s in sig2]
        if n1 == c1 and n2 == c2:
            return c1, c2
        c1, c2 = n1, n2


def _edge_multiplicities_ok(g1, g2, u, x, mapping):
    """Multiplicity of edges from u to each mapped vertex must match at x."""
    for e, w in g1.incident(u):
        if w in mapping and w != u:
            if len(g1.edges_between(u, w)) != len(g2.edges_between(x, mapping[w])):
                return False
    loops1 = sum(1 for e, w in g1.incident(u) if w == u)
    loops2 = sum(1 for e, w in g2.incident(x) if w == x)
    return loops1 == loops2


def _complete_edge_map(g1, g2, vmap):
    emap = {}
    used = set()
    for e in g1.edges:
        u, v = g1.ends[e]
        candidates = [f for f in g2.edges_between(vmap[u], vmap[v]) if f not in used]
        if not candidates:
            return None
        f = candidates[0]
        emap[e] = f
        used.add(f)
    return emap


def _iso_search(g1: Multigraph, g2: Multigraph, budget: int, find_all: bool):
    """Backtracking vertex search with color refinement.

    Returns (results, exhausted); results is a list of vertex maps.
    Vertices are assigned in a BFS-like order so that each new vertex has a
    mapped neighbour whenever the graph is connected, which keeps candidate
    sets small.
    """
    if len(g1.vertices) != len(g2.vertices) or len(g1.edges) != len(g2.edges):
        return [], True
    refined = _refine_colors(g1, g2)
    if refined is None:
        return [], True
    c1, c2 = refined

    order = []
    placed = set()
    ranked = sorted(g1.vertices, key=lambda v: (c1.count(c1[g1.vpos(v)]), g1.vpos(v)))
    while len(order) < len(g1.vertices):
        seed = next(v for v in ranked if v not in placed)
        order.append(seed)
        placed.add(seed)
        q = deque([seed])
        while q:
            u = q.popleft()
            for e, w in g1.incident(u):
                if w not in placed:
                    placed.add(w)
                    order.append(w)
                    q.append(w)

    by_color = {}
    for x in g2.vertices:
        by_color.setdefault(c2[g2.vpos(x)], []).append(x)

    results = []
    mapping = {}
    used = set()
    nodes = 0
    exhausted = True

    def candidates(u):
        col = c1[g1.vpos(u)]
        anchor = None
        for e, w in g1.incident(u):
            if w in mapping and w != u:
                anchor = w
                break
        if anchor is None:
            pool = by_color.get(col, ())
        else:
            pool = [x for e, x in g2.incident(mapping[anchor]) if x != mapping[anchor]]
            pool = sorted(set(pool), key=g2.vpos)
        return [x for x in pool
                if x not in used and c2[g2.vpos(x)] == col
                and _edge_multiplicities_ok(g1, g2, u, x, mapping)]

    def backtrack(i):
        nonlocal nodes, exhausted
        if nodes > budget:
            exhausted = False
            return True
        if i == len(order):
            emap = _complete_edge_map(g1, g2, mapping)
            if emap is not None:
                results.append((dict(mapping), emap))
                if not find_all:
                    return True
            return False
        u = order[i]
        for x in candidates(u):
            nodes += 1
            mapping[u] = x
            used.add(x)
            stop = backtrack(i + 1)
            del mapping[u]
            used.discard(x)
            if stop:
                return True
        return False

    backtrack(0)
    return results, exhausted


def isomorphic(g1: Multigraph, g2: Multigraph, budget: int = 2_000_000):
    """First isomorphism found under the canonical backtracking order.

    Returns an Isomorphism, None when provably non-isomorphic, or UNDECIDED
    when the search budget runs out.
    """
    results, exhausted = _iso_search(g1, g2, budget, find_all=False)
    if results:
        vmap, emap = results[0]
        return Isomorphism(vmap, emap)
    return None if exhausted else UNDECIDED


def automorphisms(g: Multigraph, budget: int = 2_000_000):
    """The full automorphism group as an explicit list, or UNDECIDED.

    The list always starts with the identity and is closed under
    composition and inverses.
    """
    results, exhausted = _iso_search(g, g, budget, find_all=True)
    if not exhausted:
        return UNDECIDED
    autos = [Isomorphism(vmap, emap) for vmap, emap in results]
    ident = Isomorphism.identity(g)
    autos.sort(key=lambda a: tuple(g.vpos(a.vertex_map[v]) for v in g.vertices))
    if ident not in autos:
        raise GraphError("automorphism search lost the identity")
    return autos
