"""Splitting stars of nested separation sets and their tree-decompositions.

A finite nested set N of proper separations induces a tree whose nodes are
the splitting stars of N and whose edges join the two stars holding the
two orientations of a member of N.  Parts are intersections of the big
sides of a star.  Everything here is finite, so every orientation has
maximal elements and every oriented separation lies in exactly one star.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

from localdec.multigraph import GraphError, Multigraph
from localdec.tangles import NestedSet, Separation, nested, oriented_le


def _seps_of(n) -> tuple:
    if isinstance(n, NestedSet):
        return n.separations
    return tuple(n)


def _check_nested_proper(seps: Sequence[Separation]) -> None:
    for s in seps:
        if not s.proper:
            raise GraphError("nested set contains an improper separation")
    for s, t in combinations(seps, 2):
        if s == t:
            raise GraphError("nested set lists a separation twice")
        if not nested(s, t):
            raise GraphError("set of separations is not nested")


def consistent_orientations(n) -> list:
    """All consistent orientations of a finite nested separation set.

    An orientation is returned as a tuple of flip flags aligned with the
    separations; flag 0 picks (A, B), flag 1 picks (B, A).  Consistency
    forbids containing (B, A) when (A, B) lies below another member.
    """
    seps = _seps_of(n)
    _check_nested_proper(seps)
    count = len(seps)
    out = []
    flags = [0] * count

    def conflicts(i: int, fi: int) -> bool:
        f1, s1 = seps[i].oriented(bool(fi))
        for j in range(i):
            f2, s2 = seps[j].oriented(bool(flags[j]))
            # (s1, f1) <= chosen_j  or  (s2, f2) <= chosen_i
            if oriented_le(s1, f1, f2, s2) or oriented_le(s2, f2, f1, s1):
                return True
        return False

    def rec(i: int):
        if i == count:
            out.append(tuple(flags))
            return
        for fi in (0, 1):
            if not conflicts(i, fi):
                flags[i] = fi
                rec(i + 1)
        flags[i] = 0

    rec(0)
    return out


@dataclass(frozen=True)
class SplittingStar:
    """The maximal oriented separations of one consistent orientation."""

    members: tuple  # sorted tuple of (separation index, flip flag)

    def __len__(self):
        return len(self.members)


def _maximal_members(seps, flags) -> tuple:
    oriented = [seps[i].oriented(bool(flags[i])) for i in range(len(seps))]
    maximal = []
    for i, (f1, s1) in enumerate(oriented):
        dominated = False
        for j, (f2, s2) in enumerate(oriented):
            if i != j and oriented_le(f1, s1, f2, s2):
                dominated = True
                break
        if dominated:
            continue
        maximal.append((i, flags[i]))
    # every member must lie below a maximal one (finite: automatic); check
    for i, (f1, s1) in enumerate(oriented):
        if not any(oriented_le(f1, s1, *oriented[j]) for j, _ in maximal):
            raise GraphError("orientation member escapes all maximal elements")
    return tuple(sorted(maximal))


def splitting_stars(n) -> list:
    """The splitting stars of a nested set, one per consistent orientation."""
    seps = _seps_of(n)
    stars = []
    seen = set()
    for flags in consistent_orientations(seps):
        star = SplittingStar(_maximal_members(seps, flags))
        if star.members in seen:
            raise GraphError("two consistent orientations share a splitting star")
        seen.add(star.members)
        stars.append(star)
    stars.sort(key=lambda s: s.members)
    return stars


@dataclass
class TreeDecomposition:
    """Tree of splitting stars with parts; nodes are named t0, t1, ..."""

    graph: Multigraph
    tree: Multigraph
    parts: dict                 # node id -> tuple of vertices (canonical order)
    stars: dict                 # node id -> SplittingStar
    edge_separation: dict       # tree edge id -> Separation
    separations: tuple          # the inducing nested set, in input order

    def part_mask(self, node) -> int:
        return self.graph.vertex_mask(self.parts[node])

    def adhesion(self, edge) -> tuple:
        s = self.edge_separation[edge]
        return self.graph.vertices_of_mask(s.separator)

    def to_json_obj(self) -> dict:
        return {
            "nodes": [{"id": str(t), "part": [str(v) for v in self.parts[t]]}
                      for t in self.tree.vertices],
            "edges": [{"a": str(self.tree.ends[e][0]),
                       "b": str(self.tree.ends[e][1]),
                       "adhesion": [str(v) for v in self.adhesion(e)]}
                      for e in self.tree.edges],
        }

    def to_dot(self) -> str:
        lines = ["graph tree_decomposition {"]
        for t in self.tree.vertices:
            label = ",".join(str(v) for v in self.parts[t])
            lines.append('  "%s" [label="%s"];' % (t, label))
        for e in self.tree.edges:
            a, b = self.tree.ends[e]
            lines.append('  "%s" -- "%s" [label="k=%d"];'
                         % (a, b, len(self.adhesion(e))))
        lines.append("}")
        return "\n".join(lines) + "\n"


def induce_tree_decomposition(g: Multigraph, n) -> TreeDecomposition:
    """The tree-decomposition whose tree edges realize exactly the given
    nested set of proper separations.

    Nodes are splitting stars, adjacent when they hold the two orientations
    of one member; the part at a star is the intersection of its big sides.
    Verifies on the way out: the node/edge structure is a tree, the
    decomposition axioms hold, the oriented tree edges are order-isomorphic
    to the orientations of the nested set, and the induced separations give
    back the set exactly.
    """
    seps = _seps_of(n)
    _check_nested_proper(seps)
    stars = splitting_stars(seps)
    bits = g.bits()

    node_ids = ["t%d" % i for i in range(len(stars))]
    star_of = dict(zip(node_ids, stars))
    node_of_member = {}
    for t, star in star_of.items():
        for member in star.members:
            if member in node_of_member:
                raise GraphError("an oriented separation lies in two stars")
            node_of_member[member] = t
    for i in range(len(seps)):
        for flag in (0, 1):
            if (i, flag) not in node_of_member:
                raise GraphError("an oriented separation lies in no star")

    edges = []
    edge_sep = {}
    for i, s in enumerate(seps):
        a = node_of_member[(i, 0)]
        b = node_of_member[(i, 1)]
        eid = "s%d" % i
        edges.append((eid, (a, b)))
        edge_sep[eid] = s
    tree = Multigraph(node_ids, edges)
    if len(tree.vertices) != len(tree.edges) + 1 or not tree.is_connected():
        raise GraphError("splitting stars do not form a tree")

    parts = {}
    for t, star in star_of.items():
        mask = bits.vall
        for i, flag in star.members:
            mask &= seps[i].oriented(bool(flag))[1]
        if mask == 0:
            raise GraphError("splitting star has an empty part")
        parts[t] = g.vertices_of_mask(mask)

    td = TreeDecomposition(g, tree, parts, star_of, edge_sep, tuple(seps))
    report = verify_tree_decomposition(g, td)
    if not report.passed:
        raise GraphError("induced tree-decomposition fails: %s" % (report.failures(),))
    _assert_round_trip(td)
    _assert_alpha_order_isomorphism(td)
    return td


def _side_of_tree_edge(td: TreeDecomposition, edge, towards) -> int:
    """Vertex mask of the union of parts in the component of tree - edge
    containing `towards`."""
    a, b = td.tree.ends[edge]
    seen = {towards}
    stack = [towards]
    while stack:
        t = stack.pop()
        for e, w in td.tree.incident(t):
            if e == edge or w in seen:
                continue
            seen.add(w)
            stack.append(w)
    mask = 0
    for t in seen:
        mask |= td.part_mask(t)
    return mask


def induced_oriented_separation(td: TreeDecomposition, edge, towards) -> tuple:
    """(A, B) masks induced by the tree edge oriented towards `towards`."""
    a, b = td.tree.ends[edge]
    other = a if towards == b else b
    return (_side_of_tree_edge(td, edge, other), _side_of_tree_edge(td, edge, towards))


def _assert_round_trip(td: TreeDecomposition) -> None:
    want = {(s.a_mask, s.b_mask) for s in td.separations}
    got = set()
    for e in td.tree.edges:
        a, b = td.tree.ends[e]
        am, bm = induced_oriented_separation(td, e, b)
        got.add((am, bm) if am <= bm else (bm, am))
        s = td.edge_separation[e]
        if {am, bm} != {s.a_mask, s.b_mask}:
            raise GraphError("tree edge does not induce its labelling separation")
    if got != want:
        raise GraphError("induced separations differ from the nested set")


def _assert_alpha_order_isomorphism(td: TreeDecomposition) -> None:
    # orienting consecutive edges of the tree the same way must respect <=
    for t in td.tree.vertices:
        for e1, w1 in td.tree.incident(t):
            for e2, w2 in td.tree.incident(t):
                if e1 == e2:
                    continue
                # e1 oriented (w1 -> t), e2 oriented (t -> w2)
                a1 = induced_oriented_separation(td, e1, t)
                a2 = induced_oriented_separation(td, e2, w2)
                if not oriented_le(a1[0], a1[1], a2[0], a2[1]):
                    raise GraphError("tree orientations are not order-compatible")


@dataclass
class TreeDecompositionReport:
    covers_vertices: bool
    covers_edges: bool
    subtrees_connected: bool
    adhesion_identity: bool
    regular: bool
    point_finite: bool
    max_adhesion: int
    max_part_size: int

    @property
    def passed(self) -> bool:
        return (self.covers_vertices and self.covers_edges
                and self.subtrees_connected and self.adhesion_identity
                and self.regular and self.point_finite)

    def failures(self) -> list:
        out = []
        for name in ("covers_vertices", "covers_edges", "subtrees_connected",
                     "adhesion_identity", "regular", "point_finite"):
            if not getattr(self, name):
                out.append(name)
        return out

    def to_json_obj(self) -> dict:
        return {
            "covers_vertices": self.covers_vertices,
            "covers_edges": self.covers_edges,
            "subtrees_connected": self.subtrees_connected,
            "adhesion_identity": self.adhesion_identity,
            "regular": self.regular,
            "point_finite": self.point_finite,
            "max_adhesion": self.max_adhesion,
            "max_part_size": self.max_part_size,
            "passed": self.passed,
        }


def verify_tree_decomposition(g: Multigraph, td: TreeDecomposition) -> TreeDecompositionReport:
    """Check the decomposition axioms and report, never raise."""
    bits = g.bits()
    union = 0
    for t in td.tree.vertices:
        union |= td.part_mask(t)
    covers_vertices = union == bits.vall

    covers_edges = True
    for e in g.edges:
        u, v = g.ends[e]
        m = g.vertex_mask([u, v])
        if not any((m | td.part_mask(t)) == td.part_mask(t) for t in td.tree.vertices):
            covers_edges = False
            break

    subtrees_connected = True
    for v in g.vertices:
        holders = [t for t in td.tree.vertices if v in set(td.parts[t])]
        if not holders:
            subtrees_connected = False
            break
        sub = td.tree.induced(holders)
        if not sub.is_connected():
            subtrees_connected = False
            break

    adhesion_identity = True
    max_adhesion = 0
    for e in td.tree.edges:
        a, b = td.tree.ends[e]
        inter = td.part_mask(a) & td.part_mask(b)
        am, bm = induced_oriented_separation(td, e, b)
        sep = am & bm
        if inter != sep:
            adhesion_identity = False
        max_adhesion = max(max_adhesion, sep.bit_count())

    regular = True
    for e in td.tree.edges:
        a, b = td.tree.ends[e]
        am, bm = induced_oriented_separation(td, e, b)
        if am == bits.vall or bm == bits.vall:
            regular = False

    point_finite = all(
        sum(1 for t in td.tree.vertices if v in set(td.parts[t])) < float("inf")
        for v in g.vertices)
    max_part = max((len(td.parts[t]) for t in td.tree.vertices), default=0)

    return TreeDecompositionReport(covers_vertices, covers_edges,
                                   subtrees_connected, adhesion_identity,
                                   regular, point_finite, max_adhesion, max_part)


# ---------------------------------------------------------------------------
# group actions on tree-decompositions
# ---------------------------------------------------------------------------

def node_map_under(td: TreeDecomposition, iso) -> Optional[dict]:
    """The node permutation induced by a graph automorphism, or None.

    The automorphism maps each star's oriented separations to oriented
    separations; when the image of every star is again a star of the
    decomposition this yields the unique tree action with
    image-part(t) = part(image(t)).
    """
    g = td.graph
    seps = td.separations
    sep_index = {(s.a_mask, s.b_mask): i for i, s in enumerate(seps)}

    def map_mask(mask: int) -> int:
        out = 0
        while mask:
            b = mask & -mask
            v = g.vertices[b.bit_length() - 1]
            out |= 1 << g.vpos(iso.vertex_map[v])
            mask ^= b
        return out

    mapped_member = {}
    for i, s in enumerate(seps):
        am, bm = map_mask(s.a_mask), map_mask(s.b_mask)
        key = (am, bm) if am <= bm else (bm, am)
        j = sep_index.get(key)
        if j is None:
            return None
        target = seps[j]
        for flag in (0, 1):
            first, _second = s.oriented(bool(flag))
            mf = map_mask(first)
            tflag = 0 if mf == target.a_mask else 1
            if target.oriented(bool(tflag))[0] != mf:
                return None
            mapped_member[(i, flag)] = (j, tflag)

    members_to_node = {star.members: t for t, star in td.stars.items()}
    out = {}
    for t, star in td.stars.items():
        image = tuple(sorted(mapped_member[m] for m in star.members))
        t2 = members_to_node.get(image)
        if t2 is None:
            return None
        out[t] = t2
    return out


def tree_automorphisms_matching(td: TreeDecomposition, iso) -> list:
    """All tree automorphisms psi with iso(part(t)) = part(psi(t)).

    Used to confirm that the action of a graph automorphism on a regular
    tree-decomposition is unique.
    """
    tree = td.tree
    g = td.graph
    target_parts = {}
    for t in tree.vertices:
        target_parts[t] = frozenset(iso.vertex_map[v] for v in td.parts[t])
    out = []
    from localdec.multigraph import automorphisms as graph_autos
    autos = graph_autos(tree)
    for a in autos:
        if all(frozenset(td.parts[a.vertex_map[t]]) == target_parts[t]
               for t in tree.vertices):
            out.append({t: a.vertex_map[t] for t in tree.vertices})
    return out
