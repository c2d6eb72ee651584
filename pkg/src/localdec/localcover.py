"""Local covers of finite multigraphs.

The r-local cover is realized as a derived graph: a voltage assignment
sends each spanning-tree edge to the identity of the deck group and each
chord to the image of its generator, and the cover has vertex set
V(G) x group with edges twisted by the voltages.  When coset enumeration
of the deck-group presentation does not finish, a certified ball of the
partially enumerated cover stands in for the infinite cover.

Cover ids are strings "v@i" and "e@i" (base id at fibre coordinate), but
all projections are carried explicitly and nothing parses ids back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from localdec.grouppres import (
    CosetTable,
    FiniteGroup,
    FreeWord,
    Presentation,
    deck_group_presentation,
    table_to_group,
    todd_coxeter,
)
from localdec.multigraph import (
    GraphError,
    Multigraph,
    UNDECIDED,
    Walk,
    check_walk,
    isomorphic,
    short_cycles_span,
    spanning_tree,
    cycles_through_vertex,
)


class CoverError(GraphError):
    pass


class LiftOutOfBallError(CoverError):
    """A walk lift left the truncated region of a cover."""


def _cover_vid(v, i) -> str:
    return "%s@%d" % (v, i)


def _cover_eid(e, i) -> str:
    return "%s@%d" % (e, i)


@dataclass
class VoltageAssignment:
    """Deck-group elements on canonically oriented edges; tree edges carry
    the identity, the reverse orientation the inverse element."""

    group: FiniteGroup
    values: dict  # edge id -> group element for the stored (tail, head) orientation

    def forward(self, e) -> int:
        return self.values[e]

    def backward(self, e) -> int:
        return self.group.inverse(self.values[e])


class Covering:
    """A finite derived cover with projection and free fibre-transitive deck action."""

    def __init__(self, base: Multigraph, deck: FiniteGroup,
                 voltage: VoltageAssignment, base_point):
        self.base = base
        self.deck = deck
        self.voltage = voltage
        self.base_point = base_point
        n = deck.order
        verts = []
        vid = {}
        for v in base.vertices:
            for i in range(n):
                name = _cover_vid(v, i)
                vid[(v, i)] = name
                verts.append(name)
        edges = []
        proj_v = {}
        proj_e = {}
        self._eid = {}
        for (v, i), name in vid.items():
            proj_v[name] = v
        for e in base.edges:
            u, v = base.ends[e]
            g_e = voltage.forward(e)
            for i in range(n):
                name = _cover_eid(e, i)
                j = deck.op(i, g_e)
                edges.append((name, (vid[(u, i)], vid[(v, j)])))
                proj_e[name] = e
                self._eid[(e, i)] = name
        self.cover = Multigraph(verts, edges)
        self.projection_vertices = proj_v
        self.projection_edges = proj_e
        self._vid = vid
        self.base_lift = vid[(base_point, 0)]
        self._fibre_coord = {name: pair for pair, name in vid.items()}
        self._check_covering_condition()
        if not self.cover.is_connected():
            raise CoverError("derived graph is disconnected: voltages do not "
                             "generate the deck group")

    # -- structure ----------------------------------------------------------

    def fibre(self, v):
        return tuple(self._vid[(v, i)] for i in range(self.deck.order))

    def coordinates(self, cover_vertex):
        return self._fibre_coord[cover_vertex]

    def sheets(self) -> int:
        return self.deck.order

    def deck_vertex_map(self, h: int) -> dict:
        """The deck transformation of group element h on cover vertices."""
        out = {}
        for (v, i), name in self._vid.items():
            out[name] = self._vid[(v, self.deck.op(h, i))]
        return out

    def deck_edge_map(self, h: int) -> dict:
        out = {}
        for (e, i), name in self._eid.items():
            out[name] = self._eid[(e, self.deck.op(h, i))]
        return out

    def _check_covering_condition(self):
        base_star = {}
        for v in self.base.vertices:
            ends = {}
            for e, w in self.base.incident(v):
                ends[e] = ends.get(e, 0) + (2 if w == v else 1)
            base_star[v] = ends
        for name in self.cover.vertices:
            v = self.projection_vertices[name]
            ends = {}
            for ce, w in self.cover.incident(name):
                e = self.projection_edges[ce]
                ends[e] = ends.get(e, 0) + (2 if w == name else 1)
            if ends != base_star[v]:
                raise CoverError("star at %s does not project bijectively" % name)

    def check_deck_action(self) -> bool:
        """Deck maps are automorphisms over the base, free and fibre-transitive."""
        for h in range(self.deck.order):
            vm = self.deck_vertex_map(h)
            em = self.deck_edge_map(h)
            for ce in self.cover.edges:
                u, w = self.cover.ends[ce]
                if {vm[u], vm[w]} != set(self.cover.ends[em[ce]]):
                    return False
            for name in self.cover.vertices:
                if self.projection_vertices[vm[name]] != self.projection_vertices[name]:
                    return False
            if h != 0 and any(vm[name] == name for name in self.cover.vertices):
                return False
        for v in self.base.vertices:
            fib = set(self.fibre(v))
            reached = {self.deck_vertex_map(h)[self._vid[(v, 0)]]
                       for h in range(self.deck.order)}
            if reached != fib:
                return False
        return True

    def to_json_obj(self) -> dict:
        return {
            "base": self.base.to_json_obj(),
            "graph": self.cover.to_json_obj(),
            "projection": {
                "vertices": {str(k): str(v) for k, v in self.projection_vertices.items()},
                "edges": {str(k): str(v) for k, v in self.projection_edges.items()},
            },
            "deck": [list(row) for row in self.deck.mult],
            "truncated": False,
            "certificates": {},
        }


@dataclass
class TruncatedCover:
    """A rooted ball of a partially enumerated cover, with certificates.

    Identifications present in the ball all follow from relators, so the
    ball maps onto the true ball of the cover by further collapses; the
    certificates record falsifiable stability evidence, never a proof.
    """

    base: Multigraph
    ball: Multigraph
    root: str
    radius: int
    projection_vertices: dict
    projection_edges: dict
    table: CosetTable
    presentation: Presentation
    depths: dict
    locality: int
    certificates: dict = field(default_factory=dict)
    table_covers_ball: bool = True
    _vid: dict = field(default_factory=dict)
    _coord: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return (self.table_covers_ball
                and self.certificates.get("lift_separation") is True
                and self.certificates.get("radius_stable") is True)

    def lifts_of(self, v):
        return tuple(name for name in self.ball.vertices
                     if self.projection_vertices[name] == v)

    def coordinates(self, name):
        return self._coord[name]

    def to_json_obj(self) -> dict:
        certs = dict(self.certificates)
        certs["table_covers_ball"] = self.table_covers_ball
        return {
            "base": self.base.to_json_obj(),
            "graph": self.ball.to_json_obj(),
            "projection": {
                "vertices": {str(k): str(v) for k, v in self.projection_vertices.items()},
                "edges": {str(k): str(v) for k, v in self.projection_edges.items()},
            },
            "truncated": True,
            "root": self.root,
            "radius": self.radius,
            "certificates": certs,
        }


def _tree_and_chords(g: Multigraph, x0):
    tree = spanning_tree(g, x0)
    tset = set(tree)
    chords = [e for e in g.edges if e not in tset]
    return tset, {e: i + 1 for i, e in enumerate(chords)}


def _edge_letter(tset, chord_letter, e, forward: bool) -> Optional[int]:
    if e in tset:
        return None
    letter = chord_letter[e]
    return letter if forward else -letter


def _build_ball(g: Multigraph, table: CosetTable, x0, radius: int, locality: int,
                presentation: Presentation):
    """Breadth-first ball of the partial derived graph around (x0, coset 0)."""
    tset, chord_letter = _tree_and_chords(g, x0)

    def step(coset, e, forward):
        letter = _edge_letter(tset, chord_letter, e, forward)
        if letter is None:
            return coset
        return table.step(coset, letter)

    root = (x0, 0)
    depths = {root: 0}
    order = [root]
    head = 0
    complete = True
    while head < len(order):
        (v, c) = order[head]
        head += 1
        d = depths[(v, c)]
        if d >= radius:
            continue
        for e, w in g.incident(v):
            u0, v0 = g.ends[e]
            if v == u0:
                c2 = step(c, e, True)
            else:
                c2 = step(c, e, False)
            if c2 is None:
                complete = False
                continue
            key = (w, c2)
            if key not in depths:
                depths[key] = d + 1
                order.append(key)
            if v == w and v == u0:
                # a loop also steps backwards to a possibly new vertex
                c3 = step(c, e, False)
                if c3 is None:
                    complete = False
                elif (w, c3) not in depths:
                    depths[(w, c3)] = d + 1
                    order.append((w, c3))

    vid = {key: _cover_vid(*key) for key in order}
    verts = [vid[key] for key in order]
    proj_v = {vid[(v, c)]: v for (v, c) in order}
    coord = {vid[key]: key for key in order}

    edges = []
    proj_e = {}
    seen_edges = set()
    for (v, c) in order:
        for e, w in g.incident(v):
            u0, v0 = g.ends[e]
            # edge instance (e, i) has its tail u0 in fibre coordinate i
            if v == u0:
                i = c
                c2 = step(c, e, True)
            else:
                c2 = step(c, e, False)
                i = c2
            if c2 is None or i is None:
                continue
            tail_key = (u0, i)
            j = step(i, e, True)
            if j is None:
                continue
            head_key = (v0, j)
            if tail_key not in depths or head_key not in depths:
                continue
            if depths[tail_key] + 1 + depths[head_key] > 2 * radius:
                continue
            name = _cover_eid(e, i)
            if name in seen_edges:
                continue
            seen_edges.add(name)
            edges.append((name, (vid[tail_key], vid[head_key])))
            proj_e[name] = e

    edges.sort(key=lambda item: (g.epos(proj_e[item[0]]), item[0]))
    ball = Multigraph(verts, edges)
    tc = TruncatedCover(g, ball, vid[root], radius, proj_v, proj_e, table,
                        presentation, {vid[k]: d for k, d in depths.items()},
                        locality)
    tc._vid = vid
    tc._coord = coord
    tc.table_covers_ball = complete
    return tc


def _rooted_transport_equal(tc1: "TruncatedCover", tc2: "TruncatedCover") -> bool:
    """Do two rooted truncated balls agree via base-edge transport?"""
    ball1, ball2 = tc1.ball, tc2.ball
    if tc1.projection_vertices[tc1.root] != tc2.projection_vertices[tc2.root]:
        return False
    if ball1.n_vertices() != ball2.n_vertices() or ball1.n_edges() != ball2.n_edges():
        return False
    pair = {tc1.root: tc2.root}
    queue = [tc1.root]
    used2 = {tc2.root}
    while queue:
        x = queue.pop()
        y = pair[x]
        inc_x = {}
        for e, w in ball1.incident(x):
            inc_x.setdefault(tc1.projection_edges[e], []).append((e, w))
        inc_y = {}
        for e, w in ball2.incident(y):
            inc_y.setdefault(tc2.projection_edges[e], []).append((e, w))
        if set(inc_x) != set(inc_y):
            return False
        for base_e in inc_x:
            lx = inc_x[base_e]
            ly = inc_y[base_e]
            if len(lx) != len(ly):
                return False
            # match ends in canonical order; covers lift each base end once
            lx = sorted(lx, key=lambda p: ball1.epos(p[0]))
            ly = sorted(ly, key=lambda p: ball2.epos(p[0]))
            for (e1, w1), (e2, w2) in zip(lx, ly):
                if w1 in pair:
                    if pair[w1] != w2:
                        return False
                else:
                    if (w2 in used2
                            or tc1.projection_vertices[w1] != tc2.projection_vertices[w2]):
                        return False
                    pair[w1] = w2
                    used2.add(w2)
                    queue.append(w1)
    if len(pair) != len(ball1.vertices) or len(used2) != len(ball2.vertices):
        return False
    return all(tc1.depths[x] == tc2.depths[y] for x, y in pair.items())


def local_cover(g: Multigraph, r: int, coset_limit: int = 100_000,
                truncation_radius: int = 10):
    """The r-local cover: exact when the deck group proves finite, otherwise
    a certified truncated ball.

    The deck group is presented by the chords of the canonical spanning
    tree with one relator per cycle of length at most r.  If coset
    enumeration closes, the derived graph over the resulting finite group
    is the cover.  Otherwise the radius-`truncation_radius` ball of the
    partially collapsed cover is returned with two certificates: lifts of
    a common vertex stay at distance greater than r (checked on the part
    of the ball where that is decidable), and the ball is unchanged when
    the coset budget is doubled.
    """
    if r < 1:
        raise CoverError("locality parameter must be >= 1")
    if not g.is_connected():
        raise CoverError("local covers need a connected base graph")
    x0 = g.vertices[0]
    pres = deck_group_presentation(g, r, x0)
    table = todd_coxeter(pres, coset_limit)
    if table.complete:
        deck = table_to_group(table)
        tset, chord_letter = _tree_and_chords(g, x0)
        values = {}
        for e in g.edges:
            if e in tset:
                values[e] = 0
            else:
                values[e] = deck.gen_images[chord_letter[e] - 1]
        voltage = VoltageAssignment(deck, values)
        return Covering(g, deck, voltage, x0)
    tc = _build_ball(g, table, x0, truncation_radius, r, pres)
    sep = verify_ball_preservation(tc, r)
    tc.certificates["lift_separation"] = (sep if sep is not UNDECIDED else None)
    table2 = todd_coxeter(pres, 2 * coset_limit)
    if table2.complete:
        # the doubled budget settles the group; report instability so the
        # caller retries with the larger limit
        tc.certificates["radius_stable"] = False
        tc.certificates["completes_with_larger_budget"] = True
        return tc
    tc2 = _build_ball(g, table2, x0, truncation_radius, r, pres)
    tc.certificates["radius_stable"] = _rooted_transport_equal(tc, tc2)
    return tc


def shrink_truncated(tc: TruncatedCover, radius: int) -> TruncatedCover:
    """The same partially enumerated cover truncated at a smaller radius.

    Reuses the coset table.  The smaller ball is determined by the larger
    one, so the radius-stability certificate carries over; lift separation
    is re-checked at the smaller radius.
    """
    if radius > tc.radius:
        raise CoverError("can only shrink a truncated cover")
    g = tc.base
    x0 = tc.projection_vertices[tc.root]
    out = _build_ball(g, tc.table, x0, radius, tc.locality, tc.presentation)
    sep = verify_ball_preservation(out, tc.locality)
    out.certificates["lift_separation"] = (sep if sep is not UNDECIDED else None)
    out.certificates["radius_stable"] = tc.certificates.get("radius_stable")
    return out


# ---------------------------------------------------------------------------
# walk lifting
# ---------------------------------------------------------------------------

def lift_walk(cov, w: Walk, start) -> Walk:
    """The unique lift of a base walk starting at the given cover vertex.

    Loops with non-trivial voltage are lifted in the forward direction of
    their stored orientation (a combinatorial walk does not determine the
    traversal direction of a loop).
    """
    if isinstance(cov, Covering):
        g = cov.base
        check_walk(g, w)
        v0, i0 = cov.coordinates(start)
        if v0 != w.start:
            raise CoverError("start vertex does not project to the walk start")
        verts = [start]
        edges = []
        cur = (v0, i0)
        for k, e in enumerate(w.edges):
            a, b = w.vertices[k], w.vertices[k + 1]
            u0, _ = g.ends[e]
            v, i = cur
            if a == u0:
                j = cov.deck.op(i, cov.voltage.forward(e))
                edges.append(cov._eid[(e, i)])
            else:
                j = cov.deck.op(i, cov.voltage.backward(e))
                edges.append(cov._eid[(e, j)])
            cur = (b, j)
            verts.append(cov._vid[cur])
        return Walk(tuple(verts), tuple(edges))
    if isinstance(cov, TruncatedCover):
        g = cov.base
        check_walk(g, w)
        v0, c0 = cov.coordinates(start)
        if v0 != w.start:
            raise CoverError("start vertex does not project to the walk start")
        tset, chord_letter = _tree_and_chords(g, g.vertices[0])
        verts = [start]
        edges = []
        cur = c0
        for k, e in enumerate(w.edges):
            a, b = w.vertices[k], w.vertices[k + 1]
            u0, _ = g.ends[e]
            forward = a == u0
            letter = _edge_letter(tset, chord_letter, e, forward)
            nxt = cur if letter is None else cov.table.step(cur, letter)
            if nxt is None:
                raise LiftOutOfBallError("lift leaves the enumerated region")
            i = cur if forward else nxt
            name = _cover_eid(e, i)
            if name not in cov.ball.ends or _cover_vid(b, nxt) not in cov.depths:
                raise LiftOutOfBallError("lift leaves the truncated ball")
            edges.append(name)
            cur = nxt
            verts.append(_cover_vid(b, cur))
        return Walk(tuple(verts), tuple(edges))
    raise CoverError("unknown cover object %r" % (cov,))


# ---------------------------------------------------------------------------
# verifiers
# ---------------------------------------------------------------------------

def verify_ball_preservation(cov, rho: int):
    """Are all distinct lifts of a common vertex at distance > rho?

    For truncated covers the check runs from the lifts at depth at most
    radius - rho, where a distance-rho neighbourhood is fully visible;
    with radius < rho + 1 the question is undecided.
    """
    if isinstance(cov, Covering):
        for v in cov.base.vertices:
            for x in cov.fibre(v):
                dist = cov.cover.distances(x, cap=rho)
                for y in cov.fibre(v):
                    if y != x and y in dist:
                        return False
        return True
    if isinstance(cov, TruncatedCover):
        if cov.radius < rho + 1:
            return UNDECIDED
        core = cov.radius - rho
        for x in cov.ball.vertices:
            if cov.depths[x] > core:
                continue
            v = cov.projection_vertices[x]
            dist = cov.ball.distances(x, cap=rho)
            for y in dist:
                if y != x and cov.projection_vertices[y] == v:
                    return False
        return True
    raise CoverError("unknown cover object %r" % (cov,))


def verify_cover_cycle_space(cov, r: int) -> bool:
    """Do the short cycles of the cover graph span its whole cycle space?"""
    graph = cov.cover if isinstance(cov, Covering) else cov.ball
    return short_cycles_span(graph, r)


def verify_idempotence(g: Multigraph, r: int, r2: int,
                       coset_limit: int = 100_000, truncation_radius: int = 10):
    """Is the r-local cover of the r2-local cover isomorphic to the r-local
    cover of g itself?  Undecided when any of the covers fails to be finite."""
    if r2 < r:
        raise CoverError("need r2 >= r")
    c1 = local_cover(g, r, coset_limit, truncation_radius)
    if not isinstance(c1, Covering):
        return UNDECIDED
    c2 = local_cover(g, r2, coset_limit, truncation_radius)
    if not isinstance(c2, Covering):
        return UNDECIDED
    c3 = local_cover(c2.cover, r, coset_limit, truncation_radius)
    if not isinstance(c3, Covering):
        return UNDECIDED
    iso = isomorphic(c3.cover, c1.cover)
    if iso is UNDECIDED:
        return UNDECIDED
    return iso is not None


# ---------------------------------------------------------------------------
# Cayley graphs
# ---------------------------------------------------------------------------

@dataclass
class LabelledGraph:
    """A multigraph with generator labels on edges, oriented tail -> head."""

    graph: Multigraph
    labels: dict            # edge id -> generator name
    generators: tuple       # generator names in order
    identity_vertex: str
    element_of: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        obj = self.graph.to_json_obj()
        for entry in obj["edges"]:
            entry["label"] = self.labels[entry["id"]]
        obj["identity"] = str(self.identity_vertex)
        return obj

    @staticmethod
    def from_json_obj(obj: dict) -> "LabelledGraph":
        g = Multigraph.from_json_obj(obj)
        labels = {}
        for entry in obj["edges"]:
            if "label" not in entry:
                raise GraphError("labelled graph needs a label on every edge")
            labels[entry["id"]] = entry["label"]
        gens = []
        for e in g.edges:
            if labels[e] not in gens:
                gens.append(labels[e])
        identity = obj.get("identity", g.vertices[0] if g.vertices else None)
        return LabelledGraph(g, labels, tuple(gens), identity)


def cayley_graph(group: FiniteGroup, gens) -> LabelledGraph:
    """The Cayley graph with one edge (g, s) per element and generator.

    `gens` lists (name, element) pairs; inverse pairs and identity
    elements are allowed and produce parallel edges and loops.
    """
    verts = [str(a) for a in range(group.order)]
    edges = []
    labels = {}
    element_of = {}
    for a in range(group.order):
        element_of[str(a)] = a
    for a in range(group.order):
        for name, s in gens:
            eid = "%d.%s" % (a, name)
            edges.append((eid, (str(a), str(group.op(a, s)))))
            labels[eid] = name
    g = Multigraph(verts, edges)
    return LabelledGraph(g, labels, tuple(name for name, _ in gens), "0", element_of)


def cayley_graph_of_presentation(p: Presentation, table: CosetTable) -> LabelledGraph:
    group = table_to_group(table)
    gens = [(name, group.gen_images[i]) for i, name in enumerate(p.generators)]
    return cayley_graph(group, gens)


def _walk_label_word(cay: LabelledGraph, w: Walk) -> FreeWord:
    g = cay.graph
    index = {name: i + 1 for i, name in enumerate(cay.generators)}
    letters = []
    for k, e in enumerate(w.edges):
        a = w.vertices[k]
        tail, head = g.ends[e]
        letter = index[cay.labels[e]]
        if a == tail:
            letters.append(letter)
        else:
            letters.append(-letter)
    return FreeWord(letters)


def local_group_extension(cay: LabelledGraph, r: int,
                          ball_radius: Optional[int] = None) -> Presentation:
    """Presentation on the edge labels whose relators are the label words of
    the closed walks once around a cycle of length <= r at the identity.

    The input must show every short cycle through the identity; passing a
    ball of a Cayley graph with ball_radius < r is refused.
    """
    if ball_radius is not None and ball_radius < r:
        raise CoverError("ball of radius %d cannot show all cycles of length %d"
                         % (ball_radius, r))
    x0 = cay.identity_vertex
    if not cay.graph.has_vertex(x0):
        raise CoverError("identity vertex %r missing" % (x0,))
    words = set()
    for cyc in cycles_through_vertex(cay.graph, x0, r):
        walks = []
        k = cyc.vertices.index(x0)
        rotated_v = cyc.vertices[k:] + cyc.vertices[:k]
        rotated_e = cyc.edges[k:] + cyc.edges[:k]
        once = Walk(rotated_v + (x0,), rotated_e)
        walks.append(once)
        if cyc.length > 1:
            walks.append(once.reverse())
        for w in walks:
            word = _walk_label_word(cay, w)
            if word.is_empty():
                continue
            inv = word.inverse()
            words.add(min(word.letters, inv.letters))
    relators = tuple(FreeWord(lt) for lt in sorted(words))
    return Presentation(cay.generators, relators)


def verify_group_quotient(p: Presentation, group: FiniteGroup, gens) -> bool:
    """Do all relators of p evaluate to the identity under generator images?"""
    images = [s for _, s in gens]
    for w in p.relators:
        cur = 0
        for a in w.letters:
            s = images[abs(a) - 1]
            if a < 0:
                s = group.inverse(s)
            cur = group.op(cur, s)
        if cur != 0:
            return False
    return True


# ---------------------------------------------------------------------------
# equivalence of coverings
# ---------------------------------------------------------------------------

@dataclass
class GeneralCover:
    """Just enough covering structure for equivalence testing."""

    base: Multigraph
    cover: Multigraph
    projection_vertices: dict
    projection_edges: dict
    base_lift: str

    def fibre(self, v):
        return tuple(x for x in self.cover.vertices
                     if self.projection_vertices[x] == v)


def cover_from_cayley_quotient(ext: LabelledGraph, ext_group: FiniteGroup,
                               base: LabelledGraph, base_group: FiniteGroup) -> GeneralCover:
    """The covering Cay(ext_group, S) -> Cay(base_group, S) induced by the
    quotient map on elements (same generator lists, same order)."""
    if ext.generators != base.generators:
        raise CoverError("generator lists differ")
    proj_elt = {}
    for a in range(ext_group.order):
        word = ext_group.element_words.get(a)
        if word is None:
            raise CoverError("extension group lacks element words")
        proj_elt[a] = base_group.evaluate(word)
    proj_v = {str(a): str(proj_elt[a]) for a in range(ext_group.order)}
    proj_e = {}
    for e in ext.graph.edges:
        tail, _head = ext.graph.ends[e]
        name = ext.labels[e]
        proj_e[e] = "%d.%s" % (proj_elt[int(tail)], name)
        if proj_e[e] not in base.graph.ends:
            raise CoverError("projected edge %r missing downstairs" % (proj_e[e],))
    return GeneralCover(base.graph, ext.graph, proj_v, proj_e, "0")


def covering_equivalence(c1, c2, budget: int = 1_000_000):
    """Is there a cover isomorphism commuting with both projections?

    Searched by walk transport from every candidate image of the base
    lift; a cover map is determined by one vertex image, so the search is
    linear per candidate.
    """
    if c1.base != c2.base:
        return False
    if c1.cover.n_vertices() != c2.cover.n_vertices():
        return False
    v0 = c1.projection_vertices[c1.base_lift]
    steps = 0
    for candidate in c2.fibre(v0):
        ok = _transport(c1, c2, c1.base_lift, candidate)
        steps += c1.cover.n_vertices()
        if steps > budget:
            return UNDECIDED
        if ok:
            return True
    return False


def _transport(c1: Covering, c2: Covering, x1, x2) -> bool:
    pair = {x1: x2}
    queue = [x1]
    used = {x2}
    while queue:
        x = queue.pop()
        y = pair[x]
        inc_x = {}
        for e, w in c1.cover.incident(x):
            inc_x.setdefault(c1.projection_edges[e], []).append((e, w))
        inc_y = {}
        for e, w in c2.cover.incident(y):
            inc_y.setdefault(c2.projection_edges[e], []).append((e, w))
        if set(inc_x) != set(inc_y):
            return False
        for base_e, lx in inc_x.items():
            ly = inc_y[base_e]
            if len(lx) != len(ly):
                return False
            lx = sorted(lx, key=lambda p: c1.cover.epos(p[0]))
            ly = sorted(ly, key=lambda p: c2.cover.epos(p[0]))
            for (e1, w1), (e2, w2) in zip(lx, ly):
                if w1 in pair:
                    if pair[w1] != w2:
                        return False
                elif w2 in used:
                    return False
                else:
                    pair[w1] = w2
                    used.add(w2)
                    queue.append(w1)
    return len(pair) == c1.cover.n_vertices()
