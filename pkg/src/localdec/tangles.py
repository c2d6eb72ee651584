"""Separations, tangles, k-blocks and the canonical nested separation set.

Vertex sets are bitmasks over the canonical vertex order of the host
graph.  A side of a separation carries two masks: its vertices and the
edges spanned inside it; the tangle condition (no three chosen small
sides cover the graph) is checked on unions of those masks.  Only the
maximal chosen small sides can matter for such unions, so the
backtracking search keeps an antichain of maximal small sides instead of
the full choice list.  Covering pairs also witness every inconsistency,
hence no separate consistency check is needed during the search (it is
asserted afterwards).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Optional

from localdec.multigraph import GraphError, Multigraph


class BudgetError(GraphError):
    """Exhaustive enumeration would exceed the configured budget."""


@dataclass(frozen=True)
class Separation:
    """Unordered pair {A, B} of vertex masks with A | B = V and no edge across."""

    a_mask: int
    b_mask: int
    full: int

    @property
    def separator(self) -> int:
        return self.a_mask & self.b_mask

    @property
    def order(self) -> int:
        return (self.a_mask & self.b_mask).bit_count()

    @property
    def proper(self) -> bool:
        return self.a_mask != self.full and self.b_mask != self.full

    def oriented(self, flipped: bool) -> tuple:
        return (self.b_mask, self.a_mask) if flipped else (self.a_mask, self.b_mask)

    def sides(self, g: Multigraph) -> tuple:
        return (g.vertices_of_mask(self.a_mask), g.vertices_of_mask(self.b_mask))

    def to_json_obj(self, g: Multigraph) -> list:
        a, b = self.sides(g)
        return [[str(v) for v in a], [str(v) for v in b]]


def _normalize(am: int, bm: int, full: int) -> Separation:
    if bm < am:
        am, bm = bm, am
    return Separation(am, bm, full)


def oriented_le(first1: int, second1: int, first2: int, second2: int) -> bool:
    """(A,B) <= (C,D) iff A is contained in C and B contains D."""
    return (first1 | first2) == first2 and (second1 | second2) == second1


def nested(s: Separation, t: Separation) -> bool:
    """Two separations are nested when some orientations are comparable."""
    for f1, s1 in (s.oriented(False), s.oriented(True)):
        for f2, s2 in (t.oriented(False), t.oriented(True)):
            if oriented_le(f1, s1, f2, s2):
                return True
    return False


def crossing(s: Separation, t: Separation) -> bool:
    return not nested(s, t)


def _components_masks(adj, pool: int):
    """Connected components of the subgraph induced on the mask `pool`."""
    comps = []
    left = pool
    while left:
        seed = left & -left
        comp = seed
        frontier = seed
        while frontier:
            new = 0
            f = frontier
            while f:
                b = f & -f
                new |= adj[b.bit_length() - 1]
                f ^= b
            new &= pool & ~comp
            comp |= new
            frontier = new
        comps.append(comp)
        left &= ~comp
    return comps


def enumerate_separations(g: Multigraph, max_order: int,
                          include_improper: bool = False,
                          budget: int = 5_000_000):
    """Every separation of order < max_order, each once, canonically sorted.

    A separation with separator X is a choice of a bipartition of the
    components of G - X; improper ones (a side equal to V) are skipped
    unless requested.  Sorted by (order, side masks), so the list for a
    smaller max_order is a prefix of the list for a larger one.
    """
    bits = g.bits()
    n = len(g.vertices)
    out = []
    total = sum(comb(n, size) for size in range(0, min(max_order, n + 1)))
    if total > budget:
        raise BudgetError(
            "enumerating %d separator candidates exceeds the budget of %d; "
            "lower the order or raise the budget" % (total, budget))
    for size in range(0, min(max_order, n + 1)):
        for combo in combinations(range(n), size):
            x = 0
            for i in combo:
                x |= 1 << i
            comps = _components_masks(bits.adj, bits.vall & ~x)
            if len(comps) >= 2:
                rest = comps[1:]
                for pick in range(1 << len(rest)):
                    a = comps[0] | x
                    b = x
                    for j, c in enumerate(rest):
                        if pick >> j & 1:
                            a |= c
                        else:
                            b |= c
                    if b == x and not include_improper:
                        continue
                    out.append(_normalize(a, b, bits.vall))
            elif include_improper:
                out.append(_normalize(bits.vall, x, bits.vall))
    out.sort(key=lambda s: (s.order, s.a_mask, s.b_mask))
    return out


def is_tight(g: Multigraph, s: Separation) -> bool:
    """Both sides carry a component whose neighbourhood is the whole separator."""
    bits = g.bits()
    x = s.separator
    comps = _components_masks(bits.adj, bits.vall & ~x)

    def witness(side_mask: int) -> bool:
        for comp in comps:
            if comp & ~side_mask:
                continue
            ok = True
            xs = x
            while xs:
                b = xs & -xs
                if not (bits.adj[b.bit_length() - 1] & comp):
                    ok = False
                    break
                xs ^= b
            if ok:
                return True
        return False

    return witness(s.a_mask) and witness(s.b_mask)


# ---------------------------------------------------------------------------
# the separation universe shared by tangle computations
# ---------------------------------------------------------------------------

class SeparationUniverse:
    """All proper separations of order < max_order with precomputed side data."""

    __slots__ = ("graph", "max_order", "seps", "side_data", "_prefix")

    def __init__(self, g: Multigraph, max_order: int, budget: int = 5_000_000):
        self.graph = g
        self.max_order = max_order
        self.seps = enumerate_separations(g, max_order, budget=budget)
        self.side_data = []
        for s in self.seps:
            ea = g.edge_mask_within(s.a_mask)
            eb = g.edge_mask_within(s.b_mask)
            self.side_data.append(((s.a_mask, ea), (s.b_mask, eb)))
        self._prefix = {}

    def prefix_len(self, k: int) -> int:
        """Number of separations of order < k (a prefix of the sorted list)."""
        if k not in self._prefix:
            lo = 0
            for i, s in enumerate(self.seps):
                if s.order < k:
                    lo = i + 1
                else:
                    break
            self._prefix[k] = lo
        return self._prefix[k]

    def index_of(self, s: Separation) -> int:
        return self.seps.index(s)


@dataclass(frozen=True)
class Tangle:
    """Orientation of all separations of order < `order`, as a choice string.

    choices[i] = 0 means the small side of separation i is its A side
    (the tangle points towards B), 1 the other way round.
    """

    universe: SeparationUniverse
    order: int
    choices: bytes

    def __eq__(self, other):
        return (isinstance(other, Tangle)
                and self.universe is other.universe
                and self.order == other.order
                and self.choices == other.choices)

    def __hash__(self):
        return hash((id(self.universe), self.order, self.choices))

    def small_mask(self, i: int) -> tuple:
        return self.universe.side_data[i][self.choices[i]]

    def big_mask(self, i: int) -> tuple:
        return self.universe.side_data[i][1 - self.choices[i]]

    def orients_towards(self, i: int) -> int:
        """Vertex mask of the big side of separation i under this tangle."""
        return self.big_mask(i)[0]

    def restriction(self, k: int) -> "Tangle":
        if k > self.order:
            raise GraphError("cannot restrict to a larger order")
        return Tangle(self.universe, k, self.choices[: self.universe.prefix_len(k)])

    def home_mask(self) -> int:
        """Intersection of all big sides (may be empty)."""
        m = self.universe.graph.bits().vall
        for i in range(len(self.choices)):
            m &= self.big_mask(i)[0]
        return m

    def to_json_obj(self) -> dict:
        g = self.universe.graph
        orient = {}
        for i in range(len(self.choices)):
            sep = self.universe.seps[i]
            key = json.dumps(sep.to_json_obj(g))
            orient[key] = int(self.choices[i])
        return {"order": self.order, "orientation": orient}


def _edge_end_masks(g: Multigraph):
    bits = g.bits()
    out = []
    for iu, iv in bits.epairs:
        out.append((1 << iu) | (1 << iv))
    return out


def _residual_fits_one_set(bits, eends, cap: int, vu: int, eu: int) -> bool:
    """Can everything outside (vu, eu) be covered by G[X] with |X| <= cap?"""
    w = bits.vall & ~vu
    if w.bit_count() > cap:
        return False
    em = bits.eall & ~eu
    while em:
        b = em & -em
        w |= eends[b.bit_length() - 1]
        if w.bit_count() > cap:
            return False
        em ^= b
    return True


def _residual_fits_sets(bits, eends, cap: int, vu: int, eu: int, parts: int) -> bool:
    """Can everything outside (vu, eu) be covered by `parts` many subgraphs
    G[X_i] with |X_i| <= cap each?  Each missing edge must land inside one
    part; missing vertices may go anywhere with spare capacity."""
    vm = bits.vall & ~vu
    if vm.bit_count() > parts * cap:
        return False
    em = bits.eall & ~eu
    edge_masks = []
    wall = vm
    while em:
        b = em & -em
        m = eends[b.bit_length() - 1]
        edge_masks.append(m)
        wall |= m
        if wall.bit_count() > parts * cap:
            return False
        em ^= b
    groups = [0] * parts

    def rec(i: int) -> bool:
        if i == len(edge_masks):
            spare = sum(cap - gm.bit_count() for gm in groups)
            left = vm
            for gm in groups:
                left &= ~gm
            return left.bit_count() <= spare
        m = edge_masks[i]
        used_empty = False
        for j in range(parts):
            if groups[j] == 0:
                if used_empty:
                    break
                used_empty = True
            new = groups[j] | m
            if new.bit_count() > cap:
                continue
            old = groups[j]
            groups[j] = new
            if rec(i + 1):
                groups[j] = old
                return True
            groups[j] = old
        return False

    return rec(0)


def _no_tangles_at_all(g: Multigraph, k: int) -> bool:
    """Three forced small sides G[X], |X| < k, cover the graph on their own."""
    bits = g.bits()
    eends = _edge_end_masks(g)
    return _residual_fits_sets(bits, eends, k - 1, 0, 0, 3)


def _tangles_over_prefix(uni: SeparationUniverse, k: int, count: int):
    """Orientations of the first `count` separations that satisfy the tangle
    condition.

    The triple condition quantifies over all of S_k, including the improper
    separations (X, V) whose orientation is forced with small side X.  Three
    kinds of checks remain after fixing the forced part: no three chosen
    small sides cover the graph (checked on the antichain of maximal chosen
    small sides), no two chosen ones together with some G[X] cover it
    (the residual of their union must not fit in one X with |X| < k), and no
    chosen one together with two G[X] covers it.  Triples of forced sides
    alone are ruled out once, up front.
    """
    g = uni.graph
    bits = g.bits()
    vall, eall = bits.vall, bits.eall
    eends = _edge_end_masks(g)
    cap = k - 1
    side_data = uni.side_data
    if _no_tangles_at_all(g, k):
        return []
    if count == 0:
        return [b""]

    results = []
    choices = bytearray(count)
    ant = []          # maximal small sides chosen so far: list of (v, e)
    frames = [None] * count
    sides = [0] * (count + 1)

    def try_side(i: int, side: int):
        v, e = side_data[i][side]
        for av, ae in ant:
            if (v | av) == av and (e | ae) == ae:
                return ("dominated",)
        # one chosen small side plus two forced ones
        if _residual_fits_sets(bits, eends, cap, v, e, 2):
            return None
        opts = ant + [(v, e)]
        for j, (vj, ej) in enumerate(opts):
            v2 = v | vj
            e2 = e | ej
            # two chosen small sides plus one forced one
            if _residual_fits_one_set(bits, eends, cap, v2, e2):
                return None
            for vl, el in opts[j:]:
                if (v2 | vl) == vall and (e2 | el) == eall:
                    return None
        removed = [(av, ae) for av, ae in ant if (av | v) == v and (ae | e) == e]
        for item in removed:
            ant.remove(item)
        cand = (v, e)
        ant.append(cand)
        return ("added", removed, cand)

    def undo(frame):
        # deeper levels may have removed and re-appended our candidate, so
        # remove it by value rather than popping the tail
        if frame is not None and frame[0] == "added":
            ant.remove(frame[2])
            ant.extend(frame[1])

    depth = 0
    sides[0] = 0
    while depth >= 0:
        if depth == count:
            results.append(bytes(choices))
            depth -= 1
            if depth >= 0:
                undo(frames[depth])
            continue
        s = sides[depth]
        if s == 2:
            depth -= 1
            if depth >= 0:
                undo(frames[depth])
            continue
        sides[depth] = s + 1
        frame = try_side(depth, s)
        if frame is None:
            continue
        choices[depth] = s
        frames[depth] = frame
        sides[depth + 1] = 0
        depth += 1
    return results


def enumerate_tangles(g_or_universe, k: int):
    """All k-tangles, in the deterministic order of the backtracking search."""
    if isinstance(g_or_universe, SeparationUniverse):
        uni = g_or_universe
        if k > uni.max_order:
            raise GraphError("universe only covers orders up to %d" % uni.max_order)
    else:
        uni = SeparationUniverse(g_or_universe, k)
    count = uni.prefix_len(k)
    out = [Tangle(uni, k, ch) for ch in _tangles_over_prefix(uni, k, count)]
    for t in out:
        assert_consistent(t)
    return out


def assert_consistent(t: Tangle) -> None:
    """Tangles are consistent; verify it on the maximal small sides."""
    maxima = []
    for i in range(len(t.choices)):
        v, e = t.small_mask(i)
        if any((v | av) == av and (e | ae) == ae for av, ae in maxima):
            continue
        maxima = [(av, ae) for av, ae in maxima if not ((av | v) == v and (ae | e) == e)]
        maxima.append((v, e))
    bits = t.universe.graph.bits()
    for (v1, e1), (v2, e2) in combinations(maxima, 2):
        if (v1 | v2) == bits.vall and (e1 | e2) == bits.eall:
            raise GraphError("tangle is inconsistent: two small sides cover the graph")


# ---------------------------------------------------------------------------
# k-blocks
# ---------------------------------------------------------------------------

def enumerate_blocks(g: Multigraph, k: int, budget: int = 5_000_000):
    """All k-blocks: maximal sets of >= k vertices never split by S_k.

    Found by recursively splitting V along separations that cut the
    current candidate set, then keeping the maximal unsplit leaves.
    """
    uni = SeparationUniverse(g, k, budget=budget)
    seps = uni.seps[: uni.prefix_len(k)]
    bits = g.bits()
    leaves = set()
    seen = set()
    stack = [bits.vall]
    while stack:
        cand = stack.pop()
        if cand in seen:
            continue
        seen.add(cand)
        if len(seen) > budget:
            raise BudgetError("block search budget exceeded")
        split = None
        for s in seps:
            if cand & ~s.a_mask and cand & ~s.b_mask:
                split = s
                break
        if split is None:
            if cand.bit_count() >= k:
                leaves.add(cand)
        else:
            stack.append(cand & split.a_mask)
            stack.append(cand & split.b_mask)
    blocks = [m for m in leaves
              if not any(m != o and (m | o) == o for o in leaves)]
    blocks.sort()
    return [g.vertices_of_mask(m) for m in blocks]


def block_tangle(g_or_universe, block, k: int) -> Tangle:
    """The orientation towards a k-block, provided the block is big enough.

    Blocks of size at most 3(k-1)/2 are refused: only above that threshold
    is the orientation guaranteed to be a tangle.
    """
    if isinstance(g_or_universe, SeparationUniverse):
        uni = g_or_universe
    else:
        uni = SeparationUniverse(g_or_universe, k)
    g = uni.graph
    x = g.vertex_mask(block)
    if 2 * x.bit_count() <= 3 * (k - 1):
        raise GraphError("block of size %d is too small for order %d" %
                         (x.bit_count(), k))
    count = uni.prefix_len(k)
    choices = bytearray(count)
    for i in range(count):
        s = uni.seps[i]
        in_a = (x | s.a_mask) == s.a_mask
        in_b = (x | s.b_mask) == s.b_mask
        if in_a == in_b:
            raise GraphError("set is not a k-block: a separation splits it")
        # small side is the one not containing the block
        choices[i] = 0 if in_b else 1
    t = Tangle(uni, k, bytes(choices))
    _assert_triple_condition(t)
    assert_consistent(t)
    return t


def _assert_triple_condition(t: Tangle) -> None:
    g = t.universe.graph
    bits = g.bits()
    eends = _edge_end_masks(g)
    cap = t.order - 1
    if _no_tangles_at_all(g, t.order):
        raise GraphError("three forced small sides cover the graph")
    maxima = []
    for i in range(len(t.choices)):
        v, e = t.small_mask(i)
        if any((v | av) == av and (e | ae) == ae for av, ae in maxima):
            continue
        maxima = [(av, ae) for av, ae in maxima if not ((av | v) == v and (ae | e) == e)]
        maxima.append((v, e))
    opts = maxima
    for i1 in range(len(opts)):
        v1, e1 = opts[i1]
        if _residual_fits_sets(bits, eends, cap, v1, e1, 2):
            raise GraphError("a small side plus two forced sides covers the graph")
        for i2 in range(i1, len(opts)):
            v2 = v1 | opts[i2][0]
            e2 = e1 | opts[i2][1]
            if _residual_fits_one_set(bits, eends, cap, v2, e2):
                raise GraphError("two small sides plus a forced side cover the graph")
            for i3 in range(i2, len(opts)):
                v = v2 | opts[i3][0]
                e = e2 | opts[i3][1]
                if v == bits.vall and e == bits.eall:
                    raise GraphError("three small sides cover the graph")


# ---------------------------------------------------------------------------
# distinguishing separations
# ---------------------------------------------------------------------------

def distinguishers(t1: Tangle, t2: Tangle):
    """(all separations the two tangles orient differently, the efficient ones).

    Efficient means of minimum order among the distinguishers.  Tangles of
    different orders are compared on their common domain; an
    indistinguishable pair yields two empty lists.
    """
    if t1.universe is not t2.universe:
        raise GraphError("tangles live in different separation universes")
    uni = t1.universe
    common = min(len(t1.choices), len(t2.choices))
    alldiff = [i for i in range(common) if t1.choices[i] != t2.choices[i]]
    if not alldiff:
        return [], []
    min_order = min(uni.seps[i].order for i in alldiff)
    eff = [i for i in alldiff if uni.seps[i].order == min_order]
    return ([uni.seps[i] for i in alldiff], [uni.seps[i] for i in eff])


def _efficient_distinguisher_indices(uni: SeparationUniverse, t1: Tangle, t2: Tangle):
    """Indices of the efficient distinguishers, scanning order classes lazily."""
    common = min(len(t1.choices), len(t2.choices))
    c1, c2 = t1.choices, t2.choices
    i = 0
    while i < common:
        o = uni.seps[i].order
        j = i
        while j < common and uni.seps[j].order == o:
            j += 1
        if c1[i:j] != c2[i:j]:
            return [x for x in range(i, j) if c1[x] != c2[x]]
        i = j
    return []


# ---------------------------------------------------------------------------
# the canonical nested set
# ---------------------------------------------------------------------------

@dataclass
class NestedSet:
    """Nested separations with tags recording which tangle pairs each one
    distinguishes efficiently."""

    universe: SeparationUniverse
    indices: tuple
    tags: dict
    tangles: tuple
    max_tangle_order: int
    invariance_checked: Optional[bool]
    core_filtered: bool = False

    @property
    def separations(self) -> tuple:
        return tuple(self.universe.seps[i] for i in self.indices)

    def __len__(self):
        return len(self.indices)

    def to_json_obj(self) -> dict:
        g = self.universe.graph
        return {
            "max_tangle_order": self.max_tangle_order,
            "tangle_count": len(self.tangles),
            "separations": [self.universe.seps[i].to_json_obj(g) for i in self.indices],
            "invariance_checked": self.invariance_checked,
            "core_filtered": self.core_filtered,
        }


def canonical_nested_set(g_or_universe, max_tangle_order: int,
                         automorphism_budget: int = 200_000,
                         check_invariance: bool = True,
                         core_mask: Optional[int] = None) -> NestedSet:
    """Union over distinguishable tangle pairs of their efficient
    distinguishers crossing the fewest members of the distinguisher pool.

    Tangles of orders 1..max_tangle_order are used.  With core_mask given
    (truncated-ball mode) tangles whose big sides have no common vertex in
    the core are discarded first; that filtering is a flagged heuristic
    for ball rims and disables the automorphism-invariance assertion.

    Asserts on the result: pairwise nestedness, efficient distinguishing
    of every distinguishable pair, tightness of every member, and (budget
    permitting) invariance under the automorphism group.
    """
    if isinstance(g_or_universe, SeparationUniverse):
        uni = g_or_universe
        if max_tangle_order > uni.max_order:
            raise GraphError("universe too small for requested tangle order")
    else:
        uni = SeparationUniverse(g_or_universe, max_tangle_order)
    g = uni.graph

    tangles = []
    for k in range(1, max_tangle_order + 1):
        tangles.extend(Tangle(uni, k, ch)
                       for ch in _tangles_over_prefix(uni, k, uni.prefix_len(k)))
    if core_mask is not None:
        tangles = [t for t in tangles if t.home_mask() & core_mask]

    pair_eff = {}
    pool = set()
    for a, b in combinations(range(len(tangles)), 2):
        eff = _efficient_distinguisher_indices(uni, tangles[a], tangles[b])
        if eff:
            pair_eff[(a, b)] = eff
            pool.update(eff)

    pool = sorted(pool)
    cross_count = {}
    for i in pool:
        si = uni.seps[i]
        cross_count[i] = sum(1 for j in pool if j != i and crossing(si, uni.seps[j]))

    chosen = set()
    tags = {}
    for pair, eff in sorted(pair_eff.items()):
        best = min(cross_count[i] for i in eff)
        winners = [i for i in eff if cross_count[i] == best]
        for i in winners:
            chosen.add(i)
            tags.setdefault(i, []).append(pair)

    indices = tuple(sorted(chosen))

    seps = [uni.seps[i] for i in indices]
    for s, t in combinations(seps, 2):
        if crossing(s, t):
            raise GraphError("canonical nested set contains a crossing pair")
    for s in seps:
        if not is_tight(g, s):
            raise GraphError("canonical nested set contains a non-tight separation")
    for pair, eff in pair_eff.items():
        if not any(i in chosen for i in eff):
            raise GraphError("a distinguishable pair lost all its distinguishers")

    invariance = None
    if check_invariance and core_mask is None:
        invariance = _check_invariance(g, indices, uni, automorphism_budget)

    return NestedSet(uni, indices, tags, tuple(tangles), max_tangle_order,
                     invariance, core_filtered=core_mask is not None)


def _apply_vertex_map_to_mask(g: Multigraph, auto, mask: int) -> int:
    out = 0
    while mask:
        b = mask & -mask
        v = g.vertices[b.bit_length() - 1]
        out |= 1 << g.vpos(auto.vertex_map[v])
        mask ^= b
    return out


def _check_invariance(g, indices, uni, budget) -> Optional[bool]:
    from localdec.multigraph import UNDECIDED, automorphisms

    if g.n_vertices() > 400:
        # refinement alone is too costly there; leave invariance unchecked
        return None
    autos = automorphisms(g, budget=budget)
    if autos is UNDECIDED:
        return None
    current = {(uni.seps[i].a_mask, uni.seps[i].b_mask) for i in indices}
    for a in autos:
        mapped = set()
        for am, bm in current:
            x = _apply_vertex_map_to_mask(g, a, am)
            y = _apply_vertex_map_to_mask(g, a, bm)
            mapped.add((x, y) if x <= y else (y, x))
        if mapped != current:
            raise GraphError("canonical nested set is not automorphism-invariant")
    return True
