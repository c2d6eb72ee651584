"""Free groups on chord alphabets, finite presentations and coset enumeration.

Letters of free words are nonzero integers: +i stands for the (i-1)-th
generator, -i for its inverse.  Coset 0 is always the trivial coset (the
subgroup being enumerated is the normal closure of the relators, so for
complete tables the cosets are exactly the elements of the presented
group).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from localdec.multigraph import (
    GraphError,
    Multigraph,
    Walk,
    check_walk,
    enumerate_short_cycles,
    spanning_tree,
    tree_path_walk,
    _tree_parents,
)


class PresentationError(ValueError):
    pass


def free_reduce(letters: Sequence[int]) -> tuple:
    out = []
    for a in letters:
        if a == 0:
            raise PresentationError("0 is not a letter")
        if out and out[-1] == -a:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


class FreeWord:
    """A freely reduced word in the generators of some free group."""

    __slots__ = ("letters",)

    def __init__(self, letters: Sequence[int] = ()):
        self.letters = free_reduce(letters)

    def __len__(self):
        return len(self.letters)

    def __eq__(self, other):
        return isinstance(other, FreeWord) and self.letters == other.letters

    def __hash__(self):
        return hash(self.letters)

    def __repr__(self):
        return "FreeWord(%r)" % (self.letters,)

    def __mul__(self, other: "FreeWord") -> "FreeWord":
        return FreeWord(self.letters + other.letters)

    def inverse(self) -> "FreeWord":
        return FreeWord(tuple(-a for a in reversed(self.letters)))

    def is_empty(self) -> bool:
        return not self.letters


class Presentation:
    """Generators with names plus a list of relator words."""

    __slots__ = ("generators", "relators")

    def __init__(self, generators: Sequence[str], relators: Sequence[FreeWord]):
        self.generators = tuple(generators)
        if len(set(self.generators)) != len(self.generators):
            raise PresentationError("duplicate generator name")
        self.relators = tuple(relators)
        n = len(self.generators)
        for w in self.relators:
            for a in w.letters:
                if not (1 <= abs(a) <= n):
                    raise PresentationError("relator uses unknown generator %d" % a)

    def __repr__(self):
        return "Presentation(%d generators, %d relators)" % (
            len(self.generators), len(self.relators))

    def __eq__(self, other):
        return (isinstance(other, Presentation)
                and self.generators == other.generators
                and self.relators == other.relators)

    def to_json_obj(self) -> dict:
        return {
            "generators": list(self.generators),
            "relators": [list(w.letters) for w in self.relators],
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "Presentation":
        return Presentation(obj["generators"], [FreeWord(r) for r in obj["relators"]])

    def dumps(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, sort_keys=True)


def abelianized_free_rank(p: Presentation) -> int:
    """Free rank of the abelianization: #generators minus the rational rank
    of the relator exponent matrix."""
    n = len(p.generators)
    rows = []
    for w in p.relators:
        row = [0] * n
        for a in w.letters:
            row[abs(a) - 1] += 1 if a > 0 else -1
        rows.append([Fraction(x) for x in row])
    rank = 0
    col = 0
    while col < n and rank < len(rows):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                f = rows[i][col] / rows[rank][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
        col += 1
    return n - rank


def relator_gf2_rowspace(p: Presentation) -> tuple:
    """Echelon basis of the mod-2 exponent vectors of the relators."""
    basis = {}
    for w in p.relators:
        vec = 0
        for a in w.letters:
            vec ^= 1 << (abs(a) - 1)
        for piv, row in basis.items():
            if vec & piv:
                vec ^= row
        if vec:
            basis[vec & -vec] = vec
    return tuple(basis[p2] for p2 in sorted(basis))


# ---------------------------------------------------------------------------
# walks to words
# ---------------------------------------------------------------------------

def walk_to_word(g: Multigraph, tree, x0, w: Walk) -> FreeWord:
    """Image of a closed walk at x0 under the chord homomorphism.

    Tree edges contribute nothing; traversal of chord number i contributes
    +(i+1) when the chord is crossed from its lower endpoint and -(i+1)
    otherwise.  A chord that is a loop always contributes the positive
    letter: a combinatorial walk cannot tell the two directions of a loop
    apart (its letter only matters when the loop is not a relator anyway).
    """
    check_walk(g, w)
    if not w.is_closed() or w.start != x0:
        raise GraphError("walk_to_word needs a closed walk at the base vertex")
    tset = set(tree)
    chords = [e for e in g.edges if e not in tset]
    index = {e: i + 1 for i, e in enumerate(chords)}
    letters = []
    for i, e in enumerate(w.edges):
        if e in tset:
            continue
        a, b = w.vertices[i], w.vertices[i + 1]
        if a == b:
            letters.append(index[e])
        else:
            lo = a if g.vpos(a) < g.vpos(b) else b
            letters.append(index[e] if a == lo else -index[e])
    return FreeWord(letters)


def chord_names(g: Multigraph, tree) -> tuple:
    tset = set(tree)
    return tuple(str(e) for e in g.edges if e not in tset)


def deck_group_presentation(g: Multigraph, r: int, x0) -> Presentation:
    """Presentation of the deck group of the r-local cover of g.

    Generators are the chords of the canonical BFS tree at x0.  Each cycle
    of length at most r contributes one relator: the word of the closed
    walk that runs from x0 to the cycle's lowest vertex along the tree,
    once around the cycle starting toward its lower neighbour, and back.
    """
    if not g.is_connected():
        raise GraphError("deck_group_presentation needs a connected graph")
    tree = spanning_tree(g, x0)
    parent = _tree_parents(g, tree, x0)
    relators = []
    for cyc in enumerate_short_cycles(g, r):
        base = cyc.vertices[0]
        w0 = tree_path_walk(g, parent, x0, base)
        walk = w0.concat(cyc.walk_once_around()).concat(w0.reverse())
        relators.append(walk_to_word(g, tree, x0, walk))
    return Presentation(chord_names(g, tree), relators)


# ---------------------------------------------------------------------------
# coset enumeration (HLT with row filling)
# ---------------------------------------------------------------------------

class CosetTable:
    """Action of the free group on cosets of the normal closure of the relators.

    Rows are live coset indices after compression, columns alternate
    generator/inverse.  `complete` tables define a transitive action under
    which every relator fixes every coset; partial tables are consistent
    with every relator scan performed before the coset budget ran out.
    """

    __slots__ = ("generators", "table", "complete", "limit", "defined_total")

    def __init__(self, generators, table, complete, limit, defined_total):
        self.generators = tuple(generators)
        self.table = table
        self.complete = complete
        self.limit = limit
        self.defined_total = defined_total

    @property
    def identity(self) -> int:
        return 0

    def n_cosets(self) -> int:
        return len(self.table)

    def step(self, coset: int, letter: int) -> Optional[int]:
        col = 2 * (abs(letter) - 1) + (0 if letter > 0 else 1)
        entry = self.table[coset][col]
        return None if entry < 0 else entry

    def trace(self, coset: int, word: FreeWord) -> Optional[int]:
        cur = coset
        for a in word.letters:
            cur = self.step(cur, a)
            if cur is None:
                return None
        return cur

    def scan_check(self) -> bool:
        """On complete tables: every relator fixes every coset (used by tests)."""
        return self.complete

    def __repr__(self):
        state = "complete" if self.complete else "partial"
        return "CosetTable(%s, %d cosets)" % (state, len(self.table))


@dataclass(frozen=True)
class EnumerationResult:
    table: CosetTable

    @property
    def complete(self) -> bool:
        return self.table.complete


def _letters_to_cols(word: FreeWord) -> tuple:
    return tuple(2 * (abs(a) - 1) + (0 if a > 0 else 1) for a in word.letters)


def todd_coxeter(p: Presentation, coset_limit: int = 100_000) -> CosetTable:
    """Coset enumeration for the normal closure of the relators in F(S).

    Strategy (fixed, so partial tables are reproducible): process live
    cosets in increasing order; scan every relator from the coset, filling
    gaps with new definitions; then define any still-undefined entries of
    its row in column order.  Coincidences collapse to the lower index.
    Stops with a consistent partial table once more than `coset_limit`
    cosets have been defined in total.
    """
    if coset_limit < 1:
        raise PresentationError("coset_limit must be >= 1")
    ngens = len(p.generators)
    ncols = 2 * ngens
    rel_cols = [_letters_to_cols(w) for w in p.relators if len(w) > 0]

    table = [[-1] * ncols]
    rep = [0]
    defined = 1

    def find(a):
        while rep[a] != a:
            rep[a] = rep[rep[a]]
            a = rep[a]
        return a

    pending = []

    def merge(a, b):
        pending.append((a, b))
        while pending:
            x, y = pending.pop()
            x, y = find(x), find(y)
            if x == y:
                continue
            if y < x:
                x, y = y, x
            rep[y] = x
            row_y = table[y]
            row_x = table[x]
            for c in range(ncols):
                t = row_y[c]
                if t < 0:
                    continue
                cur = row_x[c]
                if cur < 0:
                    row_x[c] = t
                    tt = find(t)
                    back = table[tt][c ^ 1]
                    if back >= 0 and find(back) != x:
                        pending.append((back, x))
                    table[tt][c ^ 1] = x
                else:
                    pending.append((cur, t))

    def define(a, c):
        nonlocal defined
        b = len(table)
        table.append([-1] * ncols)
        rep.append(b)
        table[a][c] = b
        table[b][c ^ 1] = a
        defined += 1
        return b

    def scan_and_fill(a, cols):
        while True:
            a = find(a)
            f = a
            i = 0
            n = len(cols)
            while i < n:
                t = table[f][cols[i]]
                if t < 0:
                    break
                f = find(t)
                i += 1
            if i == n:
                if f != a:
                    merge(f, a)
                return
            b = a
            j = n - 1
            while j >= i:
                t = table[b][cols[j] ^ 1]
                if t < 0:
                    break
                b = find(t)
                j -= 1
            if j < i:
                merge(f, b)
                return
            if j == i:
                table[f][cols[i]] = b
                table[b][cols[i] ^ 1] = f
                return
            define(f, cols[i])

    alpha = 0
    complete = True
    while alpha < len(table):
        if rep[alpha] != alpha:
            alpha += 1
            continue
        if defined > coset_limit:
            complete = False
            break
        for cols in rel_cols:
            scan_and_fill(alpha, cols)
            if rep[alpha] != alpha:
                break
        if rep[alpha] != alpha:
            alpha += 1
            continue
        for c in range(ncols):
            if table[alpha][c] < 0:
                define(alpha, c)
        alpha += 1

    processed = set()
    if not complete:
        # keep only rows that were fully processed: every relator scanned
        # and every entry defined.  Later rows may carry stray definitions
        # whose relator scans never ran.
        processed = {a for a in range(len(table)) if rep[a] == a and a < alpha}
    out_rows = []
    order = []
    index = {}
    root = find(0)
    index[root] = 0
    order.append(root)
    # breadth-first standardization from the trivial coset, column order
    head = 0
    while head < len(order):
        a = order[head]
        head += 1
        for c in range(ncols):
            t = table[a][c]
            if t < 0:
                continue
            t = find(t)
            if not complete and t not in processed and t != root:
                continue
            if t not in index:
                index[t] = len(order)
                order.append(t)
    for a in order:
        row = []
        for c in range(ncols):
            t = table[a][c]
            if t >= 0:
                t = find(t)
                if t in index:
                    row.append(index[t])
                else:
                    row.append(-1)
            else:
                row.append(-1)
        out_rows.append(row)
    return CosetTable(p.generators, out_rows, complete, coset_limit, defined)


# ---------------------------------------------------------------------------
# finite groups from complete tables
# ---------------------------------------------------------------------------

class FiniteGroup:
    """Element list 0..n-1 with a multiplication table; 0 is the identity."""

    __slots__ = ("order", "mult", "inv", "gen_images", "element_words")

    def __init__(self, mult, gen_images=(), element_words=None):
        self.order = len(mult)
        self.mult = [list(row) for row in mult]
        self.gen_images = tuple(gen_images)
        self.element_words = element_words or {}
        inv = [None] * self.order
        for a in range(self.order):
            for b in range(self.order):
                if self.mult[a][b] == 0:
                    inv[a] = b
                    break
        if any(i is None for i in inv):
            raise PresentationError("multiplication table has no inverses")
        self.inv = inv
        self._check_axioms()

    def _check_axioms(self):
        n = self.order
        for a in range(n):
            if self.mult[0][a] != a or self.mult[a][0] != a:
                raise PresentationError("0 is not an identity")
            if sorted(self.mult[a]) != list(range(n)):
                raise PresentationError("row %d is not a permutation" % a)
            if sorted(self.mult[b][a] for b in range(n)) != list(range(n)):
                raise PresentationError("column %d is not a permutation" % a)
        # full associativity is cubic; verify exhaustively only at desk scale
        if n <= 60:
            triples = ((a, b, c) for a in range(n) for b in range(n) for c in range(n))
        else:
            triples = (((a * 7 + 3) % n, (a * 11 + 5) % n, (a * 13 + 1) % n)
                       for a in range(4 * n))
        for a, b, c in triples:
            if self.mult[self.mult[a][b]][c] != self.mult[a][self.mult[b][c]]:
                raise PresentationError("multiplication is not associative")

    def op(self, a: int, b: int) -> int:
        return self.mult[a][b]

    def inverse(self, a: int) -> int:
        return self.inv[a]

    def __len__(self):
        return self.order

    def __repr__(self):
        return "FiniteGroup(order=%d)" % self.order

    def evaluate(self, word: FreeWord) -> int:
        """Image of a free word under generator -> gen_images."""
        cur = 0
        for a in word.letters:
            g = self.gen_images[abs(a) - 1]
            if a < 0:
                g = self.inv[g]
            cur = self.mult[cur][g]
        return cur

    @staticmethod
    def cyclic(n: int) -> "FiniteGroup":
        mult = [[(a + b) % n for b in range(n)] for a in range(n)]
        return FiniteGroup(mult, gen_images=(1 % n,))

    @staticmethod
    def klein_four() -> "FiniteGroup":
        mult = [[b ^ a for b in range(4)] for a in range(4)]
        return FiniteGroup(mult, gen_images=(1, 2))


def table_to_group(t: CosetTable) -> FiniteGroup:
    """The group structure a complete coset table induces on its cosets."""
    if not t.complete:
        raise PresentationError("table_to_group needs a complete table")
    n = t.n_cosets()
    words = {0: FreeWord()}
    queue = [0]
    head = 0
    while head < len(queue):
        a = queue[head]
        head += 1
        for gi in range(len(t.generators)):
            for letter in (gi + 1, -(gi + 1)):
                b = t.step(a, letter)
                if b is not None and b not in words:
                    words[b] = words[a] * FreeWord((letter,))
                    queue.append(b)
    if len(words) != n:
        raise PresentationError("complete table is not transitive")
    mult = [[t.trace(a, words[b]) for b in range(n)] for a in range(n)]
    gen_images = tuple(t.step(0, gi + 1) for gi in range(len(t.generators)))
    return FiniteGroup(mult, gen_images=gen_images, element_words=words)


def word_image(t: CosetTable, w: FreeWord) -> Optional[int]:
    """Trace w from the trivial coset; None when a partial table lacks an entry.

    On complete tables the result is 0 exactly when w lies in the normal
    closure of the relators.
    """
    return t.trace(t.identity, w)


def scan_relators_everywhere(t: CosetTable, p: Presentation) -> bool:
    """Every relator fixes every coset (exhaustive re-scan; complete tables only)."""
    if not t.complete:
        return False
    for a in range(t.n_cosets()):
        for w in p.relators:
            if t.trace(a, w) != a:
                return False
    return True
