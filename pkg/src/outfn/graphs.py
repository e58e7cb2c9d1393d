"""Labelled marked graphs: validation, collapse, blowups, stars and cactus graphs.

A point of the quotient of outer space by the Torelli group is a finite graph
whose oriented edges carry integer row vectors (homology labels) and exact
rational lengths in (0, 1].  Reversing an edge negates its label.

Blowups of a rose are described by splits of the 2n half-edges at the rose
vertex.  Half-edge ``2*i`` is the tail of petal a_i and ``2*i + 1`` its head;
sets of half-edges are stored as bitmasks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .freegroup import InvalidInput, Unsupported
from .lattice import RoseCoset, det, standard_representative

Label = tuple[int, ...]
ONE = Fraction(1)


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    label: Label
    length: Fraction = ONE

    def reversed(self) -> "Edge":
        return Edge(self.dst, self.src, tuple(-x for x in self.label), self.length)


@dataclass(frozen=True)
class LabelledGraph:
    rank: int
    vertices: tuple[int, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        vs = set(self.vertices)
        for e in self.edges:
            if e.src not in vs or e.dst not in vs:
                raise InvalidInput(f"edge {e} uses an unknown vertex")
            if len(e.label) != self.rank:
                raise InvalidInput(f"edge label {e.label} has wrong length")
            if not (0 < e.length <= 1):
                raise InvalidInput(f"edge length {e.length} outside (0, 1]")

    def valence(self, v: int) -> int:
        return sum((e.src == v) + (e.dst == v) for e in self.edges)

    def with_lengths(self, lengths: Sequence[Fraction]) -> "LabelledGraph":
        edges = tuple(Edge(e.src, e.dst, e.label, Fraction(x)) for e, x in zip(self.edges, lengths))
        return LabelledGraph(self.rank, self.vertices, edges)

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "vertices": list(self.vertices),
            "edges": [{"src": e.src, "dst": e.dst, "label": list(e.label), "len": str(e.length)}
                      for e in self.edges],
        }

    @classmethod
    def from_json(cls, data: dict) -> "LabelledGraph":
        try:
            edges = tuple(Edge(int(e["src"]), int(e["dst"]), tuple(int(x) for x in e["label"]),
                               Fraction(str(e.get("len", "1")))) for e in data["edges"])
            return cls(int(data["rank"]), tuple(int(v) for v in data["vertices"]), edges)
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise InvalidInput(f"malformed graph JSON: {exc}") from exc


def make_graph(rank: int, edges: Iterable[tuple], vertices: Iterable[int] | None = None) -> LabelledGraph:
    """Build a graph from (src, dst, label[, length]) tuples."""
    es = []
    for t in edges:
        src, dst, label = t[0], t[1], tuple(t[2])
        length = Fraction(t[3]) if len(t) > 3 else ONE
        es.append(Edge(src, dst, label, length))
    if vertices is None:
        vertices = sorted({e.src for e in es} | {e.dst for e in es})
    return LabelledGraph(rank, tuple(vertices), tuple(es))


def to_dot(G: LabelledGraph, name: str = "G") -> str:
    lines = [f"digraph {name} {{"]
    for v in G.vertices:
        lines.append(f"  v{v};")
    for e in G.edges:
        lab = "(" + ",".join(str(x) for x in e.label) + ")"
        lines.append(f'  v{e.src} -> v{e.dst} [label="{lab} len={e.length}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# small graph algorithms

class _UnionFind:
    def __init__(self, items: Iterable[int]):
        self.parent = {x: x for x in items}

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def _connected(vertices: Sequence[int], edges: Sequence[Edge], skip: frozenset[int] = frozenset()) -> bool:
    if not vertices:
        return True
    uf = _UnionFind(vertices)
    for k, e in enumerate(edges):
        if k not in skip:
            uf.union(e.src, e.dst)
    root = uf.find(vertices[0])
    return all(uf.find(v) == root for v in vertices)


def spanning_trees(G: LabelledGraph, must_contain: Iterable[int] = ()) -> list[tuple[int, ...]]:
    """All spanning trees (as sorted edge-index tuples) containing the given edges."""
    must = set(must_contain)
    need = len(G.vertices) - 1
    if len(must) > need:
        return []
    rest = [k for k in range(len(G.edges)) if k not in must]
    out = []
    for extra in itertools.combinations(rest, need - len(must)):
        T = sorted(must | set(extra))
        uf = _UnionFind(G.vertices)
        if all(uf.union(G.edges[k].src, G.edges[k].dst) for k in T):
            out.append(tuple(T))
    return out


def blocks(G: LabelledGraph) -> list[frozenset[int]]:
    """Biconnected components as sets of edge indices (loops are their own blocks)."""
    adj: dict[int, list[tuple[int, int]]] = {v: [] for v in G.vertices}
    out: list[frozenset[int]] = []
    for k, e in enumerate(G.edges):
        if e.src == e.dst:
            out.append(frozenset([k]))
        else:
            adj[e.src].append((e.dst, k))
            adj[e.dst].append((e.src, k))
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    stack: list[int] = []
    counter = [0]

    def dfs(u: int, parent_edge: int) -> None:
        disc[u] = low[u] = counter[0]
        counter[0] += 1
        for w, k in adj[u]:
            if k == parent_edge:
                continue
            if w not in disc:
                stack.append(k)
                dfs(w, k)
                low[u] = min(low[u], low[w])
                if low[w] >= disc[u]:
                    comp = []
                    while True:
                        top = stack.pop()
                        comp.append(top)
                        if top == k:
                            break
                    out.append(frozenset(comp))
            elif disc[w] < disc[u]:
                stack.append(k)
                low[u] = min(low[u], disc[w])

    for v in G.vertices:
        if v not in disc:
            dfs(v, -1)
    return out


def bridges(G: LabelledGraph) -> list[int]:
    return sorted(next(iter(b)) for b in blocks(G)
                  if len(b) == 1 and G.edges[next(iter(b))].src != G.edges[next(iter(b))].dst)


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    condition: str = ""
    witness: object = None


def _same_up_to_sign(a: Label, b: Label) -> bool:
    return a == b or a == tuple(-x for x in b)


def validate(G: LabelledGraph) -> ValidationReport:
    """Check the defining conditions of a labelled marked graph, in order."""
    n = G.rank
    if not G.vertices:
        return ValidationReport(False, "empty", None)
    if not _connected(G.vertices, G.edges):
        return ValidationReport(False, "connected", None)
    h1 = len(G.edges) - len(G.vertices) + 1
    if h1 != n:
        return ValidationReport(False, "homology-rank", h1)
    for v in G.vertices:
        if G.valence(v) < 3:
            return ValidationReport(False, "valence", v)
    br = bridges(G)
    if br:
        return ValidationReport(False, "separating-edge", br[0])
    for v in G.vertices:
        net = [0] * n
        for e in G.edges:
            if e.dst == v:
                net = [a + b for a, b in zip(net, e.label)]
            if e.src == v:
                net = [a - b for a, b in zip(net, e.label)]
        if any(net):
            return ValidationReport(False, "flow", v)
    T = spanning_trees_one(G)
    cotree = [G.edges[k].label for k in range(len(G.edges)) if k not in T]
    if det(cotree) not in (1, -1):
        return ValidationReport(False, "marking", tuple(cotree))
    for a, b in itertools.combinations(range(len(G.edges)), 2):
        if _same_up_to_sign(G.edges[a].label, G.edges[b].label):
            if _connected(G.vertices, G.edges, frozenset([a, b])):
                return ValidationReport(False, "parallel", (a, b))
    return ValidationReport(True)


def spanning_trees_one(G: LabelledGraph) -> set[int]:
    uf = _UnionFind(G.vertices)
    return {k for k, e in enumerate(G.edges) if uf.union(e.src, e.dst)}


# ---------------------------------------------------------------------------
# collapse, roses, stars

def collapse(G: LabelledGraph, forest: Iterable[int]) -> LabelledGraph:
    F = sorted(set(forest))
    uf = _UnionFind(G.vertices)
    for k in F:
        if not 0 <= k < len(G.edges):
            raise InvalidInput(f"no edge {k}")
        e = G.edges[k]
        if not uf.union(e.src, e.dst):
            raise InvalidInput(f"edge set {F} contains a cycle")
    reps = sorted({uf.find(v) for v in G.vertices})
    new = {r: i for i, r in enumerate(reps)}
    fs = set(F)
    edges = tuple(Edge(new[uf.find(e.src)], new[uf.find(e.dst)], e.label, e.length)
                  for k, e in enumerate(G.edges) if k not in fs)
    return LabelledGraph(G.rank, tuple(range(len(reps))), edges)


def rose_graph(rho: RoseCoset) -> LabelledGraph:
    return LabelledGraph(rho.rank, (0,), tuple(Edge(0, 0, tuple(r)) for r in rho.matrix))


def roses_whose_star_contains(G: LabelledGraph) -> set[RoseCoset]:
    """Roses reached by collapsing a maximal tree whose complement has length 1."""
    short = [k for k, e in enumerate(G.edges) if e.length < 1]
    out = set()
    for T in spanning_trees(G, short):
        cot = [G.edges[k].label for k in range(len(G.edges)) if k not in T]
        out.add(standard_representative(cot))
    return out


def _labels_of_length_one(G: LabelledGraph) -> set[Label]:
    out = set()
    for e in G.edges:
        if e.length == 1:
            out.add(e.label)
            out.add(tuple(-x for x in e.label))
    return out


def in_star(G: LabelledGraph, rho: RoseCoset) -> bool:
    full = _labels_of_length_one(G)
    return all(tuple(v) in full for v in rho.matrix)


def in_frontier(G: LabelledGraph, rho: RoseCoset) -> bool:
    if not in_star(G, rho):
        raise InvalidInput("graph is not in the star of this rose")
    rows = {tuple(v) for v in rho.matrix} | {tuple(-x for x in v) for v in rho.matrix}
    return any(e.length == 1 and e.label not in rows for e in G.edges)


# ---------------------------------------------------------------------------
# ideal edges and splits

@dataclass(frozen=True)
class IdealEdge:
    """Formal sum sum k_i a_i with k_i in {-1,0,1}, at least two nonzero, first nonzero +1."""

    coefficients: tuple[int, ...]

    def __post_init__(self) -> None:
        k = self.coefficients
        if any(x not in (-1, 0, 1) for x in k):
            raise InvalidInput(f"ideal edge coefficients {k} not in {{-1,0,1}}")
        nz = [x for x in k if x]
        if len(nz) < 2:
            raise InvalidInput(f"ideal edge {k} needs at least two nonzero coefficients")
        if nz[0] != 1:
            raise InvalidInput(f"ideal edge {k} is not sign-normalized")

    @classmethod
    def of(cls, k: Sequence[int]) -> "IdealEdge":
        k = tuple(int(x) for x in k)
        nz = [x for x in k if x]
        if nz and nz[0] < 0:
            k = tuple(-x for x in k)
        return cls(k)

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, x in enumerate(self.coefficients) if x)

    def letters(self) -> int:
        return len(self.support)

    def label(self, rho: RoseCoset) -> Label:
        n = rho.rank
        return tuple(sum(k * rho.matrix[i][j] for i, k in enumerate(self.coefficients)) for j in range(n))

    def side(self) -> int:
        """Half-edge set whose split realizes this ideal edge (tails of +, heads of -)."""
        m = 0
        for i, k in enumerate(self.coefficients):
            if k == 1:
                m |= 1 << (2 * i)
            elif k == -1:
                m |= 1 << (2 * i + 1)
        return m


def is_subordinate(sub: IdealEdge, big: IdealEdge) -> bool:
    """sub is big with some coefficients set to zero (up to overall sign)."""
    if sub.rank != big.rank:
        return False
    restr = tuple(b if s else 0 for s, b in zip(sub.coefficients, big.coefficients))
    if any(s and not b for s, b in zip(sub.coefficients, big.coefficients)):
        return False
    return sub.coefficients in (restr, tuple(-x for x in restr))


def are_opposite(a: IdealEdge, b: IdealEdge) -> bool:
    """One is obtained from the other by changing the sign of exactly one coefficient."""
    if a.support != b.support:
        return False
    for target in (b.coefficients, tuple(-x for x in b.coefficients)):
        if sum(x != y for x, y in zip(a.coefficients, target)) == 1:
            return True
    return False


def side_coefficients(side: int, n: int) -> tuple[int, ...]:
    """k_i = [tail of a_i in side] - [head of a_i in side]."""
    return tuple(((side >> (2 * i)) & 1) - ((side >> (2 * i + 1)) & 1) for i in range(n))


def full_mask(n: int) -> int:
    return (1 << (2 * n)) - 1


def normalize_side(side: int, n: int) -> int:
    """Represent a split by the side not containing the tail of a_1."""
    return side ^ full_mask(n) if side & 1 else side


def all_splits(n: int) -> list[int]:
    """Every split of the 2n half-edges with both sides of size >= 2 and nonzero label."""
    out = []
    for side in range(0, full_mask(n) + 1, 2):  # excludes half-edge 0
        size = bin(side).count("1")
        if size < 2 or 2 * n - size < 2:
            continue
        if any(side_coefficients(side, n)):
            out.append(side)
    return out


def compatible(a: int, b: int, n: int) -> bool:
    """Two normalized splits are compatible iff the sides are nested or disjoint."""
    if a == b:
        return False
    return (a & b) == 0 or (a & b) == a or (a & b) == b


def blowup_by_sides(rho: RoseCoset, sides: Sequence[int], root_side: bool = False) -> LabelledGraph:
    """Blow up the rose along a laminar family of half-edge sets.

    Vertex 0 is the complement region; set ``sides[t]`` becomes vertex t+1 and
    new edge n+t running from its parent region into it.  Edges 0..n-1 are the
    petals a_i.  Sides must be pairwise nested or disjoint.
    """
    n = rho.rank
    sides = list(sides)
    for a, b in itertools.combinations(sides, 2):
        if not compatible(a, b, n):
            raise Unsupported("half-edge sets are not laminar")

    def home(mask_bit: int) -> int:
        best = None
        for t, s in enumerate(sides):
            if s & mask_bit and (best is None or bin(s).count("1") < bin(sides[best]).count("1")):
                best = t
        return 0 if best is None else best + 1

    def parent(t: int) -> int:
        s = sides[t]
        best = None
        for u, w in enumerate(sides):
            if u != t and (w & s) == s and w != s:
                if best is None or bin(w).count("1") < bin(sides[best]).count("1"):
                    best = u
        return 0 if best is None else best + 1

    M = rho.matrix
    edges = []
    for i in range(n):
        edges.append(Edge(home(1 << (2 * i)), home(1 << (2 * i + 1)), tuple(M[i])))
    for t, s in enumerate(sides):
        k = side_coefficients(s, n)
        label = tuple(sum(k[i] * M[i][j] for i in range(n)) for j in range(n))
        edges.append(Edge(parent(t), t + 1, label))
    return LabelledGraph(n, tuple(range(len(sides) + 1)), tuple(edges))


def blowup_1edge(rho: RoseCoset, iota: IdealEdge) -> LabelledGraph:
    """Two-vertex blowup realizing iota: new edge P -> Q labelled sum k_i v_i,
    a_i: Q -> P for k_i = +1, a_i: P -> Q for k_i = -1, spectator loops at P."""
    if iota.rank != rho.rank:
        raise InvalidInput("ideal edge rank does not match the rose")
    return blowup_by_sides(rho, [iota.side()])


def _ends(i: int) -> int:
    return 0b11 << (2 * i)


def simultaneous_blowup(rho: RoseCoset, iota: IdealEdge, iota2: IdealEdge) -> LabelledGraph:
    """A graph in the star of rho realizing both ideal edges.

    Subordinate pairs nest the second split inside the first; 2-letter pairs
    use disjoint sides, or a chain when they share a letter at the same end.
    An identical pair is realized by two parallel new edges (tails and heads),
    or by the single new edge when every letter participates.
    """
    n = rho.rank
    if iota.rank != n or iota2.rank != n:
        raise InvalidInput("ideal edge rank does not match the rose")
    if are_opposite(iota, iota2):
        raise InvalidInput(f"opposite ideal edges {iota.coefficients} and {iota2.coefficients}")
    S = iota.side()
    if iota == iota2:
        participants = 0
        for i in iota.support:
            participants |= _ends(i)
        if iota.letters() == n:
            # the other ends form the complement of S: the same split again
            return blowup_1edge(rho, iota)
        return blowup_by_sides(rho, [S, participants & ~S])
    for big, sub in ((iota, iota2), (iota2, iota)):
        if is_subordinate(sub, big):
            restr = tuple(b if s else 0 for s, b in zip(sub.coefficients, big.coefficients))
            G = blowup_by_sides(rho, [big.side(), _side_raw(restr)])
            return G if big is iota else _swap_new_edges(G, n)
    if iota.letters() == 2 and iota2.letters() == 2:
        S2 = iota2.side()
        if S & S2 == 0:
            return blowup_by_sides(rho, [S, S2])
        shared = set(iota.support) & set(iota2.support)
        if len(shared) == 1:
            extra = 0
            for j in set(iota.support) - shared:
                extra |= _ends(j)
            T = S2 | extra
            if (T & S) == S:
                G = blowup_by_sides(rho, [T, S])
                return _swap_new_edges(G, n)
    raise Unsupported(f"no template for {iota.coefficients} with {iota2.coefficients}")


def _side_raw(k: Sequence[int]) -> int:
    m = 0
    for i, x in enumerate(k):
        if x == 1:
            m |= 1 << (2 * i)
        elif x == -1:
            m |= 1 << (2 * i + 1)
    return m


def _swap_new_edges(G: LabelledGraph, n: int) -> LabelledGraph:
    """Reorder so edge n realizes the first ideal edge argument."""
    e = list(G.edges)
    e[n], e[n + 1] = e[n + 1], e[n]
    return LabelledGraph(G.rank, G.vertices, tuple(e))


# ---------------------------------------------------------------------------
# canonical form

def _edge_code(e: Edge, perm: dict[int, int]) -> tuple:
    a = (perm[e.src], perm[e.dst], e.label, e.length)
    b = (perm[e.dst], perm[e.src], tuple(-x for x in e.label), e.length)
    return min(a, b)


def _vertex_invariant(G: LabelledGraph, v: int) -> tuple:
    inc = []
    for e in G.edges:
        if e.src == v:
            inc.append((e.label, e.length))
        if e.dst == v:
            inc.append((tuple(-x for x in e.label), e.length))
    return tuple(sorted(inc))


@dataclass(frozen=True)
class Canonical:
    code: tuple
    vertex_map: dict
    edge_map: tuple[int, ...]
    flipped: tuple[bool, ...]


def canonical_labelling(G: LabelledGraph) -> Canonical:
    """Canonical encoding plus the relabelling that produces it.

    ``edge_map[k]`` is the position of edge k in the sorted code and
    ``flipped[k]`` says whether it was reversed to reach the canonical form.
    Vertex orderings are searched exhaustively within invariant classes.
    """
    inv = {v: _vertex_invariant(G, v) for v in G.vertices}
    classes: dict[tuple, list[int]] = {}
    for v in G.vertices:
        classes.setdefault(inv[v], []).append(v)
    keys = sorted(classes)
    groups = [classes[k] for k in keys]
    best = None
    for choice in itertools.product(*(itertools.permutations(g) for g in groups)):
        order = [v for grp in choice for v in grp]
        perm = {v: i for i, v in enumerate(order)}
        code = tuple(sorted(_edge_code(e, perm) for e in G.edges))
        if best is None or code < best[0]:
            best = (code, perm)
    code, perm = best
    slots: dict[tuple, list[int]] = {}
    for pos, c in enumerate(code):
        slots.setdefault(c, []).append(pos)
    edge_map, flipped = [], []
    for e in G.edges:
        c = _edge_code(e, perm)
        edge_map.append(slots[c].pop(0))
        flipped.append(c != (perm[e.src], perm[e.dst], e.label, e.length))
    full = (G.rank, len(G.vertices), code)
    return Canonical(full, perm, tuple(edge_map), tuple(flipped))


def canonical_form(G: LabelledGraph) -> tuple:
    return canonical_labelling(G).code


def from_canonical(code: tuple) -> LabelledGraph:
    rank, nv, edges = code
    return LabelledGraph(rank, tuple(range(nv)), tuple(Edge(a, b, lab, ln) for a, b, lab, ln in edges))


# ---------------------------------------------------------------------------
# cactus graphs

def is_cactus(G: LabelledGraph) -> bool:
    """Every edge lies in exactly one embedded circle and there are rank many circles."""
    bl = blocks(G)
    for b in bl:
        vs = {G.edges[k].src for k in b} | {G.edges[k].dst for k in b}
        if len(b) != len(vs):  # a block is a circle iff |E| = |V|
            return False
    return len(bl) == G.rank


def one_letter_splits(n: int) -> list[int]:
    return [s for s in all_splits(n) if sum(1 for x in side_coefficients(s, n) if x) == 1]


def compatible_families(splits: Sequence[int], n: int, max_size: int,
                        accept=None) -> Iterable[tuple[int, ...]]:
    """Pairwise compatible subfamilies (sorted tuples) of size 1..max_size."""
    splits = sorted(splits)
    compat = {a: {b for b in splits if compatible(a, b, n)} for a in splits}

    def grow(fam: tuple[int, ...], allowed: list[int]):
        yield fam
        if len(fam) == max_size:
            return
        for t, s in enumerate(allowed):
            nxt = fam + (s,)
            if accept is not None and not accept(nxt):
                continue
            yield from grow(nxt, [x for x in allowed[t + 1:] if x in compat[s]])

    for t, s in enumerate(splits):
        if accept is not None and not accept((s,)):
            continue
        yield from grow((s,), [x for x in splits[t + 1:] if x in compat[s]])


def enumerate_cactus_types(n: int, max_vertices: int, rho: RoseCoset | None = None) -> dict[int, set]:
    """Combinatorial types of cactus graphs in the star of rho by vertex count.

    Types with v vertices form the cells of dimension v-1.  Only blowups along
    1-letter splits keep every label of the form ±v_i.
    """
    from .lattice import identity_rose

    rho = rho or identity_rose(n)
    out: dict[int, set] = {1: {canonical_form(rose_graph(rho))}}
    for fam in compatible_families(one_letter_splits(n), n, max_vertices - 1):
        G = blowup_by_sides(rho, fam)
        if validate(G).ok and is_cactus(G):
            out.setdefault(len(G.vertices), set()).add(canonical_form(G))
    return out


def two_vertex_example() -> LabelledGraph:
    """Two vertices: a loop (1,0,0), a loop (0,1,0), two parallel (0,0,1) edges."""
    return make_graph(3, [(0, 0, (1, 0, 0)), (1, 1, (0, 1, 0)), (0, 1, (0, 0, 1)), (1, 0, (0, 0, 1))])
