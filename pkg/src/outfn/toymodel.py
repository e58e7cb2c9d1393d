"""The toy model: pairs of points on the grid U = (R x Z) u (Z x R).

For each i >= 3 a configuration holds a pair (z_i, z_i') in U.  The graph has
the x1 circle and x2 circle of a rank 2 rose, subdivided at the projections
of all points, plus an edge a_i from proj(z_i') to proj(z_i) labelled e_i.  An
arc of the x_j circle is labelled e_j plus, for each i, e_i times the signed
number of times a return path from z_i to z_i' runs over it.  With every point
at a lattice point and z_i' - z_i = (p_i, q_i), the result is the rose whose
marking matrix has rows e_1 + sum p_i e_i, e_2 + sum q_i e_i, e_3, ..., e_n.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .freegroup import InvalidInput
from .graphs import (
    Edge,
    LabelledGraph,
    _UnionFind,
    canonical_labelling,
    collapse,
    from_canonical,
    in_star,
    roses_whose_star_contains,
    spanning_trees,
    validate,
)
from .lattice import RoseCoset, identity_matrix, identity_rose, right_action, standard_representative
from .morse import HomologyGroup, is_descending, label_coefficients, order_complex_homology
from .graphs import IdealEdge

Point = tuple[Fraction, Fraction]


def _pt(p: Sequence) -> Point:
    return (Fraction(p[0]), Fraction(p[1]))


def _is_int(x: Fraction) -> bool:
    return x.denominator == 1


@dataclass(frozen=True)
class ToyConfiguration:
    """Pairs (z_i, z_i') for i = 3..n, exact rational coordinates on U."""

    rank: int
    pairs: tuple[tuple[Point, Point], ...]

    def __post_init__(self) -> None:
        if self.rank < 3 or len(self.pairs) != self.rank - 2:
            raise InvalidInput(f"rank {self.rank} needs {self.rank - 2} pairs, got {len(self.pairs)}")
        for z, w in self.pairs:
            for x, y in (z, w):
                if not (_is_int(x) or _is_int(y)):
                    raise InvalidInput(f"point ({x}, {y}) is not on the grid")

    @classmethod
    def of(cls, rank: int, pairs: Iterable) -> "ToyConfiguration":
        return cls(rank, tuple((_pt(z), _pt(w)) for z, w in pairs))

    def normalized(self) -> "ToyConfiguration":
        """Translate each pair so that z_i lies in [0,1)^2."""
        out = []
        for z, w in self.pairs:
            dx, dy = math.floor(z[0]), math.floor(z[1])
            out.append(((z[0] - dx, z[1] - dy), (w[0] - dx, w[1] - dy)))
        return ToyConfiguration(self.rank, tuple(out))

    def translated(self, index: int, vector: tuple[int, int]) -> "ToyConfiguration":
        pairs = list(self.pairs)
        z, w = pairs[index]
        a, b = vector
        pairs[index] = ((z[0] + a, z[1] + b), (w[0] + a, w[1] + b))
        return ToyConfiguration(self.rank, tuple(pairs))


def _projection(p: Point) -> tuple[str, Fraction]:
    x, y = p
    if _is_int(x) and _is_int(y):
        return ("O", Fraction(0))
    if _is_int(y):
        return ("h", x - math.floor(x))
    return ("v", y - math.floor(y))


def staircase(z: Point, w: Point, horizontal_first: bool = True) -> list[tuple[str, Fraction, Fraction]]:
    """Grid path from z to w as segments (axis, start, end).

    Leave z along its own grid line to the lattice point below/left of it,
    cross the lattice, then enter w along its grid line.
    """
    segs = []

    def to_lattice(p: Point) -> tuple[Point, tuple | None]:
        x, y = p
        if _is_int(x) and _is_int(y):
            return p, None
        if _is_int(y):
            fx = Fraction(math.floor(x))
            return (fx, y), ("h", x, fx)
        fy = Fraction(math.floor(y))
        return (x, fy), ("v", y, fy)

    a, seg = to_lattice(z)
    if seg:
        segs.append(seg)
    b, seg_in = to_lattice(w)
    if horizontal_first:
        if a[0] != b[0]:
            segs.append(("h", a[0], b[0]))
        if a[1] != b[1]:
            segs.append(("v", a[1], b[1]))
    else:
        if a[1] != b[1]:
            segs.append(("v", a[1], b[1]))
        if a[0] != b[0]:
            segs.append(("h", a[0], b[0]))
    if seg_in:
        axis, start, end = seg_in
        segs.append((axis, end, start))
    return segs


def _coverage(start: Fraction, end: Fraction, s: Fraction, e: Fraction) -> int:
    """Signed number of lifts [s+m, e+m] inside the segment from start to end."""
    lo, hi = min(start, end), max(start, end)
    count = math.floor(hi - e) - math.ceil(lo - s) + 1
    count = max(0, count)
    return count if end > start else -count


def config_to_graph(c: ToyConfiguration, horizontal_first: bool = True) -> LabelledGraph:
    n = c.rank
    cuts = {"h": {Fraction(0)}, "v": {Fraction(0)}}
    for z, w in c.pairs:
        for p in (z, w):
            kind, t = _projection(p)
            if kind != "O":
                cuts[kind].add(t)
    vid: dict[tuple[str, Fraction], int] = {("O", Fraction(0)): 0}
    for kind in ("h", "v"):
        for t in sorted(cuts[kind]):
            if t != 0:
                vid[(kind, t)] = len(vid)

    def vertex(kind: str, t: Fraction) -> int:
        return 0 if (kind == "O" or t == 0 or t == 1) else vid[(kind, t)]

    paths = [staircase(z, w, horizontal_first) for z, w in c.pairs]
    edges = []
    for j, kind in enumerate(("h", "v")):
        ts = sorted(cuts[kind]) + [Fraction(1)]
        for s, e in zip(ts, ts[1:]):
            label = [0] * n
            label[j] = 1
            for i, path in enumerate(paths):
                label[i + 2] = sum(_coverage(a, b, s, e) for axis, a, b in path if axis == kind)
            edges.append(Edge(vertex(kind, s), vertex(kind, e), tuple(label)))
    for i, (z, w) in enumerate(c.pairs):
        label = [0] * n
        label[i + 2] = 1
        edges.append(Edge(vertex(*_projection(w)), vertex(*_projection(z)), tuple(label)))
    return LabelledGraph(n, tuple(range(len(vid))), tuple(edges))


def block_matrix(n: int, p: Sequence[int], q: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    M = [list(r) for r in identity_matrix(n)]
    for i in range(2, n):
        M[0][i] = p[i - 2]
        M[1][i] = q[i - 2]
    return tuple(tuple(r) for r in M)


def block_rose(n: int, p: Sequence[int], q: Sequence[int]) -> RoseCoset:
    return standard_representative(block_matrix(n, p, q))


# ---------------------------------------------------------------------------
# tori and their maximal roses

@dataclass(frozen=True)
class TorusClass:
    p: int
    q: int
    rank: int = 3


def _far(x: int) -> int:
    return x + 1 if x >= 0 else x - 1


def max_norm_rose(t: TorusClass) -> RoseCoset:
    """The block rose with every p_i = p±1 and q_i = q±1 (away from zero).

    For p = 0 or q = 0 both signs give maximal roses; the +1 choice is taken.
    """
    n = t.rank
    return block_rose(n, [_far(t.p)] * (n - 2), [_far(t.q)] * (n - 2))


def block_family(t: TorusClass) -> set[RoseCoset]:
    """Block roses with each p_i in [p-1, p+1] and q_i in [q-1, q+1]."""
    n = t.rank
    rng_p = range(t.p - 1, t.p + 2)
    rng_q = range(t.q - 1, t.q + 2)
    out = set()
    for ps in itertools.product(rng_p, repeat=n - 2):
        for qs in itertools.product(rng_q, repeat=n - 2):
            out.add(block_rose(n, ps, qs))
    return out


# circle cell structure of the boundary of a unit square: corners c0..c3
# counterclockwise from the lower left, side k runs from c_k to c_{k+1}
_CORNERS = ((0, 0), (1, 0), (1, 1), (0, 1))


def _square_point(origin: tuple[int, int], cell: tuple[str, int], s: Fraction = Fraction(1, 2)) -> Point:
    kind, k = cell
    a = _CORNERS[k]
    if kind == "v":
        return (Fraction(origin[0] + a[0]), Fraction(origin[1] + a[1]))
    b = _CORNERS[(k + 1) % 4]
    return (origin[0] + a[0] + s * (b[0] - a[0]), origin[1] + a[1] + s * (b[1] - a[1]))


def _circle_cells() -> list[tuple[str, int]]:
    return [("v", k) for k in range(4)] + [("e", k) for k in range(4)]


def _circle_boundary(cell: tuple[str, int]) -> list[tuple[tuple[str, int], int]]:
    kind, k = cell
    if kind == "v":
        return []
    return [(("v", (k + 1) % 4), 1), (("v", k), -1)]


@dataclass(frozen=True)
class TorusCells:
    torus: TorusClass
    cells: tuple
    dimension: dict = field(hash=False)
    boundary: dict = field(hash=False)
    graphs: dict = field(hash=False)
    corner_roses: dict = field(hash=False)

    def count(self, d: int) -> int:
        return sum(1 for c in self.cells if self.dimension[c] == d)

    def euler_characteristic(self) -> int:
        return sum((-1) ** self.dimension[c] for c in self.cells)

    def closed_surface(self) -> bool:
        """Every 1-cell lies on exactly two 2-cells."""
        uses: dict = {}
        for c in self.cells:
            if self.dimension[c] == 2:
                for f, _ in self.boundary[c]:
                    uses[f] = uses.get(f, 0) + 1
        ones = [c for c in self.cells if self.dimension[c] == 1]
        return all(uses.get(c, 0) == 2 for c in ones)

    def boundary_squared_zero(self) -> bool:
        for c in self.cells:
            acc: dict = {}
            for f, s in self.boundary[c]:
                for g, t in self.boundary[f]:
                    acc[g] = acc.get(g, 0) + s * t
            if any(acc.values()):
                return False
        return True


def z_pq_cells(t: TorusClass) -> TorusCells:
    """The 16-cell product structure of Z_{p,q} with graphs at sample points.

    z runs over the boundary of [0,1]^2 and z' over the boundary of
    [p,p+1] x [q,q+1].  Each cell records the canonical graphs of a grid of
    interior sample points (cells where both points move on the same circle
    contain more than one combinatorial type).
    """
    if t.rank != 3:
        raise InvalidInput("z_pq_cells is implemented for rank 3")
    cells = []
    dimension = {}
    boundary = {}
    graphs = {}
    corner_roses = {}
    samples = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))
    for a in _circle_cells():
        for b in _circle_cells():
            key = (a, b)
            cells.append(key)
            da = 1 if a[0] == "e" else 0
            db = 1 if b[0] == "e" else 0
            dimension[key] = da + db
            bd = [((f, b), s) for f, s in _circle_boundary(a)]
            bd += [((a, g), s * (-1) ** da) for g, s in _circle_boundary(b)]
            boundary[key] = bd
            codes = set()
            for s1 in (samples if da else (Fraction(0),)):
                for s2 in (samples if db else (Fraction(0),)):
                    z = _square_point((0, 0), a, s1)
                    w = _square_point((t.p, t.q), b, s2)
                    G = config_to_graph(ToyConfiguration(3, ((z, w),)))
                    codes.add(canonical_labelling(G).code)
            graphs[key] = frozenset(codes)
            if da == 0 and db == 0:
                z = _square_point((0, 0), a)
                w = _square_point((t.p, t.q), b)
                corner_roses[key] = block_rose(3, [int(w[0] - z[0])], [int(w[1] - z[1])])
    return TorusCells(t, tuple(cells), dimension, boundary, graphs, corner_roses)


def torus_certificate(t: TorusClass) -> dict:
    """Structural and graph-level checks on z_pq_cells."""
    T = z_pq_cells(t)
    fam = block_family(t)
    graphs_ok = True
    star_ok = True
    for key, codes in T.graphs.items():
        for code in codes:
            G = from_canonical(code)
            if not validate(G).ok:
                graphs_ok = False
            if not (roses_whose_star_contains(G) & fam):
                star_ok = False
    corners_ok = True
    for key, rho in T.corner_roses.items():
        (a, b) = key
        z = _square_point((0, 0), a)
        w = _square_point((t.p, t.q), b)
        P, Q = int(w[0] - z[0]), int(w[1] - z[1])
        via_action = right_action(identity_rose(3), block_matrix(3, [P], [Q]))
        G = config_to_graph(ToyConfiguration(3, ((z, w),)))
        as_rose = standard_representative([e.label for e in G.edges]) if len(G.vertices) == 1 else None
        if not (rho == via_action == as_rose and rho in fam):
            corners_ok = False
    return {
        "two_cells": T.count(2),
        "one_cells": T.count(1),
        "zero_cells": T.count(0),
        "euler_characteristic": T.euler_characteristic(),
        "closed_surface": T.closed_surface(),
        "boundary_squared_zero": T.boundary_squared_zero(),
        "graphs_valid": graphs_ok,
        "in_block_stars": star_ok,
        "corners_match_action": corners_ok,
    }


# ---------------------------------------------------------------------------
# the descending sphere of Z_{p,q}

@dataclass(frozen=True)
class SphereReport:
    torus: TorusClass
    rose: RoseCoset
    cells: tuple
    homology: tuple[HomologyGroup, ...]
    single_sphere: bool
    circle_structure: bool
    pure: bool
    all_completely_descending: bool
    loops_meet_once: bool

    @property
    def passed(self) -> bool:
        return (self.single_sphere and self.circle_structure and self.pure
                and self.all_completely_descending and self.loops_meet_once)

    def to_json(self) -> dict:
        return {
            "pq": [self.torus.p, self.torus.q],
            "max_rose": self.rose.to_json(),
            "cells": len(self.cells),
            "homology": [h.to_json() for h in self.homology],
            "checks": {
                "sphere": self.single_sphere and self.circle_structure,
                "pure": self.pure,
                "completely_descending": self.all_completely_descending,
                "loops_meet_once": self.loops_meet_once,
            },
            "sphere_ok": self.passed,
        }


def _corners(t: TorusClass) -> tuple[Point, Point, tuple[int, int], tuple[int, int]]:
    """Corners realizing max_norm_rose and the directions into the adjacent sides."""
    cx = 0 if t.p >= 0 else 1
    cy = 0 if t.q >= 0 else 1
    wx = t.p + 1 if t.p >= 0 else t.p
    wy = t.q + 1 if t.q >= 0 else t.q
    z = (Fraction(cx), Fraction(cy))
    w = (Fraction(wx), Fraction(wy))
    dz = (1 if cx == 0 else -1, 1 if cy == 0 else -1)
    dw = (-1 if t.p >= 0 else 1, -1 if t.q >= 0 else 1)
    return z, w, dz, dw


def _state_point(corner: Point, direction: tuple[int, int], state: int, d: Fraction) -> Point:
    if state == 0:
        return corner
    if state == 1:
        return (corner[0] + direction[0] * d, corner[1])
    return (corner[0], corner[1] + direction[1] * d)


def loops_meet_once(G: LabelledGraph, rho: RoseCoset) -> bool:
    """For every maximal tree collapsing G to rho, the fundamental cycles of the
    v_1 and v_2 cotree edges share exactly one vertex."""
    rows = [tuple(r) for r in rho.matrix]
    found = False
    for T in spanning_trees(G):
        cot = [k for k in range(len(G.edges)) if k not in T]
        if standard_representative([G.edges[k].label for k in cot], check=False) != rho:
            continue
        found = True
        cycles = []
        for v in rows[:2]:
            neg = tuple(-x for x in v)
            k = next(k for k in cot if G.edges[k].label in (v, neg))
            cycles.append(_fundamental_cycle_vertices(G, T, k))
        if len(cycles[0] & cycles[1]) != 1:
            return False
    return found


def _fundamental_cycle_vertices(G: LabelledGraph, tree: Sequence[int], k: int) -> set[int]:
    adj: dict[int, list[int]] = {v: [] for v in G.vertices}
    for t in tree:
        e = G.edges[t]
        adj[e.src].append(e.dst)
        adj[e.dst].append(e.src)
    e = G.edges[k]
    prev = {e.src: None}
    queue = [e.src]
    while queue:
        u = queue.pop(0)
        for w in adj[u]:
            if w not in prev:
                prev[w] = u
                queue.append(w)
    path = set()
    u = e.dst
    while u is not None:
        path.add(u)
        u = prev[u]
    return path


def _completely_descending(G: LabelledGraph, rho: RoseCoset) -> bool:
    if not in_star(G, rho):
        return False
    rows = {tuple(r) for r in rho.matrix} | {tuple(-x for x in r) for r in rho.matrix}
    descending = 0
    for e in G.edges:
        if e.label in rows:
            continue
        k = label_coefficients(rho, e.label)
        if any(abs(x) > 1 for x in k):
            return False
        if not is_descending(rho, IdealEdge.of(k)):
            return False
        descending += 1
    return descending > 0


@functools.lru_cache(maxsize=None)
def sphere_intersection(t: TorusClass) -> SphereReport:
    """Configurations of Z_{p,q} in the descending link of its maximal rose.

    Every point sits at its corner (the rose) or on one of the two sides at
    that corner, closer than half a side.  The graph types of these
    configurations, minus the rose itself, are the cells; faces are single
    edge collapses staying among them.  Their order complex should be a
    sphere of dimension 2n-5.
    """
    n = t.rank
    if n < 3:
        raise InvalidInput("toy model needs rank >= 3")
    rho = max_norm_rose(t)
    z0, w0, dz, dw = _corners(t)
    k = 2 * (n - 2)
    # z points and z' points lie on different halves of each circle, so n-2
    # distances realize every order (and tie) within each group
    dists = [Fraction(j + 1, 2 * n) for j in range(n - 2)]
    choices = [(0, None)] + [(s, d) for s in (1, 2) for d in dists]

    graphs: dict = {}
    for combo in itertools.product(choices, repeat=k):
        if not any(s for s, _ in combo):
            continue
        pairs = []
        for i in range(n - 2):
            (s1, d1), (s2, d2) = combo[2 * i], combo[2 * i + 1]
            pairs.append((_state_point(z0, dz, s1, d1), _state_point(w0, dw, s2, d2)))
        G = config_to_graph(ToyConfiguration(n, tuple(pairs)))
        graphs.setdefault(canonical_labelling(G).code, G)
    cells = tuple(sorted(graphs))
    dim = {c: len(graphs[c].vertices) - 2 for c in cells}

    faces: dict = {}
    for c in cells:
        G = graphs[c]
        fs = set()
        for idx, e in enumerate(G.edges):
            if e.src != e.dst:
                f = canonical_labelling(collapse(G, [idx])).code
                if f in graphs:
                    fs.add(f)
        faces[c] = fs
    below: dict = {}

    def closure(c):
        if c not in below:
            acc = set()
            for f in faces[c]:
                acc.add(f)
                acc |= closure(f)
            below[c] = acc
        return below[c]

    for c in cells:
        closure(c)
    tops = [c for c in cells if not any(c in faces[d] for d in cells)]
    pure = all(dim[c] == k - 1 for c in tops) and all(dim[f] == dim[c] - 1 for c in cells for f in faces[c])
    pure = pure and all(faces[c] for c in cells if dim[c] > 0)

    desc_ok = all(_completely_descending(G, rho) for G in graphs.values())
    loops_ok = all(loops_meet_once(G, rho) for G in graphs.values())

    H = tuple(order_complex_homology(cells, lambda a, b: a in below[b]))
    expected = [1 if d in (0, k - 1) else 0 for d in range(len(H))]
    single = [h.rank for h in H] == expected and all(not h.torsion for h in H)
    circle = True
    if n == 3:
        # four graphs with 2 vertices and four with 3, joined in one cycle
        verts = [c for c in cells if dim[c] == 0]
        arcs = [c for c in cells if dim[c] == 1]
        circle = len(verts) == 4 and len(arcs) == 4 and all(len(faces[a]) == 2 for a in arcs)
        circle = circle and all(sum(1 for a in arcs if v in faces[a]) == 2 for v in verts)
        uf = _UnionFind(verts)
        for a in arcs:
            x, y = sorted(faces[a])
            uf.union(x, y)
        circle = circle and len({uf.find(v) for v in verts}) == 1
    return SphereReport(t, rho, cells, H, single, circle, pure, desc_ok, loops_ok)


# ---------------------------------------------------------------------------
# counting top homology

@dataclass(frozen=True)
class ToyHomologyReport:
    rank: int
    window: tuple[tuple[int, int], ...]
    count: int
    injective: bool
    spheres_ok: bool
    census: int
    failures: tuple = ()


def window_square(w: int) -> list[tuple[int, int]]:
    return [(p, q) for p in range(-w, w + 1) for q in range(-w, w + 1)]


def morse_census(window: Iterable[tuple[int, int]]) -> int:
    """Index-2 points at each (p,q) != (0,0) plus the torus born at the index-1 circle."""
    ws = set(window)
    return sum(1 for pq in ws if pq != (0, 0)) + (1 if (0, 0) in ws else 0)


def toy_homology_report(n: int, window: Iterable[tuple[int, int]]) -> ToyHomologyReport:
    W = tuple(sorted(set(window)))
    if (0, 0) not in W:
        raise InvalidInput("the window must contain (0, 0)")
    roses = [max_norm_rose(TorusClass(p, q, n)) for p, q in W]
    injective = len(set(roses)) == len(roses)
    failures = []
    for p, q in W:
        rep = sphere_intersection(TorusClass(p, q, n))
        if not rep.passed:
            failures.append((p, q))
    census = morse_census(W)
    ok = injective and not failures and census == len(W)
    return ToyHomologyReport(n, W, len(W) if ok else 0, injective, not failures, census, tuple(failures))


def toy_homology_rank(n: int, window: Iterable[tuple[int, int]]) -> int:
    """Certified number of independent top classes Z_{p,q} over the window.

    The certificate needs distinct maximal roses across the window and a
    passing sphere report for every torus; for rank n >= 4 the tori are the
    diagonal products of rank 3 tori.  Returns 0 when a certificate fails.
    """
    return toy_homology_report(n, window).count
