"""Descending ideal edges, descending links and the completely descending link.

Roses are ordered by the norm of their standard representative.  An ideal
edge of rho is descending when some rose sharing its 1-edge blowup has
strictly smaller norm.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Sequence

from .freegroup import InvalidInput
from .graphs import (
    IdealEdge,
    LabelledGraph,
    _UnionFind,
    all_splits,
    are_opposite,
    blowup_1edge,
    blowup_by_sides,
    canonical_labelling,
    collapse,
    compatible_families,
    from_canonical,
    is_subordinate,
    side_coefficients,
    validate,
)
from .lattice import (
    ImpossibleState,
    RoseCoset,
    enumerate_roses,
    inverse_unimodular,
    invariant_factors,
    matmul,
    standard_representative,
    vector_norm,
)


class EmptyLinkError(ValueError):
    """The identity rose has an empty descending link."""


class ResourceLimit(RuntimeError):
    """The requested enumeration is outside the supported size."""


def ideal_edges(n: int) -> list[IdealEdge]:
    out = []
    for k in itertools.product((-1, 0, 1), repeat=n):
        nz = [x for x in k if x]
        if len(nz) >= 2 and nz[0] == 1:
            out.append(IdealEdge(k))
    return out


def ideal_sum(rho: RoseCoset, iota: IdealEdge) -> tuple[int, ...]:
    return iota.label(rho)


# ---------------------------------------------------------------------------
# the descending test

def replacement_roses(rho: RoseCoset, iota: IdealEdge) -> list[RoseCoset]:
    """The roses other than rho whose stars contain the 1-edge blowup along iota."""
    s = ideal_sum(rho, iota)
    out = []
    for i in iota.support:
        rows = list(rho.matrix)
        rows[i] = s
        # det changes by the factor k_i = ±1, so the result stays unimodular
        out.append(standard_representative(rows, check=False))
    return out


def is_descending(rho: RoseCoset, iota: IdealEdge) -> bool:
    """Fast path: the ideal sum is shorter than the top participating row."""
    if iota.rank != rho.rank:
        raise InvalidInput("ideal edge rank does not match the rose")
    top = min(iota.support)
    return vector_norm(ideal_sum(rho, iota)) < vector_norm(rho.matrix[top])


def is_descending_oracle(rho: RoseCoset, iota: IdealEdge) -> bool:
    """Ground truth: some replacement rose has strictly smaller norm.

    Only norms matter, so the replacement cosets are compared through their
    sorted row norms rather than built in full.
    """
    s = vector_norm(ideal_sum(rho, iota))
    norms = [vector_norm(r) for r in rho.matrix]
    best = None
    for i in iota.support:
        cand = tuple(sorted(norms[:i] + [s] + norms[i + 1:]))
        if best is None or cand < best:
            best = cand
    return best < rho.norm


def descending_edges(rho: RoseCoset) -> list[IdealEdge]:
    return [iota for iota in ideal_edges(rho.rank) if is_descending(rho, iota)]


def opposite(iota: IdealEdge, position: int) -> IdealEdge:
    """Flip the sign of one coefficient (0-based position)."""
    k = list(iota.coefficients)
    if not 0 <= position < len(k) or k[position] == 0:
        raise InvalidInput(f"position {position} has zero coefficient in {iota.coefficients}")
    k[position] = -k[position]
    return IdealEdge.of(k)


@dataclass(frozen=True)
class ForbiddenPairReport:
    checked: int
    violations: tuple[tuple[RoseCoset, IdealEdge, int], ...]
    top_row_violations: int

    @property
    def ok(self) -> bool:
        return self.top_row_violations == 0


def forbidden_pair_check(roses: Iterable[RoseCoset]) -> ForbiddenPairReport:
    """Look for descending ideal edges whose opposite is also descending.

    ``top_row_violations`` counts flips of the top participating row, the case
    the guarantee covers; ``violations`` lists every flip position.
    """
    checked = 0
    bad = []
    top_bad = 0
    for rho in roses:
        for iota in descending_edges(rho):
            for pos in iota.support:
                checked += 1
                if is_descending(rho, opposite(iota, pos)):
                    bad.append((rho, iota, pos))
                    if pos == min(iota.support):
                        top_bad += 1
    return ForbiddenPairReport(checked, tuple(bad), top_bad)


# ---------------------------------------------------------------------------
# nonemptiness and connectivity

def _two_letter(n: int, i: int, ki: int, j: int, kj: int) -> IdealEdge:
    k = [0] * n
    k[i], k[j] = ki, kj
    return IdealEdge.of(k)


def descending_witness(rho: RoseCoset) -> IdealEdge | None:
    """A descending 2-letter ideal edge found by scanning columns, or None.

    Take the first column k that is not a signed coordinate vector.  Pair a_k
    with a lower row that is nonzero there if one exists, otherwise with an
    upper row.
    """
    M = rho.matrix
    n = rho.rank
    cols = list(zip(*M))
    k = next((c for c in range(n) if sum(1 for x in cols[c] if x) > 1), None)
    if k is None:
        return None
    if M[k][k] == 0:
        raise ImpossibleState(f"diagonal entry {k} vanishes for {M}")
    below = [j for j in range(k + 1, n) if M[j][k]]
    above = [j for j in range(k) if M[j][k]]
    pairs = [(k, j) for j in below] if below else [(j, k) for j in above]
    for i, j in pairs:
        for eps in (1, -1):
            iota = _two_letter(n, i, 1, j, eps)
            if is_descending(rho, iota):
                return iota
    raise ImpossibleState(f"column scan found no descending edge for {M}")


@dataclass(frozen=True)
class SubordinateResult:
    edge: IdealEdge
    route: str


def subordinate_2letter(rho: RoseCoset, iota: IdealEdge) -> SubordinateResult:
    """A descending 2-letter ideal edge subordinate to the descending edge iota.

    Follows the two-case column analysis on the signed participating rows;
    if the analysis does not apply, scans every subordinate pair.
    """
    if not is_descending(rho, iota):
        raise InvalidInput("ideal edge is not descending")
    if iota.letters() == 2:
        return SubordinateResult(iota, "already-2-letter")
    n = rho.rank
    sup = list(iota.support)
    k = iota.coefficients
    w = [tuple(k[i] * x for x in rho.matrix[i]) for i in sup]
    m = len(w)

    def pair(p: int, q: int) -> IdealEdge:
        return _two_letter(n, sup[p], k[sup[p]], sup[q], k[sup[q]])

    cols = [c for c in range(n) if any(r[c] for r in w)]
    c1 = cols[0]
    candidate = None
    route = ""
    if sum(1 for r in w if r[c1]) >= 2:
        route = "first-column"
        s = 1 if w[0][c1] > 0 else -1
        q = next((t for t in range(1, m) if s * w[t][c1] < 0), None)
        if w[0][c1] != 0 and q is not None:
            candidate = pair(0, q)
    else:
        # rows 2..m vanish in column c1; use their first nonzero column
        c2 = next(c for c in range(n) if any(r[c] for r in w[1:]))
        s = 1 if w[1][c2] > 0 else -1
        rest = list(range(2, m))
        if all(w[t][c2] == 0 for t in rest):
            route, candidate = "second-column-a", pair(0, 1)
        else:
            neg = next((t for t in rest if s * w[t][c2] < 0), None)
            if neg is not None:
                route, candidate = "second-column-b", pair(1, neg)
            else:
                pos = next(t for t in rest if s * w[t][c2] > 0)
                route, candidate = "second-column-c", pair(0, pos)
    if candidate is not None and is_descending(rho, candidate):
        return SubordinateResult(candidate, route)
    for p, q in itertools.combinations(range(m), 2):
        cand = pair(p, q)
        if is_descending(rho, cand):
            return SubordinateResult(cand, "scan")
    raise ImpossibleState(f"no descending 2-letter edge under {iota.coefficients} for {rho.matrix}")


def simultaneously_realizable(a: IdealEdge, b: IdealEdge) -> bool:
    if a == b:
        return True
    if is_subordinate(a, b) or is_subordinate(b, a):
        return True
    return a.letters() == 2 and b.letters() == 2 and not are_opposite(a, b)


@dataclass(frozen=True)
class DescendingLinkModel:
    rose: RoseCoset
    edges: tuple[IdealEdge, ...]
    adjacency: tuple[tuple[int, int], ...]

    def components(self) -> int:
        uf = _UnionFind(range(len(self.edges)))
        for a, b in self.adjacency:
            uf.union(a, b)
        return len({uf.find(i) for i in range(len(self.edges))})

    @property
    def connected(self) -> bool:
        return len(self.edges) > 0 and self.components() == 1


def descending_link(rho: RoseCoset) -> DescendingLinkModel:
    edges = tuple(descending_edges(rho))
    adj = tuple((i, j) for i, j in itertools.combinations(range(len(edges)), 2)
                if simultaneously_realizable(edges[i], edges[j]))
    return DescendingLinkModel(rho, edges, adj)


def descending_link_connected(rho: RoseCoset) -> bool:
    model = descending_link(rho)
    if not model.edges:
        raise EmptyLinkError(f"rose {rho.matrix} has an empty descending link")
    return model.connected


# ---------------------------------------------------------------------------
# completely descending link

@dataclass(frozen=True)
class CellComplexModel:
    """Cells are canonical graph codes; faces are single-edge collapses."""

    rose: RoseCoset | None
    cells: tuple[tuple, ...]
    dimension: dict = field(hash=False)
    faces: dict = field(hash=False)
    edge_class: dict = field(hash=False)

    def closure_ok(self) -> bool:
        cs = set(self.cells)
        return all(f in cs for fs in self.faces.values() for f in fs)

    @property
    def dim(self) -> int:
        return max(self.dimension.values(), default=-1)


def edge_classes(G: LabelledGraph, rho: RoseCoset) -> tuple[int, ...]:
    """Class i+1 for edges labelled ±v_i, class 0 for every other edge."""
    rows = {}
    for i, v in enumerate(rho.matrix):
        rows[tuple(v)] = i + 1
        rows[tuple(-x for x in v)] = i + 1
    return tuple(rows.get(e.label, 0) for e in G.edges)


def label_coefficients(rho: RoseCoset, label: Sequence[int]) -> tuple[int, ...]:
    """Coefficients k with label = sum k_i v_i."""
    inv = inverse_unimodular(rho.matrix)
    return matmul([tuple(label)], inv)[0]


def completely_descending_complex(rho: RoseCoset, max_rank: int = 4) -> CellComplexModel:
    """Blowups of rho whose non-±v_i edges are all descending, up to isomorphism.

    A cell has dimension (vertices - 2); faces collapse one edge while keeping
    an edge of every ±v_i class and at least one descending edge.
    """
    n = rho.rank
    if n > max_rank:
        raise ResourceLimit(f"rank {n} exceeds the supported maximum {max_rank}")
    allowed = []
    has_desc = set()
    for side in all_splits(n):
        k = side_coefficients(side, n)
        nz = sum(1 for x in k if x)
        if nz == 1:
            allowed.append(side)
        elif all(abs(x) <= 1 for x in k) and is_descending(rho, IdealEdge.of(k)):
            allowed.append(side)
            has_desc.add(side)
    cells: dict[tuple, LabelledGraph] = {}
    for fam in compatible_families(allowed, n, 2 * n - 3):
        if not any(s in has_desc for s in fam):
            continue
        G = blowup_by_sides(rho, fam)
        if not validate(G).ok:
            continue
        code = canonical_labelling(G).code
        if code not in cells:
            cells[code] = from_canonical(code)
    dimension = {}
    faces = {}
    classes = {}
    for code, G in cells.items():
        cls = edge_classes(G, rho)
        classes[code] = cls
        dimension[code] = len(G.vertices) - 2
        fs = set()
        for e in admissible_collapses(G, cls, max_size=1):
            fs.add(canonical_labelling(collapse(G, e)).code)
        faces[code] = fs
    ordered = tuple(sorted(cells, key=lambda c: (dimension[c], c)))
    return CellComplexModel(rho, ordered, dimension, faces, classes)


def admissible_collapses(G: LabelledGraph, classes: Sequence[int], max_size: int | None = None) -> list[tuple[int, ...]]:
    """Nonempty forests whose collapse keeps at least one edge of every class."""
    E = len(G.edges)
    counts: dict[int, int] = {}
    for c in classes:
        counts[c] = counts.get(c, 0) + 1
    limit = len(G.vertices) - 1 if max_size is None else min(max_size, len(G.vertices) - 1)
    out = []
    for size in range(1, limit + 1):
        for F in itertools.combinations(range(E), size):
            uf = _UnionFind(G.vertices)
            if not all(uf.union(G.edges[k].src, G.edges[k].dst) for k in F):
                continue
            used: dict[int, int] = {}
            for k in F:
                used[classes[k]] = used.get(classes[k], 0) + 1
            if any(used[c] >= counts[c] for c in used):
                continue
            out.append(F)
    return out


# ---------------------------------------------------------------------------
# homology

@dataclass(frozen=True)
class HomologyGroup:
    dim: int
    rank: int
    torsion: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {"dim": self.dim, "rank": self.rank, "torsion": list(self.torsion)}


def chain_complex_homology(simplices: dict[int, list[Hashable]],
                           boundary: Callable[[Hashable, int], list[tuple[Hashable, int]]]) -> list[HomologyGroup]:
    """Integer homology from cells per degree and a signed boundary map."""
    top = max(simplices, default=-1)
    index = {d: {s: i for i, s in enumerate(simplices.get(d, []))} for d in range(top + 1)}
    factors: dict[int, list[int]] = {}
    for d in range(1, top + 1):
        entries: dict[tuple[int, int], int] = {}
        for j, s in enumerate(simplices.get(d, [])):
            for face, sign in boundary(s, d):
                key = (index[d - 1][face], j)
                entries[key] = entries.get(key, 0) + sign
        factors[d] = invariant_factors(len(index[d - 1]), len(index[d]), entries)
    out = []
    for d in range(top + 1):
        n_d = len(simplices.get(d, []))
        r_d = len(factors.get(d, []))
        r_up = len(factors.get(d + 1, []))
        tors = tuple(x for x in factors.get(d + 1, []) if x > 1)
        out.append(HomologyGroup(d, n_d - r_d - r_up, tors))
    return out


def order_complex_homology(elements: Sequence[Hashable], less: Callable[[Hashable, Hashable], bool]) -> list[HomologyGroup]:
    """Homology of the order complex of a finite poset (chains are simplices)."""
    elems = list(elements)
    up = {a: [b for b in elems if less(a, b)] for a in elems}
    chains: dict[int, list[tuple]] = {}

    def extend(chain: tuple) -> None:
        chains.setdefault(len(chain) - 1, []).append(chain)
        for b in up[chain[-1]]:
            extend(chain + (b,))

    for a in elems:
        extend((a,))

    def bd(s: tuple, d: int):
        return [(s[:j] + s[j + 1:], (-1) ** j) for j in range(d + 1)] if d > 0 else []

    return chain_complex_homology(chains, bd)


def _automorphism_edge_maps(G: LabelledGraph) -> list[tuple[int, ...]]:
    """Edge permutations induced by label-preserving automorphisms of G."""
    from .graphs import _edge_code, _vertex_invariant

    base = {}
    ident = {v: v for v in G.vertices}
    for k, e in enumerate(G.edges):
        base[_edge_code(e, ident)] = k
    inv = {v: _vertex_invariant(G, v) for v in G.vertices}
    out = []
    for perm in itertools.permutations(G.vertices):
        pi = dict(zip(G.vertices, perm))
        if any(inv[v] != inv[pi[v]] for v in G.vertices):
            continue
        try:
            out.append(tuple(base[_edge_code(e, pi)] for e in G.edges))
        except KeyError:
            continue
    return out


def cdlk_homology(X: CellComplexModel) -> list[HomologyGroup]:
    """Homology of the barycentric subdivision of the cell complex.

    A simplex is a cell G with a strict flag of admissible collapse forests
    F_1 < ... < F_k; its vertices are G, G/F_1, ..., G/F_k.  Dropping G moves
    the flag to the canonical labelling of G/F_1.  Flags related by an
    automorphism of G are identified.
    """
    graphs = {c: from_canonical(c) for c in X.cells}
    auts = {}
    for c, G in graphs.items():
        maps = _automorphism_edge_maps(G)
        auts[c] = [m for m in maps if m != tuple(range(len(G.edges)))]

    def canon(code: tuple, flag: tuple) -> tuple:
        best = flag
        for m in auts[code]:
            img = tuple(tuple(sorted(m[k] for k in F)) for F in flag)
            if img < best:
                best = img
        return (code, best)

    simplices: dict[int, set] = {}
    for c, G in graphs.items():
        forests = [frozenset(F) for F in admissible_collapses(G, X.edge_class[c])]
        by_size = sorted(forests, key=len)

        def grow(flag: tuple) -> None:
            key = canon(c, tuple(tuple(sorted(F)) for F in flag))
            simplices.setdefault(len(flag), set()).add(key)
            last = flag[-1] if flag else frozenset()
            for F in by_size:
                if len(F) > len(last) and last < F:
                    grow(flag + (F,))

        grow(())

    cache = {}

    def drop_top(code: tuple, flag: tuple) -> tuple:
        G = graphs[code]
        F1 = flag[0]
        key = (code, F1)
        if key not in cache:
            H = collapse(G, F1)
            lab = canonical_labelling(H)
            survivors = [k for k in range(len(G.edges)) if k not in set(F1)]
            cache[key] = (lab.code, {k: lab.edge_map[t] for t, k in enumerate(survivors)})
        new_code, emap = cache[key]
        rest = tuple(tuple(sorted(emap[k] for k in F if k not in set(F1))) for F in flag[1:])
        return canon(new_code, rest)

    def bd(s: tuple, d: int):
        code, flag = s
        if d == 0:
            return []
        out = [(drop_top(code, flag), 1)]
        for j in range(len(flag)):
            out.append((canon(code, flag[:j] + flag[j + 1:]), (-1) ** (j + 1)))
        return out

    ordered = {d: sorted(v, key=repr) for d, v in simplices.items()}
    return chain_complex_homology(ordered, bd)


def homology(X) -> list[HomologyGroup]:
    """Homology of a cell complex model, or of a poset given as (elements, less)."""
    if isinstance(X, CellComplexModel):
        return cdlk_homology(X)
    elements, less = X
    return order_complex_homology(elements, less)


# ---------------------------------------------------------------------------
# rank 2

def _slope(a: int, b: int) -> str:
    if a == 0:
        return "1/0"
    f = Fraction(b, a)
    return f"{f.numerator}/{f.denominator}"


def farey_pair(rho: RoseCoset) -> frozenset:
    """Rows (a, b), (c, d) give the unordered pair {b/a, d/c}; x/0 is infinity."""
    if rho.rank != 2:
        raise InvalidInput("Farey labels are defined for rank 2")
    return frozenset(_slope(a, b) for a, b in rho.matrix)


@dataclass(frozen=True)
class Rank2Tree:
    bound: int
    roses: tuple[RoseCoset, ...]
    thetas: tuple[tuple, ...]
    incidence: tuple[tuple[int, int], ...]  # (rose index, theta index)
    acyclic: bool
    core: tuple[int, ...]
    core_connected: bool
    farey_ok: bool
    farey: dict = field(hash=False, compare=False)


def rank2_tree(B: int) -> Rank2Tree:
    """The quotient for rank 2 as a graph: thetas are nodes, roses are edges.

    Each rose's star is an interval between its two theta blowups.  A theta is
    in three stars, whose Farey pairs pairwise share a fraction.
    """
    roses = enumerate_roses(2, B)
    idx = {r: i for i, r in enumerate(roses)}
    thetas: dict[tuple, int] = {}
    theta_roses: dict[int, set] = {}
    incidence = []
    for i, rho in enumerate(roses):
        for iota in ideal_edges(2):
            G = blowup_1edge(rho, iota)
            code = canonical_labelling(G).code
            t = thetas.setdefault(code, len(thetas))
            incidence.append((i, t))
            members = {rho, *replacement_roses(rho, iota)}
            theta_roses.setdefault(t, set()).update(members)
    # forest test: roses are edges between theta nodes
    uf = _UnionFind(range(len(thetas)))
    acyclic = True
    ends: dict[int, list[int]] = {}
    for i, t in incidence:
        ends.setdefault(i, []).append(t)
    for i, ts in sorted(ends.items()):
        if len(ts) != 2 or not uf.union(ts[0], ts[1]):
            acyclic = False
    # core: roses all of whose smaller star-neighbours are in the core
    core: list[int] = []
    in_core = set()
    for i, rho in enumerate(roses):
        smaller = [r for t in ends[i] for r in theta_roses[t] if r.norm < rho.norm]
        if all(r in idx and idx[r] in in_core for r in smaller):
            core.append(i)
            in_core.add(i)
    uf2 = _UnionFind(range(len(thetas)))
    for i in core:
        uf2.union(*ends[i])
    core_thetas = {t for i in core for t in ends[i]}
    connected = len({uf2.find(t) for t in core_thetas}) <= 1
    farey = {r: farey_pair(r) for r in roses}
    farey_ok = True
    for t, members in theta_roses.items():
        for a, b in itertools.combinations(members, 2):
            if not (farey_pair(a) & farey_pair(b)):
                farey_ok = False
    codes = tuple(sorted(thetas, key=thetas.get))
    return Rank2Tree(B, tuple(roses), codes, tuple(incidence), acyclic, tuple(core), connected, farey_ok, farey)


def rank2_tree_dot(tree: Rank2Tree) -> str:
    """Theta graphs as points, roses as labelled nodes joined to their two thetas."""
    lines = ["graph Y2 {"]
    lines += [f"  t{t} [shape=point];" for t in range(len(tree.thetas))]
    for i, rho in enumerate(tree.roses):
        lab = ",".join(sorted(tree.farey[rho]))
        lines.append(f'  r{i} [label="{{{lab}}}"];')
    lines += [f"  r{i} -- t{t};" for i, t in tree.incidence]
    lines.append("}")
    return "\n".join(lines) + "\n"
