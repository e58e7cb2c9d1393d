from __future__ import annotations

import itertools
import random

import pytest

from outfn.freegroup import InvalidInput
from outfn.graphs import IdealEdge, from_canonical, is_subordinate
from outfn.lattice import RoseCoset, enumerate_roses, identity_rose, standard_representative
from outfn.morse import (
    EmptyLinkError,
    ResourceLimit,
    completely_descending_complex,
    descending_edges,
    descending_link,
    descending_link_connected,
    descending_witness,
    farey_pair,
    forbidden_pair_check,
    homology,
    ideal_edges,
    is_descending,
    is_descending_oracle,
    opposite,
    rank2_tree,
    replacement_roses,
    subordinate_2letter,
)

RHO = standard_representative([[2, 1, 0], [1, 1, 0], [0, 0, 1]])
A1_MINUS_A2 = IdealEdge.of((1, -1, 0))
A1_PLUS_A2 = IdealEdge.of((1, 1, 0))


@pytest.fixture(scope="module")
def rank3_roses():
    return enumerate_roses(3, 2)


def _full_oracle(rho: RoseCoset, iota: IdealEdge) -> bool:
    # build every replacement coset in standard form and compare norms
    return min(r.norm for r in replacement_roses(rho, iota)) < rho.norm


# descending test -------------------------------------------------------------

def test_is_descending_examples():
    assert RHO.matrix == ((2, 1, 0), (1, 1, 0), (0, 0, 1))
    assert is_descending(RHO, A1_MINUS_A2)
    assert not is_descending(RHO, A1_PLUS_A2)
    for n in (2, 3, 4):
        assert not any(is_descending(identity_rose(n), i) for i in ideal_edges(n))
    with pytest.raises(InvalidInput):
        is_descending(RHO, IdealEdge.of((1, 1)))


def test_fast_path_matches_oracle_rank3(rank3_roses):
    mismatches = [(r, i) for r in rank3_roses for i in ideal_edges(3)
                  if is_descending(r, i) != is_descending_oracle(r, i)]
    assert mismatches == []


def test_fast_path_matches_oracle_rank4():
    roses = enumerate_roses(4, 1)
    edges = ideal_edges(4)
    random.seed(5)
    for r in random.sample(roses, 3000):
        for i in edges:
            assert is_descending(r, i) == is_descending_oracle(r, i)


def test_norm_oracle_matches_full_coset_oracle(rank3_roses):
    random.seed(2)
    for r in random.sample(rank3_roses, 300):
        for i in ideal_edges(3):
            assert is_descending_oracle(r, i) == _full_oracle(r, i)


# opposites ---------------------------------------------------------------------

def test_opposite_examples():
    assert opposite(A1_PLUS_A2, 1) == A1_MINUS_A2
    assert opposite(opposite(A1_PLUS_A2, 1), 1) == A1_PLUS_A2
    assert opposite(IdealEdge.of((1, 1, 1)), 0) == IdealEdge.of((1, -1, -1))
    with pytest.raises(InvalidInput):
        opposite(A1_PLUS_A2, 2)


def test_forbidden_pair_examples():
    report = forbidden_pair_check([RHO])
    assert report.ok and report.top_row_violations == 0
    assert is_descending(RHO, A1_MINUS_A2) and not is_descending(RHO, opposite(A1_MINUS_A2, 1))


def test_forbidden_pairs_top_row(rank3_roses):
    report = forbidden_pair_check(rank3_roses)
    assert report.checked > 0
    assert report.top_row_violations == 0
    # flipping a lower row is not covered: such double-descending pairs exist
    rho = standard_representative([[1, -1, 0], [0, 1, 0], [0, 0, 1]])
    iota = IdealEdge.of((1, 1, -1))
    assert is_descending(rho, iota) and is_descending(rho, opposite(iota, 2))
    assert all(pos != min(i.support) for _, i, pos in report.violations)


# nonemptiness --------------------------------------------------------------------

def test_descending_witness_examples():
    assert descending_witness(identity_rose(3)) is None
    w = descending_witness(RHO)
    assert w is not None and w.letters() == 2 and is_descending(RHO, w)
    rho2 = standard_representative([[1, 1], [1, 0]])
    w2 = descending_witness(rho2)
    assert w2 == IdealEdge.of((1, -1)) and is_descending_oracle(rho2, w2)


def test_descending_witness_absent_only_for_identity(rank3_roses):
    for r in rank3_roses:
        w = descending_witness(r)
        if r == identity_rose(3):
            assert w is None
        else:
            assert w is not None and w.letters() == 2 and is_descending_oracle(r, w)
        assert (w is None) == (not descending_edges(r))


@pytest.mark.parametrize("n,B", [(3, 2), (4, 1)])
def test_subordinate_witness_exists(n, B):
    roses = enumerate_roses(n, B)
    if n == 4:
        random.seed(9)
        roses = random.sample(roses, 4000)
    for r in roses:
        for i in descending_edges(r):
            res = subordinate_2letter(r, i)
            assert res.edge.letters() == 2 and is_descending(r, res.edge)
            if i.letters() == 2:
                assert res.edge == i and res.route == "already-2-letter"
            else:
                assert is_subordinate(res.edge, i)


def test_subordinate_requires_descending():
    with pytest.raises(InvalidInput):
        subordinate_2letter(RHO, A1_PLUS_A2)


# connectivity ----------------------------------------------------------------------

def test_connected_examples():
    assert descending_link_connected(standard_representative([[1, 1], [1, 0]]))
    with pytest.raises(EmptyLinkError):
        descending_link_connected(identity_rose(3))


def test_all_rank3_links_connected(rank3_roses):
    for r in rank3_roses:
        if r == identity_rose(3):
            continue
        assert descending_link_connected(r)


def test_link_model_invariants():
    model = descending_link(RHO)
    assert all(is_descending(RHO, e) for e in model.edges)
    assert all(a < b for a, b in model.adjacency)
    assert model.connected


# completely descending complex ---------------------------------------------------------

def test_cdlk_identity_is_empty():
    assert completely_descending_complex(identity_rose(3)).cells == ()


def test_cdlk_rank_limit():
    with pytest.raises(ResourceLimit):
        completely_descending_complex(identity_rose(5))


@pytest.fixture(scope="module")
def cdlk_sample(rank3_roses):
    random.seed(4)
    picks = [r for r in rank3_roses if r != identity_rose(3)]
    return [completely_descending_complex(r) for r in [RHO] + random.sample(picks, 11)]


def test_cdlk_cells(cdlk_sample):
    for X in cdlk_sample:
        assert X.cells and X.closure_ok()
        assert X.dim <= 2
        for c in X.cells:
            G = from_canonical(c)
            assert X.dimension[c] == len(G.vertices) - 2
            if X.dimension[c] == 2:
                assert len(G.vertices) == 4 and len(G.edges) == 6
                assert all(G.valence(v) == 3 for v in G.vertices)
            for f in X.faces[c]:
                assert X.dimension[f] == X.dimension[c] - 1


def test_cdlk_homology_vanishes_above_one(cdlk_sample):
    for X in cdlk_sample:
        H = homology(X)
        assert H[0].rank >= 1
        assert all(h.rank == 0 and not h.torsion for h in H[2:])


def test_cdlk_known_values():
    X = completely_descending_complex(standard_representative([[1, 0, -1], [0, 1, 0], [0, 0, 1]]))
    assert len(X.cells) == 5
    assert [h.rank for h in homology(X)] == [1, 2]


# homology backend -----------------------------------------------------------------

def test_homology_of_point():
    H = homology((["p"], lambda a, b: False))
    assert [h.rank for h in H] == [1]


def test_homology_of_triangle_boundary():
    # face poset of a triangle's boundary: vertices below the edges containing them
    elems = ["a", "b", "c", "ab", "bc", "ca"]

    def less(x, y):
        return len(x) < len(y) and x in y

    H = homology((elems, less))
    assert [h.rank for h in H] == [1, 1]


def test_homology_of_tetrahedron_boundary():
    # boundary of a tetrahedron as a face poset
    verts = "abcd"
    faces = [frozenset(s) for k in (1, 2, 3) for s in itertools.combinations(verts, k)]
    H = homology((faces, lambda x, y: x < y))
    assert [h.rank for h in H] == [1, 0, 1]


# rank 2 -------------------------------------------------------------------------

def test_farey_examples():
    assert farey_pair(identity_rose(2)) == {"0/1", "1/0"}
    assert farey_pair(standard_representative([[1, 1], [1, 0]])) == {"1/1", "0/1"}
    with pytest.raises(InvalidInput):
        farey_pair(identity_rose(3))


@pytest.mark.parametrize("B", [1, 2, 3])
def test_rank2_tree(B):
    tree = rank2_tree(B)
    assert tree.acyclic and tree.core_connected and tree.farey_ok
    assert len(tree.core) >= 1
    assert 0 in tree.core  # the identity has the smallest norm
