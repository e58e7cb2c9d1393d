from __future__ import annotations

import itertools
import random

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from outfn.freegroup import InvalidInput, abelianize
from outfn.lattice import (
    ImpossibleState,
    RoseCoset,
    det,
    enumerate_roses,
    identity_matrix,
    identity_rose,
    invariant_factors,
    inverse_unimodular,
    is_unimodular,
    matmul,
    matrix_norm,
    right_action,
    smith_normal_form,
    standard_representative,
    vector_norm,
)
from outfn.morse import ideal_edges, replacement_roses
from outfn.torelli import delta12

I3 = identity_matrix(3)


def signed_permutations(n):
    for perm in itertools.permutations(range(n)):
        for signs in itertools.product((1, -1), repeat=n):
            P = [[0] * n for _ in range(n)]
            for r, c in enumerate(perm):
                P[r][c] = signs[r]
            yield P


@st.composite
def unimodular(draw, n=3, steps=8):
    M = [list(r) for r in identity_matrix(n)]
    for _ in range(draw(st.integers(0, steps))):
        i, j = draw(st.sampled_from([(a, b) for a in range(n) for b in range(n) if a != b]))
        s = draw(st.sampled_from([1, -1]))
        M[i] = [x + s * y for x, y in zip(M[i], M[j])]
    if draw(st.booleans()):
        M[0] = [-x for x in M[0]]
    return tuple(tuple(r) for r in M)


# norms ---------------------------------------------------------------------

def test_vector_norm_examples():
    assert vector_norm((1, -2, 0)) == (1, 2, 0)
    assert vector_norm((0, 0, 0)) == (0, 0, 0)
    assert vector_norm((1, -2, 0)) < vector_norm((2, 0, 0))


def test_matrix_norm_examples():
    assert matrix_norm(identity_rose(3)) == ((0, 0, 1), (0, 1, 0), (1, 0, 0))
    rho = standard_representative([[2, 1, 0], [1, 1, 0], [0, 0, 1]])
    assert matrix_norm(rho) == ((0, 0, 1), (1, 1, 0), (2, 1, 0))
    assert matrix_norm(rho) > matrix_norm(identity_rose(3))


# standard representatives ---------------------------------------------------

def test_standard_representative_examples():
    assert standard_representative([[0, 0, 1], [1, 0, 0], [0, -1, 0]]).matrix == I3
    assert standard_representative(I3).matrix == I3
    got = standard_representative([[1, 0, 0], [1, 1, 0], [0, 0, 1]]).matrix
    assert got == ((1, 1, 0), (1, 0, 0), (0, 0, 1))


def test_standard_representative_errors():
    with pytest.raises(InvalidInput):
        standard_representative([[2, 0], [0, 1]])
    with pytest.raises(ImpossibleState):
        # unchecked input with two equal-norm rows (determinant 2)
        standard_representative([[1, 1], [1, -1]], check=False)


@settings(max_examples=50)
@given(unimodular(), st.randoms(use_true_random=False))
def test_standard_representative_invariant_under_signed_permutations(M, rnd):
    rho = standard_representative(M)
    perms = list(signed_permutations(3))
    for P in rnd.sample(perms, 20):
        assert standard_representative(matmul(P, M)) == rho
    assert standard_representative(rho.matrix) == rho
    rows = rho.matrix
    assert all(vector_norm(a) > vector_norm(b) for a, b in zip(rows, rows[1:]))
    assert all(next(x for x in r if x) > 0 for r in rows)


def test_standard_representative_all_hundred_permutations():
    # 48 signed permutations in rank 3; use rank 4 (384) for a 100-element sample
    random.seed(11)
    M = ((2, 1, 0, 1), (1, 1, 0, 0), (0, 1, 1, 0), (0, 0, 0, 1))
    assert abs(det(M)) == 1
    rho = standard_representative(M)
    perms = list(signed_permutations(4))
    for P in random.sample(perms, 100):
        assert standard_representative(matmul(P, M)) == rho


# right action --------------------------------------------------------------

def test_right_action_examples():
    A = ((1, 1, 0), (0, 1, 1), (0, 0, 1))
    assert right_action(identity_rose(3), A) == standard_representative(A)
    rho = standard_representative([[2, 1, 0], [1, 1, 0], [0, 0, 1]])
    assert right_action(rho, I3) == rho
    got = right_action(identity_rose(3), abelianize(delta12(3)))
    assert got.matrix == ((1, 1, 0), (0, 1, 0), (0, 0, 1))
    with pytest.raises(InvalidInput):
        right_action(rho, ((2, 0, 0), (0, 1, 0), (0, 0, 1)))


@settings(max_examples=40)
@given(unimodular(), unimodular(), unimodular())
def test_right_action_is_an_action(M, A, B):
    rho = standard_representative(M)
    assert right_action(right_action(rho, A), B) == right_action(rho, matmul(A, B))


@settings(max_examples=40)
@given(unimodular(n=4))
def test_inverse_unimodular(M):
    assert matmul(M, inverse_unimodular(M)) == identity_matrix(4)
    assert det(M) == sympy.Matrix(M).det()


# enumeration ---------------------------------------------------------------

def _brute_roses(n, B):
    out = set()
    for entries in itertools.product(range(-B, B + 1), repeat=n * n):
        M = [entries[i * n:(i + 1) * n] for i in range(n)]
        if is_unimodular(M):
            out.add(standard_representative(M))
    return sorted(out, key=RoseCoset.sort_key)


@pytest.mark.parametrize("n,B", [(2, 1), (2, 2), (3, 1)])
def test_enumeration_matches_brute_force(n, B):
    assert enumerate_roses(n, B) == _brute_roses(n, B)


def test_enumeration_examples():
    roses = enumerate_roses(2, 1)
    assert len(roses) == 5
    rows = {r for rho in roses for r in rho.matrix}
    assert rows <= {(1, 0), (0, 1), (1, 1), (1, -1)}
    assert all(set(rho.matrix) != {(1, 1), (1, -1)} for rho in roses)
    assert enumerate_roses(2, 0) == []
    for n in (1, 2, 3, 4):
        assert identity_rose(n) in enumerate_roses(n, 1)


@pytest.mark.parametrize("n,B,count", [(2, 1, 5), (3, 1, 145), (3, 2, 2821)])
def test_enumeration_counts(n, B, count):
    roses = enumerate_roses(n, B)
    assert len(roses) == count
    keys = [r.sort_key() for r in roses]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)
    for rho in roses:
        rows = rho.matrix
        assert all(vector_norm(a) > vector_norm(b) for a, b in zip(rows, rows[1:]))


def test_enumeration_independent_of_workers():
    assert enumerate_roses(3, 1, workers=1) == enumerate_roses(3, 1, workers=2)


def test_norm_order_is_total_on_enumerated_set():
    roses = enumerate_roses(3, 1)
    for a, b in itertools.combinations(roses, 2):
        assert (a < b) != (b < a)
    for a, b, c in itertools.combinations(roses[::5], 3):
        if a < b and b < c:
            assert a < c
    # the norm alone is only a preorder: unrelated roses may tie
    assert len({r.norm for r in roses}) < len(roses)


def test_roses_sharing_a_star_have_different_norms():
    for rho in enumerate_roses(3, 1):
        for iota in ideal_edges(3):
            for other in replacement_roses(rho, iota):
                if other != rho:
                    assert other.norm != rho.norm


# Smith normal form ---------------------------------------------------------

def test_smith_examples():
    assert smith_normal_form([[2, 0], [0, 3]]).diagonal == (1, 6)
    assert smith_normal_form(I3).diagonal == (1, 1, 1)
    assert smith_normal_form([[0, 0], [0, 0]]).diagonal == (0, 0)


@settings(max_examples=60)
@given(st.integers(1, 5), st.integers(1, 5), st.data())
def test_smith_properties(m, n, data):
    A = [[data.draw(st.integers(-6, 6)) for _ in range(n)] for _ in range(m)]
    S = smith_normal_form(A)
    assert abs(det(S.U)) == 1 and abs(det(S.V)) == 1
    D = matmul(matmul(S.U, A), S.V)
    assert D == S.D
    for i in range(m):
        for j in range(n):
            if i != j:
                assert D[i][j] == 0
    d = [x for x in S.diagonal if x]
    assert all(x > 0 for x in d)
    assert all(b % a == 0 for a, b in zip(d, d[1:]))
    assert S.rank == sympy.Matrix(A).rank()
    # oracle: sympy's invariant factors
    from sympy.matrices.normalforms import smith_normal_form as sympy_snf

    ref = sympy_snf(sympy.Matrix(A), domain=sympy.ZZ)
    ref_d = sorted(abs(int(ref[i, i])) for i in range(min(m, n)) if ref[i, i])
    assert sorted(d) == ref_d
    entries = {(i, j): A[i][j] for i in range(m) for j in range(n)}
    assert invariant_factors(m, n, entries) == sorted(d)
