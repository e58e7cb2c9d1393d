"""Acceptance suite: ten end-to-end criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed even under
capture) or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import sys
import time

import pytest

from outfn.freegroup import compose, identity, invert, out_equal, product
from outfn.lattice import enumerate_roses, identity_rose
from outfn.morse import (
    completely_descending_complex,
    descending_link_connected,
    descending_witness,
    forbidden_pair_check,
    homology,
    ideal_edges,
    is_descending,
    is_descending_oracle,
    rank2_tree,
)
from outfn.toymodel import (
    TorusClass,
    max_norm_rose,
    sphere_intersection,
    toy_homology_rank,
    window_square,
    z_pq_cells,
)
from outfn.torelli import (
    delta12,
    g_subgroup_element,
    magnus_K,
    magnus_K3,
    omega1,
    pi,
    torelli_membership,
    verify_appendix_identity,
    verify_conjugation_formula,
)

_printer = None


def report(name: str, ok: bool, elapsed: float, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}  ({elapsed:.1f}s){'  ' + detail if detail else ''}"
    if _printer is not None:
        with _printer.disabled():
            print("\n" + line)
    else:
        print(line)


@pytest.fixture(autouse=True)
def _show(capsys):
    global _printer
    _printer = capsys
    yield
    _printer = None


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def test_01_delta_conjugation_identity():
    with Timer() as t:
        ok = all(verify_appendix_identity(l, n) for n in (3, 4) for l in range(3, n + 1))
    ok = ok and t.elapsed < 1.0
    report("1 delta12 conjugation identity, 3 <= l <= n <= 4", ok, t.elapsed)
    assert ok


def test_02_generator_sanity():
    with Timer() as t:
        ok = True
        for n in range(3, 7):
            for i, k in itertools.permutations(range(1, n + 1), 2):
                ok &= torelli_membership(magnus_K(i, k, n))
            for i, k, l in itertools.permutations(range(1, n + 1), 3):
                K = magnus_K3(i, k, l, n)
                ok &= torelli_membership(K)
                ok &= compose(K, magnus_K3(i, l, k, n)).images == identity(n).images
            ok &= compose(omega1(n), omega1(n)).images == identity(n).images
            for j in range(1, n):
                ok &= compose(pi(j, n), pi(j, n)).images == identity(n).images
            s = product(pi(1, n), omega1(n), pi(1, n))
            ok &= product(invert(s), delta12(n), s).images == invert(delta12(n)).images
    report("2 generator sanity, n <= 6", ok, t.elapsed)
    assert ok


def test_03_conjugation_formula():
    with Timer() as t:
        cases = 0
        ok = True
        for n in (3, 4):
            for i, k, l in itertools.permutations(range(1, n + 1), 3):
                letters = [s * a for a in range(1, n + 1) if a != i for s in (1, -1)]
                for L in range(3):
                    for h in itertools.product(letters, repeat=L):
                        if any(h[j] == -h[j + 1] for j in range(L - 1)):
                            continue
                        cases += 1
                        ok &= verify_conjugation_formula(i, k, l, h, n)
    ok = ok and t.elapsed < 10.0
    report("3 conjugation formula, n <= 4, |h| <= 2", ok, t.elapsed, f"cases={cases}")
    assert ok


@pytest.fixture(scope="module")
def sweeps():
    return {3: enumerate_roses(3, 2), 4: enumerate_roses(4, 1)}


def test_04_descending_criterion(sweeps):
    with Timer() as t:
        pairs = 0
        mismatches = 0
        for n, roses in sweeps.items():
            edges = ideal_edges(n)
            for r in roses:
                for i in edges:
                    pairs += 1
                    mismatches += is_descending(r, i) != is_descending_oracle(r, i)
    ok = mismatches == 0
    report("4 descending criterion, fast path = oracle", ok, t.elapsed, f"pairs={pairs} mismatches={mismatches}")
    assert ok


def test_05_forbidden_pairs(sweeps):
    # the guarantee concerns flipping the sign of the top participating row;
    # flips of lower rows are counted for information only
    with Timer() as t:
        reports = [forbidden_pair_check(roses) for roses in sweeps.values()]
    top = sum(r.top_row_violations for r in reports)
    other = sum(len(r.violations) for r in reports)
    checked = sum(r.checked for r in reports)
    ok = top == 0
    report("5 forbidden pairs (top-row flip)", ok, t.elapsed,
           f"checked={checked} violations={top} lower-row double-descending={other}")
    assert ok


def test_06_nonempty_connected(sweeps):
    with Timer() as t:
        ident = identity_rose(3)
        ok = True
        for r in sweeps[3]:
            w = descending_witness(r)
            ok &= (w is None) == (r == ident)
            if r != ident:
                ok &= descending_link_connected(r)
    ok = ok and t.elapsed < 60.0
    report("6 descending links nonempty and connected, rank 3 bound 2", ok, t.elapsed,
           f"roses={len(sweeps[3])}")
    assert ok


def test_07_dimension(sweeps):
    with Timer() as t:
        picks = [r for r in sweeps[3] if r != identity_rose(3)][::100]
        ok = len(picks) >= 10
        for r in picks:
            X = completely_descending_complex(r)
            ok &= X.dim <= 2
            ok &= all(h.rank == 0 and not h.torsion for h in homology(X)[2:])
    report("7 cdlk dimension and homology, rank 3", ok, t.elapsed, f"roses={len(picks)}")
    assert ok


def test_08_rank2_tree():
    with Timer() as t:
        tree = rank2_tree(3)
    ok = tree.acyclic and tree.core_connected and tree.farey_ok
    report("8 rank 2 tree, bound 3", ok, t.elapsed,
           f"roses={len(tree.roses)} thetas={len(tree.thetas)} core={len(tree.core)}")
    assert ok


def test_09_toy_model():
    with Timer() as t:
        W = window_square(2)
        roses = {max_norm_rose(TorusClass(p, q)) for p, q in W}
        ok = len(roses) == 25
        for p, q in W:
            T = z_pq_cells(TorusClass(p, q))
            ok &= (T.count(2), T.count(1), T.count(0)) == (16, 32, 16)
            ok &= T.euler_characteristic() == 0 and T.closed_surface()
            ok &= sphere_intersection(TorusClass(p, q)).passed
        r3 = toy_homology_rank(3, W)
        r4 = toy_homology_rank(4, W)
        ok &= r3 == 25 and r4 == 25
    report("9 toy model, window |p|,|q| <= 2", ok, t.elapsed, f"rank3={r3} rank4={r4}")
    assert ok


def test_10_g_subgroup():
    with Timer() as t:
        ok = True
        for n in (3, 4):
            params = list(itertools.product([-1, 0, 1], repeat=2 * (n - 2)))
            elems = [g_subgroup_element(pq[: n - 2], pq[n - 2:], n) for pq in params]
            for pq, g in zip(params, elems):
                ok &= out_equal(g, identity(n)) == (not any(pq))
            for a, b in itertools.combinations(elems, 2):
                ok &= out_equal(compose(a, b), compose(b, a))
    report("10 G-subgroup commutes and is faithful, n = 3, 4", ok, t.elapsed)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
