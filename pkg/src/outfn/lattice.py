"""Integer matrices, norms, canonical rose cosets and Smith normal form.

A rose is a coset W_n M of GL_n(Z), where W_n is the group of signed
permutation matrices acting on the left.  The canonical representative has
each row sign-normalized (first nonzero entry positive) and rows sorted by
strictly decreasing norm.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .freegroup import InvalidInput

IntMatrix = tuple[tuple[int, ...], ...]
VectorNorm = tuple[int, ...]
MatrixNorm = tuple[VectorNorm, ...]


class ImpossibleState(RuntimeError):
    """A mathematically excluded situation was reached."""


# ---------------------------------------------------------------------------
# plain integer matrix helpers

def as_matrix(rows: Iterable[Iterable[int]]) -> IntMatrix:
    m = tuple(tuple(int(x) for x in r) for r in rows)
    if m and any(len(r) != len(m[0]) for r in m):
        raise InvalidInput("ragged matrix")
    return m


def identity_matrix(n: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def matmul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> IntMatrix:
    if A and len(A[0]) != len(B):
        raise InvalidInput("shape mismatch")
    cols = list(zip(*B)) if B else []
    return tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in A)


def transpose(A: Sequence[Sequence[int]]) -> IntMatrix:
    return tuple(zip(*A)) if A else ()


def det(A: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    n = len(A)
    if any(len(r) != n for r in A):
        raise InvalidInput("determinant of a non-square matrix")
    if n == 0:
        return 1
    M = [list(r) for r in A]
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for r in range(k + 1, n):
                if M[r][k] != 0:
                    M[k], M[r] = M[r], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def is_unimodular(A: Sequence[Sequence[int]]) -> bool:
    return len(A) > 0 and all(len(r) == len(A) for r in A) and det(A) in (1, -1)


def inverse_unimodular(A: Sequence[Sequence[int]]) -> IntMatrix:
    """Inverse of a det ±1 integer matrix (exact Gauss-Jordan)."""
    from fractions import Fraction

    if not is_unimodular(A):
        raise InvalidInput("matrix is not unimodular")
    n = len(A)
    M = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for c in range(n):
        p = next(r for r in range(c, n) if M[r][c] != 0)
        M[c], M[p] = M[p], M[c]
        piv = M[c][c]
        M[c] = [x / piv for x in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return tuple(tuple(int(x) for x in row[n:]) for row in M)


# ---------------------------------------------------------------------------
# norms and canonical cosets

def vector_norm(v: Sequence[int]) -> VectorNorm:
    return tuple(abs(x) for x in v)


def sign_normalize(v: Sequence[int]) -> tuple[int, ...]:
    for x in v:
        if x != 0:
            return tuple(v) if x > 0 else tuple(-y for y in v)
    return tuple(v)


@dataclass(frozen=True, order=False)
class RoseCoset:
    """Canonical representative of W_n M; rows v_1..v_n with |v_n| < ... < |v_1|."""

    matrix: IntMatrix
    _norm: MatrixNorm = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_norm", tuple(vector_norm(r) for r in reversed(self.matrix)))

    @property
    def rank(self) -> int:
        return len(self.matrix)

    @property
    def norm(self) -> MatrixNorm:
        return self._norm

    def sort_key(self) -> tuple[MatrixNorm, IntMatrix]:
        return (self._norm, self.matrix)

    def __lt__(self, other: "RoseCoset") -> bool:
        return self.sort_key() < other.sort_key()

    def to_json(self) -> list[list[int]]:
        return [list(r) for r in self.matrix]


def standard_representative(M: Sequence[Sequence[int]], check: bool = True) -> RoseCoset:
    """Sign-normalize rows and sort by decreasing norm.

    ``check=False`` skips the determinant test for callers that already know
    the matrix is unimodular.
    """
    M = as_matrix(M)
    if check and not is_unimodular(M):
        raise InvalidInput(f"matrix {M} does not have determinant ±1")
    rows = sorted((sign_normalize(r) for r in M), key=vector_norm, reverse=True)
    for a, b in zip(rows, rows[1:]):
        if vector_norm(a) == vector_norm(b):
            # equal norms force equal rows mod 2, hence an even determinant
            raise ImpossibleState(f"rows {a} and {b} have the same norm")
    return RoseCoset(tuple(rows))


def matrix_norm(rho: RoseCoset | Sequence[Sequence[int]]) -> MatrixNorm:
    if isinstance(rho, RoseCoset):
        return rho.norm
    return tuple(vector_norm(r) for r in reversed(as_matrix(rho)))


def right_action(rho: RoseCoset, A: Sequence[Sequence[int]]) -> RoseCoset:
    A = as_matrix(A)
    if not is_unimodular(A) or len(A) != rho.rank:
        raise InvalidInput("right action needs a det ±1 matrix of matching size")
    return standard_representative(matmul(rho.matrix, A))


def identity_rose(n: int) -> RoseCoset:
    return standard_representative(identity_matrix(n))


# ---------------------------------------------------------------------------
# enumeration

def _row_candidates(n: int, B: int) -> list[tuple[int, ...]]:
    vs = {sign_normalize(v) for v in itertools.product(range(-B, B + 1), repeat=n) if any(v)}
    return sorted(vs, key=lambda v: (vector_norm(v), v), reverse=True)


def _roses_with_first_row(args: tuple[int, int, int]) -> list[IntMatrix]:
    n, B, first = args
    cands = _row_candidates(n, B)
    top = cands[first]
    tail = cands[first + 1:]
    out = []
    for rest in itertools.combinations(tail, n - 1):
        rows = (top,) + rest
        if any(vector_norm(a) == vector_norm(b) for a, b in zip(rows, rows[1:])):
            continue
        if det(rows) in (1, -1):
            out.append(rows)
    return out


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("TORELLI_THREADS", "1")))
    except ValueError:
        return 1


def enumerate_roses(n: int, B: int, workers: int | None = None) -> list[RoseCoset]:
    """All roses with a representative whose entries lie in [-B, B].

    The search is split by the first (largest) row; partitions are independent
    and the merged result is sorted by (norm, matrix), so the output does not
    depend on the number of workers.
    """
    if n < 1:
        raise InvalidInput("rank must be positive")
    if B < 1:
        return []
    cands = _row_candidates(n, B)
    jobs = [(n, B, i) for i in range(len(cands))]
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_roses_with_first_row, jobs, chunksize=4))
    else:
        parts = [_roses_with_first_row(j) for j in jobs]
    found = {RoseCoset(m) for part in parts for m in part}
    return sorted(found, key=RoseCoset.sort_key)


# ---------------------------------------------------------------------------
# Smith normal form

@dataclass(frozen=True)
class SmithForm:
    diagonal: tuple[int, ...]
    U: IntMatrix
    V: IntMatrix
    D: IntMatrix

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)


def smith_normal_form(A: Sequence[Sequence[int]]) -> SmithForm:
    """Return U, V unimodular with U A V = D diagonal and d_1 | d_2 | ...

    ``diagonal`` has min(rows, cols) entries, nonnegative.
    """
    A = as_matrix(A)
    m = len(A)
    n = len(A[0]) if m else 0
    D = [list(r) for r in A]
    U = [list(r) for r in identity_matrix(m)]
    V = [list(r) for r in identity_matrix(n)]

    def swap_rows(i, j):
        D[i], D[j] = D[j], D[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in D:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(src, dst, f):  # row_dst += f * row_src
        D[dst] = [a + f * b for a, b in zip(D[dst], D[src])]
        U[dst] = [a + f * b for a, b in zip(U[dst], U[src])]

    def add_col(src, dst, f):
        for row in D:
            row[dst] += f * row[src]
        for row in V:
            row[dst] += f * row[src]

    def neg_row(i):
        D[i] = [-a for a in D[i]]
        U[i] = [-a for a in U[i]]

    t = 0
    while t < min(m, n):
        nz = [(abs(D[i][j]), i, j) for i in range(t, m) for j in range(t, n) if D[i][j] != 0]
        if not nz:
            break
        _, i, j = min(nz)
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            done = True
            for i in range(t + 1, m):
                if D[i][t]:
                    q = D[i][t] // D[t][t]
                    add_row(t, i, -q)
                    if D[i][t]:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, n):
                if D[t][j]:
                    q = D[t][j] // D[t][t]
                    add_col(t, j, -q)
                    if D[t][j]:
                        swap_cols(t, j)
                        done = False
            if not done:
                continue
            # enforce divisibility into the remaining block
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n)
                        if D[i][j] % D[t][t]), None)
            if bad is None:
                break
            add_row(bad[0], t, 1)
        if D[t][t] < 0:
            neg_row(t)
        t += 1
    diag = tuple(D[i][i] for i in range(min(m, n)))
    return SmithForm(diag, as_matrix(U), as_matrix(V), as_matrix(D))


def invariant_factors(rows: int, cols: int, entries: dict[tuple[int, int], int]) -> list[int]:
    """Nonzero invariant factors of a sparse integer matrix.

    Unit pivots are eliminated sparsely first (boundary matrices are mostly
    ±1 entries); the leftover block goes through dense Smith normal form.
    """
    R: dict[int, dict[int, int]] = {}
    for (i, j), x in entries.items():
        if not (0 <= i < rows and 0 <= j < cols):
            raise InvalidInput("entry out of range")
        if x:
            R.setdefault(i, {})[j] = x
    C: dict[int, set[int]] = {}
    for i, row in R.items():
        for j in row:
            C.setdefault(j, set()).add(i)
    units = 0
    progress = True
    while progress:
        progress = False
        for i0 in sorted(R):
            prow = R.get(i0)
            if not prow:
                continue
            # unit entry in this row whose column is sparsest
            j0 = min((j for j, x in prow.items() if x in (1, -1)), key=lambda j: len(C[j]), default=None)
            if j0 is None:
                continue
            del R[i0]
            for j in prow:
                C[j].discard(i0)
            s = prow[j0]
            for i in list(C[j0]):
                row = R[i]
                f = row[j0] * s  # s = ±1, so f / s = f * s
                for j, x in prow.items():
                    y = row.get(j, 0) - f * x
                    if y:
                        if j not in row:
                            C.setdefault(j, set()).add(i)
                        row[j] = y
                    elif j in row:
                        del row[j]
                        C[j].discard(i)
                if not row:
                    del R[i]
            del C[j0]
            units += 1
            progress = True
    out = [1] * units
    if R:
        rest_rows = sorted(R)
        rest_cols = sorted({j for row in R.values() for j in row})
        ci = {j: k for k, j in enumerate(rest_cols)}
        dense = [[0] * len(rest_cols) for _ in rest_rows]
        for a, i in enumerate(rest_rows):
            for j, x in R[i].items():
                dense[a][ci[j]] = x
        out += [d for d in smith_normal_form(dense).diagonal if d]
    return sorted(out)
