"""Magnus generators, the Out(F_n) generating set and identity checks.

Products of automorphisms in this module are written the classical way, left
to right with the leftmost factor acting first (``freegroup.product``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from .freegroup import (
    FreeWord,
    GeneratorName,
    InvalidInput,
    MarkedAutomorphism,
    abelianize,
    commutator,
    from_generator,
    from_images,
    gen,
    identity,
    identity_word,
    inner,
    invert,
    is_inner,
    out_equal,
    product,
)


def magnus_K(i: int, k: int, n: int) -> MarkedAutomorphism:
    """K_ik: x_i -> x_k x_i x_k^-1."""
    return from_generator(GeneratorName("K", (i, k)), n)


def magnus_K3(i: int, k: int, l: int, n: int) -> MarkedAutomorphism:
    """K_ikl: x_i -> x_i [x_k, x_l]."""
    if n < 3:
        raise InvalidInput("K_ikl needs rank >= 3")
    return from_generator(GeneratorName("K3", (i, k, l)), n)


def out_generator(name: GeneratorName | str, n: int, *indices: int) -> MarkedAutomorphism:
    if isinstance(name, str):
        name = GeneratorName(name, tuple(indices))
    if name.tag not in ("Delta12", "Omega1", "Pi", "Id"):
        raise InvalidInput(f"{name} is not in the Out(F_n) generating set")
    return from_generator(name, n)


def delta12(n: int) -> MarkedAutomorphism:
    return out_generator("Delta12", n)


def omega1(n: int) -> MarkedAutomorphism:
    return out_generator("Omega1", n)


def pi(i: int, n: int) -> MarkedAutomorphism:
    """Swap x_i and x_{i+1}."""
    return out_generator("Pi", n, i)


def is_identity_matrix(m: Sequence[Sequence[int]]) -> bool:
    return all(v == (1 if r == c else 0) for r, row in enumerate(m) for c, v in enumerate(row))


def torelli_membership(phi: MarkedAutomorphism) -> bool:
    return is_identity_matrix(abelianize(phi))


def magnus_generators(n: int, ordered_pairs: bool = False) -> list[MarkedAutomorphism]:
    """All K_ik, and K_ikl with k < l (or every ordering if ``ordered_pairs``)."""
    gens = [magnus_K(i, k, n) for i in range(1, n + 1) for k in range(1, n + 1) if i != k]
    if n >= 3:
        for i, k, l in itertools.permutations(range(1, n + 1), 3):
            if ordered_pairs or k < l:
                gens.append(magnus_K3(i, k, l, n))
    return gens


def appendix_sides(l: int, n: int) -> tuple[MarkedAutomorphism, MarkedAutomorphism]:
    """Both sides of d K_2l1 d^-1 = K_l2 K_l1^-1 K_1l K_l1 K_2l1 K_12l K_l2^-1 K_2l^-1, d = delta_12."""
    if n < 3 or not 3 <= l <= n:
        raise InvalidInput(f"need n >= 3 and 3 <= l <= n, got l={l}, n={n}")
    d = delta12(n)
    lhs = product(d, magnus_K3(2, l, 1, n), invert(d))
    K = magnus_K
    rhs = product(
        K(l, 2, n), invert(K(l, 1, n)), K(1, l, n), K(l, 1, n),
        magnus_K3(2, l, 1, n), magnus_K3(1, 2, l, n),
        invert(K(l, 2, n)), invert(K(2, l, n)),
    )
    return lhs, rhs


def verify_appendix_identity(l: int, n: int) -> bool:
    lhs, rhs = appendix_sides(l, n)
    return out_equal(lhs, rhs)


def _word_from_indices(h: Sequence[int], n: int) -> FreeWord:
    w = identity_word(n)
    for a in h:
        w = w * gen(a, n)
    return w


def conjugation_sides(i: int, k: int, l: int, h: Sequence[int], n: int):
    """psi: x_i -> x_i [h x_k h^-1, h x_l h^-1], and P^-1 K_ikl P.

    P = Q_{i_p}^±1 ... Q_{i_1}^±1 with Q_m the product of K_jm over j != i, m;
    letters of h are signed indices.
    """
    if len({i, k, l}) != 3 or not all(1 <= t <= n for t in (i, k, l)):
        raise InvalidInput(f"i, k, l must be distinct indices in 1..{n}")
    if any(abs(a) == i or not 1 <= abs(a) <= n for a in h):
        raise InvalidInput("conjugator letters must be signed generators other than x_i")
    hw = _word_from_indices(h, n)
    x = [gen(t, n) for t in range(1, n + 1)]
    images = list(x)
    images[i - 1] = x[i - 1] * commutator(hw * x[k - 1] * hw.inverse(), hw * x[l - 1] * hw.inverse())
    psi = from_images(images)

    return psi, conjugated_K3(i, k, l, h, n)


def verify_conjugation_formula(i: int, k: int, l: int, h: Sequence[int], n: int) -> bool:
    psi, rhs = conjugation_sides(i, k, l, h, n)
    return out_equal(psi, rhs)


def g_subgroup_element(p: Sequence[int], q: Sequence[int], n: int) -> MarkedAutomorphism:
    """x_i -> [x1,x2]^p_i x_i [x1,x2]^q_i for i = 3..n, x1 and x2 fixed.

    Built as a product of K_i12 and its conjugates so that it stays invertible:
    x_i -> c^p x_i c^q equals (conjugation of x_i by c^p) followed by a right
    multiplication by c^(p+q).
    """
    if len(p) != n - 2 or len(q) != n - 2:
        raise InvalidInput(f"p and q need length {n - 2}")
    if n < 3:
        raise InvalidInput("rank must be at least 3")
    x1, x2 = gen(1, n), gen(2, n)
    c = commutator(x1, x2)
    out = identity(n)
    for idx, (pi_, qi) in enumerate(zip(p, q)):
        i = idx + 3
        # right multiplication x_i -> x_i c^(p+q) is K_i12^(p+q)
        right = identity(n)
        for _ in range(abs(pi_ + qi)):
            step = magnus_K3(i, 1, 2, n)
            right = product(right, step if pi_ + qi > 0 else invert(step))
        # left conjugation x_i -> c^p x_i c^-p is a conjugate of K_i1, K_i2
        conj = identity(n)
        for _ in range(abs(pi_)):
            step = _conjugate_by_commutator(i, n)
            conj = product(conj, step if pi_ > 0 else invert(step))
        out = product(out, right, conj)
    images = [gen(t, n) for t in range(1, n + 1)]
    for idx, (pi_, qi) in enumerate(zip(p, q)):
        i = idx + 3
        images[i - 1] = c ** pi_ * gen(i, n) * c ** qi
    if out.images != tuple(images):
        raise AssertionError("internal: recipe does not reproduce the G-subgroup element")
    return out


def _conjugate_by_commutator(i: int, n: int) -> MarkedAutomorphism:
    # x_i -> [x1,x2] x_i [x1,x2]^-1; the factor applied first ends up outermost
    K1, K2 = magnus_K(i, 1, n), magnus_K(i, 2, n)
    return product(K1, K2, invert(K1), invert(K2))


# ---------------------------------------------------------------------------
# constructive membership for automorphisms moving a single generator

def _letters_word(letters, n: int) -> FreeWord:
    from .freegroup import reduce
    return reduce(list(letters), n)


def _basic_commutator(a: int, b: int, n: int):
    """Write [a, b] (a, b signed letters) as h [x_k, x_l]^eps h^-1 with k < l."""
    k, l = sorted((abs(a), abs(b)))
    target = commutator(_letters_word([a], n), _letters_word([b], n))
    base = commutator(gen(k, n), gen(l, n))
    for h in ([], [-k], [-l], [-k, -l], [-l, -k]):
        hw = _letters_word(h, n)
        for eps in (1, -1):
            if hw * base ** eps * hw.inverse() == target:
                return tuple(h), k, l, eps
    raise AssertionError(f"no basic form for [{a}, {b}]")


def commutator_factors(u: FreeWord):
    """Factor u (exponent sums all zero) as a product of h [x_k, x_l]^eps h^-1.

    Bubble-sorts the letters by generator index; each swap ``a b -> b a``
    emits the conjugate of [a, b] by the current prefix.
    """
    if any(u.exponent_sums()):
        raise InvalidInput("word is not in the commutator subgroup")
    n = u.rank
    w = list(u.letters)
    out = []
    changed = True
    while changed:
        changed = False
        for t in range(len(w) - 1):
            a, b = w[t], w[t + 1]
            if abs(a) > abs(b):
                h, k, l, eps = _basic_commutator(a, b, n)
                out.append((tuple(w[:t]) + h, k, l, eps))
                w[t], w[t + 1] = b, a
                changed = True
    if _letters_word(w, n).letters:
        raise AssertionError("sorted word did not cancel")
    return out


def _q_factor(m: int, i: int, n: int) -> MarkedAutomorphism:
    Q = identity(n)
    for j in range(1, n + 1):
        if j not in (i, m):
            Q = product(Q, magnus_K(j, m, n))
    return Q


def conjugated_K3(i: int, k: int, l: int, h: Sequence[int], n: int, eps: int = 1) -> MarkedAutomorphism:
    """P^-1 K_ikl^eps P for a signed letter sequence h free of x_i.

    The result moves x_i to x_i [h x_k h^-1, h x_l h^-1]^eps.
    """
    P = identity(n)
    for a in reversed(h):
        Q = _q_factor(abs(a), i, n)
        P = product(P, Q if a > 0 else invert(Q))
    K = magnus_K3(i, k, l, n) if eps == 1 else magnus_K3(i, l, k, n)
    return product(invert(P), K, P)


def single_generator_form(phi: MarkedAutomorphism):
    """Return (i, g', g) if phi fixes every x_j but x_i and phi(x_i) = g' x_i g
    with g, g' free of x_i and g g' in the commutator subgroup."""
    n = phi.rank
    moved = [j for j in range(1, n + 1) if phi.images[j - 1] != gen(j, n)]
    if len(moved) != 1:
        return None
    i = moved[0]
    img = phi.images[i - 1].letters
    pos = [t for t, a in enumerate(img) if abs(a) == i]
    if len(pos) != 1 or img[pos[0]] != i:
        return None
    gp = FreeWord(n, img[:pos[0]])
    g = FreeWord(n, img[pos[0] + 1:])
    if any((g * gp).exponent_sums()):
        return None
    return i, gp, g


def decompose_single_generator(phi: MarkedAutomorphism) -> MarkedAutomorphism | None:
    """Rewrite a single-generator automorphism as a word in Magnus generators.

    x_i -> g' x_i g is conjugation of x_i by g' (K_ia factors) followed by right
    multiplication by u = g g', and u factors into conjugated K_ikl's.
    """
    form = single_generator_form(phi)
    if form is None:
        return None
    i, gp, g = form
    n = phi.rank
    conj = identity(n)
    for a in gp.letters:
        step = magnus_K(i, abs(a), n)
        conj = product(conj, step if a > 0 else invert(step))
    right = identity(n)
    for h, k, l, eps in commutator_factors(g * gp):
        right = product(conjugated_K3(i, k, l, h, n, eps), right)
    out = product(conj, right)
    if out.images != phi.images:
        raise AssertionError("internal: single-generator rewrite is wrong")
    return out


def decompose_by_peeling(phi: MarkedAutomorphism, depth: int = 3) -> MarkedAutomorphism | None:
    """Peel off single-generator factors until phi is inner.

    At each stage pick a moved generator x_j whose image has single-generator
    shape, rewrite that map A_j, and continue with phi A_j^-1.
    """
    n = phi.rank
    if is_inner(phi) is not None:
        return inner(is_inner(phi))
    if depth == 0:
        return None
    for j in range(1, n + 1):
        if phi.images[j - 1] == gen(j, n):
            continue
        images = [gen(t, n) for t in range(1, n + 1)]
        images[j - 1] = phi.images[j - 1]
        A = decompose_single_generator(from_images(images))
        if A is None:
            continue
        rest = decompose_by_peeling(product(phi, invert(A)), depth - 1)
        if rest is not None:
            return product(rest, A)
    return None


# ---------------------------------------------------------------------------
# normality of the Magnus subgroup: conjugates of generators by the Out(F_n) set

@dataclass(frozen=True)
class ConjugateCheck:
    generator: str
    conjugator: str
    in_torelli: bool
    method: str
    witness: str

    @property
    def passed(self) -> bool:
        return self.in_torelli

    @property
    def rewritten(self) -> bool:
        """True when an explicit word in Magnus generators was found."""
        return self.in_torelli and self.method != "abelianization"


def _name(phi: MarkedAutomorphism) -> str:
    if not phi.recipe:
        return "1"
    return " ".join(f"{name}" + ("" if e == 1 else "^-1") for name, e in phi.recipe)


def _rewrite(phi: MarkedAutomorphism, magnus_words) -> MarkedAutomorphism | None:
    word = decompose_by_peeling(phi)
    if word is not None:
        return word
    # one Magnus factor on the right sometimes unlocks peeling
    for M in magnus_words:
        rest = decompose_by_peeling(product(phi, M), depth=2)
        if rest is not None:
            return product(rest, invert(M))
    return None


def verify_normality(n: int) -> list[ConjugateCheck]:
    """Conjugate every Magnus generator by delta_12^±1, Omega_1 and each Pi_i.

    Each conjugate is checked to lie in the Torelli group and written exactly as
    a word in the Magnus generators: directly (it is a generator or an inverse),
    by the closed formula for d K_2l1 d^-1, or by single-generator rewriting.
    Anything left is reported with method "abelianization" only.
    """
    singles = {}
    for g in magnus_generators(n, ordered_pairs=True):
        singles[g.images] = _name(g)
        singles[invert(g).images] = _name(g) + "^-1"
    conjugators = [("Delta12", delta12(n)), ("Delta12^-1", invert(delta12(n))), ("Omega1", omega1(n))]
    conjugators += [(f"Pi_{i}", pi(i, n)) for i in range(1, n)]
    hard = {}
    for l in range(3, n + 1):
        lhs, rhs = appendix_sides(l, n)
        hard[lhs.images] = rhs

    magnus_words = magnus_generators(n, ordered_pairs=True)
    magnus_words += [invert(g) for g in magnus_words]
    results = []
    for g in magnus_generators(n):
        for cname, s in conjugators:
            c = product(s, g, invert(s))
            in_t = torelli_membership(c)
            word = None
            if c.images in singles:
                method, witness = "generator", singles[c.images]
            elif c.images in hard:
                method, word = "formula", hard[c.images]
            else:
                word = _rewrite(from_images(c.images), magnus_words)
                method = "rewrite" if word is not None else "abelianization"
            if word is not None:
                if not out_equal(c, word):
                    raise AssertionError(f"rewrite of {_name(g)} by {cname} is wrong")
                witness = _name(word)
            elif method == "abelianization":
                witness = ""
            results.append(ConjugateCheck(_name(g), cname, in_t, method, witness))
    return results
