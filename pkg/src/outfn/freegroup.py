"""Reduced words and automorphisms of the free group F_n.

Letters are signed generator indices: ``+i`` is x_i and ``-i`` is x_i^-1.
Automorphisms are closed-world: they are built from a fixed alphabet of named
generators and carry the recipe that produced them, which is what makes exact
inversion possible without a general inversion algorithm.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class InvalidInput(ValueError):
    """Raised for malformed words, indices out of range or bad matrices."""


class RankMismatch(ValueError):
    pass


class Unsupported(ValueError):
    pass


def _reduce_letters(letters: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for a in letters:
        if out and out[-1] == -a:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


@dataclass(frozen=True)
class FreeWord:
    rank: int
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        if self.rank < 1:
            raise InvalidInput(f"rank must be positive, got {self.rank}")
        for a in self.letters:
            if a == 0 or abs(a) > self.rank:
                raise InvalidInput(f"letter {a} out of range for rank {self.rank}")
        for a, b in zip(self.letters, self.letters[1:]):
            if a == -b:
                raise InvalidInput("word is not freely reduced; use reduce()")

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: FreeWord) -> FreeWord:
        if other.rank != self.rank:
            raise RankMismatch(f"rank {self.rank} vs {other.rank}")
        return FreeWord(self.rank, _reduce_letters(self.letters + other.letters))

    def inverse(self) -> FreeWord:
        return FreeWord(self.rank, tuple(-a for a in reversed(self.letters)))

    def __pow__(self, k: int) -> FreeWord:
        base = self if k >= 0 else self.inverse()
        out = identity_word(self.rank)
        for _ in range(abs(k)):
            out = out * base
        return out

    def is_identity(self) -> bool:
        return not self.letters

    def exponent_sums(self) -> tuple[int, ...]:
        sums = [0] * self.rank
        for a in self.letters:
            sums[abs(a) - 1] += 1 if a > 0 else -1
        return tuple(sums)

    def __str__(self) -> str:
        return format_word(self)


def reduce(letters: Sequence[int], rank: int) -> FreeWord:
    """Freely reduce a raw letter sequence."""
    for a in letters:
        if a == 0 or abs(a) > rank:
            raise InvalidInput(f"letter {a} out of range for rank {rank}")
    return FreeWord(rank, _reduce_letters(letters))


def identity_word(rank: int) -> FreeWord:
    return FreeWord(rank, ())


def gen(i: int, rank: int) -> FreeWord:
    return reduce([i], rank)


def commutator(a: FreeWord, b: FreeWord) -> FreeWord:
    """[a, b] = a b a^-1 b^-1."""
    return a * b * a.inverse() * b.inverse()


_TOKEN = re.compile(r"^x(\d+)(?:\^(-?\d+))?$")


def parse_word(text: str, rank: int) -> FreeWord:
    """Parse ``"x1 x2^-1 x1"``; ``"1"``, ``"e"`` or the empty string is the identity."""
    letters: list[int] = []
    for tok in text.replace("*", " ").split():
        if tok in ("1", "e"):
            continue
        m = _TOKEN.match(tok)
        if not m:
            raise InvalidInput(f"cannot parse token {tok!r}")
        i = int(m.group(1))
        k = int(m.group(2)) if m.group(2) is not None else 1
        letters.extend([i if k > 0 else -i] * abs(k))
    return reduce(letters, rank)


def format_word(w: FreeWord) -> str:
    if not w.letters:
        return "1"
    parts = []
    i = 0
    letters = w.letters
    while i < len(letters):
        j = i
        while j < len(letters) and letters[j] == letters[i]:
            j += 1
        a, k = letters[i], j - i
        e = k if a > 0 else -k
        parts.append(f"x{abs(a)}" if e == 1 else f"x{abs(a)}^{e}")
        i = j
    return " ".join(parts)


# ---------------------------------------------------------------------------
# generator alphabet

@dataclass(frozen=True, order=True)
class GeneratorName:
    """A named generator: ``K`` (K_ik), ``K3`` (K_ikl), ``Delta12``, ``Omega1``,
    ``Pi`` (Pi_i swaps x_i and x_{i+1}) or ``Id``."""

    tag: str
    indices: tuple[int, ...] = ()

    def check(self, n: int) -> None:
        idx = self.indices
        if any(not 1 <= i <= n for i in idx):
            raise InvalidInput(f"{self}: index out of range for rank {n}")
        if self.tag == "K":
            if len(idx) != 2 or idx[0] == idx[1] or n < 2:
                raise InvalidInput(f"K needs two distinct indices, got {idx}")
        elif self.tag == "K3":
            if len(idx) != 3 or len(set(idx)) != 3:
                raise InvalidInput(f"K3 needs three distinct indices, got {idx}")
        elif self.tag == "Pi":
            if len(idx) != 1 or not 1 <= idx[0] <= n - 1:
                raise InvalidInput(f"Pi index must lie in 1..{n - 1}, got {idx}")
        elif self.tag in ("Delta12",):
            if idx or n < 2:
                raise InvalidInput("Delta12 takes no indices and needs rank >= 2")
        elif self.tag in ("Omega1", "Id"):
            if idx:
                raise InvalidInput(f"{self.tag} takes no indices")
        else:
            raise InvalidInput(f"unknown generator tag {self.tag!r}")

    def __str__(self) -> str:
        if not self.indices:
            return self.tag
        return self.tag + "_" + "".join(str(i) for i in self.indices)


def generator_images(name: GeneratorName, exponent: int, n: int) -> tuple[FreeWord, ...]:
    """Images of x_1..x_n under ``name**exponent`` (exponent = +1 or -1)."""
    name.check(n)
    if exponent not in (1, -1):
        raise InvalidInput("exponent must be +1 or -1")
    x = [gen(i, n) for i in range(1, n + 1)]
    images = list(x)
    tag, idx = name.tag, name.indices
    if tag == "K":
        i, k = idx
        xk = x[k - 1]
        if exponent == 1:
            images[i - 1] = xk * x[i - 1] * xk.inverse()
        else:
            images[i - 1] = xk.inverse() * x[i - 1] * xk
    elif tag == "K3":
        i, k, l = idx
        if exponent == 1:
            images[i - 1] = x[i - 1] * commutator(x[k - 1], x[l - 1])
        else:
            images[i - 1] = x[i - 1] * commutator(x[l - 1], x[k - 1])
    elif tag == "Delta12":
        images[0] = x[0] * (x[1] if exponent == 1 else x[1].inverse())
    elif tag == "Omega1":
        images[0] = x[0].inverse()
    elif tag == "Pi":
        (i,) = idx
        images[i - 1], images[i] = x[i], x[i - 1]
    return tuple(images)


# ---------------------------------------------------------------------------
# automorphisms

RecipeStep = tuple[GeneratorName, int]


def _substitute(images: Sequence[FreeWord], w: FreeWord) -> FreeWord:
    letters: list[int] = []
    for a in w.letters:
        img = images[abs(a) - 1]
        letters.extend(img.letters if a > 0 else img.inverse().letters)
    return FreeWord(w.rank, _reduce_letters(letters))


@dataclass(frozen=True)
class MarkedAutomorphism:
    """Endomorphism of F_n given by the images of the generators.

    ``recipe`` lists generator steps in functional order: the automorphism is
    ``g1**e1 ∘ g2**e2 ∘ ...`` so the last step acts first on a word.
    ``recipe is None`` marks a bare endomorphism that cannot be inverted.
    """

    rank: int
    images: tuple[FreeWord, ...]
    recipe: tuple[RecipeStep, ...] | None = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.images) != self.rank:
            raise InvalidInput(f"expected {self.rank} images, got {len(self.images)}")
        for w in self.images:
            if w.rank != self.rank:
                raise RankMismatch("image word has the wrong rank")

    def __call__(self, w: FreeWord) -> FreeWord:
        return apply(self, w)

    def __str__(self) -> str:
        return "[" + ", ".join(format_word(w) for w in self.images) + "]"


def identity(n: int) -> MarkedAutomorphism:
    return MarkedAutomorphism(n, tuple(gen(i, n) for i in range(1, n + 1)), ())


def from_generator(name: GeneratorName, n: int, exponent: int = 1) -> MarkedAutomorphism:
    if name.tag == "Id":
        return identity(n)
    return MarkedAutomorphism(n, generator_images(name, exponent, n), ((name, exponent),))


def from_images(images: Sequence[FreeWord]) -> MarkedAutomorphism:
    """Wrap bare images; the result has no recipe and cannot be inverted."""
    images = tuple(images)
    if not images:
        raise InvalidInput("need at least one image")
    return MarkedAutomorphism(images[0].rank, images, None)


def from_recipe(recipe: Sequence[RecipeStep], n: int) -> MarkedAutomorphism:
    out = identity(n)
    for name, e in reversed(tuple(recipe)):
        out = compose(from_generator(name, n, e), out)
    return out


def apply(phi: MarkedAutomorphism, w: FreeWord) -> FreeWord:
    if phi.rank != w.rank:
        raise RankMismatch(f"automorphism rank {phi.rank} vs word rank {w.rank}")
    return _substitute(phi.images, w)


def compose(phi: MarkedAutomorphism, psi: MarkedAutomorphism) -> MarkedAutomorphism:
    """phi ∘ psi: psi acts first."""
    if phi.rank != psi.rank:
        raise RankMismatch(f"rank {phi.rank} vs {psi.rank}")
    images = tuple(_substitute(phi.images, w) for w in psi.images)
    if phi.recipe is None or psi.recipe is None:
        recipe = None
    else:
        recipe = phi.recipe + psi.recipe
    return MarkedAutomorphism(phi.rank, images, recipe)


def invert(phi: MarkedAutomorphism) -> MarkedAutomorphism:
    if phi.recipe is None:
        raise Unsupported("automorphism carries no recipe; general inversion is not implemented")
    out = identity(phi.rank)
    for name, e in phi.recipe:
        out = compose(from_generator(name, phi.rank, -e), out)
    return out


def product(*factors: MarkedAutomorphism) -> MarkedAutomorphism:
    """Left-to-right product: the leftmost factor acts first.

    This is the convention in which the classical identities among Magnus
    generators are written, e.g. ``product(d, k, invert(d))`` is d k d^-1.
    """
    if not factors:
        raise InvalidInput("empty product")
    out = factors[0]
    for f in factors[1:]:
        out = compose(f, out)
    return out


def abelianize(phi: MarkedAutomorphism) -> tuple[tuple[int, ...], ...]:
    """Row j holds the exponent sums of phi(x_j)."""
    return tuple(w.exponent_sums() for w in phi.images)


def inner(g: FreeWord) -> MarkedAutomorphism:
    """Conjugation x -> g x g^-1, expressed through K generators.

    Conjugation by x_j is the product of K_ij over i != j, so every inner
    automorphism lies in the closed world and keeps an invertible recipe.
    """
    n = g.rank
    out = identity(n)
    for a in reversed(g.letters):
        j, e = abs(a), (1 if a > 0 else -1)
        step = identity(n)
        for i in range(1, n + 1):
            if i != j:
                step = compose(step, from_generator(GeneratorName("K", (i, j)), n, e))
        out = compose(step, out)
    return out


def _split_conjugate(u: FreeWord, letter: int) -> FreeWord | None:
    """If u = w x w^-1 (reduced, x = letter^{±1}), return w."""
    m = len(u)
    if m % 2 == 0:
        return None
    h = m // 2
    if abs(u.letters[h]) != letter:
        return None
    left, right = u.letters[:h], u.letters[h + 1:]
    if tuple(-a for a in reversed(left)) != right:
        return None
    return FreeWord(u.rank, left)


def is_inner(phi: MarkedAutomorphism) -> FreeWord | None:
    """Return g with phi(x_i) = g x_i g^-1 for all i, or None.

    phi(x_1) must read w x_1 w^-1 in reduced form; every conjugator taking x_1
    to it is w x_1^k, and |k| never needs to exceed the longest image.
    """
    n = phi.rank
    w = _split_conjugate(phi.images[0], 1)
    if w is None or phi.images[0].letters[len(w)] != 1:
        return None
    bound = max(len(img) for img in phi.images) + 1
    x1 = gen(1, n)
    for k in sorted(range(-bound, bound + 1), key=lambda t: (abs(t), t)):
        g = w * x1 ** k
        if all(_conj(g, gen(i, n)) == phi.images[i - 1] for i in range(1, n + 1)):
            return g
    return None


def _conj(g: FreeWord, x: FreeWord) -> FreeWord:
    return g * x * g.inverse()


def out_equal(phi: MarkedAutomorphism, psi: MarkedAutomorphism) -> bool:
    """Equality in Out(F_n)."""
    return is_inner(compose(phi, invert(psi))) is not None


# ---------------------------------------------------------------------------
# serialization

def recipe_to_json(recipe: Sequence[RecipeStep]) -> list[list]:
    return [[name.tag, *name.indices, e] for name, e in recipe]


def recipe_from_json(data: Sequence[Sequence]) -> tuple[RecipeStep, ...]:
    steps = []
    for item in data:
        if not item or not isinstance(item[0], str):
            raise InvalidInput(f"bad recipe step {item!r}")
        tag, *rest = item
        if not rest:
            raise InvalidInput(f"recipe step {item!r} lacks an exponent")
        *idx, e = rest
        steps.append((GeneratorName(tag, tuple(int(i) for i in idx)), int(e)))
    return tuple(steps)


def automorphism_to_json(phi: MarkedAutomorphism) -> dict:
    out = {"rank": phi.rank, "images": [format_word(w) for w in phi.images]}
    out["recipe"] = None if phi.recipe is None else recipe_to_json(phi.recipe)
    return out


def automorphism_from_json(data: dict) -> MarkedAutomorphism:
    n = int(data["rank"])
    images = tuple(parse_word(s, n) for s in data["images"])
    if data.get("recipe") is None:
        return MarkedAutomorphism(n, images, None)
    recipe = recipe_from_json(data["recipe"])
    built = from_recipe(recipe, n)
    if built.images != images:
        raise InvalidInput("recipe does not reproduce the stated images")
    return built
