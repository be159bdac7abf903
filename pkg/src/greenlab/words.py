"""Presentations of surface and free groups, words, and reduction algorithms.

Letters are small integers.  For a free group of rank k the alphabet is
``a, A, b, B, ...`` (capital = inverse) and ``inverse = index ^ 1``.  For a
surface group of genus g the alphabet is ``a1, b1, A1, B1, a2, ...`` and
``inverse = index ^ 2``; with this ordering the defining relator
``prod_i a_i b_i a_i^-1 b_i^-1`` is simply ``(0, 1, 2, ..., 4g-1)``.

Words are tuples of letters.  The token grammar used everywhere (CLI,
caches, exports) is whitespace-separated letter names.
"""

from __future__ import annotations

import string
from functools import lru_cache
from typing import Iterable, Sequence

Word = tuple[int, ...]

EPSILON: Word = ()


class PresentationMismatch(ValueError):
    """Raised when elements of different presentations are combined."""


def _cyclic_perms(w: Word) -> list[Word]:
    return [w[i:] + w[:i] for i in range(len(w))]


class Presentation:
    """Common interface: alphabet, inversion, reduction to geodesic form."""

    kind: str
    n_letters: int
    relator: Word

    # -- alphabet ----------------------------------------------------------

    def inv(self, letter: int) -> int:
        raise NotImplementedError

    def inverse_word(self, w: Sequence[int]) -> Word:
        return tuple(self.inv(x) for x in reversed(w))

    def letter_name(self, letter: int) -> str:
        return self._names[letter]

    def format(self, w: Sequence[int]) -> str:
        return " ".join(self._names[x] for x in w)

    def parse(self, text: str) -> Word:
        try:
            return tuple(self._name_index[t] for t in text.split())
        except KeyError as exc:
            raise ValueError(f"unknown letter token {exc.args[0]!r}") from None

    # -- reduction ---------------------------------------------------------

    def free_reduce(self, w: Sequence[int]) -> Word:
        out: list[int] = []
        for x in w:
            if out and out[-1] == self.inv(x):
                out.pop()
            else:
                out.append(x)
        return tuple(out)

    def is_reduced(self, w: Sequence[int]) -> bool:
        return all(w[i + 1] != self.inv(w[i]) for i in range(len(w) - 1))

    def dehn_reduce(self, w: Sequence[int]) -> Word:
        """Reduce to a geodesic word (free reduction for free groups)."""
        return self.free_reduce(w)

    def geodesic_variants(self, w: Word) -> set[Word]:
        """All geodesic words equal to the geodesic word ``w``."""
        return {w}

    def canonical_key(self, w: Sequence[int]) -> Word:
        """A canonical word per group element, independent of any automaton.

        Dehn-reduce, then take the lexicographically least geodesic
        representative.  Two words represent the same element iff their
        keys coincide.
        """
        return min(self.geodesic_variants(self.dehn_reduce(w)))

    def __repr__(self):  # pragma: no cover
        return self.describe()

    def describe(self) -> str:
        raise NotImplementedError


class FreeGroup(Presentation):
    kind = "free"

    def __init__(self, rank: int):
        if rank < 2:
            raise ValueError("rank must be >= 2")
        if rank > 26:
            raise ValueError("rank > 26 not supported by the token grammar")
        self.rank = rank
        self.n_letters = 2 * rank
        self.relator = EPSILON
        self._names = []
        for i in range(rank):
            self._names += [string.ascii_lowercase[i], string.ascii_uppercase[i]]
        self._name_index = {n: i for i, n in enumerate(self._names)}

    def inv(self, letter: int) -> int:
        return letter ^ 1

    def describe(self) -> str:
        return f"FreeGroup(rank={self.rank})"

    def __eq__(self, other):
        return isinstance(other, FreeGroup) and other.rank == self.rank

    def __hash__(self):
        return hash(("free", self.rank))


class SurfaceGroup(Presentation):
    """Genus-g surface group with the standard one-relator presentation."""

    kind = "surface"

    def __init__(self, genus: int):
        if genus < 2:
            raise ValueError("genus must be >= 2")
        self.genus = genus
        self.n_letters = 4 * genus
        self.relator = tuple(range(4 * genus))
        self._names = []
        for i in range(1, genus + 1):
            self._names += [f"a{i}", f"b{i}", f"A{i}", f"B{i}"]
        self._name_index = {n: i for i, n in enumerate(self._names)}
        self._build_pattern_tables()

    def inv(self, letter: int) -> int:
        return letter ^ 2

    def describe(self) -> str:
        return f"SurfaceGroup(genus={self.genus})"

    def __eq__(self, other):
        return isinstance(other, SurfaceGroup) and other.genus == self.genus

    def __hash__(self):
        return hash(("surface", self.genus))

    # -- relator pattern tables ---------------------------------------------

    def _build_pattern_tables(self):
        g = self.genus
        r = self.relator
        rinv = self.inverse_word(r)
        self.relator_perms = _cyclic_perms(r)
        self.relator_inv_perms = _cyclic_perms(rinv)
        perms = self.relator_perms + self.relator_inv_perms

        # Over-half matching: window of length 2g+1 -> the unique full cyclic
        # permutation it starts.  Every letter occurs exactly once in the
        # relator, so the first letter already pins the permutation down.
        self._over_half: dict[Word, Word] = {}
        for p in perms:
            key = p[: 2 * g + 1]
            assert self._over_half.get(key, p) == p, "ambiguous relator window"
            self._over_half[key] = p

        # Half-for-half swaps: u -> v where u v^{-1} is a relator cycle.
        # These connect the different geodesic words of one element.
        self._half_swap: dict[Word, Word] = {}
        for p in perms:
            u, tail = p[: 2 * g], p[2 * g:]
            v = self.inverse_word(tail)
            assert self._half_swap.get(u, v) == v
            self._half_swap[u] = v
        self.half_words_relator = frozenset(p[: 2 * g] for p in self.relator_perms)
        self.half_words_inverse = frozenset(p[: 2 * g] for p in self.relator_inv_perms)

    # -- Dehn's algorithm ----------------------------------------------------

    def dehn_reduce(self, w: Sequence[int]) -> Word:
        """Repeatedly free-reduce and replace >half-relator subwords.

        Output is geodesic and represents the same element; Dehn's theorem
        for these presentations also gives: output is empty iff w = 1.
        """
        g2 = 2 * self.genus
        word = self.free_reduce(w)
        while True:
            n = len(word)
            if n <= g2:
                return word
            hit = -1
            for i in range(n - g2):
                perm = self._over_half.get(word[i: i + g2 + 1])
                if perm is not None:
                    hit = i
                    break
            if hit < 0:
                return word
            # extend the match as far as it goes
            h = g2 + 1
            while hit + h < n and h < len(perm) and word[hit + h] == perm[h]:
                h += 1
            replacement = self.inverse_word(perm[h:])
            word = self.free_reduce(word[:hit] + replacement + word[hit + h:])

    def geodesic_variants(self, w: Word) -> set[Word]:
        """Closure of a geodesic word under half-relator swaps.

        Any two geodesic words of the same element are connected by
        replacing a half-relator subword by the complementary half (the
        relator cells of a geodesic bigon).  Swaps preserve length and
        free-reducedness.
        """
        g2 = 2 * self.genus
        seen = {w}
        stack = [w]
        while stack:
            cur = stack.pop()
            for i in range(len(cur) - g2 + 1):
                rep = self._half_swap.get(cur[i: i + g2])
                if rep is not None:
                    nxt = cur[:i] + rep + cur[i + g2:]
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
        return seen


@lru_cache(maxsize=None)
def surface_group(genus: int) -> SurfaceGroup:
    return SurfaceGroup(genus)


@lru_cache(maxsize=None)
def free_group(rank: int) -> FreeGroup:
    return FreeGroup(rank)


def presentation_from_spec(kind: str, size: int) -> Presentation:
    if kind == "surface":
        return surface_group(size)
    if kind == "free":
        return free_group(size)
    raise ValueError(f"unknown presentation kind {kind!r}")


# -- reference BFS over the Cayley graph (automaton-independent oracle) ------


def bfs_spheres(p: Presentation, radius: int) -> list[dict[Word, Word]]:
    """Spheres S_0..S_radius as {canonical_key: representative word}.

    Brute-force BFS using only Dehn reduction and half-swap closure; used
    to cross-check the automaton construction.
    """
    spheres: list[dict[Word, Word]] = [{EPSILON: EPSILON}]
    ball = {EPSILON}
    for m in range(radius):
        nxt: dict[Word, Word] = {}
        for rep in spheres[-1].values():
            for x in range(p.n_letters):
                w = p.dehn_reduce(rep + (x,))
                if len(w) != m + 1:
                    continue
                key = p.canonical_key(w)
                if key not in nxt and key not in ball:
                    nxt[key] = w
        ball |= set(nxt)
        spheres.append(nxt)
    return spheres


def bfs_distances(p: Presentation, radius: int) -> dict[Word, int]:
    """Canonical-key -> word distance from 1, for the ball B(1, radius)."""
    out: dict[Word, int] = {}
    for m, sph in enumerate(bfs_spheres(p, radius)):
        for key in sph:
            out[key] = m
    return out


def random_word(p: Presentation, length: int, rng) -> Word:
    return tuple(int(rng.integers(p.n_letters)) for _ in range(length))


def concat(*ws: Iterable[int]) -> Word:
    out: list[int] = []
    for w in ws:
        out.extend(w)
    return tuple(out)
