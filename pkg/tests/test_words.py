import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greenlab.words import (EPSILON, PresentationMismatch, bfs_spheres,
                            free_group, presentation_from_spec, random_word,
                            surface_group)

F2 = free_group(2)
G2 = surface_group(2)

words_f2 = st.lists(st.integers(0, F2.n_letters - 1), max_size=12).map(tuple)
words_g2 = st.lists(st.integers(0, G2.n_letters - 1), max_size=12).map(tuple)


def test_presentation_from_spec():
    assert presentation_from_spec("free", 3) == free_group(3)
    assert presentation_from_spec("surface", 2) == surface_group(2)
    with pytest.raises(ValueError):
        presentation_from_spec("nilpotent", 2)


def test_letters_and_inverses():
    assert F2.n_letters == 4
    assert G2.n_letters == 8
    for p in (F2, G2):
        for x in range(p.n_letters):
            assert p.inv(p.inv(x)) == x
            assert p.inv(x) != x


def test_relator():
    assert F2.relator == EPSILON
    assert len(G2.relator) == 8
    # the relator reduces to the identity
    assert G2.dehn_reduce(G2.relator) == EPSILON


def test_parse_format_roundtrip():
    for p, text in ((F2, "a A b B"), (G2, "a1 b1 A1 B1 a2 b2 A2 B2")):
        w = p.parse(text)
        assert p.format(w) == text


@given(words_f2)
def test_free_reduce_idempotent(w):
    r = F2.free_reduce(w)
    assert F2.free_reduce(r) == r
    assert F2.is_reduced(r)


@given(words_g2)
@settings(max_examples=50)
def test_dehn_reduce_fixed_point(w):
    r = G2.dehn_reduce(w)
    assert G2.dehn_reduce(r) == r
    assert len(r) <= len(w)


@given(words_g2)
@settings(max_examples=50)
def test_inverse_word_involution(w):
    assert G2.inverse_word(G2.inverse_word(w)) == tuple(w)


@given(words_g2)
@settings(max_examples=30)
def test_canonical_key_invariant_under_variants(w):
    r = G2.dehn_reduce(w)
    key = G2.canonical_key(r)
    for v in G2.geodesic_variants(r):
        assert G2.canonical_key(v) == key
        assert len(v) == len(r)


def test_bfs_spheres_free_group():
    sizes = [len(s) for s in bfs_spheres(F2, 5)]
    assert sizes == [1, 4, 12, 36, 108, 324]


def test_bfs_spheres_genus2():
    sizes = [len(s) for s in bfs_spheres(G2, 4)]
    assert sizes == [1, 8, 56, 392, 2736]


def test_random_word_deterministic():
    rng1 = np.random.Generator(np.random.Philox(key=7))
    rng2 = np.random.Generator(np.random.Philox(key=7))
    assert random_word(G2, 10, rng1) == random_word(G2, 10, rng2)


def test_mismatched_presentations_raise():
    with pytest.raises((PresentationMismatch, ValueError, IndexError)):
        F2.format(G2.parse("a2"))
