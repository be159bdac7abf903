import numpy as np
import pytest

from greenlab.automaton import build_automaton, geodesic, word_distance
from greenlab.words import EPSILON, free_group, surface_group

F2 = free_group(2)
G2 = surface_group(2)

GENUS2_SPHERES = [1, 8, 56, 392, 2736, 19096, 133288, 930328, 6493544]


def test_free_group_automaton():
    a = build_automaton(F2)
    assert list(a.sphere_sizes(4)) == [1, 4, 12, 36, 108]
    assert a.accepts((0, 0, 2))
    assert not a.accepts((0, F2.inv(0)))


def test_genus2_state_count():
    a = build_automaton(G2)
    assert a.n_states == 3193


def test_genus2_sphere_sizes():
    a = build_automaton(G2)
    assert list(a.sphere_sizes(8)) == GENUS2_SPHERES
    assert int(a.sphere_sizes(8).sum()) == 7_579_449


def test_genus2_growth_rate():
    a = build_automaton(G2)
    assert a.growth_rate() == pytest.approx(6.9798, abs=1e-3)


def test_structure_report():
    a = build_automaton(G2)
    rep = a.check_structure()
    assert rep.recurrent_strongly_connected
    assert rep.aperiodic
    assert rep.n_recurrent_edges + rep.n_transient_edges == rep.n_edges
    assert rep.bijection_checked_to >= 5


def test_normal_form_is_geodesic_and_canonical():
    a = build_automaton(G2)
    rng = np.random.Generator(np.random.Philox(key=3))
    for _ in range(200):
        w = tuple(rng.integers(0, G2.n_letters, size=10).tolist())
        nf = a.normal_form(w)
        assert a.accepts(nf)
        assert len(nf) == len(G2.dehn_reduce(w))
        assert G2.canonical_key(nf) == G2.canonical_key(w)


def test_enumerate_sphere_matches_counts():
    a = build_automaton(G2)
    for m in range(4):
        assert len(a.enumerate_sphere(m)) == GENUS2_SPHERES[m]


def test_word_distance_and_geodesic():
    assert word_distance(G2, EPSILON, (0, 1)) == 2
    seg = geodesic(G2, (G2.inv(0),), (0,))
    assert seg.vertices[0].word == (G2.inv(0),)
    assert seg.vertices[-1].word == (0,)
    assert len(seg.vertices) == 3  # passes through the identity
    assert seg.vertices[1].word == ()


def test_relator_is_identity():
    a = build_automaton(G2)
    assert a.normal_form(G2.relator) == EPSILON
