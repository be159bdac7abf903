import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from greenlab.oracle import FreeGroupOracle


def test_spectral_radius_values():
    o2 = FreeGroupOracle(2)
    assert o2.rho == pytest.approx(math.sqrt(3) / 2)
    assert o2.R == pytest.approx(2 / math.sqrt(3))
    o3 = FreeGroupOracle(3)
    assert o3.rho == pytest.approx(math.sqrt(5) / 3)


@given(st.integers(2, 6), st.floats(0.01, 0.99))
def test_first_passage_satisfies_quadratic(k, frac):
    o = FreeGroupOracle(k)
    r = frac * o.R
    F = o.first_passage(r)
    assert (2 * k - 1) * r * F * F - 2 * k * F + r == pytest.approx(0, abs=1e-12)
    assert 0 < F < 1


def test_first_passage_at_R():
    o = FreeGroupOracle(2)
    assert o.first_passage(o.R) == pytest.approx(o.F_at_R)
    assert o.F_at_R == pytest.approx(1 / math.sqrt(3))
    with pytest.raises(ValueError):
        o.first_passage(o.R * 1.01)


def test_green_closed_form():
    o = FreeGroupOracle(2)
    F = o.first_passage(1.0)
    assert F == pytest.approx(1 / 3)
    assert o.green(1.0) == pytest.approx(1 / (1 - F))
    # multiplicativity along geodesics: G(r, d) = F^d * G(r, 0)
    for d in range(1, 5):
        assert o.green(0.8, d) == pytest.approx(
            o.first_passage(0.8) ** d * o.green(0.8))
    assert o.G_at_R == pytest.approx(3.0)


def test_pn_sequence_exact_values():
    o = FreeGroupOracle(2)
    pn = o.pn_sequence(6)
    assert pn[0] == 1.0
    assert pn[1] == 0.0
    # return probability after two steps: step out then straight back
    assert pn[2] == pytest.approx(1 / 4)
    assert np.all(pn[1::2] == 0.0)
    assert pn[4] == pytest.approx(7 / 64)


def test_pn_sequence_dist():
    # dist > 0 tracks the sphere-occupancy of the distance chain
    o = FreeGroupOracle(2)
    pn = o.pn_sequence(4, dist=1)
    assert pn[0] == 0.0
    assert pn[1] == pytest.approx(1.0)
    assert pn[3] == pytest.approx(7 / 16)


def test_pn_respects_spectral_radius():
    o = FreeGroupOracle(2)
    pn = o.pn_sequence(40)
    scaled = pn[::2] * o.R ** np.arange(0, 41, 2)
    assert np.all(np.diff(scaled) <= 1e-15)
