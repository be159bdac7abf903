import math

import numpy as np
import pytest

from greenlab.boundary import (
    CoverageError,
    RaySpec,
    build_potential,
    holder_rate_fit,
    martin_ratio,
    martin_sequence,
    pair_summability_check,
)
from greenlab.green import green_truncated
from greenlab.oracle import FreeGroupOracle
from greenlab.walks import build_ball, srw
from greenlab.words import free_group, surface_group

F2 = free_group(2)
G2 = surface_group(2)
ORACLE = FreeGroupOracle(2)


@pytest.fixture(scope="module")
def f2_ball():
    return build_ball(F2, srw(F2), 8)


@pytest.fixture(scope="module")
def g2_ball():
    return build_ball(G2, srw(G2), 4)


def test_ray_prefixes():
    ray = RaySpec(F2)
    assert ray.prefix(3) == (0, 0, 0)
    ray2 = RaySpec(F2, cycle=(0, 2))
    assert ray2.prefix(3) == (0, 2, 0)
    with pytest.raises(ValueError):
        RaySpec(F2, cycle=(0, 1))  # a A does not power up


def test_martin_kernel_free_group(f2_ball):
    # on a tree the kernel stabilizes: K(a, xi) = 1/F for xi = a^infty
    r = 0.9
    ray = RaySpec(F2)
    seq = martin_sequence(f2_ball, r, F2.parse("a"), ray, [2, 3, 4])
    expected = 1.0 / ORACLE.first_passage(r)
    assert np.allclose(seq, expected, atol=1e-4)
    # off-ray point: K(b, a^infty) = F
    kb = martin_ratio(f2_ball, r, F2.parse("b"), ray, 3)
    assert kb == pytest.approx(ORACLE.first_passage(r), abs=1e-4)


def test_martin_coverage_error(f2_ball):
    with pytest.raises(CoverageError):
        martin_ratio(f2_ball, 0.9, F2.parse("a"), RaySpec(F2), 20)


def test_holder_fit_genus2(g2_ball):
    fit = holder_rate_fit(g2_ball, 0.9, G2.parse("a1"), RaySpec(G2),
                          [1, 2, 3, 4])
    assert fit.stabilized or fit.rho_hat < 1


def test_potential_telescoping(f2_ball):
    r = 0.8
    pot = build_potential(f2_ball, r, k=3)
    g = green_truncated(f2_ball, r)
    w = F2.parse("a b a")
    s = pot.birkhoff(w)
    assert s == pytest.approx(math.log(g.value(w)) - math.log(g.at_source()),
                              abs=1e-12)
    # on the tree phi is log F everywhere
    logF = math.log(ORACLE.first_passage(r))
    for v in pot.table.values():
        assert v == pytest.approx(logF, abs=1e-4)


def test_potential_coverage(f2_ball):
    with pytest.raises(CoverageError):
        build_potential(f2_ball, 0.8, k=9)


def test_pair_summability(g2_ball):
    rep = pair_summability_check(g2_ball, 0.9, N=8, pairs=50, seed=1)
    assert np.all(rep.total > 0)
    assert rep.decreasing_fraction > 0.9
    assert np.all(np.diff(rep.partial_sums, axis=1) >= 0)
