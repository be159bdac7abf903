import math

import numpy as np
import pytest

from greenlab.green import (
    BallDomain,
    ComplementBall,
    check_gprime,
    decay_fit,
    first_passage,
    green_metric,
    green_truncated,
    green_via_brw,
    harnack_check,
    richardson_sqrt,
    working_r,
)
from greenlab.oracle import FreeGroupOracle
from greenlab.walks import build_ball, radial_ball, srw
from greenlab.words import free_group, surface_group

F2 = free_group(2)
G2 = surface_group(2)
ORACLE = FreeGroupOracle(2)


@pytest.fixture(scope="module")
def f2_radial():
    return radial_ball(F2, srw(F2), 200)


@pytest.fixture(scope="module")
def f2_small():
    return build_ball(F2, srw(F2), 8)


@pytest.fixture(scope="module")
def g2_small():
    return build_ball(G2, srw(G2), 4)


def test_green_matches_closed_form(f2_radial):
    for r in (0.25, 0.5, 0.75, 1.0, 1.1):
        g = green_truncated(f2_radial, r)
        assert g.at_source() == pytest.approx(ORACLE.green(r), abs=1e-10)
        assert g.residual < 1e-10


def test_green_off_diagonal(f2_small):
    g = green_truncated(f2_small, 0.5)
    w = F2.parse("a b")
    expected = ORACLE.green(0.5, dist=2)
    assert g.value(w) == pytest.approx(expected, abs=1e-6)


def test_domain_restriction_monotone(f2_small):
    g_full = green_truncated(f2_small, 0.9)
    g_dom = green_truncated(f2_small, 0.9, domain=BallDomain((), 4))
    assert g_dom.at_source() < g_full.at_source()
    assert np.all(g_dom.u <= g_full.u + 1e-12)
    # complement domain excludes the root
    with pytest.raises(ValueError):
        green_truncated(f2_small, 0.9, domain=ComplementBall((), 2))


def test_truncation_gap(f2_small):
    g = green_truncated(f2_small, 0.5, want_gap=True)
    assert g.truncation_gap is not None
    assert g.truncation_gap < 1e-4


def test_first_passage_matches_oracle(f2_small):
    for r in (0.5, 1.0):
        F = first_passage(f2_small, r, F2.parse("a"), ())
        assert F == pytest.approx(ORACLE.first_passage(r), abs=2e-4)
    assert first_passage(f2_small, 0.5, (), ()) == 1.0


def test_green_metric_properties(f2_small):
    r = 0.9
    a, b = F2.parse("a"), F2.parse("b")
    d_a = green_metric(f2_small, r, a, ())
    assert d_a == pytest.approx(-math.log(ORACLE.first_passage(r)), abs=1e-5)
    # symmetry and positivity
    assert green_metric(f2_small, r, (), a) == pytest.approx(d_a, abs=1e-5)
    assert green_metric(f2_small, r, a, b) > 0


def test_gprime_identity(f2_small):
    rep = check_gprime(f2_small, 0.8)
    assert rep.rel_error < 1e-6


def test_decay_fit(f2_small):
    fit = decay_fit(f2_small, 1.0, m_min=2, m_max=7)
    # per-sphere decay rate of G equals F(1) = 1/3
    assert fit.rho == pytest.approx(1 / 3, rel=0.05)
    assert fit.r2 > 0.999


def test_harnack(g2_small):
    rep = harnack_check(g2_small, 0.9, n_samples=500)
    assert rep.one_step_ok
    assert 1.0 <= rep.C_estimate <= rep.one_step_bound


def test_brw_estimator(f2_small):
    r = 0.8
    direct = green_truncated(f2_small, r).at_source()
    est = green_via_brw(f2_small, r, trials=4000, seed=7)
    assert est.reliable
    z = abs(est.mean - direct) / est.std_error
    assert z < 4


def test_brw_deterministic(f2_small):
    e1 = green_via_brw(f2_small, 0.8, trials=500, seed=3)
    e2 = green_via_brw(f2_small, 0.8, trials=500, seed=3)
    assert e1.mean == e2.mean


def test_richardson_sqrt():
    c, a = 2.5, -0.7
    f = lambda d: c + a * math.sqrt(d)
    assert richardson_sqrt(f(1e-3), f(2e-3)) == pytest.approx(c, abs=1e-12)
    assert working_r(2.0, 0.25) == pytest.approx(1.5)
