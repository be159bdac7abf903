import math

import numpy as np
import pytest

from greenlab.automaton import build_automaton
from greenlab.green import green_truncated
from greenlab.oracle import FreeGroupOracle
from greenlab.thermo import (
    PressureError,
    eta,
    gibbs_expectation,
    level_set_count,
    level_set_profile,
    potential_on_blocks,
    pressure,
    pressure_zero_check,
    refine,
    sphere_measure,
    sphere_sums,
    theta_root,
)
from greenlab.walks import build_ball, srw
from greenlab.words import free_group

F2 = free_group(2)
ORACLE = FreeGroupOracle(2)


@pytest.fixture(scope="module")
def f2_ball():
    return build_ball(F2, srw(F2), 8)


@pytest.fixture(scope="module")
def f2_chain():
    return refine(build_automaton(F2), 2)


def test_chain_structure(f2_chain):
    # depth-2 blocks = reduced words of length 2
    assert f2_chain.n == 12
    for m in (2, 3, 6):
        assert f2_chain.path_counts(m) == 4 * 3 ** (m - 1)


def test_pressure_zero_potential(f2_chain):
    # phi = 0: Pr(0) = log(growth rate) = log 3
    phi = np.zeros(f2_chain.n)
    res = pressure(f2_chain, phi, theta=1.0)
    assert res.value == pytest.approx(math.log(3), abs=1e-8)
    assert gibbs_expectation(res, np.ones(f2_chain.n)) == pytest.approx(1.0)


def test_pressure_closed_form(f2_ball, f2_chain):
    # depth-2 potential is constant log F on the tree, so
    # Pr(theta phi_r) = log(3 F_r^theta)
    for r in (0.8, 1.0):
        solve = green_truncated(f2_ball, r)
        phi = potential_on_blocks(f2_chain, f2_ball, solve)
        F = ORACLE.first_passage(r)
        for theta in (1.0, 2.0):
            res = pressure(f2_chain, phi, theta, r=r)
            assert res.value == pytest.approx(math.log(3 * F ** theta),
                                              abs=1e-3)


def test_pressure_zero_check(f2_ball, f2_chain):
    # Pr(2 phi_r) = log(3 F_r^2); at r = 1 this is log(1/3)
    solve = green_truncated(f2_ball, 1.0)
    res = pressure_zero_check(f2_chain, f2_ball, solve, theta=2.0)
    assert res.value == pytest.approx(math.log(1 / 3), abs=5e-3)


def test_theta_root(f2_ball, f2_chain):
    # 3 F_r^theta = 1  =>  theta* = -log 3 / log F_r; theta*(1) = 1
    solve = green_truncated(f2_ball, 1.0)
    phi = potential_on_blocks(f2_chain, f2_ball, solve)
    root = theta_root(f2_chain, phi, 1.0)
    assert root == pytest.approx(1.0, abs=5e-3)
    with pytest.raises(PressureError):
        theta_root(f2_chain, phi, 1.0, lo=2.0, hi=3.0)


def test_sphere_sums_rate(f2_ball):
    r = 0.8
    solve = green_truncated(f2_ball, r)
    table = sphere_sums(f2_ball, solve, 2.0, range(1, 8))
    # Sigma_m = 4*3^{m-1} (F^m G)^2: rate log(3 F^2)
    F = ORACLE.first_passage(r)
    assert table.fitted_rate == pytest.approx(math.log(3 * F * F), abs=1e-2)


def test_eta_positive(f2_ball):
    solve = green_truncated(f2_ball, 0.8)
    res = eta(f2_ball, solve)
    assert res.reliable
    # closed form: G^2 * (1 + sum_m 4*3^{m-1} F^{2m}) = G^2 (1 + 4F^2/(1-3F^2))
    F, G = ORACLE.first_passage(0.8), ORACLE.green(0.8)
    expected = G * G * (1 + 4 * F * F / (1 - 3 * F * F))
    assert res.value == pytest.approx(expected, rel=1e-3)


def test_level_sets(f2_ball):
    solve = green_truncated(f2_ball, 0.9)
    c1, hit1 = level_set_count(f2_ball, solve, 0.5)
    c2, hit2 = level_set_count(f2_ball, solve, 0.1)
    assert c2 >= c1 >= 1
    prof = level_set_profile(f2_ball, solve, [0.5, 0.3, 0.1])
    assert np.all(prof > 0)


def test_sphere_measure(f2_ball):
    solve = green_truncated(f2_ball, 0.9)
    mu = sphere_measure(f2_ball, solve, 3)
    assert mu.weights.sum() == pytest.approx(1.0)
    rng = np.random.Generator(np.random.Philox(key=0))
    draws = mu.sample(100, rng)
    assert all(f2_ball.length_of(i) == 3 for i in draws)
