import numpy as np
import pytest

from greenlab.oracle import FreeGroupOracle
from greenlab.walks import (
    BallBudgetError,
    RadiusError,
    ValidationError,
    build_ball,
    exact_pn,
    explicit_distribution,
    lazy_srw,
    min_radius,
    pn_sequence,
    radial_ball,
    sample_paths,
    spectral_radius_estimate,
    srw,
    validate,
)
from greenlab.words import free_group, surface_group

F2 = free_group(2)
G2 = surface_group(2)


def test_srw_validates():
    rep = validate(srw(F2))
    assert rep.symmetric and rep.normalized and rep.irreducible
    assert rep.period == 2 and not rep.aperiodic
    rep = validate(lazy_srw(F2, 0.5))
    assert rep.aperiodic


def test_asymmetric_distribution_rejected():
    bad = explicit_distribution(F2, {"a": 0.5, "A": 0.25, "b": 0.125, "B": 0.125})
    with pytest.raises(ValidationError):
        validate(bad)
    rep = validate(bad, raise_on_error=False)
    assert not rep.symmetric


def test_unnormalized_rejected():
    bad = explicit_distribution(F2, {"a": 0.3, "A": 0.3, "b": 0.3, "B": 0.3})
    with pytest.raises(ValidationError):
        validate(bad)


def test_ball_structure_f2():
    bt = build_ball(F2, srw(F2), 5)
    sizes = [bt.sphere_slice(m).stop - bt.sphere_slice(m).start
             for m in range(6)]
    assert sizes == [1, 4, 12, 36, 108, 324]
    # index/word round trip and inverse involution
    for i in (0, 1, 5, 100):
        assert bt.index_of(bt.word(i)) == i
    inv = bt.inverse_index()
    assert np.array_equal(inv[inv], np.arange(bt.n))


def test_ball_structure_genus2():
    bt = build_ball(G2, srw(G2), 3)
    sizes = [bt.sphere_slice(m).stop - bt.sphere_slice(m).start
             for m in range(4)]
    assert sizes == [1, 8, 56, 392]


def test_row_sums_interior():
    bt = build_ball(F2, srw(F2), 5)
    rs = bt.row_sums()
    interior = bt.length_of(np.arange(bt.n)) < 5 - bt.sd.jump_bound + 1
    assert np.allclose(rs[interior], 1.0)
    assert np.all(rs <= 1.0 + 1e-12)


def test_budget_error():
    with pytest.raises(BallBudgetError):
        build_ball(G2, srw(G2), 8, budget=10_000)


def test_exact_pn_matches_oracle():
    o = FreeGroupOracle(2)
    bt = build_ball(F2, srw(F2), 7)
    pn = pn_sequence(bt, 7)
    expected = o.pn_sequence(7)
    assert np.allclose(pn, expected, atol=1e-14)
    with pytest.raises(RadiusError):
        exact_pn(bt, 20)


def test_exact_pn_genus2():
    bt = build_ball(G2, srw(G2), 2)
    assert exact_pn(bt, 2) == pytest.approx(1 / 8)


def test_radial_ball_matches_full_ball():
    o = FreeGroupOracle(2)
    rb = radial_ball(F2, srw(F2), 40)
    u = np.zeros(rb.n)
    u[0] = 1.0
    for n in range(1, 9):
        u = rb.apply(u)
        assert u[0] == pytest.approx(o.pn_sequence(n)[n], abs=1e-14)


def test_min_radius():
    assert min_radius(6, 0, 1) >= 3
    assert min_radius(6, 2, 1) >= 4


def test_sample_paths_deterministic():
    sd = srw(F2)
    s1 = sample_paths(sd, 10, 5, seed=42)
    s2 = sample_paths(sd, 10, 5, seed=42)
    assert np.array_equal(s1.steps, s2.steps)
    s3 = sample_paths(sd, 10, 5, seed=43)
    assert not np.array_equal(s1.steps, s3.steps)


def test_spectral_radius_estimate_f2():
    o = FreeGroupOracle(2)
    res = spectral_radius_estimate(F2, srw(F2), M_max=60)
    lo, hi = res.estimate_bracket
    assert lo <= o.rho <= hi
