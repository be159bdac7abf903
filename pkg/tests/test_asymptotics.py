import numpy as np
import pytest

from greenlab.asymptotics import (
    critical_exponent_fit,
    karamata_fit,
    llt_fit,
    rd_bounds_check,
    spectrum_check,
    tauberian_check,
)
from greenlab.oracle import FreeGroupOracle
from greenlab.walks import build_ball, lazy_srw, srw
from greenlab.words import free_group

F2 = free_group(2)
ORACLE = FreeGroupOracle(2)


def test_llt_beta_free_group():
    pn = ORACLE.pn_sequence(4000)
    fit = llt_fit(pn, ORACLE.R, range(1000, 4001, 2))
    assert fit.exponent == pytest.approx(1.5, abs=0.02)


def test_llt_sensitivity_bracket():
    pn = ORACLE.pn_sequence(2000)
    fit = llt_fit(pn, ORACLE.R, range(500, 2001, 2),
                  R_bracket=(ORACLE.R * 0.9999, ORACLE.R * 1.0001))
    lo, hi = fit.sensitivity
    assert lo <= fit.exponent <= hi


def test_llt_input_validation():
    pn = ORACLE.pn_sequence(100)
    with pytest.raises(ValueError):
        llt_fit(pn, ORACLE.R, [10, 12, 14])      # too few points
    with pytest.raises(ValueError):
        llt_fit(pn, ORACLE.R, range(10, 30))     # mixed parity


def test_critical_exponent_closed_form():
    deltas = np.geomspace(1e-8, 1e-4, 12)
    rs = ORACLE.R * (1 - deltas)
    Gs = [ORACLE.green(r) for r in rs]
    fit = critical_exponent_fit(rs, Gs, ORACLE.R)
    assert fit.exponent == pytest.approx(0.5, abs=0.01)
    # supplying the exact G(R) should only improve matters
    fit2 = critical_exponent_fit(rs, Gs, ORACLE.R, G_at_R=ORACLE.G_at_R)
    assert fit2.exponent == pytest.approx(0.5, abs=0.005)


def test_rd_bounds_on_oracle():
    pn = ORACLE.pn_sequence(3000)
    rep = rd_bounds_check(pn, ORACLE.R, range(100, 3001, 2))
    assert rep.bounded_above and rep.bounded_below
    assert rep.upper_constant > 0 and rep.lower_constant > 0


def test_karamata_abelian_direction():
    # keep 2n below ~4000: R^{-n} drives p_n under the float64 floor later
    pn = ORACLE.pn_sequence(4000)
    fit = karamata_fit(pn, ORACLE.R, range(100, 1601, 2))
    assert fit.exponent == pytest.approx(0.5, abs=0.05)


def test_tauberian_consistency():
    # q_n = n^{-1/2} has beta = 3/2 partial sums sum k q_k ~ n^{3/2}
    n = np.arange(1, 5001)
    q = n ** -0.5
    rep = tauberian_check(q, beta=1.5)
    assert rep.consistent


def test_spectrum_requires_aperiodic():
    bt = build_ball(F2, srw(F2), 5)
    rep = spectrum_check(bt)
    assert not rep.applicable


def test_spectrum_lazy_walk():
    bt = build_ball(F2, lazy_srw(F2, 0.5), 5)
    rep = spectrum_check(bt)
    assert rep.applicable
    assert rep.lambda_min > -rep.lambda_max
    assert rep.gap > 0
    # lazy walk: P = (1+Q)/2 with Q the srw, so lambda_min >= 0 here
    assert rep.lambda_min > -1e-8
