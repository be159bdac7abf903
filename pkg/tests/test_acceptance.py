"""Acceptance suite: one test per criterion, each printing a single
PASS/FAIL line with the measured value and tolerance.

These calls share a session-scoped Context (conftest.py), so the heavy
genus-2 ball and its Green solves are built once.  Run with `-s` to see
the pass/fail table inline; `greenlab report` prints the same table.
"""

import pytest

from greenlab import acceptance


def _run(ctx, fn):
    res = fn(ctx)
    line = (f"{'PASS' if res.passed else 'FAIL'} | criterion {res.name} | "
            f"measured: {res.measured} | tolerance: {res.tolerance} | "
            f"{res.runtime:.1f}s")
    print(line)
    assert res.passed, line


def test_criterion_01_oracle_agreement(ctx):
    _run(ctx, acceptance.criterion_1_oracle_agreement)


def test_criterion_02_spectral_bracket(ctx):
    _run(ctx, acceptance.criterion_2_spectral_bracket)


def test_criterion_03_llt_exponent(ctx):
    _run(ctx, acceptance.criterion_3_llt_exponent)


def test_criterion_04_critical_exponent(ctx):
    _run(ctx, acceptance.criterion_4_critical_exponent)


def test_criterion_05_pressure_zero(ctx):
    _run(ctx, acceptance.criterion_5_pressure_zero)


def test_criterion_06_sphere_vs_pressure(ctx):
    _run(ctx, acceptance.criterion_6_sphere_vs_pressure)


def test_criterion_07_level_sets(ctx):
    _run(ctx, acceptance.criterion_7_level_sets)


def test_criterion_08_invariants(ctx):
    _run(ctx, acceptance.criterion_8_invariants)


def test_criterion_09_ancona(ctx):
    _run(ctx, acceptance.criterion_9_ancona)


def test_criterion_10_brw(ctx):
    _run(ctx, acceptance.criterion_10_brw)


def test_criterion_11_holder(ctx):
    _run(ctx, acceptance.criterion_11_holder)


def test_criterion_12_spectrum(ctx):
    _run(ctx, acceptance.criterion_12_spectrum)
