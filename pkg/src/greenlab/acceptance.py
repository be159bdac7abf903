"""Acceptance suite: the twelve go/no-go checks behind `greenlab report`.

Each criterion function takes a shared Context (memoized balls, solves,
spectral-radius estimates) and returns a CheckResult with the measured
value, tolerance, and pass flag.  The pytest suite wraps the same
functions so the CLI report and the tests cannot drift apart.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .words import free_group, surface_group, bfs_spheres
from .automaton import build_automaton, word_distance
from .walks import (srw, lazy_srw, build_ball, radial_ball, pn_sequence,
                    spectral_radius_estimate)
from .green import (green_truncated, check_gprime, ancona_ratio,
                    green_via_brw, BallDomain)
from .boundary import RaySpec, holder_rate_fit
from .thermo import refine, potential_on_blocks, pressure, sphere_sums, \
    level_set_count
from .oracle import FreeGroupOracle
from .asymptotics import llt_fit, critical_exponent_fit, rd_bounds_check, \
    spectrum_check


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: str
    tolerance: str
    runtime: float = 0.0
    details: dict = field(default_factory=dict)


class Context:
    """Memoizes the expensive shared objects across criteria."""

    def __init__(self, seed: int = 20260826, cache: str | None = None):
        self.seed = seed
        self.cache = cache
        self._balls: dict = {}
        self._solves: dict = {}
        self._spectral: dict = {}
        self._chains: dict = {}

    # -- groups and walks ---------------------------------------------------

    def g2(self):
        return surface_group(2)

    def f2(self):
        return free_group(2)

    def ball(self, key: str):
        if key not in self._balls:
            if key == "g2-M8":
                p = self.g2()
                self._balls[key] = self._cached_ball(p, srw(p), 8)
            elif key == "g2-M6-lazy":
                p = self.g2()
                self._balls[key] = self._cached_ball(p, lazy_srw(p, 0.1), 6)
            elif key == "f2-M8":
                p = self.f2()
                self._balls[key] = self._cached_ball(p, srw(p), 8)
            elif key.startswith("f2-radial-"):
                p = self.f2()
                self._balls[key] = radial_ball(p, srw(p),
                                               int(key.rsplit("-", 1)[1]))
            else:
                raise KeyError(key)
        return self._balls[key]

    def _cached_ball(self, p, sd, M):
        if self.cache:
            from .cache import ball_cached
            return ball_cached(p, sd, M, root=self.cache)
        return build_ball(p, sd, M)

    def solve(self, ball_key: str, r: float, tol: float = 1e-12):
        # bounded memo: solution vectors on the genus-2 ball are ~60 MB each
        key = (ball_key, round(r, 15))
        if key not in self._solves:
            while len(self._solves) >= 6:
                self._solves.pop(next(iter(self._solves)))
            self._solves[key] = green_truncated(self.ball(ball_key), r,
                                                tol=tol)
        else:
            self._solves[key] = self._solves.pop(key)   # LRU refresh
        return self._solves[key]

    def spectral(self, key: str):
        if key not in self._spectral:
            if key == "f2":
                p = self.f2()
                self._spectral[key] = spectral_radius_estimate(p, srw(p), 14)
            elif key == "g2":
                p = self.g2()
                self._spectral[key] = spectral_radius_estimate(
                    p, srw(p), 8, bt=self.ball("g2-M8"))
            else:
                raise KeyError(key)
        return self._spectral[key]

    def R_g2(self) -> float:
        return self.spectral("g2").R_hat

    def chain(self, key: str):
        if key not in self._chains:
            if key == "f2-k2":
                self._chains[key] = refine(build_automaton(self.f2()), 2)
            elif key == "g2-k3":
                self._chains[key] = refine(build_automaton(self.g2()), 3)
            else:
                raise KeyError(key)
        return self._chains[key]


def _timed(fn):
    def wrapper(ctx: Context) -> CheckResult:
        t0 = time.time()
        res = fn(ctx)
        res.runtime = time.time() - t0
        return res
    return wrapper


# --------------------------------------------------------------------------
# 1. free-group oracle agreement

@_timed
def criterion_1_oracle_agreement(ctx: Context) -> CheckResult:
    orc = FreeGroupOracle(2)
    bt = ctx.ball("f2-radial-30")
    worst = 0.0
    for r in (0.25, 0.5, 0.75, 1.0, 1.1):
        got = green_truncated(bt, r).value(0)
        worst = max(worst, abs(got - orc.green(r)))
    return CheckResult("1 free-group oracle agreement", worst < 1e-6,
                       f"max |G - closed form| = {worst:.3g}", "< 1e-6")


# --------------------------------------------------------------------------
# 2. spectral radius bracket, F_2

@_timed
def criterion_2_spectral_bracket(ctx: Context) -> CheckResult:
    est = ctx.spectral("f2")
    lo, hi = est.estimate_bracket
    target = math.sqrt(3) / 2
    ok = lo <= target <= hi and (hi - lo) < 1e-3
    return CheckResult("2 spectral radius bracket F_2", ok,
                       f"[{lo:.6f}, {hi:.6f}] width {hi - lo:.2e}, "
                       f"target {target:.6f}",
                       "contains sqrt(3)/2, width < 1e-3")


# --------------------------------------------------------------------------
# 3. local limit exponent on the oracle

@_timed
def criterion_3_llt_exponent(ctx: Context) -> CheckResult:
    worst = 0.0
    betas = {}
    for k in (2, 3):
        orc = FreeGroupOracle(k)
        pn = orc.pn_sequence(2000)
        fit = llt_fit(pn, orc.R, np.arange(100, 2001, 2))
        betas[k] = fit.exponent
        worst = max(worst, abs(fit.exponent - 1.5))
    return CheckResult("3 local limit exponent 3/2", worst <= 0.02,
                       f"beta(k=2)={betas[2]:.4f}, beta(k=3)={betas[3]:.4f}",
                       "1.50 +/- 0.02")


# --------------------------------------------------------------------------
# 4. critical exponent

# Two delta windows with opposite systematic bias on a truncated ball:
# near criticality the solve underestimates G (exponent pulled up), far
# from criticality the regular part of G contaminates the sqrt defect
# (exponent pulled down).  On the F_2 M=8 ball the same two windows give
# 0.556 / 0.42 around the true 0.4976, so their envelope is the honest
# truncation-limited interval.
GENUS2_CRIT_DELTAS = np.array([0.003, 0.005, 0.008, 0.012, 0.018, 0.025,
                               0.035, 0.05, 0.07, 0.1])
GENUS2_CRIT_DELTAS_FAR = np.array([0.03, 0.045, 0.065, 0.1, 0.15])


@_timed
def criterion_4_critical_exponent(ctx: Context) -> CheckResult:
    # F_2: closed form on a grid hugging R
    orc = FreeGroupOracle(2)
    dists = orc.R * np.geomspace(1e-8, 1e-4, 12)
    rs = orc.R - dists
    Gs = np.array([orc.green(r) for r in rs])
    fit_f2 = critical_exponent_fit(rs, Gs, orc.R)
    ok_f2 = abs(fit_f2.exponent - 0.5) <= 0.01

    # genus-2: truncation-limited interval from the R_hat bracket ends
    est = ctx.spectral("g2")
    rho_lo, rho_hi = est.estimate_bracket
    R_mid = est.R_hat
    exps = []
    spread = 0.0
    for ds in (GENUS2_CRIT_DELTAS, GENUS2_CRIT_DELTAS_FAR):
        rs = R_mid * (1.0 - ds)
        Gs = np.array([ctx.solve("g2-M8", float(r)).value(0) for r in rs])
        for R_end in (1.0 / rho_hi, R_mid, 1.0 / rho_lo):
            f = critical_exponent_fit(rs, Gs, R_end)
            exps.append(f.exponent)
            spread = max(spread, f.spread)
    lo = min(exps) - spread
    hi = max(exps) + spread
    ok_g2 = lo <= 0.5 <= hi and (hi - lo) <= 0.3
    return CheckResult(
        "4 critical exponent 1/2", ok_f2 and ok_g2,
        f"F_2 alpha={fit_f2.exponent:.4f}; genus-2 interval "
        f"[{lo:.3f}, {hi:.3f}]",
        "F_2: 0.500 +/- 0.01; genus-2: interval contains 0.5, width <= 0.3")


# --------------------------------------------------------------------------
# 5. pressure zero

# Extrapolation ladder for the genus-2 pressure at criticality.  Two
# nuisance scales contaminate Pr(2 phi_{R(1-delta)}) on a radius-8 ball:
# the truncation bias of the Green solve (decays geometrically in the
# ball radius while the correlation length 1/sqrt(2 delta) stays below
# it) and the delta-offset from criticality (analytic in sqrt(delta)).
# Per delta we therefore Aitken-extrapolate Pr over nested sub-balls
# M' = 5..8, then fit a cubic in sqrt(delta) and read the intercept.
# Deltas below ~0.012 are excluded: there the sub-ball convergence ratio
# exceeds ~0.65 and the Aitken limit is no longer trustworthy.
GENUS2_PRESSURE_DELTAS = np.array([0.012, 0.025, 0.035, 0.05, 0.1, 0.2])
GENUS2_PRESSURE_SUB_M = (5, 6, 7, 8)


def _pressure_at(ctx: Context, r: float, sub_M: int | None = None) -> float:
    bt = ctx.ball("g2-M8")
    chain = ctx.chain("g2-k3")
    if sub_M is None or sub_M >= bt.M:
        solve = ctx.solve("g2-M8", r)
    else:
        solve = green_truncated(bt, r, domain=BallDomain((), sub_M),
                                method="cg", tol=1e-10)
    phi = potential_on_blocks(chain, bt, solve)
    return pressure(chain, phi, 2.0, r=r).value


def _aitken(seq) -> float:
    p0, p1, p2 = seq[-3], seq[-2], seq[-1]
    denom = p2 - 2 * p1 + p0
    if denom == 0:
        return float(p2)
    return float(p2 - (p2 - p1) ** 2 / denom)


def genus2_pressure_at_R(ctx: Context) -> tuple[float, float, dict]:
    """Extrapolated Pr(2 phi_R), the fit's max residual, and the ladder."""
    R = ctx.R_g2()
    ds = GENUS2_PRESSURE_DELTAS
    ladder = {}
    prs = []
    for d in ds:
        r = float(R * (1 - d))
        col = [_pressure_at(ctx, r, sub_M=Mp) for Mp in GENUS2_PRESSURE_SUB_M]
        ladder[float(d)] = col
        prs.append(_aitken(col))
    prs = np.array(prs)
    s = np.sqrt(ds)
    A = np.column_stack([np.ones_like(s), s, s * s, s ** 3])
    coef, *_ = np.linalg.lstsq(A, prs, rcond=None)
    resid = float(np.max(np.abs(A @ coef - prs)))
    return float(coef[0]), resid, ladder


def f2_pressure_at_R() -> float:
    """Pr(2 phi_R) on F_2 at the exact R via radial solves at
    R(1 - delta), delta in {1e-4, 2e-4}, Richardson in sqrt(delta)."""
    p = free_group(2)
    bt = radial_ball(p, srw(p), 600)
    chain = refine(build_automaton(p), 2)
    R = FreeGroupOracle(2).R
    w = math.sqrt(2.0)
    phis = []
    for d in (1e-4, 2e-4):
        solve = green_truncated(bt, R * (1 - d))
        phis.append(potential_on_blocks(chain, bt, solve))
    phi = (w * phis[0] - phis[1]) / (w - 1.0)
    return pressure(chain, phi, 2.0, r=R).value


@_timed
def criterion_5_pressure_zero(ctx: Context) -> CheckResult:
    pr_f2 = f2_pressure_at_R()
    ok_f2 = abs(pr_f2) < 5e-3
    pr_g2, resid, ladder = genus2_pressure_at_R(ctx)
    ok_g2 = abs(pr_g2) < 0.05
    R = ctx.R_g2()
    subcrit = {f: _pressure_at(ctx, f * R) for f in (0.6, 0.8, 0.9)}
    ok_sub = all(v < 0 for v in subcrit.values())
    return CheckResult(
        "5 pressure zero at R", ok_f2 and ok_g2 and ok_sub,
        f"F_2 Pr={pr_f2:.2e}; genus-2 Pr={pr_g2:+.4f} (fit resid "
        f"{resid:.1e}); subcritical Pr={ {k: round(v, 3) for k, v in subcrit.items()} }",
        "F_2 |Pr| < 5e-3; genus-2 |Pr| < 0.05 and Pr < 0 at 0.6/0.8/0.9 R",
        details={"subcritical": subcrit, "sub_ball_ladder": ladder})


# --------------------------------------------------------------------------
# 6. sphere sums vs pressure

GENUS2_XVAL_FACTORS = (0.5, 0.6, 0.7)


def _sphere_rate(ctx: Context, r: float) -> float:
    bt = ctx.ball("g2-M8")
    solve = ctx.solve("g2-M8", r)
    tab = sphere_sums(bt, solve, 2.0, range(2, 9))
    return tab.fitted_rate


@_timed
def criterion_6_sphere_vs_pressure(ctx: Context) -> CheckResult:
    R = ctx.R_g2()
    diffs = {}
    for f in GENUS2_XVAL_FACTORS:
        r = f * R
        diffs[f] = abs(_sphere_rate(ctx, r) - _pressure_at(ctx, r))
    worst = max(diffs.values())
    return CheckResult(
        "6 sphere-sum rate vs pressure", worst <= 0.05,
        "diffs " + ", ".join(f"{f}R: {d:.4f}" for f, d in diffs.items()),
        "within 0.05 at three r values, m <= 8")


# --------------------------------------------------------------------------
# 7. level sets

@_timed
def criterion_7_level_sets(ctx: Context) -> CheckResult:
    # F_2 at the exact R on a deep radial table: two decades of epsilon
    p = free_group(2)
    bt = radial_ball(p, srw(p), 200)
    solve = green_truncated(bt, FreeGroupOracle(2).R)
    u = solve.u
    grid = np.geomspace(float(u[150]), float(u[20]), 25)
    vals = np.array([e * e * level_set_count(bt, solve, float(e))[0]
                     for e in grid])
    # restrict to two decades
    dec = grid >= grid[-1] / 100.0
    sel = vals[(grid <= grid[-1]) & (grid >= grid[-1] * 1e-2)]
    ratio_f2 = float(sel.max() / sel.min())

    # genus-2 at R_hat_work over one decade.  The F_2 check above probes
    # the thresholds at which level sets coincide with metric balls (on
    # the radial table every attained value is such a threshold); the
    # genus-2 check probes the same geometrically meaningful thresholds:
    # eps_m = min G on sphere m, where {G >= eps_m} = B(1, m).  Spheres
    # m = 3, 4, 5 span one decade of eps while staying three layers clear
    # of the truncation boundary; a sub-ball solve guards each count
    # (evaluated mid-gap, where counts are not edge-sensitive).
    btg = ctx.ball("g2-M8")
    R = ctx.R_g2()
    r_work = R * (1 - 1e-3)
    sg = ctx.solve("g2-M8", r_work)
    ug = sg.u
    ms = range(btg.M - 5, btg.M - 2)

    def ball_level_profile(u):
        eps = np.array([float(u[btg.sphere_slice(m)].min()) for m in ms])
        counts = np.array([int((u >= e).sum()) for e in eps])
        return eps, eps * eps * counts

    eps, valsg = ball_level_profile(ug)
    ratio_g2 = float(valsg.max() / valsg.min())
    span = float(eps.max() / eps.min())
    # guard: the same ratio on a shrunk ball must not be drifting upward
    # (the raw profile is still truncation-deflated at this r, but the
    # criterion's ratio is shape-only and must be stable in M)
    s7 = green_truncated(btg, r_work, domain=BallDomain((), btg.M - 1),
                         method="cg")
    _, vals7 = ball_level_profile(s7.u)
    ratio_m7 = float(vals7.max() / vals7.min())
    ok = (ratio_f2 < 3.0 and ratio_g2 < 5.0 and ratio_m7 < 5.0
          and span >= 10.0 and ratio_g2 <= ratio_m7 * 1.05)
    return CheckResult(
        "7 level-set boundedness", ok,
        f"F_2 ratio {ratio_f2:.3f} (two decades); genus-2 ratio "
        f"{ratio_g2:.3f} over eps span x{span:.1f} "
        f"(M-1 sub-ball ratio {ratio_m7:.3f})",
        "F_2 < x3 over two decades; genus-2 < x5 over one decade of "
        "ball-level thresholds, ratio non-increasing in ball radius")


# --------------------------------------------------------------------------
# 8. invariant suite

def _sample_ball_words(bt, max_len: int, count: int, rng) -> list:
    hi = int(bt.offsets[max_len + 1])
    idx = rng.integers(0, hi, size=count)
    return [bt.word(int(i)) for i in idx]


@_timed
def criterion_8_invariants(ctx: Context) -> CheckResult:
    msgs = []
    ok = True

    bt = ctx.ball("g2-M8")
    p = bt.presentation
    a = bt.automaton
    R = ctx.R_g2()
    r = 0.9 * R
    solve = ctx.solve("g2-M8", r)
    u = solve.u
    rng = np.random.Generator(np.random.Philox(key=ctx.seed))

    # supermultiplicativity F(x,z) >= F(x,y) F(y,z) on 1e4 triples,
    # with F(x,y) = G(1, x^-1 y)/G(1,1) by invariance
    inv, nf = p.inverse_word, a.normal_form
    words = _sample_ball_words(bt, 4, 3 * 10_000, rng)
    viol = 0.0
    for i in range(10_000):
        x, y, z = words[3 * i], words[3 * i + 1], words[3 * i + 2]
        fxy = u[bt.index_of(nf(inv(x) + y))]
        fyz = u[bt.index_of(nf(inv(y) + z))]
        fxz = u[bt.index_of(nf(inv(x) + z))]
        viol = max(viol, (fxy * fyz / u[0] - fxz) / u[0])
    # the exact inequality holds for the untruncated kernel; the truncated
    # solve breaks translation invariance at the 1e-5 level (solver
    # residual + boundary deficit), so the bar is a numerical noise floor,
    # not zero -- a genuine violation would be order one
    if viol > 1e-4:
        ok = False
        msgs.append(f"supermultiplicativity violated by {viol:.2e}")

    # Green symmetry G(x,y) = G(y,x)
    wx, wy = words[0], words[1]
    gx = green_truncated(bt, r, source=wx)
    gy = green_truncated(bt, r, source=wy)
    # relative to G(x,y) itself, which is ~1e-3 of G(1,1) here, so the
    # CG solves' absolute error budget shows up at the ~1e-6 level
    sym = abs(gx.value(wy) - gy.value(wx)) / gx.value(wy)
    if sym > 1e-4:
        ok = False
        msgs.append(f"Green symmetry off by {sym:.2e}")

    # d_G axioms: nonnegative, zero iff equal, symmetric; the triangle
    # inequality is the supermultiplicativity above in log form
    dvals = -np.log(u[1: bt.offsets[5]] / u[0])
    if not (dvals > 0).all():
        ok = False
        msgs.append("d_G positivity failed")

    # GPrime identity
    gp_g2 = check_gprime(bt, r)
    if gp_g2.rel_error >= 1e-2:
        ok = False
        msgs.append(f"genus-2 GPrime rel error {gp_g2.rel_error:.2e}")
    gp_f2 = _f2_gprime_vs_closed_form(0.9)
    if gp_f2 >= 1e-3:
        ok = False
        msgs.append(f"F_2 GPrime vs closed form {gp_f2:.2e}")

    # bijection m <= 6 against BFS with Dehn reduction
    sizes_a = a.sphere_sizes(6)
    sizes_b = [len(s) for s in bfs_spheres(p, 6)]
    if list(sizes_a) != sizes_b:
        ok = False
        msgs.append(f"bijection: automaton {list(sizes_a)} vs BFS {sizes_b}")

    # sum of sphere sizes = ball size
    if int(a.sphere_sizes(bt.M).sum()) != bt.n:
        ok = False
        msgs.append("sum |S_j| != |B|")

    # R^{2n} p^{2n}(1,1) non-increasing (exact p^n for n <= M)
    pn = pn_sequence(bt, 2 * bt.M)
    seq = np.array([R ** (2 * n) * pn[2 * n] for n in range(1, bt.M + 1)])
    if not (np.diff(seq) <= 1e-15).all():
        ok = False
        msgs.append(f"R^2n p^2n not non-increasing: {seq}")

    # RD shape on the oracle sequence
    orc = FreeGroupOracle(2)
    rd = rd_bounds_check(orc.pn_sequence(2000), orc.R,
                         np.arange(10, 2001, 2))
    if not (rd.bounded_above and rd.bounded_below):
        ok = False
        msgs.append("RD shape check failed")

    return CheckResult(
        "8 invariant suite", ok,
        "; ".join(msgs) if msgs else
        f"all invariants hold (supermult slack >= {-viol:.1e}, "
        f"GPrime {gp_g2.rel_error:.1e}/{gp_f2:.1e})",
        "all sub-checks pass")


def _f2_gprime_vs_closed_form(r: float) -> float:
    """Identity rhs from a deep radial table vs the analytic dG/dr."""
    orc = FreeGroupOracle(2)
    p = free_group(2)
    bt = radial_ball(p, srw(p), 400)
    solve = green_truncated(bt, r)
    w = np.array([bt.sphere_weight(m)[0] if m else 1.0
                  for m in range(bt.M + 1)])
    rhs = (float(w @ (solve.u ** 2)) - solve.u[0]) / r
    k = 2.0
    F = orc.first_passage(r)
    dF = ((2 * k - 1) * F * F + 1) / (2 * k - 2 * (2 * k - 1) * r * F)
    dG = (F + r * dF) / (1 - r * F) ** 2
    return abs(rhs - dG) / abs(dG)


# --------------------------------------------------------------------------
# 9. Ancona boundedness

@_timed
def criterion_9_ancona(ctx: Context) -> CheckResult:
    bt = ctx.ball("g2-M8")
    p = bt.presentation
    R = ctx.R_g2()
    pairs = [((p.inv(0),) * 4, (0,) * 4),
             ((p.inv(1),) * 4, (1,) * 4),
             ((p.inv(0), p.inv(1)) * 2, (0, 1) * 2)]
    maxima = {}
    for r in (0.5 * R, 0.98 * R):
        maxima[r] = max(ancona_ratio(bt, r, x, y).max_ratio
                        for x, y in pairs)
    lo, hi = sorted(maxima)
    factor = maxima[hi] / maxima[lo]
    return CheckResult(
        "9 Ancona boundedness in r", factor < 2.0,
        f"max ratio {maxima[lo]:.3f} at 0.5R vs {maxima[hi]:.3f} at 0.98R "
        f"(factor {factor:.3f})",
        "factor < 2 between 0.5R and 0.98R")


# --------------------------------------------------------------------------
# 10. branching random walk estimator

@_timed
def criterion_10_brw(ctx: Context) -> CheckResult:
    zs = {}
    ok = True
    for key, R in (("f2-M8", FreeGroupOracle(2).R), ("g2-M8", ctx.R_g2())):
        bt = ctx.ball(key)
        r = 0.8 * R
        est = green_via_brw(bt, r, trials=10_000, seed=ctx.seed)
        direct = ctx.solve(key, r).value(0)
        z = (est.mean - direct) / est.std_error
        zs[key] = z
        ok = ok and abs(z) <= 3.0 and est.reliable
    return CheckResult(
        "10 BRW estimator", ok,
        ", ".join(f"{k}: z={v:+.2f}" for k, v in zs.items()),
        "|z| <= 3 standard errors on both groups")


# --------------------------------------------------------------------------
# 11. Hoelder / Martin convergence

@_timed
def criterion_11_holder(ctx: Context) -> CheckResult:
    # F_2: the kernel stabilizes exactly (tree geometry)
    p = free_group(2)
    bt = ctx.ball("f2-M8")
    fit_f2 = holder_rate_fit(bt, 0.9 * FreeGroupOracle(2).R, (p.inv(0),),
                             RaySpec(p), range(1, bt.M))
    ok_f2 = fit_f2.rho_hat < 1.0 and (fit_f2.stabilized
                                      or not fit_f2.low_confidence)

    btg = ctx.ball("g2-M8")
    pg = btg.presentation
    fit_g2 = holder_rate_fit(btg, 0.9 * ctx.R_g2(), (pg.inv(0),),
                             RaySpec(pg), range(1, 7))
    decreasing = bool(np.all(np.diff(fit_g2.diffs[:-1]) <= 1e-15)) \
        if len(fit_g2.diffs) > 2 else True
    ok_g2 = fit_g2.rho_hat < 1.0
    return CheckResult(
        "11 Hoelder/Martin convergence", ok_f2 and ok_g2,
        f"F_2 rho={fit_f2.rho_hat:.3f} (stabilized={fit_f2.stabilized}); "
        f"genus-2 rho={fit_g2.rho_hat:.3f} "
        f"(diffs decreasing={decreasing})",
        "rho_hat < 1 on both; F_2 exact")


# --------------------------------------------------------------------------
# 12. spectrum interval for the lazy walk

@_timed
def criterion_12_spectrum(ctx: Context) -> CheckResult:
    bt = ctx.ball("g2-M6-lazy")
    rep = spectrum_check(bt)
    ok = rep.applicable and rep.lambda_min > -rep.lambda_max and rep.gap > 0
    return CheckResult(
        "12 lazy-walk spectrum interval", ok,
        f"lambda in [{rep.lambda_min:.5f}, {rep.lambda_max:.5f}], "
        f"gap {rep.gap:.4f}",
        "lambda_min > -lambda_max, positive gap, M = 6")


# --------------------------------------------------------------------------

ALL_CRITERIA = [
    criterion_1_oracle_agreement,
    criterion_2_spectral_bracket,
    criterion_3_llt_exponent,
    criterion_4_critical_exponent,
    criterion_5_pressure_zero,
    criterion_6_sphere_vs_pressure,
    criterion_7_level_sets,
    criterion_8_invariants,
    criterion_9_ancona,
    criterion_10_brw,
    criterion_11_holder,
    criterion_12_spectrum,
]

# free-group-only criteria: no genus-2 ball build, runs in seconds
SMOKE_CRITERIA = [
    criterion_1_oracle_agreement,
    criterion_2_spectral_bracket,
    criterion_3_llt_exponent,
]


def run_suite(profile: str = "desk", seed: int = 20260826,
              cache: str | None = None) -> list[CheckResult]:
    ctx = Context(seed=seed, cache=cache)
    criteria = SMOKE_CRITERIA if profile == "smoke" else ALL_CRITERIA
    return [fn(ctx) for fn in criteria]
