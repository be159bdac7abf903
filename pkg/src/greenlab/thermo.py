"""Ruelle transfer operators on the geodesic shift, pressure, Gibbs data,
sphere measures and sums, eta, level-set counts, and ergodic diagnostics.

The shift of admissible normal-form words is presented by its depth-k
block chain.  A block is (end automaton state, last k letters); since the
automaton state is a bounded suffix memory, this quotient of the path
chain is small while still carrying the depth-k cylinder potential, whose
value depends on the letters alone.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .automaton import Automaton
from .boundary import CylinderPotential
from .green import GreenSolve, green_truncated
from .walks import BallTable


class BudgetError(MemoryError):
    pass


class PressureError(ArithmeticError):
    pass


# -- the cylinder chain ---------------------------------------------------------


@dataclass
class CylinderChain:
    """Depth-k block presentation of the shift of normal-form words."""

    automaton: Automaton
    depth: int
    ends: np.ndarray        # int64 [n] automaton state after the block
    keys: np.ndarray        # int64 [n] base-L encoding of the k letters
    cids: np.ndarray        # sorted combined ids keys * S + ends
    indptr: np.ndarray      # CSR structure of block -> successor blocks
    indices: np.ndarray
    init_counts: np.ndarray  # multiplicity of each block among length-k
    #                          normal-form prefixes (for path counting)

    @property
    def n(self) -> int:
        return len(self.ends)

    def block_word(self, i: int) -> tuple[int, ...]:
        L = self.automaton.presentation.n_letters
        key = int(self.keys[i])
        return tuple((key // L ** j) % L for j in range(self.depth - 1, -1, -1))

    def block_index(self, cid) -> np.ndarray:
        """Indices for combined ids key*S + end (-1 when absent)."""
        pos = np.searchsorted(self.cids, cid)
        pos = np.minimum(pos, self.n - 1)
        ok = self.cids[pos] == cid
        return np.where(ok, pos, -1)

    def path_counts(self, m: int) -> int:
        """Number of normal-form words of length m >= depth."""
        v = self.init_counts.astype(float)
        for _ in range(m - self.depth):
            w = np.zeros_like(v)
            np.add.at(w, self.indices, np.repeat(v, np.diff(self.indptr)))
            v = w
        return int(round(v.sum()))


def refine(a: Automaton, k: int, budget: int = 5_000_000) -> CylinderChain:
    """Depth-k block chain of the automaton shift."""
    if k < 1:
        raise ValueError("depth must be >= 1")
    S, L = a.trans.shape
    ends = np.arange(S, dtype=np.int64)
    keys = np.zeros(S, dtype=np.int64)
    for _ in range(k):
        T = a.trans[ends]
        src, y = np.nonzero(T >= 0)
        cid = (keys[src] * L + y) * S + T[src, y].astype(np.int64)
        cid = np.unique(cid)
        if len(cid) > budget:
            raise BudgetError(f"{len(cid)} blocks exceed budget {budget}")
        keys, ends = cid // S, cid % S
    cids = keys * S + ends

    # successors: drop the first letter, append an allowed one
    T = a.trans[ends]
    src, ys = np.nonzero(T >= 0)
    succ_cid = ((keys[src] % L ** (k - 1)) * L + ys) * S + \
        T[src, ys].astype(np.int64)
    pos = np.searchsorted(cids, succ_cid)
    if not np.all(cids[np.minimum(pos, len(cids) - 1)] == succ_cid):
        raise AssertionError("chain closure violated")
    counts = np.bincount(src, minlength=len(cids))
    indptr = np.concatenate(([0], np.cumsum(counts)))

    # initial multiplicities: length-k prefixes from the start state
    st = np.zeros(1, dtype=np.int64)    # state 0 is the start state
    kk = np.zeros(1, dtype=np.int64)
    for _ in range(k):
        T0 = a.trans[st]
        s0, y0 = np.nonzero(T0 >= 0)
        kk = kk[s0] * L + y0
        st = T0[s0, y0].astype(np.int64)
    init = np.bincount(np.searchsorted(cids, kk * S + st),
                       minlength=len(cids))
    return CylinderChain(a, k, ends, keys, cids, indptr, pos, init)


def potential_on_blocks(chain: CylinderChain, bt: BallTable,
                        solve: GreenSolve) -> np.ndarray:
    """phi_{r,k} per block: log G(1, w) - log G(1, w[1:]) for the block's
    letter word w (every block word is itself a normal form)."""
    idx = np.empty((2, chain.n), dtype=np.int64)
    for i in range(chain.n):
        w = chain.block_word(i)
        idx[0, i] = bt.index_of(w)
        idx[1, i] = bt.index_of(w[1:])
    if (idx < 0).any():
        raise ValueError("ball does not cover the chain blocks")
    return np.log(solve.u[idx[0]]) - np.log(solve.u[idx[1]])


# -- transfer operator and pressure ----------------------------------------------


@dataclass
class TransferOperator:
    chain: CylinderChain
    phi: np.ndarray
    theta: float
    r: float

    def weights(self) -> np.ndarray:
        w = np.exp(self.theta * self.phi)
        if not np.all(np.isfinite(w) & (w > 0)):
            raise PressureError("non-positive or non-finite weights")
        return w

    def structure(self) -> sp.csr_matrix:
        ch = self.chain
        return sp.csr_matrix(
            (np.ones(len(ch.indices)), ch.indices, ch.indptr),
            shape=(ch.n, ch.n))


@dataclass
class PressureResult:
    value: float
    leading: float
    h: np.ndarray            # right eigen-data (positive on recurrent part)
    nu: np.ndarray           # left eigen-data, normalized to sum 1
    gap_estimate: float
    iterations: int
    theta: float
    r: float
    depth: int
    depth_delta: float | None = None


def _power_leading(matvec, n, tol, max_iter):
    v = np.ones(n) / n
    lam_prev, ratio = 0.0, 0.0
    for it in range(1, max_iter + 1):
        w = matvec(v)
        lam = float(w.max())  # sup-norm Rayleigh proxy; positive operator
        w /= lam
        delta = float(np.max(np.abs(w - v)))
        if it > 2 and abs(lam - lam_prev) <= tol * lam and delta <= 1e3 * tol:
            return w, lam, it, ratio
        ratio = delta / max(prev_delta, 1e-300) if it > 1 else 0.0
        prev_delta = delta
        lam_prev = lam
        v = w
    raise PressureError(f"power iteration did not converge in {max_iter}")


def pressure(chain: CylinderChain, phi: np.ndarray, theta: float,
             r: float = float("nan"), tol: float = 1e-10,
             max_iter: int = 200_000) -> PressureResult:
    """Pr(theta phi) = log leading eigenvalue of the weighted chain."""
    op = TransferOperator(chain, phi, theta, r)
    weights = op.weights()
    A = op.structure()
    At = A.T.tocsr()

    h, lam, it1, ratio = _power_leading(
        lambda v: weights * (A @ v), chain.n, tol, max_iter)
    nu, lam2, it2, _ = _power_leading(
        lambda v: At @ (weights * v), chain.n, tol, max_iter)
    if abs(lam - lam2) > 1e-8 * max(lam, lam2):
        raise PressureError(
            f"left/right eigenvalues disagree: {lam} vs {lam2}")
    nu = nu / nu.sum()
    scale = float(nu @ h)
    if scale <= 0:
        raise PressureError("degenerate eigen-data")
    h = h / scale
    return PressureResult(math.log(lam), lam, h, nu,
                          gap_estimate=max(1.0 - ratio, 0.0),
                          iterations=it1 + it2, theta=theta, r=r,
                          depth=chain.depth)


def gibbs_expectation(res: PressureResult, g: np.ndarray) -> float:
    """integral of g against the Gibbs measure mu = h * nu (normalized)."""
    mu = res.nu * res.h
    return float((mu * g).sum() / mu.sum())


def pressure_zero_check(chain: CylinderChain, bt: BallTable,
                        solve: GreenSolve, theta: float = 2.0,
                        **kw) -> PressureResult:
    """Pr(theta phi_r) for the potential built from `solve` (use a solve
    at the working critical radius for the Pr(2 phi_R) = 0 check)."""
    phi = potential_on_blocks(chain, bt, solve)
    return pressure(chain, phi, theta, r=solve.r, **kw)


def theta_root(chain: CylinderChain, phi: np.ndarray, r: float,
               lo: float = 0.5, hi: float = 3.0,
               tol: float = 1e-6) -> float:
    """Bisect Pr(theta phi_r) = 0 over theta in [lo, hi]."""
    p_lo = pressure(chain, phi, lo, r).value
    p_hi = pressure(chain, phi, hi, r).value
    if p_lo * p_hi > 0:
        raise PressureError(
            f"no sign change: Pr({lo})={p_lo:.4g}, Pr({hi})={p_hi:.4g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        p_mid = pressure(chain, phi, mid, r).value
        if p_lo * p_mid <= 0:
            hi = mid
        else:
            lo, p_lo = mid, p_mid
    return 0.5 * (lo + hi)


# -- sphere sums, eta, level sets -------------------------------------------------


@dataclass
class SphereSumTable:
    m_values: np.ndarray
    sums: np.ndarray
    fitted_rate: float
    theta: float
    r: float


def sphere_sums(bt: BallTable, solve: GreenSolve, theta: float,
                m_range) -> SphereSumTable:
    """Sigma_{x in S_m} G_r(1, x)^theta and its fitted exponential rate."""
    from scipy.stats import linregress
    ms = np.array(sorted(m_range))
    sums = np.array([
        float((bt.sphere_weight(int(m)) *
               solve.u[bt.sphere_slice(int(m))] ** theta).sum())
        for m in ms])
    rate = float(linregress(ms, np.log(sums)).slope) if len(ms) > 1 else 0.0
    return SphereSumTable(ms, sums, rate, theta, solve.r)


@dataclass
class EtaResult:
    value: float
    ball_part: float
    tail_part: float
    tail_fraction: float
    reliable: bool


def eta(bt: BallTable, solve: GreenSolve,
        rate: float | None = None) -> EtaResult:
    """eta(r) = sum_x G_r(1, x)^2, ball sum plus geometric tail."""
    table = sphere_sums(bt, solve, 2.0, range(bt.M + 1))
    ball = float(table.sums.sum())
    if rate is None:
        tail_fit = sphere_sums(bt, solve, 2.0,
                               range(max(bt.M - 4, 1), bt.M + 1))
        rate = tail_fit.fitted_rate
    q = math.exp(rate)
    last = float(table.sums[-1])
    tail = last * q / (1.0 - q) if q < 1 else math.inf
    frac = tail / (ball + tail)
    return EtaResult(ball + tail, ball, tail, frac, reliable=frac <= 0.5)


@dataclass
class SphereMeasure:
    r: float
    m: int
    indices: np.ndarray
    weights: np.ndarray      # proportional to G_r(1, x)^2, sums to 1

    def sample(self, count: int, rng) -> np.ndarray:
        return rng.choice(self.indices, size=count, p=self.weights)


def sphere_measure(bt: BallTable, solve: GreenSolve, m: int) -> SphereMeasure:
    sl = bt.sphere_slice(m)
    w = solve.u[sl] ** 2
    return SphereMeasure(solve.r, m, np.arange(sl.start, sl.stop),
                         w / w.sum())


class ResolutionError(ValueError):
    pass


def level_set_count(bt: BallTable, solve: GreenSolve, eps: float):
    """#{x in B : G(1, x) >= eps}; flags thresholds the truncation ball
    cannot resolve (level set touching the boundary sphere)."""
    u = solve.u[: bt.offsets[bt.M + 1]]
    if eps < u.min():
        raise ResolutionError(
            f"eps={eps:g} below the resolvable minimum {u.min():g}")
    count = 0.0
    for m in range(bt.M + 1):
        sl = bt.sphere_slice(m)
        count += float(bt.sphere_weight(m)[solve.u[sl] >= eps].sum())
    boundary_hit = bool((solve.u[bt.sphere_slice(bt.M)] >= eps).any())
    return int(round(count)), boundary_hit


def level_set_profile(bt: BallTable, solve: GreenSolve,
                      eps_grid) -> np.ndarray:
    """eps^2 * count over a grid (Theorem-style boundedness profile)."""
    out = []
    for eps in eps_grid:
        c, _ = level_set_count(bt, solve, float(eps))
        out.append(eps * eps * c)
    return np.array(out)


# -- ergodic diagnostics -----------------------------------------------------------


def birkhoff_sums_on_ball(bt: BallTable, chain: CylinderChain,
                          g: np.ndarray) -> np.ndarray:
    """S(x) = sum of g over the depth-k blocks along the normal-form path
    of each ball element (0 for |x| < k)."""
    if bt.ball_states is None:
        raise ValueError("ball table lacks automaton states")
    k = chain.depth
    S_aut = chain.automaton.trans.shape[0]
    L = bt.presentation.n_letters
    sums = np.zeros(bt.n)
    keys = np.zeros(bt.n, dtype=np.int64)
    for m in range(1, bt.M + 1):
        sl = bt.sphere_slice(m)
        idx = np.arange(sl.start, sl.stop)
        par = bt.parent[idx]
        keys[idx] = (keys[par] % L ** (k - 1)) * L + bt.letter[idx] \
            if m > k else keys[par] * L + bt.letter[idx]
        sums[idx] = sums[par]
        if m >= k:
            bi = chain.block_index(keys[idx] * S_aut +
                                   bt.ball_states[idx])
            if (bi < 0).any():
                raise AssertionError("ball path block missing from chain")
            sums[idx] += g[bi]
    return sums


def ergodic_average_check(bt: BallTable, chain: CylinderChain,
                          solve: GreenSolve, g: np.ndarray, m: int,
                          delta: float, res: PressureResult) -> float:
    """lambda_{r,m}-probability that the Birkhoff average of g along the
    sphere element's path deviates from the Gibbs mean by more than delta."""
    mean_g = gibbs_expectation(res, g)
    sums = birkhoff_sums_on_ball(bt, chain, g)
    sm = sphere_measure(bt, solve, m)
    n_terms = m - chain.depth + 1
    if n_terms <= 0:
        raise ValueError("sphere radius below potential depth")
    avg = sums[sm.indices] / n_terms
    return float(sm.weights[np.abs(avg - mean_g) > delta].sum())


def ergodic_deviation_exact(chain: CylinderChain, block: int, m: int,
                            delta: float, mean_g: float) -> float:
    """Exact path-count version for g = indicator of one chain block,
    under the uniform measure on length-m normal-form words (the sphere
    measure when all Green values on S_m coincide, as on free groups)."""
    k = chain.depth
    n_terms = m - k + 1
    # f[b, c] = number of length-i prefixes ending in block b having
    # visited `block` c times
    f = np.zeros((chain.n, n_terms + 1))
    f[:, 0] = chain.init_counts
    if block >= 0:
        f[block, 1] = f[block, 0]
        f[block, 0] = 0
    reps = np.diff(chain.indptr)
    for _ in range(m - k):
        w = np.zeros_like(f)
        np.add.at(w, chain.indices, np.repeat(f, reps, axis=0))
        w[block, 1:] = w[block, :-1]
        w[block, 0] = 0
        f = w
    counts = f.sum(axis=0)
    total = counts.sum()
    avgs = np.arange(n_terms + 1) / n_terms
    bad = np.abs(avgs - mean_g) > delta
    return float(counts[bad].sum() / total)


@dataclass
class XiReport:
    mean: float
    spread: float
    values: np.ndarray
    C_estimate: float


def xi_estimator(bt: BallTable, solve: GreenSolve, m: int,
                 eta_value: float, sample: int = 0,
                 seed: int = 0) -> XiReport:
    """Statistic m^-1 eta^-1 sum_y G(1,y) G(y,x) / G(1,x) under the sphere
    measure; the double solve w = (I - rP)^-1 u gives the inner sum for
    every x at once (G is symmetric)."""
    from .green import _solve_cg, _solve_monotone
    r = solve.r
    method = _solve_cg if bt.n > 100_000 else _solve_monotone
    args = (bt, r, solve.u, solve.mask, 1e-12)
    w = method(*args)[0] if method is _solve_cg else method(*args, 200_000)[0]
    sm = sphere_measure(bt, solve, m)
    stats = w[sm.indices] / (m * eta_value * solve.u[sm.indices])
    mean = float((sm.weights * stats).sum())
    var = float((sm.weights * (stats - mean) ** 2).sum())
    lengths = bt.length_of(sm.indices)
    C = float(np.max(w[sm.indices] /
                     (solve.u[sm.indices] ** 2 * (lengths + 1) * eta_value)))
    return XiReport(mean, math.sqrt(var), stats, C)


def pressure_sweep_csv(rows) -> str:
    """rows: iterables of (r, theta, k, pressure, gap, depth_delta)."""
    buf = io.StringIO()
    buf.write("# pressure-sweep v1\nr,theta,k,pressure,gap,depth_delta\n")
    for r, th, k, pr, gap, dd in rows:
        buf.write(f"{r:.17g},{th:.17g},{k},{pr:.17g},{gap:.17g},"
                  f"{'' if dd is None else format(dd, '.17g')}\n")
    return buf.getvalue()
