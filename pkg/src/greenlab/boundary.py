"""Martin kernel approximants along geodesic rays, the cylinder potential
phi_r built from Green log-ratios, and trajectory-pair summability
diagnostics.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import linregress

from .automaton import build_automaton
from .green import GreenSolve, green_truncated
from .walks import BallTable, StepDistribution, sample_paths
from .words import EPSILON, Presentation, Word


class CoverageError(ValueError):
    def __init__(self, prefix: Word):
        super().__init__(f"Green table does not cover prefix {prefix}")
        self.prefix = prefix


# -- rays ----------------------------------------------------------------------


@dataclass(frozen=True)
class RaySpec:
    """Geodesic ray given by repeating a recurrent cycle of the automaton.

    The default cycle is the first generator; prefix(n) is the length-n
    normal-form prefix, so consecutive prefixes differ by one letter and
    the ray converges to a well-defined boundary point.
    """

    presentation: Presentation
    cycle: Word = (0,)

    def __post_init__(self):
        a = build_automaton(self.presentation)
        w = self.cycle
        for reps in (2, 3):
            if not a.accepts(w * reps):
                raise ValueError("cycle must power up to accepted words")

    def prefix(self, n: int) -> Word:
        reps = -(-n // len(self.cycle))
        return (self.cycle * reps)[:n]


# -- Martin kernel approximants ---------------------------------------------------


def martin_ratio(bt: BallTable, r: float, x, ray: RaySpec, n: int,
                 solve: GreenSolve | None = None) -> float:
    """K_n = G_r(x, y_n)/G_r(1, y_n) with y_n = ray.prefix(n)."""
    y = ray.prefix(n)
    iy = bt.index_of(y)
    if iy < 0:
        raise CoverageError(y)
    if solve is None or solve.source != iy:
        solve = green_truncated(bt, r, source=iy)
    ix = bt.index_of(bt.automaton.normal_form(tuple(x)))
    if ix < 0:
        raise CoverageError(tuple(x))
    return float(solve.u[ix] / solve.u[0])


def martin_sequence(bt: BallTable, r: float, x, ray: RaySpec,
                    n_values) -> np.ndarray:
    return np.array([martin_ratio(bt, r, x, ray, int(n)) for n in n_values])


@dataclass
class HolderFit:
    rho_hat: float
    log_C: float
    residuals: np.ndarray
    diffs: np.ndarray
    n_values: np.ndarray
    low_confidence: bool
    stabilized: bool = False     # differences hit exact zero (tree-like)


def holder_rate_fit(bt: BallTable, r: float, x, ray: RaySpec,
                    n_values) -> HolderFit:
    """Fit |K_n - K_{n_max}| ~ C rho^n; asserts only rho_hat < 1.

    Differences that vanish exactly (the kernel stabilizes at finite n,
    as on trees) short-circuit to rho_hat = 0 with a stabilized flag.
    """
    n_values = np.asarray(sorted(n_values))
    seq = martin_sequence(bt, r, x, ray, n_values)
    diffs = np.abs(seq[:-1] - seq[-1])
    ns = n_values[:-1].astype(float)
    pos = diffs > 0
    if not pos.any():
        return HolderFit(0.0, -math.inf, np.zeros(0), diffs, n_values,
                         low_confidence=False, stabilized=True)
    fit = linregress(ns[pos], np.log(diffs[pos]))
    pred = fit.slope * ns[pos] + fit.intercept
    res = np.log(diffs[pos]) - pred
    monotone = bool(np.all(np.diff(diffs[pos]) <= 1e-15))
    return HolderFit(float(math.exp(fit.slope)), float(fit.intercept),
                     res, diffs, n_values, low_confidence=not monotone)


# -- the cylinder potential -------------------------------------------------------


@dataclass
class CylinderPotential:
    """phi_{r,k} on admissible normal-form prefixes of length <= k:
    phi(w) = log G_r(1, w) - log G_r(1, sigma w), sigma dropping the first
    letter.  Telescoping gives S_n phi = log G_r(1, w) - log G_r(1, 1)
    exactly for n <= k (re-verified at build time)."""

    r: float
    depth: int
    table: dict[Word, float]
    g_root: float                # G_r(1, 1) of the underlying solve

    def value(self, prefix: Word) -> float:
        w = tuple(prefix)[: self.depth]
        if w not in self.table:
            raise CoverageError(w)
        return self.table[w]

    def birkhoff(self, word: Word) -> float:
        """S_n phi along the path of `word` (n = len(word))."""
        w = tuple(word)
        return math.fsum(self.value(w[i:]) for i in range(len(w)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# potential-table v1\nprefix,value,depth,r\n")
        p_fmt = getattr(self, "_fmt", str)
        for w in sorted(self.table):
            buf.write(f"{p_fmt(w)},{self.table[w]:.17g},{self.depth},"
                      f"{self.r:.17g}\n")
        return buf.getvalue()


def build_potential(bt: BallTable, r: float, k: int,
                    solve: GreenSolve | None = None,
                    verify_tol: float = 1e-12) -> CylinderPotential:
    """Tabulate phi_{r,k} from a single root Green solve.

    Needs ball coverage of every depth-<=k normal-form prefix (radius >= k).
    Subwords of normal forms are normal forms here (the forbidden patterns
    are subword conditions), so all shifted words are covered too.
    """
    if bt.M < k:
        raise CoverageError(("depth", k))
    if solve is None:
        solve = green_truncated(bt, r, source=0)
    a = bt.automaton
    logG = {EPSILON: math.log(solve.u[0])}
    table: dict[Word, float] = {}
    for m in range(1, k + 1):
        for w in a.enumerate_sphere(m):
            i = bt.index_of(w)
            if i < 0:
                raise CoverageError(w)
            logG[w] = math.log(solve.u[i])
    for w, lg in logG.items():
        if w:
            table[w] = lg - logG[w[1:]]
    pot = CylinderPotential(r, k, table, float(solve.u[0]))
    pot._fmt = bt.presentation.format
    # cocycle identity: telescoping must reproduce log G exactly
    for w in list(logG):
        if w and abs(pot.birkhoff(w) - (logG[w] - logG[EPSILON])) > verify_tol:
            raise AssertionError(f"cocycle identity failed at {w}")
    return pot


# -- pair summability ---------------------------------------------------------


@dataclass
class PairSumReport:
    partial_sums: np.ndarray     # [pairs, N+1]
    tail_increments: np.ndarray  # [pairs, N]
    decreasing_fraction: float   # pairs with decreasing late increments
    total: np.ndarray


def pair_summability_check(bt: BallTable, r: float, N: int, pairs: int,
                           seed: int = 0, rho: float | None = None,
                           solve: GreenSolve | None = None) -> PairSumReport:
    """Partial sums sum_{m,n<=N} G_r(X_m, Y_n) over independent trajectory
    pairs; asserts (reports) decreasing tail increments.

    Green values come from the root table via invariance
    G(x, y) = G(1, x^{-1} y); when x^{-1} y leaves the ball we use the
    exponential-decay shortcut G <= C rho^d with (C, rho) from decay_fit.
    """
    from .green import decay_fit
    if solve is None:
        solve = green_truncated(bt, r, source=0)
    if rho is None:
        df = decay_fit(bt, r, max(bt.M - 4, 1), bt.M - 1, solve=solve)
        rho = df.rho
    C = float(solve.u[0])
    a = bt.automaton
    sd = bt.sd
    xs = sample_paths(sd, N, pairs, seed)
    ys = sample_paths(sd, N, pairs, seed + 1)
    sums = np.zeros((pairs, N + 1))
    for i in range(pairs):
        xw = xs.trajectory_words(i, a)
        yw = ys.trajectory_words(i, a)
        inv = bt.presentation.inverse_word
        nf = a.normal_form
        prev = 0.0
        for n in range(N + 1):
            inc = 0.0
            for m in range(n + 1):
                for (u, v) in ([(xw[m], yw[n])] +
                               ([(xw[n], yw[m])] if m < n else [])):
                    w = nf(inv(u) + v)
                    j = bt.index_of(w)
                    inc += float(solve.u[j]) if j >= 0 else C * rho ** len(w)
            sums[i, n] = prev + inc
            prev = sums[i, n]
    tails = np.diff(sums, axis=1)
    late = tails[:, max(N // 2, 1):]
    dec = np.mean([bool(np.all(np.diff(t) <= 1e-12)) or t[-1] <= t[0]
                   for t in late])
    return PairSumReport(sums, tails, float(dec), sums[:, -1])
