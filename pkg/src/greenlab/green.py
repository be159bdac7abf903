"""Truncated and domain-restricted Green's functions, first passage,
the Green metric, and diagnostic checks (derivative identity, Ancona-type
ratios, Harnack ratios, decay fits, branching estimator).

All solves act on a BallTable.  The operator I - r P is symmetric positive
definite below the radius of convergence of the truncated walk, so large
systems use conjugate gradients; small systems (and every certificate)
use the monotone iteration u <- delta + r P u from zero, whose iterates
are pointwise increasing lower bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg
from scipy.stats import linregress

from .walks import BallTable, build_ball, _trajectory_rng
from .words import Word


class DivergenceError(ArithmeticError):
    """The fixed-point iteration is not contracting (r beyond the domain
    radius of convergence)."""


# -- domains -----------------------------------------------------------------


def bfs_distances_from(bt: BallTable, i0: int) -> np.ndarray:
    """Graph distances from element i0 within the ball (-1 = unreached)."""
    dist = np.full(bt.n, -1, dtype=np.int32)
    dist[i0] = 0
    frontier = np.array([i0], dtype=np.int64)
    d = 0
    while frontier.size:
        nxt = bt.nbr[frontier].ravel()
        nxt = np.unique(nxt[nxt >= 0])
        nxt = nxt[dist[nxt] < 0]
        d += 1
        dist[nxt] = d
        frontier = nxt
    return dist


@dataclass(frozen=True)
class FullBall:
    """The whole table B(1, M); absorption happens only at the boundary."""

    def mask(self, bt: BallTable) -> None:
        return None

    def label(self) -> str:
        return "full"


@dataclass(frozen=True)
class BallDomain:
    center: Word
    radius: int

    def mask(self, bt: BallTable) -> np.ndarray:
        c = bt.index_of(self.center)
        if c < 0:
            raise ValueError("domain center outside the ball table")
        return bfs_distances_from(bt, c) <= self.radius

    def label(self) -> str:
        return f"ball({bt_fmt(self.center)},{self.radius})"


@dataclass(frozen=True)
class ComplementBall:
    center: Word
    radius: int

    def mask(self, bt: BallTable) -> np.ndarray:
        c = bt.index_of(self.center)
        if c < 0:
            raise ValueError("domain center outside the ball table")
        d = bfs_distances_from(bt, c)
        return (d > self.radius) | (d < 0)

    def label(self) -> str:
        return f"complement({bt_fmt(self.center)},{self.radius})"


@dataclass(frozen=True)
class ExplicitSet:
    indices: tuple[int, ...]

    def mask(self, bt: BallTable) -> np.ndarray:
        m = np.zeros(bt.n, dtype=bool)
        m[list(self.indices)] = True
        return m

    def label(self) -> str:
        return f"set(n={len(self.indices)})"


def bt_fmt(w: Word) -> str:
    return "".join(str(x) for x in w) or "e"


# -- solves -------------------------------------------------------------------


@dataclass
class GreenSolve:
    """Vector u with u(x) = G_r(x, source; domain) for x in the table."""

    bt: BallTable
    r: float
    source: int
    u: np.ndarray
    mask: np.ndarray | None
    residual: float
    n_matvec: int
    method: str
    truncation_gap: float | None = None

    def value(self, x) -> float:
        i = x if isinstance(x, (int, np.integer)) else self.bt.index_of(x)
        if i < 0:
            raise ValueError("element outside the ball table")
        return float(self.u[i])

    def at_source(self) -> float:
        return float(self.u[self.source])


def _as_source_index(bt: BallTable, source) -> int:
    if isinstance(source, (int, np.integer)):
        return int(source)
    if isinstance(source, str):
        source = bt.presentation.parse(source)
    i = bt.index_of(bt.automaton.normal_form(tuple(source)))
    if i < 0:
        raise ValueError("source outside the ball table")
    return i


def green_truncated(bt: BallTable, r: float, source=0, domain=None,
                    tol: float = 1e-12, max_iter: int = 200_000,
                    method: str = "auto", u0: np.ndarray | None = None,
                    want_gap: bool = False) -> GreenSolve:
    """Solve u = delta_source + r P_domain u.

    method: "monotone" (certified increasing iterates from zero), "cg"
    (conjugate gradients on I - rP, then a residual certificate), or
    "auto" (cg above 100k unknowns or r within 2% of critical).
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    src = _as_source_index(bt, source)
    mask = domain.mask(bt) if domain is not None else None
    if mask is not None and not mask[src]:
        raise ValueError("source outside the domain")
    b = np.zeros(bt.n)
    b[src] = 1.0

    from .walks import RadialBallTable
    radial = isinstance(bt, RadialBallTable)
    if method == "auto":
        method = ("banded" if radial else
                  "cg" if bt.n > 100_000 else "monotone")

    if method == "banded":
        u, res, nmv = _solve_radial_banded(bt, r, b, mask, tol)
    elif method == "cg":
        u, res, nmv = _solve_cg(bt, r, b, mask, tol, u0)
    else:
        u, res, nmv = _solve_monotone(bt, r, b, mask, tol, max_iter, u0)

    solve = GreenSolve(bt, r, src, u, mask, res, nmv, method)
    if want_gap:
        inner = np.zeros(bt.n, dtype=bool)
        inner[: bt.offsets[max(bt.M - 2, 0) + 1]] = True
        if mask is not None:
            inner &= mask
        if method == "cg":
            u2, _, _ = _solve_cg(bt, r, b, inner, tol)
        else:
            u2, _, _ = _solve_monotone(bt, r, b, inner, tol, max_iter)
        core = np.zeros(bt.n, dtype=bool)
        core[: bt.offsets[max(bt.M - 4, 0) + 1]] = True
        rel = np.abs(u - u2)[core] / max(u[src], 1e-300)
        solve.truncation_gap = float(rel.max())
    return solve


def _solve_monotone(bt, r, b, mask, tol, max_iter, u0=None):
    u = np.zeros(bt.n) if u0 is None else np.array(u0, dtype=float)
    if mask is not None:
        b = np.where(mask, b, 0.0)
        u = np.where(mask, u, 0.0)
    window_inc = np.inf
    for it in range(1, max_iter + 1):
        v = b + r * bt.apply(u, mask)
        inc = float(np.max(np.abs(v - u)))
        sup = float(v.max())
        if inc <= tol * max(sup, 1.0):
            return v, inc / max(sup, 1.0), it
        if it % 100 == 0:
            # genuine divergence grows geometrically across windows
            if sup > 1e12 or (inc > window_inc and inc > 1e3):
                raise DivergenceError(
                    f"fixed point diverging at r={r} (sup={sup:.3e})")
            window_inc = inc
        u = v
    raise DivergenceError(
        f"no convergence in {max_iter} iterations at r={r}")


def _solve_radial_banded(bt, r, b, mask, tol):
    """Direct tridiagonal solve of (I - rA) u = b on a radial table."""
    from scipy.linalg import solve_banded
    k2 = bt.presentation.n_letters
    n = bt.n
    ab = np.zeros((3, n))
    ab[1] = 1.0                                    # diagonal of I - rA
    ab[0, 1] = -r                                  # A[0, 1] = 1
    if n > 2:
        ab[0, 2:] = -r * (k2 - 1) / k2             # A[d, d+1]
    ab[2, :-1] = -r / k2                           # A[d, d-1]
    if mask is not None:
        b = np.where(mask, b, 0.0)
        dead = np.flatnonzero(~mask)
        ab[1, dead] = 1.0
        ab[0, dead[dead >= 1]] = 0.0               # column entries above
        ab[2, dead[dead <= n - 2]] = 0.0           # and below
        # rows of dead states: zero their off-diagonals
        up = dead + 1
        ab[0, up[up <= n - 1]] = 0.0
        dn = dead - 1
        ab[2, dn[dn >= 0]] = 0.0
    u = solve_banded((1, 1), ab, b)
    # entries decaying below the smallest normal float come out non-finite
    u = np.where(np.isfinite(u), u, 0.0)
    if (u < -1e-9).any():
        raise DivergenceError(f"negative Green values at r={r}")
    u = np.maximum(u, 0.0)
    v = b + r * bt.apply(u, mask)
    res = float(np.max(np.abs(v - u))) / max(float(v.max()), 1.0)
    if res > 100 * tol:
        raise DivergenceError(
            f"banded residual certificate failed ({res:.2e}) at r={r}")
    return v, res, 1


def _solve_cg(bt, r, b, mask, tol, u0=None):
    if mask is not None:
        b = np.where(mask, b, 0.0)
    counter = {"n": 0}

    def mv(u):
        counter["n"] += 1
        u = np.asarray(u, dtype=float).ravel()
        return u - r * bt.apply(u, mask)

    op = LinearOperator((bt.n, bt.n), matvec=mv, dtype=float)
    u, info = cg(op, b, x0=u0, rtol=tol * 1e-1, atol=0.0, maxiter=5000)
    if info != 0:
        raise DivergenceError(f"cg failed (info={info}) at r={r}")
    # a-posteriori certificate: positivity and fixed-point residual
    u = np.maximum(u, 0.0)
    if mask is not None:
        u = np.where(mask, u, 0.0)
    v = b + r * bt.apply(u, mask)
    res = float(np.max(np.abs(v - u))) / max(float(v.max()), 1.0)
    if res > 100 * tol:
        raise DivergenceError(
            f"cg residual certificate failed ({res:.2e}) at r={r}")
    return v, res, counter["n"]


# -- evaluation near the critical point ---------------------------------------

DELTA_WORK = 1e-3


def working_r(R_hat: float, delta: float = DELTA_WORK) -> float:
    return R_hat * (1.0 - delta)


def richardson_sqrt(f_delta: float, f_2delta: float) -> float:
    """Extrapolate f(R(1-delta)) to delta=0 assuming a sqrt(delta) defect."""
    s = math.sqrt(2.0)
    return (s * f_delta - f_2delta) / (s - 1.0)


# -- derived quantities --------------------------------------------------------


def first_passage(bt: BallTable, r: float, x, y, domain=None,
                  g_y: GreenSolve | None = None,
                  g_ref: float | None = None) -> float:
    """F_r(x, y; domain) = G_r(x, y)/G_r(1, 1), with F(x, x) = 1 by
    convention (first visit at time zero)."""
    ix = _as_source_index(bt, x)
    iy = _as_source_index(bt, y)
    if ix == iy:
        return 1.0
    if g_y is None:
        g_y = green_truncated(bt, r, source=iy, domain=domain)
    if g_ref is None:
        g_root = (g_y if iy == 0 and g_y.mask is None else
                  green_truncated(bt, r, source=0))
        g_ref = g_root.at_source()
    return float(g_y.u[ix] / g_ref)


def green_metric(bt: BallTable, r: float, x, y, domain=None, **kw) -> float:
    """d_G(x, y) = -log F_r(x, y) (nonnegative since F <= 1)."""
    F = first_passage(bt, r, x, y, domain, **kw)
    return -math.log(F)


@dataclass
class GPrimeReport:
    r: float
    lhs: float      # numerical dG/dr
    rhs: float      # r^-1 (sum_z G(x,z) G(z,y) - G(x,y))
    rel_error: float


def check_gprime(bt: BallTable, r: float, x=0, y=0, h: float = 1e-4,
                 **kw) -> GPrimeReport:
    """Check dG_r/dr = r^-1 [sum_z G_r(x,z) G_r(z,y) - G_r(x,y)]."""
    ix, iy = _as_source_index(bt, x), _as_source_index(bt, y)
    gx = green_truncated(bt, r, source=ix, **kw)
    gy = gx if iy == ix else green_truncated(bt, r, source=iy, **kw)
    gp = green_truncated(bt, r + h, source=ix, u0=gx.u, **kw)
    gm = green_truncated(bt, r - h, source=ix, u0=gx.u, **kw)
    lhs = (gp.u[iy] - gm.u[iy]) / (2 * h)
    rhs = (float(gx.u @ gy.u) - gx.u[iy]) / r
    return GPrimeReport(r, float(lhs), float(rhs),
                        abs(lhs - rhs) / max(abs(rhs), 1e-300))


# -- Ancona / Harnack diagnostics ----------------------------------------------


@dataclass
class AnconaReport:
    r: float
    x: Word
    y: Word
    ratios: np.ndarray          # G(x,y) / (G(x,z) G(z,y)) along the geodesic
    max_ratio: float
    min_ratio: float


def ancona_ratio(bt: BallTable, r: float, x: Word, y: Word,
                 domain=None) -> AnconaReport:
    """Multiplicativity defect of G_r along the geodesic from x to y."""
    from .automaton import geodesic
    a = bt.automaton
    x = a.normal_form(tuple(x)); y = a.normal_form(tuple(y))
    seg = geodesic(bt.presentation, x, y)
    gx = green_truncated(bt, r, source=x, domain=domain)
    gy = green_truncated(bt, r, source=y, domain=domain)
    gxy = gx.value(y)
    ratios = []
    for z in seg.vertices[1:-1]:
        iz = bt.index_of(z.word)
        if iz < 0:
            continue
        denom = gx.u[iz] * gy.u[iz]
        ratios.append(gxy / denom if denom > 0 else 0.0)
    ratios = np.array(ratios if ratios else [1.0])
    return AnconaReport(r, x, y, ratios,
                        float(ratios.max()), float(ratios.min()))


def ancona_uniformity(bt: BallTable, r_values, x: Word, y: Word):
    """max_ratio as a function of r; uniformity means the spread of
    max_ratio across r stays within a small factor."""
    reports = [ancona_ratio(bt, r, x, y) for r in r_values]
    maxima = np.array([rep.max_ratio for rep in reports])
    return reports, float(maxima.max() / maxima.min())


class DomainHypothesisError(ValueError):
    def __init__(self, vertex: Word):
        super().__init__(f"neighborhood of geodesic vertex {vertex} "
                         "escapes the domain")
        self.vertex = vertex


def relative_ancona_check(bt: BallTable, r: float, x: Word, y: Word,
                          domain, margin: int = 1):
    """Ancona ratios with domain-restricted Green's functions.

    Requires B(w, margin) inside the domain for every geodesic vertex w
    (the relative statement's hypothesis); reports "disconnected" when
    the restricted Green's function vanishes between the endpoints.
    """
    from .automaton import geodesic
    a = bt.automaton
    x = a.normal_form(tuple(x)); y = a.normal_form(tuple(y))
    seg = geodesic(bt.presentation, x, y)
    mask = domain.mask(bt)
    for v in seg.vertices:
        iw = bt.index_of(v.word)
        if iw < 0 or not mask[iw]:
            raise DomainHypothesisError(v.word)
        if margin >= 1:
            d = bfs_distances_from(bt, iw)
            near = (d >= 0) & (d <= margin)
            if not mask[near].all():
                raise DomainHypothesisError(w)
    rep = ancona_ratio(bt, r, x, y, domain=domain)
    gx = green_truncated(bt, r, source=x, domain=domain)
    disconnected = gx.value(y) == 0.0
    return rep, disconnected


@dataclass
class HarnackReport:
    r: float
    C_estimate: float            # smallest C with G(x,z) <= C^{d(y,z)} G(x,y)
    one_step_bound: float        # (r p_min)^-1, must dominate neighbor pairs
    one_step_ok: bool
    pairs_checked: int


def harnack_check(bt: BallTable, r: float, n_samples: int = 2000,
                  seed: int = 0, x=0,
                  solve: GreenSolve | None = None) -> HarnackReport:
    """Estimate the smallest C in the Harnack system
    G_r(x, z) <= C^{d(y, z)} G_r(x, y) over sampled pairs (y, z).

    Pairs are drawn from the interior half of the ball so the estimate is
    not dominated by truncation; d(y, z) is the exact word distance."""
    from .automaton import word_distance
    ix = _as_source_index(bt, x)
    if solve is None:
        solve = green_truncated(bt, r, source=ix)
    rng = np.random.Generator(np.random.Philox(key=seed))
    n_inner = int(bt.offsets[max(bt.M // 2, 1) + 1])
    ys = rng.integers(1, n_inner, size=n_samples)
    zs = rng.integers(1, n_inner, size=n_samples)
    p = bt.presentation
    worst = 1.0
    one_step = 1.0
    p_min = min(bt.sd.probs)
    for iy, iz in zip(ys.tolist(), zs.tolist()):
        if iy == iz:
            continue
        d = word_distance(p, bt.word(iy), bt.word(iz))
        c = (solve.u[iz] / solve.u[iy]) ** (1.0 / d)
        worst = max(worst, float(c))
        if d == 1:
            one_step = max(one_step, float(c))
    bound = 1.0 / (r * p_min)
    return HarnackReport(r, worst, bound, one_step <= bound + 1e-9,
                         int(n_samples))


@dataclass
class DecayFit:
    slope: float                 # log(rho); must be negative
    rho: float
    intercept: float
    r2: float
    per_length_max: np.ndarray
    per_length_min: np.ndarray   # anisotropy: directions decay differently


def decay_fit(bt: BallTable, r: float, m_min: int, m_max: int,
              solve: GreenSolve | None = None) -> DecayFit:
    """Fit log max_{x in S_m} G_r(1, x) ~ m log(rho) + const."""
    if solve is None:
        solve = green_truncated(bt, r, source=0)
    ms = np.arange(m_min, m_max + 1)
    mx = np.array([solve.u[bt.sphere_slice(int(m))].max() for m in ms])
    mn = np.array([solve.u[bt.sphere_slice(int(m))].min() for m in ms])
    fit = linregress(ms, np.log(mx))
    return DecayFit(float(fit.slope), float(math.exp(fit.slope)),
                    float(fit.intercept), float(fit.rvalue ** 2), mx, mn)


# -- branching estimator ---------------------------------------------------------


@dataclass
class BRWEstimate:
    r: float
    target: int
    mean: float
    std_error: float
    trials: int
    cap_hits: int
    reliable: bool


def green_via_brw(bt: BallTable, r: float, target=0, domain=None,
                  trials: int = 2000, seed: int = 0,
                  particle_cap: int = 1_000_000) -> BRWEstimate:
    """Branching random walk estimator of G_r(1, target; domain).

    Each particle at x spawns Poisson(r p(s)) offspring at xs for every
    support element s; particles outside the domain (or the ball) do not
    reproduce.  The expected total number of visits to the target equals
    the domain-restricted Green's function.
    """
    it = _as_source_index(bt, target)
    mask = domain.mask(bt) if domain is not None else None
    targets = bt.support_targets()
    probs = np.asarray(bt.sd.probs)
    visits = np.empty(trials)
    cap_hits = 0
    for t in range(trials):
        rng = _trajectory_rng(seed, t)
        pos = np.zeros(1, dtype=np.int64)
        count = 1.0 if it == 0 and (mask is None or mask[0]) else 0.0
        capped = False
        while pos.size:
            if mask is not None:
                pos = pos[mask[pos]]
                if not pos.size:
                    break
            # offspring per support element
            children = []
            for s in range(len(probs)):
                n_off = rng.poisson(r * probs[s], size=pos.size)
                rep = np.repeat(pos, n_off)
                if rep.size:
                    children.append(targets[s][rep])
            if not children:
                break
            pos = np.concatenate(children)
            pos = pos[pos >= 0]
            if pos.size > particle_cap:
                capped = True
                pos = pos[:particle_cap]
            alive = pos if mask is None else pos[mask[pos]]
            count += float(np.count_nonzero(alive == it))
        if capped:
            cap_hits += 1
        visits[t] = count
    mean = float(visits.mean())
    se = float(visits.std(ddof=1) / math.sqrt(trials))
    return BRWEstimate(r, it, mean, se, trials, cap_hits,
                       reliable=cap_hits <= 0.01 * trials)
