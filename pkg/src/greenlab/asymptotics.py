"""Critical-exponent and local-limit fits, Tauberian and RD-bound shape
checks, and the two-sided spectrum check for aperiodic walks.

Fits report sensitivity to the spectral-radius bracket: return-probability
fits are exponentially sensitive to errors in R, so every local-limit
result carries the exponent interval induced by the bracket endpoints.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.stats import linregress

from .walks import BallTable, ball_lambda, validate


@dataclass
class FitResult:
    quantity: str
    exponent: float
    constant: float
    residual: float
    data_range: tuple[float, float]
    spread: float                  # bootstrap-style spread over subranges
    sensitivity: tuple[float, float] | None = None   # exponent at bracket ends
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        d = asdict(self)
        d["data_range"] = list(d["data_range"])
        if d["sensitivity"] is not None:
            d["sensitivity"] = list(d["sensitivity"])
        return json.dumps(d, sort_keys=True)


def _power_fit(xs: np.ndarray, ys: np.ndarray, quantity: str) -> FitResult:
    """log-log least squares with a subrange spread estimate."""
    lx, ly = np.log(xs), np.log(ys)
    fit = linregress(lx, ly)
    pred = fit.slope * lx + fit.intercept
    resid = float(np.sqrt(np.mean((ly - pred) ** 2)))
    n = len(xs)
    slopes = []
    for lo, hi in ((0, 2 * n // 3), (n // 3, n)):
        if hi - lo >= 3:
            slopes.append(linregress(lx[lo:hi], ly[lo:hi]).slope)
    spread = float(max(slopes) - min(slopes)) if len(slopes) > 1 else 0.0
    return FitResult(quantity, float(fit.slope),
                     float(math.exp(fit.intercept)), resid,
                     (float(xs.min()), float(xs.max())), spread)


def critical_exponent_fit(r_values, G_values, R_hat: float,
                          G_at_R: float | None = None) -> FitResult:
    """alpha from G_R - G_r ~ C (R - r)^alpha (expected 1/2).

    G_at_R defaults to a two-point Richardson extrapolation (sqrt defect)
    of the two largest grid values toward R_hat.
    """
    r = np.asarray(r_values, dtype=float)
    G = np.asarray(G_values, dtype=float)
    order = np.argsort(r)
    r, G = r[order], G[order]
    flags = []
    if not np.all(np.diff(G) > 0):
        flags.append("non-monotone")
    if G_at_R is None:
        # defect ~ sqrt(R - r): eliminate it from the top two grid points
        d1, d2 = R_hat - r[-1], R_hat - r[-2]
        w = math.sqrt(d2 / d1)
        G_at_R = float((w * G[-1] - G[-2]) / (w - 1.0))
    keep = G_at_R - G > 0
    fit = _power_fit((R_hat - r)[keep], (G_at_R - G)[keep],
                     "critical-exponent")
    fit.flags.extend(flags)
    return fit


def llt_fit(pn: np.ndarray, R_hat: float, n_values,
            R_bracket: tuple[float, float] | None = None) -> FitResult:
    """Exponent from p^n ~ C R^{-n} n^{-beta} (expected beta = 3/2).

    pn is indexed by n; n_values selects a parity-consistent subsequence.
    The reported FitResult.exponent is beta (sign-flipped slope).
    """
    ns = np.asarray(sorted(n_values))
    if len(ns) < 8:
        raise ValueError("need at least 8 points for the local-limit fit")
    if len(set(ns % 2)) > 1:
        raise ValueError("n_values must be parity-consistent")

    def beta_at(R):
        # log y = log C - beta log n + b/n: the 1/n column absorbs the
        # leading finite-n correction of the local limit expansion
        ly = np.log(pn[ns]) + ns * math.log(R)
        X = np.column_stack([np.ones_like(ns, dtype=float),
                             np.log(ns), 1.0 / ns])
        coef, res, *_ = np.linalg.lstsq(X, ly, rcond=None)
        resid = float(np.sqrt(res[0] / len(ns))) if len(res) else 0.0
        return -float(coef[1]), float(math.exp(coef[0])), resid

    beta, C, resid = beta_at(R_hat)
    half = len(ns) // 2
    b_lo = -_power_fit(ns[:half].astype(float),
                       pn[ns[:half]] * np.exp(ns[:half] * math.log(R_hat)),
                       "llt").exponent
    b_hi = -_power_fit(ns[half:].astype(float),
                       pn[ns[half:]] * np.exp(ns[half:] * math.log(R_hat)),
                       "llt").exponent
    fit = FitResult("llt", beta, C, resid,
                    (float(ns.min()), float(ns.max())),
                    spread=float(abs(b_hi - b_lo)))
    if R_bracket is not None:
        lo = beta_at(R_bracket[0])[0]
        hi = beta_at(R_bracket[1])[0]
        fit.sensitivity = (min(lo, hi), max(lo, hi))
    return fit


@dataclass
class TauberianReport:
    monotone: bool
    beta_partial: float        # exponent of sum_{k<=n} k q_k ~ C n^beta
    constant_partial: float
    constant_direct: float     # from q_n ~ C beta n^{beta-2}
    consistent: bool           # constants agree within 10%
    ratio: float


def tauberian_check(q: np.ndarray, beta: float,
                    n_range=None) -> TauberianReport:
    """Monotone q with sum_{k<=n} k q_k ~ C n^beta forces
    q_n ~ C beta n^{beta-2}; fit both and compare the constants."""
    q = np.asarray(q, dtype=float)
    if n_range is None:
        n_range = np.arange(max(8, len(q) // 10), len(q))
    ns = np.asarray(sorted(n_range), dtype=float).astype(int)
    monotone = bool(np.all(np.diff(q[q > 0]) <= 1e-15))
    k = np.arange(len(q))
    partial = np.cumsum(k * q)
    fit_p = _power_fit(ns.astype(float), partial[ns], "tauberian-partial")
    # constants at the forced exponent, with nuisance terms absorbing the
    # subleading corrections: partial = A + C n^beta, q n^{2-beta} =
    # C beta (1 + a/n)
    X = np.column_stack([np.ones(len(ns)), ns.astype(float) ** beta])
    C_partial = float(np.linalg.lstsq(X, partial[ns], rcond=None)[0][1])
    y = q[ns] * ns.astype(float) ** (2 - beta)
    X = np.column_stack([np.ones(len(ns)), 1.0 / ns])
    C_direct = float(np.linalg.lstsq(X, y, rcond=None)[0][0]) / beta
    ratio = C_direct / C_partial
    return TauberianReport(monotone, fit_p.exponent, C_partial,
                           C_direct, bool(abs(ratio - 1) < 0.10),
                           float(ratio))


@dataclass
class SpectrumReport:
    lambda_min: float
    lambda_max: float
    gap: float                 # (lambda_min + lambda_max)/lambda_max > 0
    applicable: bool
    message: str


def spectrum_check(bt: BallTable, M: int | None = None) -> SpectrumReport:
    """Two-sided spectral interval of the ball-restricted operator.

    Requires an aperiodic (e.g. lazy) walk; bipartite walks are detected
    via the validation report and declined, since restricted balls then
    have lambda_min -> -lambda_max by parity symmetry.
    """
    rep = validate(bt.sd, raise_on_error=False)
    if rep.period != 1:
        return SpectrumReport(math.nan, math.nan, math.nan, False,
                              f"walk has period {rep.period}; two-sided "
                              "check requires aperiodicity")
    lam_max = ball_lambda(bt, M)
    lam_min = -ball_lambda_low(bt, M)
    gap = (lam_min + lam_max) / lam_max
    return SpectrumReport(float(lam_min), float(lam_max), float(gap),
                          True, "ok")


def ball_lambda_low(bt: BallTable, M: int | None = None) -> float:
    """-lambda_min via the smallest-algebraic eigenvalue of the ball
    operator (Lanczos on the symmetric restricted matrix)."""
    from scipy.sparse.linalg import LinearOperator, eigsh
    mask = None
    if M is not None and M < bt.M:
        mask = np.zeros(bt.n, dtype=bool)
        mask[: bt.offsets[M + 1]] = True

    def mv(u):
        return bt.apply(np.asarray(u, dtype=float).ravel(), mask)

    op = LinearOperator((bt.n, bt.n), matvec=mv, dtype=float)
    vals = eigsh(op, k=1, which="SA", return_eigenvectors=False)
    return float(-vals[0])


@dataclass
class RDReport:
    upper_constant: float      # sup of p^n R^n n   (RD upper shape)
    lower_constant: float      # inf of p^n R^n n^3 (RD lower shape)
    bounded_above: bool
    bounded_below: bool
    ratio: float


def rd_bounds_check(pn: np.ndarray, R_hat: float, n_values) -> RDReport:
    """Shape check C1 R^{-n} n^{-3} <= p^n <= C2 R^{-n} n^{-1}."""
    ns = np.asarray(sorted(n_values))
    vals = pn[ns] * np.exp(ns * math.log(R_hat))
    upper = vals * ns
    lower = vals * ns.astype(float) ** 3
    c2, c1 = float(upper.max()), float(lower.min())
    # boundedness in a finite range means: no systematic growth of the
    # upper shape, no systematic decay of the lower shape, across halves
    half = len(ns) // 2
    grow = upper[half:].max() / max(upper[:half].max(), 1e-300)
    decay = lower[half:].min() / max(lower[:half].min(), 1e-300)
    return RDReport(c2, c1, bool(grow < 2.0), bool(decay > 0.5),
                    float(c2 / c1))


def karamata_fit(pn: np.ndarray, R_hat: float, n_values) -> FitResult:
    """sum_{k<=n} k R^k p^k ~ C n^{1/2} (the G' Abelian direction).

    Fitted on dyadic partial-sum differences S(2n) - S(n), which removes
    the additive constant that otherwise biases a direct log-log slope.
    """
    ns = np.asarray([n for n in sorted(n_values) if 2 * n < len(pn)])
    k = np.arange(len(pn))
    # k log R + log p_k in one exponent: R^k alone overflows for large k
    log_terms = np.full(len(pn), -np.inf)
    pos = pn > 0
    log_terms[pos] = k[pos] * math.log(R_hat) + np.log(pn[pos])
    terms = k * np.exp(log_terms)
    partial = np.cumsum(terms)
    diffs = partial[2 * ns] - partial[ns]
    return _power_fit(ns.astype(float), diffs, "karamata")
