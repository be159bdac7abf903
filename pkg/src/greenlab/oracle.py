"""Closed-form quantities for the simple random walk on a free group F_k.

Everything here is independent of the ball/automaton machinery and serves
as ground truth in tests: generating functions from the quadratic first-
passage equation, and exact n-step probabilities from the distance chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FreeGroupOracle:
    """SRW on F_k (2k generators, uniform step law)."""

    rank: int

    @property
    def rho(self) -> float:
        return math.sqrt(2 * self.rank - 1) / self.rank

    @property
    def R(self) -> float:
        return 1.0 / self.rho

    def first_passage(self, r: float) -> float:
        """F_r(1, s) for a neighbor s: smallest root of
        (2k-1) r F^2 - 2k F + r = 0."""
        k = self.rank
        disc = 4 * k * k - 4 * (2 * k - 1) * r * r
        if disc < 0:
            if disc > -64 * np.finfo(float).eps * k * k:  # roundoff at r = R
                disc = 0.0
            else:
                raise ValueError(f"r={r} exceeds the radius of convergence")
        if r == 0:
            return 0.0
        return (2 * k - math.sqrt(disc)) / (2 * (2 * k - 1) * r)

    def green(self, r: float, dist: int = 0) -> float:
        """G_r(x, y) with d(x, y) = dist."""
        F = self.first_passage(r)
        return self.first_passage(r) ** dist / (1.0 - r * F)

    @property
    def F_at_R(self) -> float:
        return 1.0 / math.sqrt(2 * self.rank - 1)

    @property
    def G_at_R(self) -> float:
        return (2 * self.rank - 1) / (self.rank - 1)

    def pn_sequence(self, n_max: int, dist: int = 0) -> np.ndarray:
        """Exact P(d(1, X_n) = dist) for n = 0..n_max via the distance
        birth-death chain (out with prob (2k-1)/2k, in 1/2k).  For dist=0
        this is the return probability p^n(1, 1)."""
        k2 = 2 * self.rank
        out_p = (k2 - 1) / k2
        u = np.zeros(n_max + 2)
        u[0] = 1.0
        probs = np.empty(n_max + 1)
        probs[0] = u[dist]
        for n in range(1, n_max + 1):
            v = np.zeros_like(u)
            v[1:] += out_p * u[:-1]
            v[1] += (1 - out_p) * u[0]   # from the root every step leaves
            v[:-1] += u[1:] / k2
            u = v
            probs[n] = u[dist]
        return probs
