"""Versioned on-disk containers for ball tables and Green solves.

Containers are numpy .npz archives with a header block (format version,
presentation, step-law signature, truncation radius, and for Green solves
the parameters r / domain / residual / truncation gap).  Loading verifies
the header against the requesting configuration and refuses mismatches.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

import numpy as np

from .walks import BallTable, StepDistribution, build_ball
from .words import Presentation, presentation_from_spec
from .automaton import build_automaton

BALL_FORMAT = "greenlab-ball v1"
GREEN_FORMAT = "greenlab-green v1"

ENV_CACHE_ROOT = "GREENLAB_CACHE"


class CacheMismatch(ValueError):
    pass


def _presentation_spec(p: Presentation) -> str:
    size = p.rank if p.kind == "free" else p.genus
    return f"{p.kind}:{size}"


def cache_root(override: str | None = None) -> Path:
    root = override or os.environ.get(ENV_CACHE_ROOT) or ".greenlab-cache"
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def ball_cache_key(p: Presentation, sd: StepDistribution, M: int) -> str:
    h = hashlib.sha256(
        f"{_presentation_spec(p)}|{sd.signature()}|{M}".encode()).hexdigest()
    return f"ball-{h[:16]}.npz"


def save_ball(bt: BallTable, path) -> None:
    np.savez_compressed(
        path,
        format=np.array(BALL_FORMAT),
        presentation=np.array(_presentation_spec(bt.presentation)),
        support=np.array(bt.sd.signature()),
        M=np.array(bt.M),
        n_resolved=np.array(bt.n_resolved),
        nbr=bt.nbr, parent=bt.parent, letter=bt.letter,
        offsets=bt.offsets, ball_states=bt.ball_states)


def load_ball(path, p: Presentation, sd: StepDistribution,
              M: int) -> BallTable:
    with np.load(path, allow_pickle=False) as z:
        if str(z["format"]) != BALL_FORMAT:
            raise CacheMismatch(f"unknown container format {z['format']}")
        for key, want in (("presentation", _presentation_spec(p)),
                          ("support", sd.signature()), ("M", str(M))):
            got = str(z[key])
            if got != str(want):
                raise CacheMismatch(f"{key} mismatch: cache has {got!r}, "
                                    f"request is {want!r}")
        return BallTable(p, sd, M, build_automaton(p),
                         z["nbr"], z["parent"], z["letter"], z["offsets"],
                         int(z["n_resolved"]), ball_states=z["ball_states"])


def ball_cached(p: Presentation, sd: StepDistribution, M: int,
                root=None, **kw) -> BallTable:
    """Load from cache when present, else build and store."""
    path = cache_root(root) / ball_cache_key(p, sd, M)
    if path.exists():
        return load_ball(path, p, sd, M)
    bt = build_ball(p, sd, M, **kw)
    save_ball(bt, path)
    return bt


def green_cache_key(p: Presentation, sd: StepDistribution, M: int,
                    r: float, domain_label: str, source: int) -> str:
    h = hashlib.sha256(
        f"{_presentation_spec(p)}|{sd.signature()}|{M}|{r:.17g}|"
        f"{domain_label}|{source}".encode()).hexdigest()
    return f"green-{h[:16]}.npz"


def save_green(solve, path, domain_label: str = "full") -> None:
    bt = solve.bt
    np.savez_compressed(
        path,
        format=np.array(GREEN_FORMAT),
        presentation=np.array(_presentation_spec(bt.presentation)),
        support=np.array(bt.sd.signature()),
        M=np.array(bt.M),
        r=np.array(solve.r),
        domain=np.array(domain_label),
        source=np.array(solve.source),
        residual=np.array(solve.residual),
        truncation_gap=np.array(
            np.nan if solve.truncation_gap is None else solve.truncation_gap),
        method=np.array(solve.method),
        u=solve.u)


def load_green(path, bt: BallTable, r: float,
               domain_label: str = "full", source: int = 0):
    from .green import GreenSolve
    with np.load(path, allow_pickle=False) as z:
        if str(z["format"]) != GREEN_FORMAT:
            raise CacheMismatch(f"unknown container format {z['format']}")
        checks = (("presentation", _presentation_spec(bt.presentation)),
                  ("support", bt.sd.signature()), ("M", str(bt.M)),
                  ("r", f"{r:.17g}".rstrip()), ("domain", domain_label),
                  ("source", str(source)))
        for key, want in checks:
            got = str(z[key])
            if key == "r":
                if abs(float(got) - r) > 1e-15 * max(abs(r), 1):
                    raise CacheMismatch(f"r mismatch: {got} vs {r}")
                continue
            if got != str(want):
                raise CacheMismatch(f"{key} mismatch: cache has {got!r}, "
                                    f"request is {want!r}")
        gap = float(z["truncation_gap"])
        return GreenSolve(bt, r, int(z["source"]), z["u"], None,
                          float(z["residual"]), 0, str(z["method"]),
                          truncation_gap=None if np.isnan(gap) else gap)


def green_cached(bt: BallTable, r: float, source: int = 0,
                 root=None, **kw):
    from .green import green_truncated
    path = cache_root(root) / green_cache_key(
        bt.presentation, bt.sd, bt.M, r, "full", source)
    if path.exists():
        return load_green(path, bt, r, "full", source)
    solve = green_truncated(bt, r, source=source, **kw)
    save_green(solve, path)
    return solve
