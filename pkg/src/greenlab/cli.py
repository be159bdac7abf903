"""Experiment runner: one subcommand per quantity, CSV/JSON outputs, manifest.

Config file format: flat INI (`[experiment]` section, key = value).  CLI
flags override config values.  Outputs carry versioned header comments;
a `manifest.json` records the config hash and per-file checksums so that
reruns with identical config and cache are byte-identical.

The cache root is ``--cache``, else $GREENLAB_CACHE, else .greenlab-cache.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, asdict, replace
from pathlib import Path


def _preparse_threads(argv) -> None:
    # BLAS thread counts must be pinned before numpy loads.
    for i, a in enumerate(argv):
        n = None
        if a == "--threads" and i + 1 < len(argv):
            n = argv[i + 1]
        elif a.startswith("--threads="):
            n = a.split("=", 1)[1]
        if n is not None:
            for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                        "MKL_NUM_THREADS"):
                os.environ[var] = str(int(n))
            return


PROFILES = {
    "smoke": dict(M=5, depth=2, M_max=8, n_trials=2000, m_max=5),
    "desk": dict(M=8, depth=3, M_max=14, n_trials=10000, m_max=8),
    "deep": dict(M=10, depth=3, M_max=14, n_trials=100000, m_max=10),
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "free"          # free | surface
    size: int = 2               # rank or genus
    step: str = "srw"           # srw | lazy:p | table:w1:p1,w2:p2,...
    M: int = 8                  # ball truncation radius
    depth: int = 3              # potential depth k
    r: str = "crit*0.9"         # number or crit*FACTOR
    theta: float = 2.0
    M_max: int = 14             # spectral-radius ladder top
    m_max: int = 8              # sphere range for sums/fits
    n_trials: int = 10000
    seed: int = 20260826
    out: str = "out"
    cache: str = ""
    profile: str = "desk"

    def hash(self) -> str:
        d = asdict(self)
        for k in ("out", "cache"):   # machine-local paths, not experiment id
            d.pop(k, None)
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    base = {}
    if path:
        cp = configparser.ConfigParser()
        cp.optionxform = str     # field names are case-sensitive (M, M_max)
        with open(path) as fh:
            cp.read_file(fh)
        base = dict(cp["experiment"]) if cp.has_section("experiment") else {}
    cfg = ExperimentConfig()
    profile = overrides.get("profile") or base.get("profile") or cfg.profile
    merged = {**PROFILES[profile], **base,
              **{k: v for k, v in overrides.items() if v is not None},
              "profile": profile}
    fields = ExperimentConfig.__dataclass_fields__
    clean = {}
    for k, v in merged.items():
        if k not in fields:
            raise SystemExit(f"unknown config key {k!r}")
        typ = fields[k].type
        clean[k] = (int(v) if typ == "int" else
                    float(v) if typ == "float" else str(v))
    return replace(cfg, **clean)


# --------------------------------------------------------------------------
# object construction (imports deferred so --threads can act before numpy)

def _presentation(cfg):
    from .words import presentation_from_spec
    return presentation_from_spec(cfg.kind, cfg.size)


def _step(cfg, p):
    from . import walks
    if cfg.step == "srw":
        return walks.srw(p)
    if cfg.step.startswith("lazy:"):
        return walks.lazy_srw(p, float(cfg.step.split(":", 1)[1]))
    if cfg.step.startswith("table:"):
        table = {}
        for item in cfg.step[len("table:"):].split(","):
            w, prob = item.split(":")
            table[p.parse(w)] = float(prob)
        return walks.explicit_distribution(p, table)
    raise SystemExit(f"unknown step spec {cfg.step!r}")


def _ball(cfg, p, sd):
    from .cache import ball_cached
    return ball_cached(p, sd, cfg.M, root=cfg.cache or None)


def _critical_radius(cfg, p, sd) -> float:
    from .oracle import FreeGroupOracle
    if cfg.kind == "free" and cfg.step == "srw":
        return FreeGroupOracle(cfg.size).R
    from .walks import spectral_radius_estimate
    return spectral_radius_estimate(p, sd, min(cfg.M_max, cfg.M)).R_hat


def resolve_r(cfg, p, sd) -> float:
    spec = cfg.r
    if spec.startswith("crit"):
        factor = float(spec.split("*", 1)[1]) if "*" in spec else 1.0
        return _critical_radius(cfg, p, sd) * factor
    return float(spec)


def _solve(cfg, bt, r, **kw):
    from .cache import green_cached
    return green_cached(bt, r, root=cfg.cache or None, **kw)


# --------------------------------------------------------------------------
# output plumbing

class Emitter:
    def __init__(self, cfg: ExperimentConfig, subcommand: str):
        self.cfg = cfg
        self.sub = subcommand
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}
        self.t0 = time.time()

    def write_csv(self, name: str, header_tag: str, columns: list[str],
                  rows) -> Path:
        path = self.dir / name
        with open(path, "w", newline="") as fh:
            fh.write(f"# {header_tag} v1\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        self.register(path)
        return path

    def write_json(self, name: str, header_tag: str, payload: dict) -> Path:
        path = self.dir / name
        doc = {"format": f"{header_tag} v1", **payload}
        path.write_text(json.dumps(doc, sort_keys=True, indent=2,
                                   default=_jsonable) + "\n")
        self.register(path)
        return path

    def register(self, path: Path) -> None:
        self.files[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()

    def finish(self, status: str = "ok") -> None:
        from . import __version__
        manifest = {
            "subcommand": self.sub,
            "config": asdict(self.cfg),
            "config_hash": self.cfg.hash(),
            "version": __version__,
            "outputs": self.files,
            "status": status,
            "wall_clock_s": round(time.time() - self.t0, 3),
        }
        (self.dir / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _fmt(v) -> str:
    import numpy as np
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    import numpy as np
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, tuple):
        return list(v)
    return str(v)


# --------------------------------------------------------------------------
# subcommands

def cmd_automaton(cfg, args):
    from .automaton import build_automaton
    p = _presentation(cfg)
    a = build_automaton(p)
    em = Emitter(cfg, "automaton")
    edge_path = em.dir / "automaton_edges.tsv"
    a.export_edges(edge_path)
    em.register(edge_path)
    payload = {"states": a.n_states, "letters": p.n_letters,
               "variant": a.variant,
               "sphere_sizes": a.sphere_sizes(cfg.m_max),
               "growth_rate": a.growth_rate()}
    if args.check:
        rep = a.check_structure()
        payload["structure_check"] = {
            "n_edges": rep.n_edges,
            "n_recurrent_edges": rep.n_recurrent_edges,
            "recurrent_strongly_connected":
                rep.recurrent_strongly_connected,
            "period": rep.period,
            "aperiodic": rep.aperiodic,
            "bijection_checked_to": rep.bijection_checked_to,
        }
    em.write_json("automaton.json", "automaton-report", payload)
    em.finish()
    return 0


def cmd_ball(cfg, args):
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    em = Emitter(cfg, "ball")
    rows = [(m, int(bt.offsets[m + 1] - bt.offsets[m]))
            for m in range(cfg.M + 1)]
    em.write_csv("ball_spheres.csv", "ball-spheres", ["m", "count"], rows)
    em.write_json("ball.json", "ball-report",
                  {"n": bt.n, "M": bt.M, "support_size": len(sd.support),
                   "n_resolved": bt.n_resolved})
    em.finish()
    return 0


def cmd_green(cfg, args):
    import numpy as np
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    r = resolve_r(cfg, p, sd)
    solve = _solve(cfg, bt, r)
    em = Emitter(cfg, "green")
    rows = []
    for m in range(cfg.M + 1):
        sl = bt.sphere_slice(m)
        u = solve.u[sl]
        rows.append((m, float(np.dot(bt.sphere_weight(m), u)),
                     float(u.max()), float(u.min())))
    em.write_csv("green_spheres.csv", "green-spheres",
                 ["m", "weighted_sum", "max", "min"], rows)
    em.write_json("green.json", "green-report",
                  {"r": r, "G_1_1": solve.value(0),
                   "residual": solve.residual, "method": solve.method,
                   "truncation_gap": solve.truncation_gap})
    em.finish()
    return 0


def cmd_spectral_radius(cfg, args):
    from .walks import spectral_radius_estimate
    p = _presentation(cfg)
    sd = _step(cfg, p)
    est = spectral_radius_estimate(p, sd, cfg.M_max)
    em = Emitter(cfg, "spectral-radius")
    em.write_csv("lambda_table.csv", "lambda-table", ["M", "lambda_M"],
                 est.table())
    em.write_json("spectral_radius.json", "spectral-radius-report",
                  {"rho_hat": est.rho_hat, "R_hat": est.R_hat,
                   "certified_bracket": est.certified_bracket,
                   "estimate_bracket": est.estimate_bracket,
                   "method": est.method})
    em.finish()
    return 0


def cmd_ancona(cfg, args):
    from .green import ancona_ratio
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    r = resolve_r(cfg, p, sd)
    h = max(cfg.M // 2, 1)
    x = p.parse(args.x) if args.x else (p.inv(0),) * h
    y = p.parse(args.y) if args.y else (0,) * h
    rep = ancona_ratio(bt, r, x, y)
    em = Emitter(cfg, "ancona")
    em.write_csv("ancona_ratios.csv", "ancona-ratios",
                 ["position", "ratio"], enumerate(rep.ratios, start=1))
    em.write_json("ancona.json", "ancona-report",
                  {"r": r, "x": p.format(rep.x), "y": p.format(rep.y),
                   "max_ratio": rep.max_ratio, "min_ratio": rep.min_ratio})
    em.finish()
    return 0


def cmd_decay(cfg, args):
    from .green import decay_fit
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    r = resolve_r(cfg, p, sd)
    m_max = min(cfg.m_max, bt.M - 1)
    fit = decay_fit(bt, r, max(1, m_max - 5), m_max,
                    solve=_solve(cfg, bt, r))
    em = Emitter(cfg, "decay")
    em.write_csv("decay.csv", "decay-profile", ["m", "max_G", "min_G"],
                 zip(range(max(1, m_max - 5), m_max + 1),
                     fit.per_length_max, fit.per_length_min))
    em.write_json("decay.json", "decay-report",
                  {"r": r, "slope": fit.slope, "rho": fit.rho,
                   "r2": fit.r2})
    em.finish()
    return 0


def cmd_martin(cfg, args):
    from .boundary import RaySpec, martin_sequence, holder_rate_fit
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    r = resolve_r(cfg, p, sd)
    ray = RaySpec(p, p.parse(args.ray) if args.ray else (0,))
    x = p.parse(args.x) if args.x else (p.inv(0),)
    n_values = range(1, bt.M)
    seq = martin_sequence(bt, r, x, ray, n_values)
    fit = holder_rate_fit(bt, r, x, ray, n_values)
    em = Emitter(cfg, "martin")
    em.write_csv("martin.csv", "martin-sequence", ["n", "K_n"],
                 zip(n_values, seq))
    em.write_json("martin.json", "martin-report",
                  {"r": r, "x": p.format(tuple(x)), "ray": p.format(ray.cycle),
                   "rho_hat": fit.rho_hat, "stabilized": fit.stabilized,
                   "low_confidence": fit.low_confidence})
    em.finish()
    return 0


def _chain_phi(cfg, p, bt, solve):
    from .automaton import build_automaton
    from .thermo import refine, potential_on_blocks
    chain = refine(build_automaton(p), cfg.depth)
    return chain, potential_on_blocks(chain, bt, solve)


def cmd_pressure(cfg, args):
    from .thermo import pressure
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    r = resolve_r(cfg, p, sd)
    chain, phi = _chain_phi(cfg, p, bt, _solve(cfg, bt, r))
    res = pressure(chain, phi, cfg.theta, r=r)
    em = Emitter(cfg, "pressure")
    em.write_json("pressure.json", "pressure-report",
                  {"r": r, "theta": cfg.theta, "depth": cfg.depth,
                   "log_pressure": res.value,
                   "leading_eigenvalue": res.leading,
                   "gap_estimate": res.gap_estimate,
                   "iterations": res.iterations, "n_blocks": chain.n})
    em.finish()
    return 0


def cmd_theta_root(cfg, args):
    from .thermo import theta_root
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    r = resolve_r(cfg, p, sd)
    chain, phi = _chain_phi(cfg, p, bt, _solve(cfg, bt, r))
    root = theta_root(chain, phi, r)
    em = Emitter(cfg, "theta-root")
    em.write_json("theta_root.json", "theta-root-report",
                  {"r": r, "depth": cfg.depth, "theta_star": root})
    em.finish()
    return 0


def cmd_sphere_sums(cfg, args):
    from .thermo import sphere_sums
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    r = resolve_r(cfg, p, sd)
    tab = sphere_sums(bt, _solve(cfg, bt, r), cfg.theta,
                      range(1, cfg.m_max + 1))
    em = Emitter(cfg, "sphere-sums")
    em.write_csv("sphere_sums.csv", "sphere-sums", ["m", "sum"],
                 zip(tab.m_values, tab.sums))
    em.write_json("sphere_sums.json", "sphere-sums-report",
                  {"r": r, "theta": cfg.theta,
                   "fitted_rate": tab.fitted_rate})
    em.finish()
    return 0


def cmd_eta(cfg, args):
    from .thermo import eta
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    r = resolve_r(cfg, p, sd)
    res = eta(bt, _solve(cfg, bt, r))
    em = Emitter(cfg, "eta")
    em.write_json("eta.json", "eta-report",
                  {"r": r, "eta": res.value, "ball_part": res.ball_part,
                   "tail_fraction": res.tail_fraction,
                   "reliable": res.reliable})
    em.finish()
    return 0


def cmd_level_sets(cfg, args):
    import numpy as np
    from .thermo import level_set_count
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    r = resolve_r(cfg, p, sd)
    solve = _solve(cfg, bt, r)
    u = solve.u[: bt.offsets[bt.M + 1]]
    grid = np.geomspace(float(u.min()) * 1.01, float(u.max()),
                        args.n_eps)
    rows = []
    for eps in grid:
        count, boundary_hit = level_set_count(bt, solve, float(eps))
        rows.append((float(eps), count, float(eps * eps * count),
                     int(boundary_hit)))
    em = Emitter(cfg, "level-sets")
    em.write_csv("level_sets.csv", "level-sets",
                 ["eps", "count", "eps2_count", "boundary_hit"], rows)
    em.finish()
    return 0


def cmd_critical_fit(cfg, args):
    import numpy as np
    from .asymptotics import critical_exponent_fit
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    R = _critical_radius(cfg, p, sd)
    distances = R * np.geomspace(1e-8, 1e-4, 12)
    r_values = R - distances
    G_values = np.array([_solve(cfg, bt, float(rv)).value(0)
                         for rv in r_values])
    fit = critical_exponent_fit(r_values, G_values, R)
    em = Emitter(cfg, "critical-fit")
    em.write_json("critical_fit.json", "critical-fit-report",
                  json.loads(fit.to_json()))
    em.finish()
    return 0


def cmd_llt_fit(cfg, args):
    import numpy as np
    from .asymptotics import llt_fit
    p = _presentation(cfg)
    sd = _step(cfg, p)
    if cfg.kind == "free" and cfg.step == "srw":
        from .oracle import FreeGroupOracle
        orc = FreeGroupOracle(cfg.size)
        pn = orc.pn_sequence(2000)
        ns = np.arange(100, 2001, 2)
        R = orc.R
    else:
        from .walks import pn_sequence, spectral_radius_estimate
        bt = _ball(cfg, p, sd)
        pn = pn_sequence(bt, 2 * bt.M)
        ns = np.arange(2 * bt.M - 16, 2 * bt.M + 1, 2)
        R = spectral_radius_estimate(p, sd, min(cfg.M_max, cfg.M)).R_hat
    fit = llt_fit(pn, R, ns)
    em = Emitter(cfg, "llt-fit")
    em.write_json("llt_fit.json", "llt-fit-report",
                  json.loads(fit.to_json()))
    em.finish()
    return 0


def cmd_spectrum(cfg, args):
    from .asymptotics import spectrum_check
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    rep = spectrum_check(bt)
    em = Emitter(cfg, "spectrum")
    em.write_json("spectrum.json", "spectrum-report",
                  {"applicable": rep.applicable,
                   "lambda_max": rep.lambda_max,
                   "lambda_min": rep.lambda_min, "gap": rep.gap,
                   "message": rep.message})
    em.finish()
    return 0


def cmd_brw(cfg, args):
    from .green import green_via_brw
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    r = resolve_r(cfg, p, sd)
    est = green_via_brw(bt, r, target=0, trials=cfg.n_trials,
                        seed=cfg.seed)
    direct = _solve(cfg, bt, r).value(0)
    em = Emitter(cfg, "brw")
    em.write_json("brw.json", "brw-report",
                  {"r": r, "estimate": est.mean, "stderr": est.std_error,
                   "trials": est.trials, "cap_hits": est.cap_hits,
                   "reliable": est.reliable, "direct": direct,
                   "z_score": (est.mean - direct) / est.std_error})
    em.finish()
    return 0


def cmd_pair_sum(cfg, args):
    from .boundary import pair_summability_check
    p = _presentation(cfg)
    sd = _step(cfg, p)
    bt = _ball(cfg, p, sd)
    r = resolve_r(cfg, p, sd)
    rep = pair_summability_check(bt, r, N=args.N, pairs=args.n_pairs,
                                 seed=cfg.seed)
    em = Emitter(cfg, "pair-sum")
    em.write_csv("pair_sums.csv", "pair-sums", ["pair", "total"],
                 enumerate(rep.total))
    em.write_json("pair_sum.json", "pair-sum-report",
                  {"r": r, "N": args.N, "pairs": args.n_pairs,
                   "decreasing_fraction": rep.decreasing_fraction})
    em.finish()
    return 0


def cmd_report(cfg, args):
    from .acceptance import run_suite
    em = Emitter(cfg, "report")
    results = run_suite(cfg.profile, seed=cfg.seed,
                        cache=cfg.cache or None)
    rows = [(r.name, int(r.passed), r.measured, r.tolerance)
            for r in results]
    em.write_csv("report.csv", "acceptance-report",
                 ["criterion", "passed", "measured", "tolerance"], rows)
    failures = [r.name for r in results if not r.passed]
    em.write_json("report.json", "acceptance-summary",
                  {"profile": cfg.profile,
                   "n_pass": len(results) - len(failures),
                   "n_fail": len(failures), "failures": failures,
                   "runtimes_s": {r.name: round(r.runtime, 2)
                                  for r in results}})
    em.finish("ok" if not failures else "failed")
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: "
              f"measured={r.measured} tolerance={r.tolerance} "
              f"[{r.runtime:.1f}s]")
    return 0 if not failures else 1


COMMANDS = {
    "automaton": cmd_automaton, "ball": cmd_ball, "green": cmd_green,
    "spectral-radius": cmd_spectral_radius, "ancona": cmd_ancona,
    "decay": cmd_decay, "martin": cmd_martin, "pressure": cmd_pressure,
    "theta-root": cmd_theta_root, "sphere-sums": cmd_sphere_sums,
    "eta": cmd_eta, "level-sets": cmd_level_sets,
    "critical-fit": cmd_critical_fit, "llt-fit": cmd_llt_fit,
    "spectrum": cmd_spectrum, "brw": cmd_brw, "pair-sum": cmd_pair_sum,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="greenlab",
        description="Random-walk Green function laboratory on surface and "
                    "free groups")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--cache", default=None)
        sp.add_argument("--profile", choices=sorted(PROFILES), default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--r", default=None,
                        help="radius: a number or crit*FACTOR")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--kind", choices=["free", "surface"], default=None)
        sp.add_argument("--size", type=int, default=None,
                        help="rank (free) or genus (surface)")
        sp.add_argument("--step", default=None)
        sp.add_argument("--M", type=int, default=None)
        sp.add_argument("--depth", type=int, default=None)
        sp.add_argument("--theta", type=float, default=None)
        if name == "automaton":
            sp.add_argument("--check", action="store_true")
        if name in ("ancona", "martin"):
            sp.add_argument("--x", default=None)
        if name == "ancona":
            sp.add_argument("--y", default=None)
        if name == "martin":
            sp.add_argument("--ray", default=None)
        if name == "level-sets":
            sp.add_argument("--n-eps", type=int, default=20)
        if name == "pair-sum":
            sp.add_argument("--n-pairs", type=int, default=50)
            sp.add_argument("--N", type=int, default=6)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _preparse_threads(argv)
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k, None) for k in
                 ("kind", "size", "step", "M", "depth", "r", "theta",
                  "seed", "out", "cache", "profile")}
    cfg = load_config(args.config, overrides)
    try:
        return COMMANDS[args.subcommand](cfg, args)
    except Exception as exc:  # machine-readable error record, nonzero exit
        record = {"error": type(exc).__name__, "message": str(exc),
                  "subcommand": args.subcommand}
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").write_text(json.dumps(record, indent=2) + "\n")
        print(json.dumps(record), file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
