"""Command-line front end.

Subcommands: trajectory, compare, liouville, bench, classify.
Exit codes: 0 success, 2 bad datum or invalid input, 3 I/O failure,
4 failed check in compare (deviation) or liouville (z-score).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import io
from .bench import BENCH_COLUMNS, run_bench
from .core import (
    PhaseState,
    RodGeometry,
    SortPermutation,
    check_state,
    classify_datum,
    collision_schedule,
    conserved_quantities,
    evolve,
    evolve_batch,
    format_chain,
    random_good_state,
    random_state,
)
from .errors import BadDatum, HardRodError, TripleCollision
from .measure import (
    EnsembleParams,
    PhaseBox,
    estimate_pushforward_volume,
    jacobian_unit_check,
    sample_canonical,
)
from .oracle import simulate_grid

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_CHECK = 0, 2, 3, 4

COMPARE_TOL = 1e-8
Z_LIMIT = 3.0
# Largest N for which the O(N^2) collision schedule is built in CLI runs.
SCHEDULE_MAX_N = 5000


@dataclass
class RunConfig:
    n: int
    radius: float
    x0: list | None
    v0: list | None
    seed: int
    t_start: float
    t_end: float
    steps: int
    format: str
    out: str | None
    strict: bool

    def validate(self):
        if self.steps < 1:
            raise ValueError("--steps must be >= 1")
        if self.t_start > self.t_end:
            raise ValueError("--t-start must not exceed --t-end")
        for name, vec in (("--x0", self.x0), ("--v0", self.v0)):
            if vec is not None and len(vec) != self.n:
                raise ValueError(f"{name} has {len(vec)} entries, --n is {self.n}")
        if (self.x0 is None) != (self.v0 is None):
            raise ValueError("--x0 and --v0 must be given together")

    @property
    def geometry(self):
        return RodGeometry(self.n, self.radius)

    def datum(self):
        geom = self.geometry
        if self.x0 is not None:
            return PhaseState(self.x0, self.v0)
        rng = np.random.default_rng(self.seed)
        if geom.n <= SCHEDULE_MAX_N:
            return random_good_state(geom, rng)
        return random_state(geom, rng)

    def echo(self):
        d = asdict(self)
        d["datum_source"] = "explicit" if self.x0 is not None else "seeded_random"
        return d


def _floats(text):
    return [float(a) for a in text.replace(";", ",").split(",") if a.strip()]


def _parse_box(text, n):
    """``lo:hi,...,lo:hi/lo:hi,...,lo:hi`` with N position then N velocity intervals."""
    try:
        pos, vel = text.split("/")
        p = [[float(a) for a in iv.split(":")] for iv in pos.split(",")]
        v = [[float(a) for a in iv.split(":")] for iv in vel.split(",")]
    except ValueError as exc:
        raise ValueError(f"cannot parse --box {text!r}: expected 'lo:hi,...[/]lo:hi,...'") from exc
    if len(p) != n or len(v) != n:
        raise ValueError(f"--box needs {n} position and {n} velocity intervals")
    return PhaseBox(p, v)


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ROD_SEED")
    return int(env) if env else 0


def _config(args, fmt_default="csv"):
    cfg = RunConfig(
        n=args.n,
        radius=args.radius,
        x0=_floats(args.x0) if args.x0 else None,
        v0=_floats(args.v0) if args.v0 else None,
        seed=_seed(args),
        t_start=args.t_start,
        t_end=args.t_end,
        steps=args.steps,
        format=args.format or fmt_default,
        out=args.out,
        strict=args.strict,
    )
    cfg.validate()
    return cfg


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit_lines(fh, pairs):
    for k, v in pairs:
        if isinstance(v, float):
            v = io.fmt(v)
        elif isinstance(v, (list, dict)):
            v = json.dumps(v)
        fh.write(f"{k}={v}\n")


def _require_good(geom, z0):
    cls = classify_datum(geom, z0)
    if not cls.is_good:
        raise BadDatum(
            f"bad datum: links {format_chain(cls.chain)} coincide at t={io.fmt(cls.witness_time)}", cls
        )


def cmd_trajectory(args):
    cfg = _config(args)
    geom = cfg.geometry
    z0 = cfg.datum()
    check_state(geom, z0)
    if cfg.strict:
        _require_good(geom, z0)
    if cfg.format == "svg":
        schedule, times, x, v = io.fan(geom, z0, cfg.t_start, cfg.t_end, cfg.steps)
        title = f"N={geom.n}, r={io.fmt(geom.radius)}"
        with _output(cfg.out) as fh:
            fh.write(io.render_svg(times, x, title=title))
    else:
        times = io.time_grid(cfg.t_start, cfg.t_end, cfg.steps)
        x, v = io.trajectory(geom, z0, times)
        with _output(cfg.out) as fh:
            if cfg.format == "csv":
                io.write_trajectory_csv(fh, times, x)
            else:
                sched = collision_schedule(geom, z0) if geom.n <= SCHEDULE_MAX_N else None
                doc = io.trajectory_document(cfg.echo(), sched, times, x, v)
                doc["config"]["x0"] = z0.positions.tolist()
                doc["config"]["v0"] = z0.velocities.tolist()
                io.write_json(fh, doc)
    if args.figure:
        from .plotting import plot_fan

        if cfg.format != "svg":
            _, times, x, v = io.fan(geom, z0, cfg.t_start, cfg.t_end, cfg.steps)
        plot_fan(times, x, args.figure, title=f"N={geom.n} hard rods")
    return EXIT_OK


def cmd_classify(args):
    cfg = _config(args, fmt_default="text")
    geom = cfg.geometry
    z0 = cfg.datum()
    check_state(geom, z0)
    cls = classify_datum(geom, z0)
    rec = {
        "tag": cls.tag,
        "witness_time": cls.witness_time,
        "chain": [[i + 1 for i in link] for link in cls.chain],
    }
    with _output(cfg.out) as fh:
        if cfg.format == "json":
            io.write_json(fh, rec)
        else:
            _emit_lines(fh, rec.items())
    return EXIT_OK if cls.is_good else EXIT_INVALID


def compare(geom, z0, times):
    """Deviation between formula and oracle on ``times`` plus conservation drift."""
    oracle = simulate_grid(geom, z0, times)
    p0, e0 = conserved_quantities(z0.velocities)
    dx = dv = dp = de = 0.0
    for t, ref in zip(times, oracle):
        s = evolve(geom, z0, t)
        dx = max(dx, float(np.max(np.abs(s.positions - ref.positions))))
        dv = max(dv, float(np.max(np.abs(s.velocities - ref.velocities))))
        p, e = conserved_quantities(s.velocities)
        dp = max(dp, abs(p - p0))
        de = max(de, abs(e - e0))
    return {
        "max_position_deviation": dx,
        "max_velocity_deviation": dv,
        "momentum_drift": dp,
        "energy_drift": de,
    }


def cmd_compare(args):
    cfg = _config(args, fmt_default="text")
    geom = cfg.geometry
    z0 = cfg.datum()
    check_state(geom, z0)
    times = io.time_grid(cfg.t_start, cfg.t_end, cfg.steps)
    report = {"n": geom.n, "radius": geom.radius, "seed": cfg.seed, "steps": cfg.steps}
    cls = classify_datum(geom, z0)
    report["classification"] = cls.tag
    if not cls.is_good:
        report["witness_time"] = cls.witness_time
        report["chain"] = [[i + 1 for i in link] for link in cls.chain]
    try:
        report.update(compare(geom, z0, times))
        triple = None
    except TripleCollision as exc:
        triple = exc
        report["oracle"] = "TripleCollision"
        report["oracle_time"] = exc.time
        report["oracle_pairs"] = [[a + 1, b + 1] for a, b in exc.pairs]
    if triple is None:
        report["oracle"] = "ok"
        dev = max(report["max_position_deviation"], report["max_velocity_deviation"])
        report["pass"] = bool(cls.is_good and dev <= COMPARE_TOL)
    else:
        report["pass"] = False
    with _output(cfg.out) as fh:
        if cfg.format == "json":
            io.write_json(fh, report)
        else:
            _emit_lines(fh, report.items())
    if triple is not None or not cls.is_good:
        print(
            f"bad datum: classification={cls.tag}, oracle={report['oracle']}",
            file=sys.stderr,
        )
        return EXIT_INVALID
    return EXIT_OK if report["pass"] else EXIT_CHECK


def cmd_liouville(args):
    cfg = _config(args, fmt_default="text")
    geom = cfg.geometry
    if not args.box:
        raise ValueError("--box is required")
    box = _parse_box(args.box, geom.n)
    rep = estimate_pushforward_volume(geom, box, args.t, args.samples, cfg.seed, workers=args.workers)
    doc = rep.to_dict()
    rng = np.random.default_rng(cfg.seed)
    dets = [jacobian_unit_check(SortPermutation(rng.permutation(geom.n)), args.t) for _ in range(100)]
    doc["jacobian_max_abs_det_error"] = float(max(abs(d - 1.0) for d in dets))
    ok = rep.z_score < Z_LIMIT
    if args.beta is not None:
        doc.update(canonical_check(geom, box.position_intervals, args.beta, args.t, min(args.samples, 100_000), cfg.seed))
        ok = ok and doc["canonical_variance_z"] < Z_LIMIT
    doc["pass"] = bool(ok)
    with _output(cfg.out) as fh:
        if cfg.format == "json":
            io.write_json(fh, doc)
        else:
            _emit_lines(fh, doc.items())
    return EXIT_OK if doc["pass"] else EXIT_CHECK


def canonical_check(geom, position_box, beta, t, n, seed):
    """Flow canonical samples by ``t``; report per-sample energy drift and velocity variance."""
    sample = sample_canonical(EnsembleParams(beta, position_box), geom, n, seed)
    xt, vt = evolve_batch(geom, sample.positions, sample.velocities, t)
    e0 = np.einsum("ij,ij->i", sample.velocities, sample.velocities)
    e1 = np.einsum("ij,ij->i", vt, vt)
    m = vt.size
    var = float(np.var(vt, ddof=1))
    target = 0.5 / beta
    sigma = target * math.sqrt(2.0 / (m - 1))
    return {
        "canonical_beta": float(beta),
        "canonical_samples": int(n),
        "canonical_max_energy_drift": float(np.max(np.abs(e1 - e0))),
        "canonical_velocity_variance": var,
        "canonical_variance_target": target,
        "canonical_variance_z": abs(var - target) / sigma,
    }


def cmd_bench(args):
    ns = [int(float(a)) for a in args.ns.split(",")]
    rows = run_bench(
        ns=ns,
        reps=args.reps,
        t=args.t,
        seed=_seed(args),
        radius=args.radius,
        oracle_max_n=args.oracle_max_n,
    )
    with _output(args.out) as fh:
        w = csv.DictWriter(fh, BENCH_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (io.fmt(v) if isinstance(v, float) else v) for k, v in r.items()})
    if args.figure:
        from .plotting import plot_bench

        plot_bench(rows, args.figure)
    return EXIT_OK


def _common(p, n_required=True):
    p.add_argument("--n", type=int, required=n_required, help="number of rods")
    p.add_argument("--radius", type=float, default=0.0, help="rod radius r (diameter 2r)")
    p.add_argument("--x0", help="comma-separated initial positions")
    p.add_argument("--v0", help="comma-separated initial velocities")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (falls back to $ROD_SEED, then 0)")
    p.add_argument("--t-start", type=float, default=0.0)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=11, help="number of grid points")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--strict", action="store_true", help="reject bad data before evaluating")


def build_parser():
    ap = argparse.ArgumentParser(prog="hardrods", description="Exact hard-rod dynamics on a line.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trajectory", help="export x_i(t) on a time grid")
    _common(p)
    p.add_argument("--format", choices=["csv", "json", "svg"], default="csv")
    p.add_argument("--figure", help="also render a matplotlib fan plot to this path")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("compare", help="formula against event-driven oracle")
    _common(p)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("liouville", help="Monte Carlo check of phase-volume invariance")
    _common(p)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--box", help="lo:hi,... (positions) / lo:hi,... (velocities)")
    p.add_argument("--t", type=float, default=1.0, help="flow time")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--beta", type=float, default=None, help="also check canonical-ensemble invariance at this beta")
    p.set_defaults(func=cmd_liouville)

    p = sub.add_parser("bench", help="time formula queries against oracle replay")
    p.add_argument("--ns", default="100,1000,10000,100000")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--radius", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--oracle-max-n", type=int, default=1000)
    p.add_argument("--out")
    p.add_argument("--figure")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("classify", help="good/bad classification of a datum")
    _common(p)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_classify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HardRodError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
