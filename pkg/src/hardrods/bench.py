"""Timing of single-time formula queries against full event-driven replay."""

import time

import numpy as np

from .core import RodGeometry, evolve, random_state
from .oracle import simulate_to


def _median_time(fn, reps):
    out = []
    for _ in range(reps):
        t0 = time.perf_counter()
        res = fn()
        out.append(time.perf_counter() - t0)
    return float(np.median(out)), res


def run_bench(ns=(100, 1000, 10000, 100000), reps=10, t=1.0, seed=0, radius=0.0, oracle_max_n=1000):
    """One row per N: median formula query time and, up to ``oracle_max_n``, oracle replay time.

    The oracle scans all N gaps per collision and the number of collisions
    grows with N, so replay is skipped (NaN) beyond ``oracle_max_n``.
    """
    rows = []
    rng = np.random.default_rng(seed)
    for n in ns:
        geom = RodGeometry(int(n), radius)
        z0 = random_state(geom, rng)
        f_med, _ = _median_time(lambda: evolve(geom, z0, t), reps)
        o_med, events = float("nan"), -1
        if n <= oracle_max_n:
            o_med, log = _median_time(lambda: simulate_to(geom, z0, t), reps)
            events = len(log.events)
        rows.append(
            {
                "n": int(n),
                "t": float(t),
                "reps": int(reps),
                "formula_median_s": f_med,
                "oracle_median_s": o_med,
                "oracle_events": events,
            }
        )
    return rows


BENCH_COLUMNS = ["n", "t", "reps", "formula_median_s", "oracle_median_s", "oracle_events"]
