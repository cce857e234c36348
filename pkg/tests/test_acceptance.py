"""Acceptance gates. Each test records a PASS/FAIL line in the terminal summary."""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_RESULTS, random_good_case
from hardrods import io
from hardrods.core import (
    GAP_TOL,
    RodGeometry,
    SortPermutation,
    collision_schedule,
    conserved_quantities,
    evolve,
    evolve_batch,
    random_good_state,
    random_state,
    sort_with_permutation,
    to_fundamental,
)
from hardrods.measure import (
    EnsembleParams,
    PhaseBox,
    estimate_pushforward_volume,
    jacobian_unit_check,
    sample_canonical,
)
from hardrods.oracle import simulate_grid
from hardrods.weyl import chamber_element, weyl_evolve, weyl_group


def record(key, ok, detail):
    ACCEPTANCE_RESULTS[key] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
    return ok


@pytest.fixture(scope="module")
def oracle_sweep():
    """1000 good data, 16 times each, run through both evaluators."""
    rng = np.random.default_rng(1)
    dev = 0.0
    drift_ratio = 0.0
    start = time.perf_counter()
    for _ in range(1000):
        geom, z0 = random_good_case(rng)
        times = np.sort(rng.uniform(-10, 10, size=16))
        ref = simulate_grid(geom, z0, times)
        p0, e0 = conserved_quantities(z0.velocities)
        bound = 1e-12 * geom.n * max(1.0, e0)
        for t, r in zip(times, ref):
            s = evolve(geom, z0, t)
            dev = max(dev, float(np.max(np.abs(s.positions - r.positions))),
                      float(np.max(np.abs(s.velocities - r.velocities))))
            p, e = conserved_quantities(s.velocities)
            drift_ratio = max(drift_ratio, abs(p - p0) / bound, abs(e - e0) / bound)
    return dev, drift_ratio, time.perf_counter() - start


def test_01_oracle_equivalence(oracle_sweep):
    dev, _, elapsed = oracle_sweep
    ok = record("01 oracle equivalence", dev <= 1e-8 and elapsed <= 60,
                f"max deviation {dev:.3g} (<= 1e-8), {elapsed:.1f} s (<= 60 s)")
    assert ok


def test_02_weyl_brute_force():
    rng = np.random.default_rng(2)
    groups = {n: weyl_group(n) for n in range(2, 6)}
    mismatches = 0
    for _ in range(200):
        geom, z0 = random_good_case(rng, n_range=(2, 5))
        t = float(rng.uniform(-10, 10))
        y = to_fundamental(geom, z0).positions + t * z0.velocities
        _, g = sort_with_permutation(y)
        w = chamber_element(y, groups[geom.n])
        pos, vel = weyl_evolve(geom, z0, t, groups[geom.n])
        s = evolve(geom, z0, t)
        same = (
            w is not None
            and np.array_equal(w, g.as_matrix())
            and np.array_equal(pos, s.positions)
            and np.array_equal(vel, s.velocities)
        )
        mismatches += not same
    ok = record("02 weyl brute force", mismatches == 0, f"{mismatches} of 200 data differ bitwise")
    assert ok


def test_03_conservation(oracle_sweep):
    _, ratio, _ = oracle_sweep
    ok = record("03 conservation", ratio <= 1.0,
                f"max drift / (1e-12 N max(1,|V0|^2)) = {ratio:.3g} (<= 1)")
    assert ok


def test_04_removable_discontinuity():
    rng = np.random.default_rng(4)
    worst_pos = 0.0
    vel_failures = 0
    checked = 0
    for _ in range(100):
        geom, z0 = random_good_case(rng)
        taus = np.unique(collision_schedule(geom, z0).times)
        vmax = float(np.max(np.abs(z0.velocities)))
        prev = -np.inf
        for tau in taus:
            before = evolve(geom, z0, tau - 1e-6).positions
            after = evolve(geom, z0, tau + 1e-6).positions
            worst_pos = max(worst_pos, float(np.max(np.abs(before - after)) / (2e-6 * vmax + 1e-9)))
            # step back no further than halfway to the preceding event
            eps = min(1e-6, 0.5 * (tau - prev))
            if not np.array_equal(evolve(geom, z0, tau).velocities, evolve(geom, z0, tau - eps).velocities):
                vel_failures += 1
            prev = tau
            checked += 1
    ok = record("04 removable discontinuity", worst_pos <= 1.0 and vel_failures == 0,
                f"{checked} events, position jump ratio {worst_pos:.6f} (<= 1), "
                f"{vel_failures} velocity left-limit mismatches")
    assert ok


def test_05_schedule_cardinality():
    rng = np.random.default_rng(5)
    wrong = []
    for n in range(2, 17):
        for _ in range(20):
            geom = RodGeometry(n, float(rng.choice([0.0, 0.25, 1.0])))
            z0 = random_state(geom, rng)
            dv = np.abs(np.subtract.outer(z0.velocities, z0.velocities))
            assert np.all(dv[~np.eye(n, dtype=bool)] > 0)
            if len(collision_schedule(geom, z0)) != n * (n - 1) // 2:
                wrong.append(n)
    ok = record("05 schedule cardinality", not wrong, f"N=2..16, 20 data each, mismatched N: {sorted(set(wrong))}")
    assert ok


LIOUVILLE_CASES = [
    (RodGeometry(2, 0.0), PhaseBox([[0, 1], [2, 3]], [[-1, 1]] * 2)),
    (RodGeometry(3, 0.25), PhaseBox([[0, 1.5], [0.5, 2], [1, 2.5]], [[-1, 1]] * 3)),
]


def test_06_liouville():
    start = time.perf_counter()
    zs = []
    ok = True
    for geom, box in LIOUVILLE_CASES:
        for t in (0.5, 1.0, 2.0):
            # a failed run is repeated once with a fresh seed
            for seed in (int(10 * t), int(10 * t) + 1000):
                rep = estimate_pushforward_volume(geom, box, t, 1_000_000, seed, workers=4)
                if rep.z_score < 3:
                    break
            zs.append(rep.z_score)
            ok &= rep.z_score < 3
    rng = np.random.default_rng(6)
    jac = 0.0
    for _ in range(10_000):
        n = int(rng.integers(2, 33))
        g = SortPermutation(rng.permutation(n))
        jac = max(jac, abs(jacobian_unit_check(g, float(rng.uniform(-10, 10))) - 1.0))
    elapsed = time.perf_counter() - start
    ok &= jac <= 1e-12 and elapsed <= 300
    ok = record("06 liouville invariance", ok,
                f"z-scores {', '.join(f'{z:.2f}' for z in zs)} (< 3), "
                f"max |det-1| {jac:.2g} (<= 1e-12), {elapsed:.1f} s (<= 300 s)")
    assert ok


def test_07_canonical_ensemble():
    geom = RodGeometry(6, 0.25)
    params = EnsembleParams(1.0, [[0, 3], [0.5, 3.5], [1, 4], [1.5, 4.5], [2, 5], [2.5, 5.5]])
    s = sample_canonical(params, geom, 100_000, seed=7)
    _, vt = evolve_batch(geom, s.positions, s.velocities, 1.0)
    e0 = np.einsum("ij,ij->i", s.velocities, s.velocities)
    e1 = np.einsum("ij,ij->i", vt, vt)
    drift = float(np.max(np.abs(e1 - e0)))
    var = float(np.var(vt, ddof=1))
    sigma = 0.5 * math.sqrt(2.0 / (vt.size - 1))
    z = abs(var - 0.5) / sigma
    ok = record("07 canonical ensemble", drift <= 1e-12 and z < 3,
                f"energy drift {drift:.2g} (<= 1e-12), variance {var:.5f} at {z:.2f} sigma from 1/2 (< 3)")
    assert ok


def test_08_fan_plot(tmp_path):
    geom = RodGeometry(100, 0.05)
    z0 = random_good_state(geom, np.random.default_rng(8), mean_gap=1.0)
    t0, t1 = -10.0, 10.0
    schedule, times, x, _ = io.fan(geom, z0, t0, t1, 201)
    svg = io.render_svg(times, x, title="N=100")
    (tmp_path / "fan.svg").write_text(svg)
    lines = io.parse_svg_polylines(svg)
    xs = np.column_stack([ln[:, 1] for ln in lines])
    ordered = bool(np.all(np.diff(xs, axis=1) >= geom.diameter - GAP_TOL))
    kinks = io.kink_times(lines[0][:, 0], xs)
    inside = schedule.within(t0, t1, closed=False).times
    crossings = np.unique(inside)
    ok = (
        len(lines) == 100
        and ordered
        and len(kinks) <= 4950
        and len(kinks) == len(crossings)
        and np.array_equal(kinks, crossings)
    )
    ok = record("08 fan plot", ok,
                f"{len(lines)} polylines, ordered={ordered}, {len(kinks)} kinks, "
                f"{len(crossings)} crossings in window (<= 4950)")
    assert ok


def test_09_performance():
    geom = RodGeometry(100_000, 0.25)
    z0 = random_state(geom, np.random.default_rng(9))
    evolve(geom, z0, 1.0)
    runs = []
    for _ in range(10):
        t = time.perf_counter()
        evolve(geom, z0, 1.0)
        runs.append(time.perf_counter() - t)
    med = float(np.median(runs))
    ok = record("09 performance", med <= 0.1, f"N=1e5 query median {1e3 * med:.1f} ms (<= 100 ms)")
    assert ok
