"""Event-driven reference simulator for equal-mass elastic hard rods.

Rods fly freely between contacts; at a contact the two velocities are
exchanged, which is the only momentum- and energy-conserving outcome of a
binary collision of equal masses.  Event times are recomputed from absolute
positions after every collision.  The simulator works in physical
coordinates and shares nothing with :mod:`hardrods.core` beyond the data
types, so it can serve as an independent check of the sorting formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GAP_TOL, TIME_RTOL, PhaseState, RodGeometry
from .errors import OrderViolation, TripleCollision


@dataclass(frozen=True)
class CollisionEvent:
    time: float
    pair: tuple


@dataclass(frozen=True)
class EventLog:
    events: list
    final_state: PhaseState
    horizon: float


def _validate(geom, state):
    if state.n != geom.n:
        raise ValueError(f"state has {state.n} rods, geometry expects {geom.n}")
    gaps = np.diff(state.positions) - geom.diameter
    if gaps.size and gaps.min() < -GAP_TOL:
        k = int(np.argmin(gaps))
        raise OrderViolation(f"rods {k} and {k + 1} overlap by {-gaps[k]:.3g}")


def _contact_times(x, v, diameter):
    gap = np.maximum(x[1:] - x[:-1] - diameter, 0.0)
    closing = v[:-1] - v[1:]
    dt = np.full(gap.shape, np.inf)
    approach = closing > 0
    dt[approach] = gap[approach] / closing[approach]
    return dt


def next_collision(geom: RodGeometry, state: PhaseState):
    """Earliest future contact of an approaching adjacent pair, or None.

    A pair already in contact and approaching collides at time 0.
    """
    _validate(geom, state)
    dt = _contact_times(state.positions, state.velocities, geom.diameter)
    if dt.size == 0 or not np.isfinite(dt).any():
        return None
    k = int(np.argmin(dt))
    return CollisionEvent(float(dt[k]), (k, k + 1))


def _sweep(geom, x, v, stops, swap_at_stop):
    """Run forward from time 0 through ascending nonnegative ``stops``.

    Returns the list of events and the state at every stop.  A collision
    landing on a stop (within tolerance) is resolved only when
    ``swap_at_stop`` is set; otherwise the stop reports the pre-collisional
    velocities.
    """
    x = np.array(x, dtype=float)
    v = np.array(v, dtype=float)
    n = x.size
    budget = n * (n - 1) + 16
    t = 0.0
    events = []
    snapshots = []
    for stop in stops:
        while True:
            dt = _contact_times(x, v, geom.diameter)
            dt_min = dt.min() if dt.size else np.inf
            t_hit = t + dt_min
            tol_stop = TIME_RTOL * max(1.0, abs(stop))
            if t_hit > stop + tol_stop:
                x += (stop - t) * v
                t = stop
                break
            at_stop = t_hit >= stop - tol_stop
            if at_stop and not swap_at_stop:
                x += (stop - t) * v
                t = stop
                break
            tol_hit = TIME_RTOL * max(1.0, abs(t_hit))
            ks = np.flatnonzero(t + dt <= t_hit + tol_hit)
            if np.any(np.diff(ks) == 1):
                k = int(ks[np.flatnonzero(np.diff(ks) == 1)[0]])
                raise TripleCollision(
                    f"rods {k}, {k + 1}, {k + 2} meet at t={t_hit:.17g}",
                    time=t_hit,
                    pairs=[(int(a), int(a) + 1) for a in ks],
                )
            if at_stop:
                t_hit = stop
            x += (t_hit - t) * v
            t = t_hit
            for k in ks:
                v[k], v[k + 1] = v[k + 1], v[k]
                events.append(CollisionEvent(float(t), (int(k), int(k) + 1)))
            if len(events) > budget:
                raise RuntimeError("event budget exceeded; simulation is not converging")
            if at_stop:
                break
        snapshots.append(PhaseState(x.copy(), v.copy()))
    return events, snapshots


def simulate_to(geom: RodGeometry, z0: PhaseState, t_final: float) -> EventLog:
    """Advance ``z0`` to ``t_final`` by event-driven dynamics.

    Negative ``t_final`` runs the time-reversed system (negated velocities)
    forward and negates back.  The returned velocities follow the
    left-limit convention at a collision instant in both directions.
    """
    _validate(geom, z0)
    t_final = float(t_final)
    if t_final >= 0:
        events, (final,) = _sweep(geom, z0.positions, z0.velocities, [t_final], False)
        return EventLog(events, final, t_final)
    events, (final,) = _sweep(geom, z0.positions, -z0.velocities, [-t_final], True)
    events = [CollisionEvent(-e.time, e.pair) for e in reversed(events)]
    return EventLog(events, PhaseState(final.positions, -final.velocities), t_final)


def simulate_grid(geom: RodGeometry, z0: PhaseState, times):
    """States at each of ``times`` (any order, any sign) from two sweeps.

    Equivalent to calling :func:`simulate_to` for each time, but every
    collision is processed once.
    """
    _validate(geom, z0)
    times = np.asarray(times, dtype=float)
    out = [None] * times.size
    fwd = np.flatnonzero(times >= 0)
    bwd = np.flatnonzero(times < 0)
    if fwd.size:
        order = fwd[np.argsort(times[fwd], kind="stable")]
        _, snaps = _sweep(geom, z0.positions, z0.velocities, times[order], False)
        for k, s in zip(order, snaps):
            out[k] = s
    if bwd.size:
        order = bwd[np.argsort(-times[bwd], kind="stable")]
        _, snaps = _sweep(geom, z0.positions, -z0.velocities, -times[order], True)
        for k, s in zip(order, snaps):
            out[k] = PhaseState(s.positions, -s.velocities)
    return out
