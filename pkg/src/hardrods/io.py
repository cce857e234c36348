"""Trajectory tables and their CSV, JSON and SVG serialisations.

Rods are labelled from 1 in every file format (``x_1 .. x_N``, schedule
pairs), matching the usual physics notation; the library is 0-based.
"""

from __future__ import annotations

import csv
import json
import re
from xml.sax.saxutils import escape

import numpy as np

from .core import PhaseState, RodGeometry, collision_schedule, evolve


def fmt(x) -> str:
    """17 significant digits: round-trip safe for binary64."""
    return format(float(x), ".17g")


def time_grid(t_start, t_end, steps):
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if t_start > t_end:
        raise ValueError("t_start must not exceed t_end")
    return np.linspace(t_start, t_end, int(steps))


def trajectory(geom: RodGeometry, z0: PhaseState, times):
    """Positions and velocities at each time, shapes ``(T, N)``."""
    states = [evolve(geom, z0, t) for t in times]
    x = np.array([s.positions for s in states]).reshape(len(states), geom.n)
    v = np.array([s.velocities for s in states]).reshape(len(states), geom.n)
    return x, v


def fan_times(schedule, t_start, t_end, steps):
    """The time grid merged with every schedule time inside the window."""
    grid = time_grid(t_start, t_end, steps)
    inside = schedule.within(t_start, t_end).times
    return np.unique(np.concatenate([grid, inside]))


def kink_times(times, x, rel=32.0):
    """Abscissae where some polyline changes slope.

    Adjacent segment slopes are compared against their own rounding noise,
    ``rel * eps * max|x| * (1/dt_left + 1/dt_right)``.
    """
    times = np.asarray(times, dtype=float)
    x = np.asarray(x, dtype=float)
    if times.size < 3:
        return np.array([])
    dt = np.diff(times)
    slope = np.diff(x, axis=0) / dt[:, None]
    jump = np.abs(np.diff(slope, axis=0))
    scale = max(1.0, float(np.max(np.abs(x))))
    noise = rel * np.finfo(float).eps * scale * (1.0 / dt[:-1] + 1.0 / dt[1:])
    kinked = np.any(jump > noise[:, None], axis=1)
    return times[1:-1][kinked]


def write_trajectory_csv(fh, times, x):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t"] + [f"x_{i + 1}" for i in range(x.shape[1])])
    for t, row in zip(times, x):
        w.writerow([fmt(t)] + [fmt(a) for a in row])


def read_trajectory_csv(fh):
    rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(a) for a in r] for r in body]).reshape(len(body), len(header))
    return header, data[:, 0], data[:, 1:]


def schedule_records(schedule):
    return [{"time": t, "pair": [i + 1, j + 1]} for t, (i, j) in schedule]


def trajectory_document(config, schedule, times, x, v):
    return {
        "config": config,
        "schedule": None if schedule is None else schedule_records(schedule),
        "samples": [
            {"t": float(t), "positions": xs.tolist(), "velocities": vs.tolist()}
            for t, xs, vs in zip(times, x, v)
        ],
    }


def write_json(fh, doc):
    json.dump(doc, fh, indent=2, allow_nan=True)
    fh.write("\n")


SVG_WIDTH = 960
SVG_HEIGHT = 720
_MARGIN = 60


def render_svg(times, x, title=""):
    """Upright fan plot: time on the horizontal axis, one ``<polyline>`` per rod.

    Vertices are written in data units under a single affine transform so
    the file carries the exact sampled values.
    """
    times = np.asarray(times, dtype=float)
    x = np.asarray(x, dtype=float)
    t0, t1 = float(times[0]), float(times[-1])
    if t1 == t0:
        t0, t1 = t0 - 0.5, t1 + 0.5
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    w = SVG_WIDTH - 2 * _MARGIN
    h = SVG_HEIGHT - 2 * _MARGIN
    sx, sy = w / (t1 - t0), h / (hi - lo)
    tx = _MARGIN - sx * t0
    ty = _MARGIN + h + sy * lo
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">',
        f'<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<rect x="{_MARGIN}" y="{_MARGIN}" width="{w}" height="{h}" fill="none" stroke="black"/>',
        f'<text x="{SVG_WIDTH / 2}" y="{SVG_HEIGHT - 15}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">t  [{fmt(t0)}, {fmt(t1)}]</text>',
        f'<text x="20" y="{SVG_HEIGHT / 2}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14" transform="rotate(-90 20 {SVG_HEIGHT / 2})">x  [{fmt(lo)}, {fmt(hi)}]</text>',
    ]
    if title:
        out.append(
            f'<text x="{SVG_WIDTH / 2}" y="30" text-anchor="middle" font-family="sans-serif" '
            f'font-size="16">{escape(title)}</text>'
        )
    out.append(
        f'<g transform="matrix({fmt(sx)} 0 0 {fmt(-sy)} {fmt(tx)} {fmt(ty)})" fill="none" '
        f'stroke="black" stroke-width="0.6" vector-effect="non-scaling-stroke">'
    )
    for i in range(x.shape[1]):
        pts = " ".join(f"{fmt(t)},{fmt(a)}" for t, a in zip(times, x[:, i]))
        out.append(f'<polyline data-rod="{i + 1}" vector-effect="non-scaling-stroke" points="{pts}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


_POLY = re.compile(r'<polyline[^>]*points="([^"]*)"')


def parse_svg_polylines(text):
    """Vertices of every ``<polyline>`` in an SVG produced by :func:`render_svg`."""
    lines = []
    for m in _POLY.finditer(text):
        pts = [p.split(",") for p in m.group(1).split()]
        lines.append(np.array([[float(a), float(b)] for a, b in pts]))
    return lines


def fan(geom, z0, t_start, t_end, steps):
    """Times (grid plus schedule) and positions for a fan plot."""
    schedule = collision_schedule(geom, z0)
    times = fan_times(schedule, t_start, t_end, steps)
    x, v = trajectory(geom, z0, times)
    return schedule, times, x, v
