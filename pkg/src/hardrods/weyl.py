"""Brute-force evaluation of the Weyl group sum for small N.

The group is generated from the reflections ``I - (e_i - e_j)(e_i - e_j)^T``
by closure under multiplication, independently of any sorting routine, and
the trajectory is the sum of ``1[g y in c] * g y`` over all N! elements.
Only meant as a reference for N <= 6.
"""

import numpy as np

MAX_N = 6


def reflection(n, i, j):
    a = np.zeros(n)
    a[i], a[j] = 1.0, -1.0
    return np.eye(n) - np.outer(a, a)


def weyl_group(n):
    """All elements of the Weyl group of ``A_{n-1}`` as ``n x n`` matrices."""
    if n > MAX_N:
        raise ValueError(f"enumeration limited to n <= {MAX_N}")
    gens = [reflection(n, i, j) for i in range(n) for j in range(i + 1, n)]
    seen = {np.eye(n).tobytes(): np.eye(n)}
    frontier = [np.eye(n)]
    while frontier:
        nxt = []
        for g in frontier:
            for s in gens:
                h = s @ g
                key = h.tobytes()
                if key not in seen:
                    seen[key] = h
                    nxt.append(h)
        frontier = nxt
    return list(seen.values())


def in_fundamental_chamber(y):
    """Open chamber ``c``: ``y . (e_j - e_i) > 0`` for all ``i < j``."""
    y = np.asarray(y)
    n = y.size
    return all(y[j] - y[i] > 0 for i in range(n) for j in range(i + 1, n))


def chamber_element(y, group=None):
    """The unique group element ``g`` with ``g y`` in the open chamber, or None on a wall."""
    group = weyl_group(len(y)) if group is None else group
    hits = [g for g in group if in_fundamental_chamber(g @ y)]
    if len(hits) > 1:
        raise AssertionError("chambers overlap")
    return hits[0] if hits else None


def weyl_sum(y, w, group=None):
    """``sum_g 1[g y in c] (g y, g w)`` over the whole group.

    Returns ``(position, velocity, count)`` where ``count`` is the number of
    nonzero indicators (1 off the walls, 0 on them).
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    group = weyl_group(y.size) if group is None else group
    pos = np.zeros_like(y)
    vel = np.zeros_like(w)
    count = 0
    for g in group:
        gy = g @ y
        if in_fundamental_chamber(gy):
            pos = pos + gy
            vel = vel + g @ w
            count += 1
    return pos, vel, count


def weyl_evolve(geom, z0, t, group=None):
    """Shifted Weyl sum for rods of radius ``geom.radius``; undefined on collision instants."""
    y0 = np.asarray(z0.positions, dtype=float) - geom.offsets
    pos, vel, count = weyl_sum(y0 + t * z0.velocities, z0.velocities, group)
    if count == 0:
        return None
    return pos + geom.offsets, vel
