"""Exact dynamics of equal-mass hard rods on a line.

The trajectory of N rods of radius ``r`` is obtained by removing the rod
diameter from the geometry (each centre ``x_i`` is shifted by ``2 r i``),
letting every rod fly freely, and sorting the free-flight point back into
the fundamental chamber ``y_1 <= ... <= y_N``.  The permutation that does the
sorting is the unique Weyl group element of ``A_{N-1}`` whose chamber
contains the free-flight point, so a sum over the N! group elements reduces
to a single ``argsort``.

Indices are 0-based throughout the library.  File formats written by
:mod:`hardrods.io` label rods from 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadDatum, DegenerateLine, OrderViolation, OverlapViolation

#: Absolute slack allowed on gap constraints (length units).
GAP_TOL = 1e-9

#: Relative tolerance under which two meeting times are treated as equal.
TIME_RTOL = 1e-9

# Multiple of machine epsilon (times the coordinate scale) under which two
# free-flight coordinates are treated as tied when choosing velocities.
_TIE_ULPS = 64.0


def times_coincide(t1, t2, rtol=TIME_RTOL):
    """True when two event times agree to ``rtol * max(1, |t1|, |t2|)``."""
    return abs(t1 - t2) <= rtol * max(1.0, abs(t1), abs(t2))


@dataclass(frozen=True)
class RodGeometry:
    """N rods of common radius on the real line.

    ``radius == 0`` describes point particles, i.e. the fundamental table.
    """

    n: int
    radius: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"need an integer rod count n >= 2, got {self.n!r}")
        if not math.isfinite(self.radius) or self.radius < 0:
            raise ValueError(f"radius must be finite and nonnegative, got {self.radius!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    @property
    def offsets(self) -> np.ndarray:
        """Per-rod shift ``2 r i`` for ``i = 1..N``."""
        return self.diameter * np.arange(1, self.n + 1, dtype=float)


@dataclass(frozen=True)
class PhaseState:
    """Positions and velocities of the N rod centres at one instant."""

    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        x = np.array(self.positions, dtype=float)
        v = np.array(self.velocities, dtype=float)
        if x.ndim != 1 or x.shape != v.shape:
            raise ValueError(
                f"positions and velocities must be 1-D of equal length, got {x.shape} and {v.shape}"
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise ValueError("positions and velocities must be finite")
        x.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "velocities", v)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def __eq__(self, other):
        if not isinstance(other, PhaseState):
            return NotImplemented
        return np.array_equal(self.positions, other.positions) and np.array_equal(
            self.velocities, other.velocities
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SortPermutation:
    """A permutation stored as an index map.

    ``apply(y) == y[perm]``; for the permutation returned by
    :func:`sort_with_permutation` this is ``y`` in ascending order.
    """

    perm: np.ndarray

    def __post_init__(self):
        p = np.array(self.perm, dtype=np.intp)
        if p.ndim != 1 or not np.array_equal(np.sort(p), np.arange(p.size)):
            raise ValueError(f"not a permutation of 0..{p.size - 1}: {p}")
        p.flags.writeable = False
        object.__setattr__(self, "perm", p)

    @classmethod
    def identity(cls, n):
        return cls(np.arange(n))

    @property
    def n(self) -> int:
        return self.perm.size

    def apply(self, y):
        return np.asarray(y)[..., self.perm]

    def unapply(self, y):
        """Inverse of :meth:`apply`: ``unapply(apply(y)) == y``."""
        y = np.asarray(y)
        out = np.empty_like(y)
        out[..., self.perm] = y
        return out

    def inverse(self) -> "SortPermutation":
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.n)
        return SortPermutation(inv)

    def compose(self, other: "SortPermutation") -> "SortPermutation":
        """Permutation applying ``other`` first, then ``self``."""
        return SortPermutation(other.perm[self.perm])

    def as_matrix(self) -> np.ndarray:
        """0/1 matrix ``G`` with ``G @ y == apply(y)``."""
        g = np.zeros((self.n, self.n))
        g[np.arange(self.n), self.perm] = 1.0
        return g

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.perm, np.arange(self.n)))

    def __eq__(self, other):
        if not isinstance(other, SortPermutation):
            return NotImplemented
        return np.array_equal(self.perm, other.perm)

    __hash__ = None

    def __repr__(self):
        return f"SortPermutation({self.perm.tolist()})"


@dataclass(frozen=True)
class CollisionSchedule:
    """All meeting times of the free-flight lines, ascending.

    ``pairs[k] = (i, j)`` with ``i < j`` are the rods whose free-flight
    lines cross at ``times[k]``.
    """

    times: np.ndarray
    pairs: np.ndarray

    def __len__(self):
        return int(self.times.size)

    def __iter__(self):
        for t, (i, j) in zip(self.times, self.pairs):
            yield float(t), (int(i), int(j))

    def within(self, t_start, t_end, closed=True) -> "CollisionSchedule":
        """Events with ``t_start <= t <= t_end`` (open interval when ``closed`` is false)."""
        if closed:
            mask = (self.times >= t_start) & (self.times <= t_end)
        else:
            mask = (self.times > t_start) & (self.times < t_end)
        return CollisionSchedule(self.times[mask], self.pairs[mask])


@dataclass(frozen=True)
class DatumClass:
    """Classification of an initial datum.

    For a bad datum ``witness_time`` is the earliest time at which three or
    more free-flight coordinates coincide and ``chain`` lists the maximal
    coincident index sets (links) at that time.
    """

    tag: str
    witness_time: float | None = None
    chain: tuple = field(default_factory=tuple)

    @property
    def is_good(self) -> bool:
        return self.tag == "Good"

    @classmethod
    def good(cls):
        return cls("Good")


def _fundamental_positions(geom, positions):
    return np.asarray(positions, dtype=float) - geom.offsets


def _check_geometry(geom, state):
    if state.n != geom.n:
        raise ValueError(f"state has {state.n} rods, geometry expects {geom.n}")


def to_fundamental(geom: RodGeometry, state: PhaseState) -> PhaseState:
    """Remove the rod diameter: ``y_i = x_i - 2 r i``.

    Raises :class:`OrderViolation` when some gap is below ``2r`` by more than
    :data:`GAP_TOL`.
    """
    _check_geometry(geom, state)
    y = _fundamental_positions(geom, state.positions)
    gaps = np.diff(y)
    if gaps.size and gaps.min() < -GAP_TOL:
        k = int(np.argmin(gaps))
        raise OrderViolation(
            f"rods {k} and {k + 1} are {state.positions[k + 1] - state.positions[k]:.17g} apart, "
            f"below the diameter {geom.diameter:.17g}"
        )
    return PhaseState(y, state.velocities)


def from_fundamental(geom: RodGeometry, state: PhaseState) -> PhaseState:
    """Inverse of :func:`to_fundamental`."""
    _check_geometry(geom, state)
    return PhaseState(state.positions + geom.offsets, state.velocities)


def check_state(geom: RodGeometry, state: PhaseState) -> np.ndarray:
    """Validate a datum in the ordered component and return its fundamental positions.

    Besides the gap condition, rods in contact must carry a pre-collisional
    (approaching or grazing) velocity pair, because velocities are left
    derivatives of the trajectory.
    """
    y = to_fundamental(geom, state).positions
    v = state.velocities
    contact = np.diff(y) <= GAP_TOL
    receding = v[:-1] < v[1:]
    bad = np.flatnonzero(contact & receding)
    if bad.size:
        k = int(bad[0])
        raise OrderViolation(
            f"rods {k} and {k + 1} are in contact with post-collisional velocities "
            f"({v[k]:.17g}, {v[k + 1]:.17g})"
        )
    return y


def sort_with_permutation(y):
    """Sort ``y`` ascending and return ``(sorted, SortPermutation)``; ties keep input order."""
    y = np.asarray(y, dtype=float)
    perm = np.argsort(y, kind="stable")
    return y[perm], SortPermutation(perm)


def _left_limit_order(p, v, scale):
    # Stable sort of the free-flight point, then inside each run of tied
    # coordinates order by descending velocity: the ordering just before
    # the tie, i.e. the left limit in time.  Works row-wise on 2-D input.
    order = np.argsort(p, axis=-1, kind="stable")
    ps = np.take_along_axis(p, order, axis=-1)
    vs = np.take_along_axis(v, order, axis=-1)
    tol = _TIE_ULPS * np.finfo(float).eps * scale
    tied = np.diff(ps, axis=-1) <= tol
    if not tied.any():
        return order
    starts = np.concatenate([np.ones(ps.shape[:-1] + (1,), dtype=bool), ~tied], axis=-1)
    group = np.cumsum(starts, axis=-1)
    sub = np.lexsort((-vs, group), axis=-1)
    return np.take_along_axis(order, sub, axis=-1)


def _tie_scale(y, v, t):
    return np.max(np.abs(y), axis=-1, keepdims=True) + abs(t) * np.max(
        np.abs(v), axis=-1, keepdims=True
    )


def _prepare(geom, z0, strict):
    y = check_state(geom, z0)
    if strict:
        cls = classify_datum(geom, z0)
        if not cls.is_good:
            raise BadDatum(
                f"datum is bad: links {format_chain(cls.chain)} meet at t={cls.witness_time:.17g}",
                cls,
            )
    return y


def evolve(geom: RodGeometry, z0: PhaseState, t: float, strict: bool = False) -> PhaseState:
    """Position and (left-limit) velocity at time ``t``.

    Parameters
    ----------
    geom : RodGeometry
    z0 : PhaseState
        Initial datum in the ordered component.
    t : float
        Query time, any sign.
    strict : bool
        Classify the datum first and raise :class:`BadDatum` when three or
        more rods ever meet.  Classification is O(N^2), the query itself is
        O(N log N).
    """
    y = _prepare(geom, z0, strict)
    v = z0.velocities
    p = y + t * v
    order = _left_limit_order(p, v, _tie_scale(y, v, t))
    return PhaseState(p[order] + geom.offsets, v[order])


def evaluate_position(geom: RodGeometry, z0: PhaseState, t: float, strict: bool = False) -> np.ndarray:
    """Rod centres at time ``t``: the sorted free-flight point shifted back by ``2 r i``.

    Sorting is continuous, so collision instants need no special handling.
    """
    y = _prepare(geom, z0, strict)
    return np.sort(y + t * z0.velocities) + geom.offsets


def evaluate_velocity(geom: RodGeometry, z0: PhaseState, t: float, strict: bool = False) -> np.ndarray:
    """Velocities at time ``t``; at a collision instant the pre-collisional (left-limit) value."""
    return evolve(geom, z0, t, strict=strict).velocities


def evolve_batch(geom: RodGeometry, positions, velocities, t):
    """Vectorised :func:`evolve` over rows of ``(M, N)`` arrays.

    Rows are assumed to lie in the ordered component; no validation or
    classification is done.
    """
    x = np.asarray(positions, dtype=float)
    v = np.asarray(velocities, dtype=float)
    y = x - geom.offsets
    p = y + t * v
    order = _left_limit_order(p, v, _tie_scale(y, v, t))
    return (
        np.take_along_axis(p, order, axis=-1) + geom.offsets,
        np.take_along_axis(v, order, axis=-1),
    )


def collision_schedule(geom: RodGeometry, z0: PhaseState) -> CollisionSchedule:
    """Every time at which two free-flight lines of the datum cross.

    Works in fundamental coordinates, so for ``r > 0`` the times are the
    instants at which the two rods are a diameter apart.  Crossings whose
    time overflows binary64 are omitted.  Memory is O(N^2).
    """
    y = to_fundamental(geom, z0).positions
    v = z0.velocities
    i, j = np.triu_indices(geom.n, k=1)
    dy = y[j] - y[i]
    dv = v[i] - v[j]
    frozen = dv == 0
    stuck = frozen & (np.abs(dy) <= GAP_TOL)
    if stuck.any():
        k = int(np.flatnonzero(stuck)[0])
        raise DegenerateLine(f"rods {i[k]} and {j[k]} share position and velocity")
    with np.errstate(over="ignore"):
        times = np.where(frozen, np.inf, dy / np.where(frozen, 1.0, dv))
    # meetings beyond the float range are not representable instants
    live = np.isfinite(times)
    times = times[live]
    pairs = np.stack([i[live], j[live]], axis=1)
    order = np.argsort(times, kind="stable")
    return CollisionSchedule(times[order], pairs[order])


def _coincident_clusters(times):
    # Split sorted times into runs whose neighbours coincide.
    if times.size == 0:
        return []
    scale = np.maximum(1.0, np.maximum(np.abs(times[1:]), np.abs(times[:-1])))
    breaks = np.flatnonzero(np.diff(times) > TIME_RTOL * scale) + 1
    return np.split(np.arange(times.size), breaks)


def _components(pairs):
    parent = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for a in list(parent):
        groups.setdefault(find(a), []).append(a)
    return [tuple(sorted(g)) for g in groups.values()]


def classify_datum(geom: RodGeometry, z0: PhaseState) -> DatumClass:
    """Decide whether the free-flight line ever puts three or more rods at one point.

    Meeting times that agree within :data:`TIME_RTOL` are grouped; a group of
    crossings whose index pairs connect three or more rods is a multiple
    collision.  Simultaneous crossings of disjoint pairs are good.
    """
    sched = collision_schedule(geom, z0)
    for cluster in _coincident_clusters(sched.times):
        if cluster.size < 2:
            continue
        links = [c for c in _components(sched.pairs[cluster]) if len(c) >= 3]
        if links:
            return DatumClass("Bad", float(sched.times[cluster[0]]), tuple(sorted(links)))
    return DatumClass.good()


def format_chain(chain, base=1):
    return "[" + ", ".join("{" + ",".join(str(i + base) for i in link) + "}" for link in chain) + "]"


def canonicalize(geom: RodGeometry, state: PhaseState):
    """Relabel rods in any order into the ascending component.

    Returns ``(canonical_state, perm)`` where ``perm.apply`` sorts the
    labels.  A trajectory on the original component is recovered with
    ``perm.unapply`` on each output vector (see :func:`evolve_any`).
    """
    _check_geometry(geom, state)
    xs, perm = sort_with_permutation(state.positions)
    gaps = np.diff(xs)
    if gaps.size and gaps.min() < geom.diameter - GAP_TOL:
        k = int(np.argmin(gaps))
        a, b = int(perm.perm[k]), int(perm.perm[k + 1])
        raise OverlapViolation(
            f"rods {a} and {b} are {gaps[k]:.17g} apart, below the diameter {geom.diameter:.17g}"
        )
    return PhaseState(xs, perm.apply(state.velocities)), perm


def evolve_any(geom: RodGeometry, state: PhaseState, t: float, strict: bool = False) -> PhaseState:
    """:func:`evolve` for a datum on any component of the table, labels preserved."""
    canon, perm = canonicalize(geom, state)
    out = evolve(geom, canon, t, strict=strict)
    return PhaseState(perm.unapply(out.positions), perm.unapply(out.velocities))


def conserved_quantities(v):
    """Total momentum ``sum(v)`` and energy ``sum(v**2)``.

    Sums are exactly rounded, so any permutation of ``v`` gives bitwise
    identical results.
    """
    v = np.asarray(v, dtype=float)
    return math.fsum(v.tolist()), math.fsum((v * v).tolist())


def random_state(geom: RodGeometry, rng, mean_gap: float = 1.0, speed: float = 1.0, start: float = 0.0):
    """A random datum in the ordered component.

    Free gaps are exponential with mean ``mean_gap`` on top of the diameter,
    velocities are normal with standard deviation ``speed``.  The datum is
    good with probability one but is not classified here.
    """
    gaps = geom.diameter + rng.exponential(mean_gap, size=geom.n - 1)
    x = start + np.concatenate([[0.0], np.cumsum(gaps)])
    return PhaseState(x, rng.normal(0.0, speed, size=geom.n))


def random_good_state(geom: RodGeometry, rng, tries: int = 100, **kw):
    """:func:`random_state` redrawn until :func:`classify_datum` reports it good."""
    for _ in range(tries):
        z = random_state(geom, rng, **kw)
        if classify_datum(geom, z).is_good:
            return z
    raise RuntimeError("could not draw a good datum")
