"""Monte Carlo checks that the hard-rod flow preserves phase-space volume.

The flow is piecewise affine: on the set where the free-flight point lies in
a fixed Weyl chamber it acts as ``diag(g, g) (I + t * shear)`` with ``g`` a
permutation.  :func:`jacobian_unit_check` verifies the unit determinant of
each branch, and :func:`estimate_pushforward_volume` compares the volume of
a box with the volume of its preimage under the flow by counting samples.

Random streams are derived counter-style from ``(seed, stream, chunk)`` via
``numpy.random.SeedSequence`` feeding PCG64, so results do not depend on how
chunks are spread over workers.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .core import TIME_RTOL, PhaseState, RodGeometry, SortPermutation, evolve_batch
from .errors import EmptyTarget, RejectionStall

RNG_NAME = "numpy PCG64 seeded by SeedSequence([seed, stream, chunk])"
CHUNK = 1 << 16

_STREAM_BEFORE = 0
_STREAM_AFTER = 1
_STREAM_CANONICAL = 2
_STREAM_VELOCITY = 3


def chunk_rng(seed, stream, chunk):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), stream, chunk])))


def _intervals(a, name):
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError(f"{name} must have shape (N, 2), got {a.shape}")
    if not np.all(np.isfinite(a)) or np.any(a[:, 1] <= a[:, 0]):
        raise ValueError(f"{name} must be finite with lo < hi in every row")
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PhaseBox:
    """Product of closed position and velocity intervals, each given as (N, 2) ``[lo, hi]`` rows."""

    position_intervals: np.ndarray
    velocity_intervals: np.ndarray

    def __post_init__(self):
        p = _intervals(self.position_intervals, "position_intervals")
        v = _intervals(self.velocity_intervals, "velocity_intervals")
        if p.shape != v.shape:
            raise ValueError("position and velocity blocks must have the same number of rods")
        object.__setattr__(self, "position_intervals", p)
        object.__setattr__(self, "velocity_intervals", v)

    @property
    def n(self):
        return self.position_intervals.shape[0]

    @property
    def volume(self):
        widths = np.concatenate(
            [np.diff(self.position_intervals, axis=1), np.diff(self.velocity_intervals, axis=1)]
        )
        return float(np.prod(widths))

    def contains(self, x, v):
        p, w = self.position_intervals, self.velocity_intervals
        return np.all((x >= p[:, 0]) & (x <= p[:, 1]), axis=-1) & np.all(
            (v >= w[:, 0]) & (v <= w[:, 1]), axis=-1
        )

    def sample(self, rng, m):
        lo = np.concatenate([self.position_intervals[:, 0], self.velocity_intervals[:, 0]])
        hi = np.concatenate([self.position_intervals[:, 1], self.velocity_intervals[:, 1]])
        z = rng.uniform(lo, hi, size=(m, lo.size))
        return z[:, : self.n], z[:, self.n :]

    def to_dict(self):
        return {
            "position_intervals": self.position_intervals.tolist(),
            "velocity_intervals": self.velocity_intervals.tolist(),
        }


@dataclass(frozen=True)
class InvarianceReport:
    t: float
    n_samples: int
    volume_before: float
    stderr_before: float
    volume_after: float
    stderr_after: float
    z_score: float
    seed: int
    box_volume: float
    bounding_volume: float
    bounding_box: dict
    hits_before: int
    hits_after: int
    n_after_valid: int
    n_rejected_bad: int
    rng: str = RNG_NAME

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EnsembleParams:
    beta: float
    position_box: np.ndarray

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta!r}")
        object.__setattr__(self, "position_box", _intervals(self.position_box, "position_box"))


def in_table(geom, x):
    """Rows of ``x`` lying in the ordered component (gaps >= 2r)."""
    return np.all(np.diff(x, axis=-1) >= geom.diameter, axis=-1)


def _check_target(geom, box):
    # Greedy leftmost packing decides whether box ∩ Q_r has interior points.
    p = box.position_intervals
    cur = p[0, 0]
    for lo, hi in p[1:]:
        cur = max(lo, cur + geom.diameter)
        if cur >= hi:
            raise EmptyTarget("position box does not meet the ordered table in a set of positive volume")


def flow_branch_matrix(g: SortPermutation, t: float) -> np.ndarray:
    """``diag(g, g) @ (I + t * shear)`` with shear mapping velocities into positions."""
    n = g.n
    gm = g.as_matrix()
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = gm
    block[n:, n:] = gm
    shear = np.eye(2 * n)
    shear[:n, n:] = t * np.eye(n)
    return block @ shear


def jacobian_unit_check(g: SortPermutation, t: float) -> float:
    """``|det|`` of the affine flow branch for permutation ``g`` at time ``t`` (should be 1)."""
    return float(abs(np.linalg.det(flow_branch_matrix(g, t))))


def bad_mask(geom, x, v):
    """Rows whose free-flight line puts three rods at one point (measure zero).

    Vectorised over rows; cost grows like N^3, intended for small N.
    """
    y = x - geom.offsets
    n = geom.n
    with np.errstate(divide="ignore", invalid="ignore"):
        tm = {}
        for i, j in itertools.combinations(range(n), 2):
            tm[i, j] = (y[:, j] - y[:, i]) / (v[:, i] - v[:, j])
    bad = np.zeros(x.shape[0], dtype=bool)
    for i, j, k in itertools.combinations(range(n), 3):
        a, b = tm[i, j], tm[i, k]
        scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
        bad |= np.isfinite(a) & np.isfinite(b) & (np.abs(a - b) <= TIME_RTOL * scale)
    return bad


def _bounding_box(box, t):
    if t == 0:
        return box
    w = box.velocity_intervals
    speed = float(np.max(np.abs(w)))
    p = box.position_intervals + np.array([-1.0, 1.0]) * abs(t) * speed
    hull = np.tile([w[:, 0].min(), w[:, 1].max()], (box.n, 1))
    return PhaseBox(p, hull)


def _chunks(n):
    return [(c, min(CHUNK, n - c * CHUNK)) for c in range((n + CHUNK - 1) // CHUNK)]


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def _stderr(volume, hits, n):
    if n == 0:
        return float("nan")
    p = hits / n
    return volume * math.sqrt(p * (1.0 - p) / n)


def estimate_pushforward_volume(
    geom: RodGeometry, box: PhaseBox, t: float, n_samples: int, seed: int, workers: int = 1
) -> InvarianceReport:
    """Compare the Liouville volume of ``E = box ∩ TQ_r`` with that of its preimage at time ``t``.

    ``Λ(E)`` is estimated from uniform samples of ``box``.  ``Λ(T^{-t} E)``
    is estimated from uniform samples of a bounding box of the preimage:
    position intervals widened by ``|t|`` times the largest velocity
    endpoint, velocities over the hull of all velocity intervals.  Samples
    outside the table are misses; samples on bad lines are dropped.  At
    ``t == 0`` the two estimates share one stream and agree exactly;
    otherwise they use independent streams.
    """
    if box.n != geom.n:
        raise ValueError(f"box has {box.n} rods, geometry expects {geom.n}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    _check_target(geom, box)
    t = float(t)
    chunks = _chunks(n_samples)

    def before(ch):
        c, m = ch
        x, v = box.sample(chunk_rng(seed, _STREAM_BEFORE, c), m)
        return int(np.count_nonzero(in_table(geom, x)))

    bound = _bounding_box(box, t)
    after_stream = _STREAM_BEFORE if t == 0 else _STREAM_AFTER

    def after(ch):
        c, m = ch
        x, v = bound.sample(chunk_rng(seed, after_stream, c), m)
        ok = in_table(geom, x)
        x, v = x[ok], v[ok]
        bad = bad_mask(geom, x, v) if t != 0 else np.zeros(x.shape[0], dtype=bool)
        x, v = x[~bad], v[~bad]
        xt, vt = evolve_batch(geom, x, v, t)
        hits = int(np.count_nonzero(box.contains(xt, vt)))
        return hits, int(np.count_nonzero(bad))

    hits_before = sum(_map(before, chunks, workers))
    res = _map(after, chunks, workers)
    hits_after = sum(h for h, _ in res)
    rejected = sum(b for _, b in res)
    valid = n_samples - rejected

    vol_box = box.volume
    vol_bound = bound.volume
    v_before = vol_box * hits_before / n_samples
    v_after = vol_bound * hits_after / valid if valid else float("nan")
    se_b = _stderr(vol_box, hits_before, n_samples)
    se_a = _stderr(vol_bound, hits_after, valid)
    diff = abs(v_before - v_after)
    se = math.hypot(se_b, se_a)
    if se > 0:
        z = diff / se
    else:
        z = 0.0 if diff == 0 else float("inf")
    return InvarianceReport(
        t=t,
        n_samples=int(n_samples),
        volume_before=v_before,
        stderr_before=se_b,
        volume_after=v_after,
        stderr_after=se_a,
        z_score=z,
        seed=int(seed),
        box_volume=vol_box,
        bounding_volume=vol_bound,
        bounding_box=bound.to_dict(),
        hits_before=hits_before,
        hits_after=hits_after,
        n_after_valid=valid,
        n_rejected_bad=rejected,
    )


@dataclass(frozen=True, eq=False)
class CanonicalSample:
    """Draws from the canonical ensemble; iterate to get :class:`PhaseState` objects."""

    positions: np.ndarray
    velocities: np.ndarray
    acceptance_rate: float
    seed: int

    def __len__(self):
        return self.positions.shape[0]

    def __iter__(self):
        for x, v in zip(self.positions, self.velocities):
            yield PhaseState(x, v)


def sample_canonical(
    params: EnsembleParams, geom: RodGeometry, n: int, seed: int, min_rate: float = 1e-6
) -> CanonicalSample:
    """Positions uniform on ``position_box ∩ Q_r``, velocities i.i.d. normal with variance ``1/(2 beta)``.

    Raises :class:`RejectionStall` once at least ``10/min_rate`` candidates
    have been tried and the acceptance rate is below ``min_rate``.
    """
    box = params.position_box
    if box.shape[0] != geom.n:
        raise ValueError(f"position box has {box.shape[0]} rods, geometry expects {geom.n}")
    kept = []
    accepted = tried = 0
    c = 0
    floor_tries = int(10 / min_rate)
    while accepted < n:
        rng = chunk_rng(seed, _STREAM_CANONICAL, c)
        c += 1
        x = rng.uniform(box[:, 0], box[:, 1], size=(CHUNK, geom.n))
        x = x[in_table(geom, x)]
        tried += CHUNK
        accepted += x.shape[0]
        kept.append(x)
        if tried >= floor_tries and accepted / tried < min_rate:
            raise RejectionStall(
                f"acceptance rate {accepted / tried:.3g} below {min_rate:g} after {tried} candidates"
            )
    x = np.concatenate(kept)[:n]
    vrng = chunk_rng(seed, _STREAM_VELOCITY, 0)
    v = vrng.normal(0.0, math.sqrt(0.5 / params.beta), size=(n, geom.n))
    return CanonicalSample(x, v, accepted / tried, int(seed))
