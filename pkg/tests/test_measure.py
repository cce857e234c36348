import math

import numpy as np
import pytest
from scipy import stats

from hardrods.core import PhaseState, RodGeometry, SortPermutation, evolve_batch
from hardrods.errors import EmptyTarget, RejectionStall
from hardrods.measure import (
    EnsembleParams,
    PhaseBox,
    bad_mask,
    estimate_pushforward_volume,
    flow_branch_matrix,
    jacobian_unit_check,
    sample_canonical,
)

BOX2 = PhaseBox([[0, 1], [2, 3]], [[-1, 1], [-1, 1]])


class TestJacobian:
    def test_identity(self):
        assert jacobian_unit_check(SortPermutation.identity(3), 0.0) == 1.0

    def test_swap(self):
        assert abs(jacobian_unit_check(SortPermutation([1, 0]), 7.3) - 1.0) <= 1e-12

    def test_random(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 9))
            g = SortPermutation(rng.permutation(n))
            assert abs(jacobian_unit_check(g, rng.uniform(-10, 10)) - 1.0) <= 1e-12

    def test_branch_acts_like_flow(self, rng):
        geom = RodGeometry(4, 0.0)
        x = np.sort(rng.normal(size=4))
        v = rng.normal(size=4)
        t = 1.3
        xt, vt = evolve_batch(geom, x[None], v[None], t)
        g = SortPermutation(np.argsort(x + t * v))
        z = flow_branch_matrix(g, t) @ np.concatenate([x, v])
        np.testing.assert_allclose(z, np.concatenate([xt[0], vt[0]]), atol=1e-12)


class TestPushforward:
    def test_identity_flow(self):
        rep = estimate_pushforward_volume(RodGeometry(2, 0.0), BOX2, 0.0, 50_000, seed=1)
        assert rep.volume_after == rep.volume_before and rep.z_score == 0.0

    def test_two_rods(self):
        rep = estimate_pushforward_volume(RodGeometry(2, 0.0), BOX2, 1.0, 1_000_000, seed=7)
        assert rep.volume_before == 4.0
        assert rep.z_score < 3

    def test_deterministic(self):
        geom = RodGeometry(3, 0.25)
        box = PhaseBox([[0, 1.5], [0.5, 2], [1, 2.5]], [[-1, 1]] * 3)
        a = estimate_pushforward_volume(geom, box, 2.0, 100_000, seed=3)
        b = estimate_pushforward_volume(geom, box, 2.0, 100_000, seed=3, workers=4)
        assert a == b

    def test_bounding_box_reported(self):
        rep = estimate_pushforward_volume(RodGeometry(2, 0.0), BOX2, 2.0, 1000, seed=0)
        assert rep.bounding_box["position_intervals"] == [[-2.0, 3.0], [0.0, 5.0]]
        assert rep.bounding_volume == 25.0 * 4.0

    def test_empty_target(self):
        box = PhaseBox([[2, 3], [0, 1]], [[-1, 1], [-1, 1]])
        with pytest.raises(EmptyTarget):
            estimate_pushforward_volume(RodGeometry(2, 0.0), box, 1.0, 100, seed=0)

    def test_empty_target_from_radius(self):
        box = PhaseBox([[0, 1], [1, 2]], [[-1, 1], [-1, 1]])
        with pytest.raises(EmptyTarget):
            estimate_pushforward_volume(RodGeometry(2, 1.0), box, 1.0, 100, seed=0)

    def test_bad_mask(self):
        x = np.array([[-2.0, 0.0, 2.0], [0.0, 1.0, 3.0]])
        v = np.array([[1.0, 0.0, -1.0], [2.0, 1.0, 0.0]])
        np.testing.assert_array_equal(bad_mask(RodGeometry(3, 0.0), x, v), [True, False])


class TestCanonical:
    def test_variance_from_beta(self):
        params = EnsembleParams(0.5, [[0, 1], [1, 2], [2, 3]])
        s = sample_canonical(params, RodGeometry(3, 0.0), 200_000, seed=2)
        var = np.var(s.velocities, ddof=1)
        sigma = 1.0 * math.sqrt(2 / (s.velocities.size - 1))
        assert abs(var - 1.0) < 3 * sigma

    def test_mean_energy(self):
        params = EnsembleParams(1.0, [[0, 1], [1, 2], [2, 3], [3, 4]])
        s = sample_canonical(params, RodGeometry(4, 0.0), 1_000_000, seed=5)
        e = np.einsum("ij,ij->i", s.velocities, s.velocities)
        # |V|^2 is a sum of 4 squares of N(0, 1/2): mean 2, variance 2
        assert abs(e.mean() - 2.0) < 3 * math.sqrt(2.0 / e.size)

    def test_positions_in_table(self):
        geom = RodGeometry(3, 0.25)
        params = EnsembleParams(1.0, [[0, 2], [0, 2], [0, 2]])
        s = sample_canonical(params, geom, 10_000, seed=0)
        assert np.all(np.diff(s.positions, axis=1) >= 0.5)
        assert np.all((s.positions >= 0) & (s.positions <= 2))
        assert 0 < s.acceptance_rate < 1
        states = list(s)
        assert len(states) == 10_000 and isinstance(states[0], PhaseState)

    def test_energy_histogram_unchanged(self):
        geom = RodGeometry(4, 0.25)
        params = EnsembleParams(1.0, [[0, 2], [1, 3], [2, 4], [3, 5]])
        s = sample_canonical(params, geom, 50_000, seed=9)
        _, vt = evolve_batch(geom, s.positions, s.velocities, 1.0)
        e0 = np.einsum("ij,ij->i", s.velocities, s.velocities)
        e1 = np.einsum("ij,ij->i", vt, vt)
        assert np.max(np.abs(e1 - e0)) <= 1e-12
        assert stats.ks_2samp(e0, e1).pvalue > 0.01

    def test_stall(self):
        params = EnsembleParams(1.0, [[1, 1.1], [0, 1e-6]])
        with pytest.raises(RejectionStall):
            sample_canonical(params, RodGeometry(2, 0.0), 10, seed=0, min_rate=1e-3)

    def test_beta_validated(self):
        with pytest.raises(ValueError):
            EnsembleParams(0.0, [[0, 1], [1, 2]])
