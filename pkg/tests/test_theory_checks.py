import math

import numpy as np
import pytest

from ssac.datagen import GenConfig, generate
from ssac.geometry import Clustering, Dataset, Point, compute_geometry, good_set
from ssac.oracles import OracleModel
from ssac.rng import Stream
from ssac.theory_checks import (
    HoeffdingTrialConfig,
    assignment_success_lower_bound,
    default_hoeffding_grid,
    hoeffding_tail_check,
    lambda_max,
    separation_check,
    distance_bounds_check,
    recovery_preconditions,
    transpose_dilation,
)


def make_dataset(coords, labels, k):
    points = [Point(id=i, coords=c if isinstance(c, (tuple, list)) else (c,)) for i, c in enumerate(coords)]
    return (
        Dataset(dim=len(points[0].coords), points=points),
        Clustering(k=k, labels={i: l for i, l in enumerate(labels)}),
    )


class TestTransposeDilation:
    def test_one_by_one(self):
        out = transpose_dilation([[1.0]])
        assert np.array_equal(out, [[0.0, 1.0], [1.0, 0.0]])
        assert lambda_max(out) == pytest.approx(1.0, abs=1e-12)

    def test_zero_matrix(self):
        out = transpose_dilation(np.zeros((2, 3)))
        assert np.array_equal(out, np.zeros((5, 5)))
        assert lambda_max(out) == 0.0

    def test_spectral_identity_random(self):
        rng = Stream(99)
        for trial in range(40):
            d1, d2 = 1 + trial % 8, 1 + (trial * 5) % 8
            a = rng.normals((d1, d2))
            sigma_max = float(np.linalg.svd(a, compute_uv=False)[0])
            assert abs(lambda_max(transpose_dilation(a)) - sigma_max) <= 1e-9

    def test_symmetry(self):
        a = Stream(3).normals((4, 2))
        d = transpose_dilation(a)
        assert np.array_equal(d, d.T)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            transpose_dilation([[math.inf]])


class TestLambdaMax:
    def test_diagonal(self):
        assert lambda_max(np.diag([3.0, -7.0, 2.0])) == pytest.approx(7.0, abs=1e-10)

    def test_matches_eigvalsh(self):
        rng = Stream(11)
        for _ in range(20):
            a = rng.normals((5, 5))
            sym = (a + a.T) / 2.0
            expected = float(np.abs(np.linalg.eigvalsh(sym)).max())
            assert lambda_max(sym) == pytest.approx(expected, abs=1e-9)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            lambda_max(np.zeros((2, 3)))


class TestHoeffding:
    def test_bound_above_one_holds_trivially(self):
        cfg = HoeffdingTrialConfig(m=1, s=1, radii=(1.0,), t_grid=(1.0,), trials=2000, seed=1)
        [record] = hoeffding_tail_check(cfg)
        assert record.bound == pytest.approx(2.0 * math.exp(-0.5))
        assert record.bound > 1.0 >= record.empirical
        assert record.holds

    def test_zero_threshold(self):
        cfg = HoeffdingTrialConfig(m=2, s=4, radii=(1.0,) * 4, t_grid=(0.0,), trials=500, seed=2)
        [record] = hoeffding_tail_check(cfg)
        assert record.empirical == 1.0
        assert record.bound == 3.0
        assert record.holds

    def test_tight_cell(self):
        cfg = HoeffdingTrialConfig(
            m=2, s=100, radii=(1.0,) * 100, t_grid=(0.5,), trials=20_000, seed=3
        )
        [record] = hoeffding_tail_check(cfg)
        assert record.bound == pytest.approx(3.0 * math.exp(-12.5))
        assert record.holds
        assert record.empirical <= record.bound + record.slack

    def test_norms_respect_radii(self):
        # sphere sampler: ||Y_i|| = r_i exactly, so ||mean|| <= mean(r_i)
        cfg = HoeffdingTrialConfig(
            m=3, s=2, radii=(0.5, 2.0), t_grid=(1.26,), trials=4000, seed=4
        )
        [record] = hoeffding_tail_check(cfg)
        # mean norm can never exceed (0.5 + 2.0)/2 = 1.25
        assert record.empirical == 0.0

    def test_default_grid_shape(self):
        grid = default_hoeffding_grid(trials=10)
        assert len(grid) == 9
        assert {c.m for c in grid} == {1, 2, 10}
        assert {c.s for c in grid} == {1, 10, 100}
        for c in grid:
            assert len(c.t_grid) == 8
            assert c.t_grid[0] == 0.0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            HoeffdingTrialConfig(m=1, s=2, radii=(1.0,), t_grid=(0.0,), trials=10, seed=0)
        with pytest.raises(ValueError):
            HoeffdingTrialConfig(m=1, s=1, radii=(0.0,), t_grid=(0.0,), trials=10, seed=0)


class TestSeparationCheck:
    def _instance(self, seed=5):
        cfg = GenConfig(n=90, m=2, k=3, sigma_std=1.75, gamma_min=1.05, gamma_max=1.3, seed=seed)
        return generate(cfg)

    def test_exact_center_passes(self):
        dataset, truth, gamma = self._instance()
        geometry = compute_geometry(dataset, truth)
        eps = (gamma - 1.0) / 2.0
        for i in range(1, 4):
            report = separation_check(dataset, truth, geometry, geometry.centers[i - 1], i, eps)
            assert report.separation_holds
            assert report.epsilon_ok
            assert report.center_ok  # d=0 < eps*r

    def test_perturbed_center_passes(self):
        dataset, truth, gamma = self._instance(seed=8)
        geometry = compute_geometry(dataset, truth)
        eps = (gamma - 1.0) / 2.0
        rng = Stream(21)
        for trial in range(30):
            i = 1 + trial % 3
            direction = rng.normals(2)
            direction /= np.linalg.norm(direction)
            radius = rng.uniform01() * eps * geometry.radii[i - 1]
            mu_prime = geometry.centers[i - 1] + direction * radius
            report = separation_check(dataset, truth, geometry, mu_prime, i, eps)
            assert report.precondition_met
            assert report.separation_holds

    def test_displaced_center_fails(self):
        dataset, truth, gamma = self._instance(seed=9)
        geometry = compute_geometry(dataset, truth)
        eps = (gamma - 1.0) / 2.0
        # park mu' on a foreign cluster's center: precondition violated and
        # separation clearly false
        report = separation_check(dataset, truth, geometry, geometry.centers[1], 1, eps)
        assert not report.center_ok
        assert not report.separation_holds


class TestDistanceBounds:
    def test_generated_margin_instance(self):
        dataset, truth, gamma = generate(
            GenConfig(n=90, m=2, k=3, sigma_std=1.75, gamma_min=1.02, gamma_max=1.3, seed=12)
        )
        report = distance_bounds_check(dataset, truth)
        assert report.inter_applicable and report.inter_holds
        assert report.intra_holds and report.ok

    def test_non_separable_instance(self):
        dataset, truth, gamma = generate(
            GenConfig(n=90, m=2, k=3, sigma_std=1.75, gamma_min=0.5, gamma_max=0.9, seed=13)
        )
        report = distance_bounds_check(dataset, truth)
        assert not report.inter_applicable
        assert report.inter_holds is None
        assert report.intra_holds and report.ok

    def test_two_singleton_clusters(self):
        dataset, truth = make_dataset([(0.0,), (5.0,)], [1, 2], k=2)
        report = distance_bounds_check(dataset, truth)
        assert report.intra_holds
        # margin is infinite; the inter bound degenerates to d(x, y) > 0
        assert report.gamma == math.inf
        assert report.inter_holds is True


class TestRecoveryPreconditions:
    def _instance(self):
        return generate(
            GenConfig(n=120, m=2, k=3, sigma_std=1.75, gamma_min=1.05, gamma_max=1.3, seed=31)
        )

    def test_maximal_parameters(self):
        dataset, truth, gamma = self._instance()
        model = OracleModel("local", dataset, truth, nu=gamma, rho=1.0)
        report = recovery_preconditions(dataset, truth, model, epsilon=1e-12)
        assert report.c == pytest.approx(1.0)
        assert report.all_exist
        assert report.parameter_feasible

    def test_rho_half_excludes_everything(self):
        dataset, truth, gamma = self._instance()
        model = OracleModel("global", dataset, truth, rho=0.5)
        report = recovery_preconditions(dataset, truth, model, epsilon=0.0)
        assert report.threshold == pytest.approx(0.0)
        assert not any(pc.exists_good_point for pc in report.per_cluster)
        assert report.q_d == 0.0

    def test_matches_brute_force(self):
        dataset, truth, gamma = self._instance()
        geometry = compute_geometry(dataset, truth)
        rho, eps = 0.9, (gamma - 1.0) / 4.0
        model = OracleModel("local", dataset, truth, nu=gamma, rho=rho)
        report = recovery_preconditions(dataset, truth, model, epsilon=eps)
        c = min(2 * rho - 1, 1.0)
        threshold = c - 2 * eps
        for pc in report.per_cluster:
            i = pc.cluster
            dists = [
                math.dist(dataset.point(pid).coords, geometry.centers[i - 1])
                for pid in truth.members(i)
            ]
            r = geometry.radii[i - 1]
            assert pc.exists_good_point == (min(dists) < threshold * r)
            assert abs(pc.slack - (threshold - min(dists) / r)) <= 1e-12

    def test_qd_monotone_in_c(self):
        dataset, truth, gamma = self._instance()
        geometry = compute_geometry(dataset, truth)
        fractions = []
        for c in (0.2, 0.4, 0.6, 0.8, 1.0):
            worst = min(
                len(good_set(dataset, truth, geometry, i, c)) / len(truth.members(i))
                for i in range(1, 4)
            )
            fractions.append(worst)
        assert all(a <= b for a, b in zip(fractions, fractions[1:]))

    def test_rejects_non_distance_models(self):
        dataset, truth, _ = self._instance()
        with pytest.raises(ValueError):
            recovery_preconditions(dataset, truth, OracleModel("perfect", dataset, truth), 0.0)


class TestAssignmentBound:
    def test_values(self):
        assert assignment_success_lower_bound(1.0, 5) == 1.0
        assert assignment_success_lower_bound(0.5, 3) == 0.25

    def test_companion_inequality_grid(self):
        # k(1-q)q^(k-1) + q^k >= q^(k-1) on a (q, k) grid
        for q in np.linspace(0.05, 1.0, 20):
            for k in range(1, 8):
                lhs = k * (1 - q) * q ** (k - 1) + q**k
                assert lhs >= q ** (k - 1) - 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            assignment_success_lower_bound(0.0, 3)
        with pytest.raises(ValueError):
            assignment_success_lower_bound(0.5, 0)
