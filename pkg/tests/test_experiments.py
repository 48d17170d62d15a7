import math
from itertools import permutations

import numpy as np
import pytest

from ssac.datagen import GenConfig
from ssac.experiments import (
    ExperimentConfig,
    accuracy,
    match_labels,
    render_metrics_csv,
    render_rounds_csv,
    run_grid,
)
from ssac.geometry import ClusterGeometry, Clustering


def geometry_of(centers):
    arr = np.asarray(centers, dtype=float)
    return ClusterGeometry(centers=arr, radii=np.ones(arr.shape[0]))


class TestMatchLabels:
    def test_identity(self):
        truth = geometry_of([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
        estimated = {1: (0.0, 0.0), 2: (10.0, 0.0), 3: (0.0, 10.0)}
        assert match_labels(truth, estimated) == {1: 1, 2: 2, 3: 3}

    def test_permuted_centers_recovered(self):
        truth = geometry_of([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
        estimated = {1: (0.0, 10.0), 2: (0.0, 0.0), 3: (10.0, 0.0)}
        assert match_labels(truth, estimated) == {1: 3, 2: 1, 3: 2}

    def test_perturbed_matches_brute_force(self):
        rng = np.random.default_rng(1)
        truth = geometry_of(rng.normal(size=(3, 2)) * 10)
        estimated = {
            l: tuple(truth.centers[l - 1] + rng.normal(size=2) * 0.5) for l in (1, 2, 3)
        }
        got = match_labels(truth, estimated)
        best, best_cost = None, math.inf
        for perm in permutations((1, 2, 3)):
            cost = sum(
                np.linalg.norm(np.array(estimated[d]) - truth.centers[t - 1])
                for d, t in zip((1, 2, 3), perm)
            )
            if cost < best_cost:
                best, best_cost = dict(zip((1, 2, 3), perm)), cost
        assert got == best

    def test_partial_discovery_injective(self):
        truth = geometry_of([[0.0], [10.0], [20.0]])
        got = match_labels(truth, {1: (9.5,), 2: (0.5,)})
        assert got == {1: 2, 2: 1}

    def test_greedy_beyond_eight(self):
        centers = [[float(10 * i)] for i in range(9)]
        truth = geometry_of(centers)
        estimated = {i + 1: (10.0 * i + 0.1,) for i in range(9)}
        got = match_labels(truth, estimated)
        assert got == {i + 1: i + 1 for i in range(9)}
        assert len(set(got.values())) == 9

    def test_too_many_discovered_rejected(self):
        truth = geometry_of([[0.0], [1.0]])
        with pytest.raises(ValueError):
            match_labels(truth, {1: (0.0,), 2: (1.0,), 3: (2.0,)})


class TestAccuracy:
    def _clusterings(self):
        truth = Clustering(k=2, labels={0: 1, 1: 1, 2: 2, 3: 2})
        return truth

    def test_exact(self):
        truth = self._clusterings()
        predicted = Clustering(k=2, labels={0: 1, 1: 1, 2: 2, 3: 2})
        assert accuracy(truth, predicted, {1: 1, 2: 2}) == 1.0

    def test_all_unassigned(self):
        truth = self._clusterings()
        predicted = Clustering(k=2, labels={0: 0, 1: 0, 2: 0, 3: 0})
        assert accuracy(truth, predicted, {}) == 0.0

    def test_permutation_invariance(self):
        truth = self._clusterings()
        predicted = Clustering(k=2, labels={0: 2, 1: 2, 2: 1, 3: 1})
        assert accuracy(truth, predicted, {2: 1, 1: 2}) == 1.0

    def test_partial(self):
        truth = self._clusterings()
        predicted = Clustering(k=2, labels={0: 1, 1: 0, 2: 2, 3: 1})
        assert accuracy(truth, predicted, {1: 1, 2: 2}) == 0.5

    def test_id_mismatch_rejected(self):
        truth = self._clusterings()
        with pytest.raises(ValueError):
            accuracy(truth, Clustering(k=2, labels={0: 1}), {1: 1})


def tiny_config(**overrides):
    base = dict(
        gen=GenConfig(n=48, m=2, k=3, sigma_std=1.75, gamma_min=1.0, gamma_max=1.2, seed=0),
        q_list=(0.7, 1.0),
        eta_list=(2.0,),
        n_rep=4,
        base_seed=2024,
        beta=5,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestRunGrid:
    def test_deterministic_csv(self):
        config = tiny_config()
        cells1, records1 = run_grid(config)
        cells2, records2 = run_grid(config)
        assert render_metrics_csv(cells1) == render_metrics_csv(cells2)
        assert render_rounds_csv(config, records1) == render_rounds_csv(config, records2)

    def test_jobs_do_not_change_results(self):
        config = tiny_config()
        cells1, _ = run_grid(config, jobs=1)
        cells2, _ = run_grid(config, jobs=2)
        assert render_metrics_csv(cells1) == render_metrics_csv(cells2)

    def test_csv_shape(self):
        config = tiny_config()
        cells, records = run_grid(config)
        text = render_metrics_csv(cells)
        lines = text.strip().splitlines()
        assert lines[0] == (
            "q,eta,beta,n_rep,mean_accuracy,stderr_accuracy,"
            "n_failure,n_failure_phase1,n_failure_search,mean_queries"
        )
        assert len(lines) == 1 + len(config.q_list) * len(config.eta_list)
        first = lines[1].split(",")
        assert first[0] == "0.700000" and first[1] == "2.000000"
        assert 0.0 <= float(first[4]) <= 1.0
        rounds = render_rounds_csv(config, records).strip().splitlines()
        assert len(rounds) == 1 + config.n_rep * 2

    def test_query_budget_invariant(self):
        config = tiny_config()
        cells, _ = run_grid(config)
        n, k, beta = config.gen.n, config.gen.k, config.beta
        for cell in cells:
            budget = k * math.ceil(k * cell.eta) * k + k * beta * (int(math.log2(n)) + 1)
            assert cell.mean_queries <= budget

    def test_generation_failure_counts_as_round_failure(self):
        config = tiny_config(
            gen=GenConfig(
                n=48, m=2, k=3, sigma_std=1.75, gamma_min=900.0, gamma_max=900.1,
                seed=0, max_attempts=2,
            ),
            n_rep=2,
        )
        cells, records = run_grid(config)
        assert all(r.gen_failed for r in records)
        for cell in cells:
            assert cell.n_failure == 2
            assert cell.mean_accuracy == 0.0

    def test_accuracy_reasonable_on_tiny_grid(self):
        cells, _ = run_grid(tiny_config())
        for cell in cells:
            assert cell.mean_accuracy > 0.5
