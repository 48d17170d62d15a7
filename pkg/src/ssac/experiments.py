"""Replication harness: (q, eta) grids, accuracy/failure metrics, CSV output.

Each round generates a fresh dataset (seed = base_seed XOR round index), runs
every grid cell on that same dataset with a per-cell derived RNG, and scores
the recovered clustering against ground truth after matching discovered labels
to true clusters by nearest estimated centers. Aggregation is a deterministic
merge over round records, so worker count never changes the output.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import permutations
from pathlib import Path

import numpy as np

from ssac.algorithm import (
    BINARY_SEARCH_FAIL,
    PHASE1_ALL_NOT_SURE,
    Policy,
    SearchVariant,
    SsacParams,
    SsacResult,
    run_ssac,
)
from ssac.datagen import GenConfig, GenerationError, generate
from ssac.geometry import ClusterGeometry, Clustering, compute_geometry
from ssac.oracles import OracleModel
from ssac.rng import derive_seed, xor_fold

__all__ = [
    "ExperimentConfig",
    "MetricsCell",
    "RoundRecord",
    "CellOutcome",
    "match_labels",
    "accuracy",
    "run_round",
    "run_grid",
    "render_metrics_csv",
    "render_rounds_csv",
    "write_grid_outputs",
]


@dataclass(frozen=True)
class ExperimentConfig:
    gen: GenConfig
    q_list: tuple[float, ...]
    eta_list: tuple[float, ...]
    n_rep: int
    base_seed: int
    beta: int = 10
    delta: float = 0.1
    variant: SearchVariant = SearchVariant.UNIFIED
    policy: Policy = Policy.TREAT_AS_DIFFERENT
    oracle_kind: str = "random"
    nu: float | None = None  # local oracle only
    rho: float | None = None  # distance oracles only

    def __post_init__(self):
        if self.n_rep < 1:
            raise ValueError("n_rep must be >= 1")
        if not self.q_list or not self.eta_list:
            raise ValueError("q_list and eta_list must be nonempty")
        if self.oracle_kind not in ("random", "perfect", "local", "global"):
            raise ValueError(f"unsupported oracle kind {self.oracle_kind!r}")


@dataclass(frozen=True)
class CellOutcome:
    accuracy: float
    fail_phase1: int
    fail_search: int
    queries: int


@dataclass(frozen=True)
class RoundRecord:
    index: int
    gamma: float  # nan when generation failed
    gen_failed: bool
    cells: dict[tuple[int, int], CellOutcome]  # keyed by (q index, eta index)


@dataclass(frozen=True)
class MetricsCell:
    q: float
    eta: float
    beta: int
    n_rep: int
    mean_accuracy: float
    stderr_accuracy: float
    n_failure: int
    n_failure_phase1: int
    n_failure_search: int
    mean_queries: float


def match_labels(
    truth_geometry: ClusterGeometry,
    estimated_centers: dict[int, tuple[float, ...]],
) -> dict[int, int]:
    """Injective map discovered label -> truth label minimizing center distances.

    Exhaustive over injections for k <= 8 truth clusters; greedy nearest-pair
    matching beyond that.
    """
    discovered = sorted(estimated_centers)
    k_truth = truth_geometry.centers.shape[0]
    if len(discovered) > k_truth:
        raise ValueError("more discovered labels than truth clusters")
    if not discovered:
        return {}
    cost = {
        (d, t): float(
            np.linalg.norm(np.asarray(estimated_centers[d]) - truth_geometry.centers[t - 1])
        )
        for d in discovered
        for t in range(1, k_truth + 1)
    }
    if k_truth <= 8:
        best_perm, best_cost = None, math.inf
        for perm in permutations(range(1, k_truth + 1), len(discovered)):
            total = sum(cost[(d, t)] for d, t in zip(discovered, perm))
            if total < best_cost:
                best_cost, best_perm = total, perm
        return dict(zip(discovered, best_perm))
    # greedy: repeatedly take the globally closest unmatched (discovered, truth) pair
    pairs = sorted(cost, key=lambda dt: (cost[dt], dt))
    mapping: dict[int, int] = {}
    used_truth: set[int] = set()
    for d, t in pairs:
        if d in mapping or t in used_truth:
            continue
        mapping[d] = t
        used_truth.add(t)
    return mapping


def accuracy(truth: Clustering, predicted: Clustering, permutation: dict[int, int]) -> float:
    """Fraction of points whose mapped predicted label equals ground truth.

    Unassigned (0) predictions never match.
    """
    if set(truth.labels) != set(predicted.labels):
        raise ValueError("truth and prediction must label the same point ids")
    n = len(truth.labels)
    correct = 0
    for pid, pl in predicted.labels.items():
        if pl != 0 and permutation.get(pl) == truth.labels[pid]:
            correct += 1
    return correct / n


def _score(truth: Clustering, truth_geometry: ClusterGeometry, result: SsacResult) -> float:
    permutation = match_labels(truth_geometry, result.estimated_centers)
    return accuracy(truth, result.clustering, permutation)


def _build_oracle(config: ExperimentConfig, dataset, truth, q: float) -> OracleModel:
    kind = config.oracle_kind
    if kind == "random":
        return OracleModel("random", dataset, truth, q=q)
    if kind == "perfect":
        return OracleModel("perfect", dataset, truth)
    if kind == "local":
        return OracleModel("local", dataset, truth, nu=config.nu, rho=config.rho)
    return OracleModel("global", dataset, truth, rho=config.rho)


def run_round(config: ExperimentConfig, index: int) -> RoundRecord:
    """One replication: fresh dataset, then every (q, eta) cell on it."""
    round_seed = xor_fold(config.base_seed, index)
    try:
        dataset, truth, gamma = generate(replace(config.gen, seed=round_seed))
    except GenerationError:
        zero = CellOutcome(accuracy=0.0, fail_phase1=0, fail_search=0, queries=0)
        cells = {
            (qi, ei): zero
            for qi in range(len(config.q_list))
            for ei in range(len(config.eta_list))
        }
        return RoundRecord(index=index, gamma=math.nan, gen_failed=True, cells=cells)
    truth_geometry = compute_geometry(dataset, truth)
    cells: dict[tuple[int, int], CellOutcome] = {}
    for qi, q in enumerate(config.q_list):
        for ei, eta in enumerate(config.eta_list):
            params = SsacParams(
                k=config.gen.k,
                eta=eta,
                beta=config.beta,
                delta=config.delta,
                variant=config.variant,
                policy=config.policy,
                seed=derive_seed(round_seed, "cell", qi, ei),
            )
            oracle = _build_oracle(config, dataset, truth, q)
            result = run_ssac(dataset, oracle, params)
            cells[(qi, ei)] = CellOutcome(
                accuracy=_score(truth, truth_geometry, result),
                fail_phase1=sum(f.kind == PHASE1_ALL_NOT_SURE for f in result.failures),
                fail_search=sum(f.kind == BINARY_SEARCH_FAIL for f in result.failures),
                queries=result.ledger.same_cluster_count,
            )
    return RoundRecord(index=index, gamma=gamma, gen_failed=False, cells=cells)


def aggregate(config: ExperimentConfig, records: list[RoundRecord]) -> list[MetricsCell]:
    records = sorted(records, key=lambda r: r.index)
    cells: list[MetricsCell] = []
    for qi, q in enumerate(config.q_list):
        for ei, eta in enumerate(config.eta_list):
            accs = np.array([r.cells[(qi, ei)].accuracy for r in records])
            fail_p1 = sum(r.cells[(qi, ei)].fail_phase1 > 0 for r in records)
            fail_bs = sum(r.cells[(qi, ei)].fail_search > 0 for r in records)
            failed_rounds = sum(
                r.gen_failed
                or r.cells[(qi, ei)].fail_phase1 > 0
                or r.cells[(qi, ei)].fail_search > 0
                for r in records
            )
            queries = np.array([r.cells[(qi, ei)].queries for r in records])
            stderr = float(accs.std(ddof=1) / math.sqrt(len(accs))) if len(accs) > 1 else 0.0
            cells.append(
                MetricsCell(
                    q=q,
                    eta=eta,
                    beta=config.beta,
                    n_rep=config.n_rep,
                    mean_accuracy=float(accs.mean()),
                    stderr_accuracy=stderr,
                    n_failure=failed_rounds,
                    n_failure_phase1=fail_p1,
                    n_failure_search=fail_bs,
                    mean_queries=float(queries.mean()),
                )
            )
    return cells


def run_grid(
    config: ExperimentConfig, jobs: int = 1
) -> tuple[list[MetricsCell], list[RoundRecord]]:
    """All rounds and cells; deterministic in (config, base_seed) for any jobs."""
    if jobs <= 1:
        records = [run_round(config, i) for i in range(config.n_rep)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run_round, [config] * config.n_rep, range(config.n_rep)))
    records.sort(key=lambda r: r.index)
    return aggregate(config, records), records


def _f(value: float) -> str:
    return f"{value:.6f}"


def render_metrics_csv(cells: list[MetricsCell]) -> str:
    lines = [
        "q,eta,beta,n_rep,mean_accuracy,stderr_accuracy,"
        "n_failure,n_failure_phase1,n_failure_search,mean_queries"
    ]
    for c in cells:
        lines.append(
            ",".join(
                [
                    _f(c.q),
                    _f(c.eta),
                    str(c.beta),
                    str(c.n_rep),
                    _f(c.mean_accuracy),
                    _f(c.stderr_accuracy),
                    str(c.n_failure),
                    str(c.n_failure_phase1),
                    str(c.n_failure_search),
                    _f(c.mean_queries),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def render_rounds_csv(config: ExperimentConfig, records: list[RoundRecord]) -> str:
    lines = ["round,q,eta,gamma_star,accuracy,fail_phase1,fail_search,queries"]
    for r in sorted(records, key=lambda r: r.index):
        for qi, q in enumerate(config.q_list):
            for ei, eta in enumerate(config.eta_list):
                cell = r.cells[(qi, ei)]
                lines.append(
                    ",".join(
                        [
                            str(r.index),
                            _f(q),
                            _f(eta),
                            _f(r.gamma) if not math.isnan(r.gamma) else "nan",
                            _f(cell.accuracy),
                            str(cell.fail_phase1),
                            str(cell.fail_search),
                            str(cell.queries),
                        ]
                    )
                )
    return "\n".join(lines) + "\n"


def write_grid_outputs(
    config: ExperimentConfig,
    cells: list[MetricsCell],
    records: list[RoundRecord],
    out_path: str | Path,
) -> None:
    out = Path(out_path)
    out.write_text(render_metrics_csv(cells), encoding="ascii")
    Path(str(out) + ".rounds.csv").write_text(
        render_rounds_csv(config, records), encoding="ascii"
    )
