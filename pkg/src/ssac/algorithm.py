"""Two-phase SSAC with weak-oracle-aware binary search.

The run is a generator-based state machine: it yields one
:class:`QueryRequest` per weak same-cluster query and receives the answer via
``send``. :func:`run_ssac` drives it against an in-process oracle model; the
HTTP session service drives the same engine with human answers, so both paths
execute identical algorithm steps.

Each of the k iterations estimates a cluster center from the largest group of
definitively assigned samples (phase 1), then binary-searches the points
sorted by distance to that center for the cluster boundary (phase 2) and
extracts everything strictly inside the resulting radius.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Generator, Literal, Sequence

import numpy as np

from ssac.geometry import Clustering, Dataset, Point
from ssac.oracles import (
    DIFFERENT,
    NOT_SURE,
    SAME,
    OracleModel,
    QueryLedger,
    resolve_assignment,
    same_cluster_query,
)
from ssac.rng import Stream, derive_seed

__all__ = [
    "SearchVariant",
    "Policy",
    "SsacParams",
    "SsacResult",
    "FailureEvent",
    "QueryRequest",
    "SearchResult",
    "Phase1Result",
    "SsacEngine",
    "run_ssac",
    "phase1",
    "binary_search_random",
    "binary_search_distance",
    "binary_search_unified",
    "min_sufficient_eta",
    "min_sufficient_beta",
]


class SearchVariant(str, enum.Enum):
    RANDOM = "random"
    DISTANCE = "distance"
    UNIFIED = "unified"


class Policy(str, enum.Enum):
    """What a beta-fold probe does when every answer was NotSure."""

    TREAT_AS_DIFFERENT = "treat_as_different"
    FAIL = "fail"


PHASE1_ALL_NOT_SURE = "phase1_all_not_sure"
BINARY_SEARCH_FAIL = "binary_search_fail"


@dataclass(frozen=True)
class SsacParams:
    k: int
    eta: float
    beta: int = 10
    delta: float = 0.1
    variant: SearchVariant = SearchVariant.UNIFIED
    policy: Policy = Policy.TREAT_AS_DIFFERENT
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if int(self.beta) != self.beta or self.beta < 1:
            raise ValueError("beta must be an integer >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def r(self) -> int:
        """Phase-1 sample count ceil(k * eta)."""
        return math.ceil(self.k * self.eta)


@dataclass(frozen=True)
class FailureEvent:
    kind: Literal["phase1_all_not_sure", "binary_search_fail"]
    iteration: int


@dataclass(frozen=True)
class QueryRequest:
    """One pending weak same-cluster query, with run progress attached."""

    x: int
    y: int
    iteration: int
    phase: int
    seq: int


@dataclass(frozen=True)
class SearchResult:
    kind: Literal["found", "all_inside", "fail"]
    j_star: int | None
    radius: float  # d(x_j*, mu') for "found", +inf for "all_inside", nan for "fail"
    probes: int
    queries: int
    notsure_answers: int


@dataclass
class Phase1Result:
    failed: bool
    p: int | None
    z: dict[int, list[int]]
    mu_prime: np.ndarray | None
    sampled_ids: list[int]


@dataclass
class IterationRecord:
    index: int
    p: int | None
    mu_prime: tuple[float, ...] | None
    radius: float | None
    z_size: int
    extracted: int
    failure: str | None
    skipped_empty: bool = False


class _Ctx:
    """Mutable query-sequence context shared by the generators of one run."""

    def __init__(self):
        self.seq = 0
        self.assignments = 0
        self.iteration = 0
        self.phase = 1

    def req(self, x: int, y: int) -> QueryRequest:
        self.seq += 1
        return QueryRequest(x=x, y=y, iteration=self.iteration, phase=self.phase, seq=self.seq)


AnswerGen = Generator[QueryRequest, int, "SearchResult"]


def _phase1_gen(
    ctx: _Ctx,
    pool: Sequence[int],
    rep_ids: list[int],
    k: int,
    r: int,
    rng: Stream,
) -> Generator[QueryRequest, int, Phase1Result]:
    """Sample up to r points and assign each against the representatives.

    Extends ``rep_ids`` in place when a sample founds a new cluster (that
    sample becomes the representative); discovered label t is rep position
    t - 1. Samples whose assignment stays unresolved are dropped.
    """
    ctx.phase = 1
    sampled = rng.sample_without_replacement(pool, min(r, len(pool)))
    z: dict[int, list[int]] = defaultdict(list)
    for x in sampled:
        ctx.assignments += 1
        answers: list[int] = []
        for rep in rep_ids:
            ans = yield ctx.req(x, rep)
            answers.append(ans)
            if ans == SAME:
                break
        outcome = resolve_assignment(
            answers,
            rep_labels=list(range(1, len(rep_ids) + 1)),
            covered_all=len(rep_ids) == k,
            allow_new=len(rep_ids) < k,
        )
        if outcome.kind == "assigned":
            z[outcome.label].append(x)
        elif outcome.kind == "new_cluster":
            rep_ids.append(x)
            z[len(rep_ids)].append(x)
    if not z:
        return Phase1Result(failed=True, p=None, z={}, mu_prime=None, sampled_ids=sampled)
    p = min(z, key=lambda label: (-len(z[label]), label))
    return Phase1Result(failed=False, p=p, z=dict(z), mu_prime=None, sampled_ids=sampled)


def _draw_batch(zp_ids: Sequence[int], count: int, rng: Stream) -> list[int]:
    # Without replacement when the pool suffices, else with replacement so the
    # probe is always well defined.
    if count <= 0:
        return []
    if len(zp_ids) >= count:
        return rng.sample_without_replacement(zp_ids, count)
    return rng.sample_with_replacement(zp_ids, count)


def _bisect(sorted_dists: np.ndarray, probe):
    """Shared bisection skeleton; ``probe`` is a sub-generator per index."""

    def gen() -> AnswerGen:
        n = len(sorted_dists)
        lo, hi = 0, n - 1
        probes = 0
        queries = 0
        notsure = 0
        while lo <= hi:
            j = (lo + hi) // 2
            verdict, ns, nq = yield from probe(j)
            probes += 1
            notsure += ns
            queries += nq
            if verdict == "fail":
                return SearchResult("fail", None, math.nan, probes, queries, notsure)
            if verdict == "same":
                lo = j + 1
            else:
                hi = j - 1
        if lo == n:
            return SearchResult("all_inside", None, math.inf, probes, queries, notsure)
        return SearchResult("found", lo, float(sorted_dists[lo]), probes, queries, notsure)

    return gen()


def _search_random_gen(
    ctx: _Ctx,
    sorted_ids: list[int],
    sorted_dists: np.ndarray,
    zp_ids: list[int],
    beta: int,
    policy: Policy,
    rng: Stream,
) -> AnswerGen:
    """beta-fold repeated probes against assignment-known points."""
    ctx.phase = 2

    def probe(j: int):
        x_j = sorted_ids[j]
        notsure = 0
        queries = 0
        for y in _draw_batch(zp_ids, beta, rng):
            ans = yield ctx.req(y, x_j)
            queries += 1
            if ans == SAME:
                return "same", notsure, queries
            if ans == DIFFERENT:
                return "diff", notsure, queries
            notsure += 1
        if policy is Policy.FAIL:
            return "fail", notsure, queries
        return "diff", notsure, queries  # persistent NotSure treated as different

    return _bisect(sorted_dists, probe)


def _search_distance_gen(
    ctx: _Ctx,
    sorted_ids: list[int],
    sorted_dists: np.ndarray,
) -> AnswerGen:
    """Single query per probe against x1, the point closest to mu'."""
    ctx.phase = 2
    x1 = sorted_ids[0]

    def probe(j: int):
        ans = yield ctx.req(x1, sorted_ids[j])
        if ans == SAME:
            return "same", 0, 1
        # Different and NotSure both land in the else branch.
        return "diff", (1 if ans == NOT_SURE else 0), 1

    return _bisect(sorted_dists, probe)


def _search_unified_gen(
    ctx: _Ctx,
    sorted_ids: list[int],
    sorted_dists: np.ndarray,
    zp_ids: list[int],
    beta: int,
    policy: Policy,
    rng: Stream,
) -> AnswerGen:
    """x1 first; on NotSure fall back to beta-1 draws from the known set."""
    ctx.phase = 2
    x1 = sorted_ids[0]

    def probe(j: int):
        x_j = sorted_ids[j]
        ans = yield ctx.req(x1, x_j)
        if ans == SAME:
            return "same", 0, 1
        if ans == DIFFERENT:
            return "diff", 0, 1
        notsure = 1
        queries = 1
        for y in _draw_batch(zp_ids, beta - 1, rng):
            ans = yield ctx.req(x_j, y)
            queries += 1
            if ans == SAME:
                return "same", notsure, queries
            if ans == DIFFERENT:
                return "diff", notsure, queries
            notsure += 1
        if policy is Policy.FAIL:
            return "fail", notsure, queries
        return "diff", notsure, queries

    return _bisect(sorted_dists, probe)


class RunState:
    """Live view of a run, safe to snapshot between queries.

    Labels, centers, and radii reflect completed iterations only.
    """

    def __init__(self, dataset: Dataset, params: SsacParams):
        self.labels: dict[int, int] = {pid: 0 for pid in dataset.ids}
        self.centers: dict[int, tuple[float, ...]] = {}
        self.radii: dict[int, float] = {}
        self.rep_ids: list[int] = []
        self.failures: list[FailureEvent] = []
        self.iterations: list[IterationRecord] = []
        self.k = params.k
        self.finished = False

    def snapshot(self, ctx: _Ctx) -> dict:
        return {
            "k": self.k,
            "labels": dict(self.labels),
            "centers": {label: list(c) for label, c in self.centers.items()},
            "radii": {
                label: (None if math.isinf(r) else r) for label, r in self.radii.items()
            },
            "iteration": ctx.iteration,
            "phase": ctx.phase,
            "queries": ctx.seq,
            "assignments": ctx.assignments,
            "failures": [{"kind": f.kind, "iteration": f.iteration} for f in self.failures],
            "finished": self.finished,
        }


@dataclass
class SsacResult:
    clustering: Clustering
    estimated_centers: dict[int, tuple[float, ...]]
    estimated_radii: dict[int, float]
    rep_map: dict[int, int]
    failures: list[FailureEvent]
    ledger: QueryLedger
    iterations: list[IterationRecord]

    @property
    def unassigned_count(self) -> int:
        return sum(1 for label in self.clustering.labels.values() if label == 0)

    @property
    def recovered_labels(self) -> set[int]:
        return {label for label in self.clustering.labels.values() if label != 0}

    def to_dict(self) -> dict:
        return {
            "k": self.clustering.k,
            "labels": dict(self.clustering.labels),
            "estimated_centers": {l: list(c) for l, c in self.estimated_centers.items()},
            "estimated_radii": {
                l: (None if math.isinf(r) else r) for l, r in self.estimated_radii.items()
            },
            "rep_map": dict(self.rep_map),
            "failures": [{"kind": f.kind, "iteration": f.iteration} for f in self.failures],
            "queries": self.ledger.same_cluster_count,
            "assignments": self.ledger.assignment_count,
            "unassigned": self.unassigned_count,
        }


class SsacEngine:
    """A suspendable SSAC run over a dataset.

    ``run()`` returns the query/answer generator; ``state`` may be snapshot
    between queries. The engine's own randomness (phase-1 sampling, probe
    batches) comes from a stream derived from ``params.seed``, independent of
    whoever answers the queries.
    """

    def __init__(self, dataset: Dataset, params: SsacParams, rng: Stream | None = None):
        if len(dataset) < params.k:
            raise ValueError(f"dataset has {len(dataset)} points, fewer than k={params.k}")
        self.dataset = dataset
        self.params = params
        self.rng = rng if rng is not None else Stream(derive_seed(params.seed, "ssac-sampling"))
        self.ctx = _Ctx()
        self.state = RunState(dataset, params)

    def run(self) -> Generator[QueryRequest, int, SsacResult]:
        dataset, params, ctx, state = self.dataset, self.params, self.ctx, self.state
        coords = dataset.coords
        remaining = list(dataset.ids)
        for i in range(1, params.k + 1):
            ctx.iteration = i
            ctx.phase = 1
            if not remaining:
                state.iterations.append(
                    IterationRecord(i, None, None, None, 0, 0, None, skipped_empty=True)
                )
                continue
            ph1 = yield from _phase1_gen(ctx, remaining, state.rep_ids, params.k, params.r, self.rng)
            if ph1.failed:
                event = FailureEvent(PHASE1_ALL_NOT_SURE, i)
                state.failures.append(event)
                state.iterations.append(
                    IterationRecord(i, None, None, None, 0, 0, event.kind)
                )
                continue
            p = ph1.p
            zp_ids = ph1.z[p]
            mu = coords[[dataset.row_of[x] for x in zp_ids]].mean(axis=0)
            rem_rows = np.array([dataset.row_of[x] for x in remaining])
            dists = np.sqrt(((coords[rem_rows] - mu) ** 2).sum(axis=1))
            order = np.lexsort((np.array(remaining), dists))
            sorted_ids = [remaining[t] for t in order]
            sorted_dists = dists[order]
            if params.variant is SearchVariant.RANDOM:
                search = _search_random_gen(
                    ctx, sorted_ids, sorted_dists, zp_ids, params.beta, params.policy, self.rng
                )
            elif params.variant is SearchVariant.DISTANCE:
                search = _search_distance_gen(ctx, sorted_ids, sorted_dists)
            else:
                search = _search_unified_gen(
                    ctx, sorted_ids, sorted_dists, zp_ids, params.beta, params.policy, self.rng
                )
            res = yield from search
            if res.kind == "fail":
                event = FailureEvent(BINARY_SEARCH_FAIL, i)
                state.failures.append(event)
                state.iterations.append(
                    IterationRecord(i, p, tuple(mu), None, len(zp_ids), 0, event.kind)
                )
                continue
            members = [x for x, d in zip(sorted_ids, sorted_dists) if d < res.radius]
            for x in members:
                state.labels[x] = p
            state.centers[p] = tuple(mu)
            state.radii[p] = res.radius
            member_set = set(members)
            remaining = [x for x in remaining if x not in member_set]
            state.iterations.append(
                IterationRecord(i, p, tuple(mu), res.radius, len(zp_ids), len(members), None)
            )
        state.finished = True
        clustering = Clustering(k=params.k, labels=dict(state.labels))
        return SsacResult(
            clustering=clustering,
            estimated_centers=dict(state.centers),
            estimated_radii=dict(state.radii),
            rep_map={label: rep for label, rep in enumerate(state.rep_ids, start=1)},
            failures=list(state.failures),
            ledger=QueryLedger(
                same_cluster_count=ctx.seq, assignment_count=ctx.assignments
            ),
            iterations=list(state.iterations),
        )


def run_ssac(
    dataset: Dataset,
    oracle: OracleModel,
    params: SsacParams,
    *,
    sampling_rng: Stream | None = None,
    oracle_rng: Stream | None = None,
) -> SsacResult:
    """Run SSAC to completion against an in-process oracle model.

    Sampling and oracle randomness come from separate streams derived from
    ``params.seed``, so results are a pure function of (dataset, oracle
    parameters, params).
    """
    engine = SsacEngine(dataset, params, rng=sampling_rng)
    if oracle_rng is None:
        oracle_rng = Stream(derive_seed(params.seed, "ssac-oracle"))
    return _drive(engine.run(), oracle, oracle_rng)


def _drive(gen, oracle: OracleModel, rng: Stream | None):
    dataset = oracle.dataset
    try:
        req = next(gen)
        while True:
            ans = same_cluster_query(oracle, dataset.point(req.x), dataset.point(req.y), rng)
            req = gen.send(ans)
    except StopIteration as stop:
        return stop.value


def phase1(
    candidates: Sequence[Point],
    oracle: OracleModel,
    reps: Sequence[tuple[int, Point]],
    params: SsacParams,
    rng: Stream | None = None,
) -> tuple[Phase1Result, list[tuple[int, Point]]]:
    """Public phase 1: returns the result plus the (possibly extended) reps."""
    if not candidates:
        raise ValueError("phase 1 needs a nonempty candidate set")
    if rng is None:
        rng = Stream(derive_seed(params.seed, "ssac-sampling"))
    rep_ids = [pt.id for _, pt in reps]
    ctx = _Ctx()
    ctx.iteration = 1
    result = _drive(
        _phase1_gen(ctx, [p.id for p in candidates], rep_ids, params.k, params.r, rng),
        oracle,
        rng.spawn("oracle"),
    )
    if not result.failed:
        rows = [oracle.dataset.row_of[x] for x in result.z[result.p]]
        result.mu_prime = oracle.dataset.coords[rows].mean(axis=0)
    new_reps = [(label, oracle.dataset.point(pid)) for label, pid in enumerate(rep_ids, start=1)]
    return result, new_reps


def _sorted_dists(sorted_points: Sequence[Point], mu_prime) -> np.ndarray:
    mu = np.asarray(mu_prime, dtype=float)
    return np.array([math.dist(p.coords, mu) for p in sorted_points])


def binary_search_random(
    sorted_points: Sequence[Point],
    mu_prime,
    oracle: OracleModel,
    z_p: Sequence[Point],
    beta: int,
    policy: Policy = Policy.TREAT_AS_DIFFERENT,
    rng: Stream | None = None,
) -> SearchResult:
    """Repeated-probe binary search (public wrapper over the engine step)."""
    if not sorted_points:
        raise ValueError("sorted point list must be nonempty")
    if not z_p:
        raise ValueError("assignment-known set must be nonempty")
    if rng is None:
        rng = Stream(derive_seed(0, "search"))
    gen = _search_random_gen(
        _Ctx(),
        [p.id for p in sorted_points],
        _sorted_dists(sorted_points, mu_prime),
        [p.id for p in z_p],
        beta,
        policy,
        rng,
    )
    return _drive(gen, oracle, rng.spawn("oracle"))


def binary_search_distance(
    sorted_points: Sequence[Point],
    mu_prime,
    oracle: OracleModel,
    rng: Stream | None = None,
) -> SearchResult:
    """Single-anchor binary search using x1, the closest point to mu'."""
    if not sorted_points:
        raise ValueError("sorted point list must be nonempty")
    gen = _search_distance_gen(
        _Ctx(), [p.id for p in sorted_points], _sorted_dists(sorted_points, mu_prime)
    )
    return _drive(gen, oracle, rng.spawn("oracle") if rng is not None else None)


def binary_search_unified(
    sorted_points: Sequence[Point],
    mu_prime,
    oracle: OracleModel,
    z_p: Sequence[Point],
    beta: int,
    policy: Policy = Policy.TREAT_AS_DIFFERENT,
    rng: Stream | None = None,
) -> SearchResult:
    """Anchor query first, beta-1 fallback draws on NotSure."""
    if not sorted_points:
        raise ValueError("sorted point list must be nonempty")
    if beta < 1:
        raise ValueError("unified search needs beta >= 1")
    if rng is None:
        rng = Stream(derive_seed(0, "search"))
    gen = _search_unified_gen(
        _Ctx(),
        [p.id for p in sorted_points],
        _sorted_dists(sorted_points, mu_prime),
        [p.id for p in z_p],
        beta,
        policy,
        rng,
    )
    return _drive(gen, oracle, rng.spawn("oracle"))


def min_sufficient_eta(
    q: float,
    gamma: float,
    k: int,
    m: int,
    delta: float,
    epsilon_override: float | None = None,
) -> float:
    """Sample count per cluster making the center-estimate tail <= delta/(2k).

    eta = ln(2k(m+1)/delta) / ln(1 / (1 - q^(k-1) (1 - e^(-eps^2/2)))) with
    eps = (gamma-1)/2 unless overridden (override must not exceed that cap).
    """
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0, 1]")
    if not gamma > 1:
        raise ValueError("margin gamma must exceed 1")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    eps_cap = (gamma - 1.0) / 2.0
    eps = eps_cap if epsilon_override is None else float(epsilon_override)
    if not 0 < eps <= eps_cap:
        raise ValueError(f"epsilon must lie in (0, {eps_cap}]")
    q_assign = q ** (k - 1)
    shrink = 1.0 - q_assign * (1.0 - math.exp(-(eps**2) / 2.0))
    return math.log(2.0 * k * (m + 1) / delta) / math.log(1.0 / shrink)


def min_sufficient_beta(q: float, k: int, n: int, delta: float) -> int:
    """Probe repetitions making all k * ceil(log2 n) search steps survive.

    beta = ceil(ln(2 k ceil(log2 n) / delta) / ln(1/(1-q))), floored at 1;
    q = 1 returns 1 (a single query per probe always suffices).
    """
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0, 1]")
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if q == 1.0:
        return 1
    steps = (n - 1).bit_length()  # ceil(log2 n)
    value = math.ceil(math.log(2.0 * k * steps / delta) / math.log(1.0 / (1.0 - q)))
    return max(1, value)
