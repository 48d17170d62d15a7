"""Weak same-cluster-query oracles and the pairwise cluster-assignment procedure.

Answer codes are fixed: Same = 1, NotSure = 0, Different = -1. Oracles never
lie: a definitive answer always matches the ground truth; weakness only ever
turns a truthful answer into NotSure.

Four models:

* ``perfect``       -- always truthful.
* ``random``        -- NotSure with probability exactly 1 - q per query,
                       independent across queries (the worst case the model
                       admits; q = 1 recovers the strong oracle).
* ``local``         -- deterministic; NotSure when two foreign points are too
                       close, d(x,y) < (nu-1) * min(d(x,mu_i), d(y,mu_j)), or
                       two same-cluster points too far, d(x,y) > 2*rho*r(C_i).
* ``global``        -- deterministic; NotSure when a foreign pair has either
                       point beyond rho * r of its own center, or a
                       same-cluster pair is farther than 2*rho*r(C_i).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from ssac.geometry import ClusterGeometry, Clustering, Dataset, Point, compute_geometry, distance
from ssac.rng import Stream

__all__ = [
    "SAME",
    "NOT_SURE",
    "DIFFERENT",
    "QueryLedger",
    "OracleModel",
    "AssignmentOutcome",
    "same_cluster_query",
    "cluster_assignment_query",
    "resolve_assignment",
]

SAME = 1
NOT_SURE = 0
DIFFERENT = -1

OracleKind = Literal["perfect", "random", "local", "global"]


@dataclass
class QueryLedger:
    """Monotone counters of queries actually issued."""

    same_cluster_count: int = 0
    assignment_count: int = 0


class OracleModel:
    """A weak oracle wrapping a ground-truth clustering of a dataset."""

    def __init__(
        self,
        kind: OracleKind,
        dataset: Dataset,
        truth: Clustering,
        *,
        q: float | None = None,
        nu: float | None = None,
        rho: float | None = None,
        geometry: ClusterGeometry | None = None,
    ):
        if kind not in ("perfect", "random", "local", "global"):
            raise ValueError(f"unknown oracle kind {kind!r}")
        truth.validate_against(dataset)
        if not truth.is_ground_truth():
            raise ValueError("oracle truth must assign every point a label in 1..k")
        if kind == "random":
            if q is None or not 0 < q <= 1:
                raise ValueError("random-weak oracle needs q in (0, 1]")
        if kind == "local":
            if nu is None or nu < 1:
                raise ValueError("local distance-weak oracle needs nu >= 1")
        if kind in ("local", "global"):
            if rho is None or not 0 < rho <= 1:
                raise ValueError("distance-weak oracles need rho in (0, 1]")
        self.kind = kind
        self.dataset = dataset
        self.truth = truth
        self.q = q
        self.nu = nu
        self.rho = rho
        self.geometry = geometry if geometry is not None else compute_geometry(dataset, truth)
        self.ledger = QueryLedger()
        # Per-point distance to its own cluster center, used by the
        # distance-weak conditions.
        labels = truth.label_array(dataset)
        centers = self.geometry.centers[labels - 1]
        self._d_own = np.sqrt(((dataset.coords - centers) ** 2).sum(axis=1))

    def label_of(self, pid: int) -> int:
        if pid not in self.truth.labels:
            raise KeyError(f"point id {pid} unknown to this oracle")
        return self.truth.labels[pid]

    def d_to_own_center(self, pid: int) -> float:
        return float(self._d_own[self.dataset.row_of[pid]])

    def radius(self, label: int) -> float:
        return float(self.geometry.radii[label - 1])


def same_cluster_query(oracle: OracleModel, x: Point, y: Point, rng: Stream | None = None) -> int:
    """Answer one weak same-cluster query; increments the oracle's ledger."""
    lx = oracle.label_of(x.id)
    ly = oracle.label_of(y.id)
    oracle.ledger.same_cluster_count += 1
    truthful = SAME if lx == ly else DIFFERENT

    if oracle.kind == "perfect":
        return truthful

    if oracle.kind == "random":
        if rng is None:
            raise ValueError("random-weak oracle needs an rng stream")
        # Fresh draw per query; NotSure with probability exactly 1 - q.
        if rng.uniform01() < 1.0 - oracle.q:
            return NOT_SURE
        return truthful

    d_xy = distance(x, y)
    if lx == ly:
        if d_xy > 2.0 * oracle.rho * oracle.radius(lx):
            return NOT_SURE
        return truthful

    dx = oracle.d_to_own_center(x.id)
    dy = oracle.d_to_own_center(y.id)
    if oracle.kind == "local":
        if d_xy < (oracle.nu - 1.0) * min(dx, dy):
            return NOT_SURE
        return truthful
    # global
    if dx > oracle.rho * oracle.radius(lx) or dy > oracle.rho * oracle.radius(ly):
        return NOT_SURE
    return truthful


@dataclass(frozen=True)
class AssignmentOutcome:
    """Result of a pairwise cluster-assignment query.

    kind: "assigned" (label set), "new_cluster", or "not_sure".
    """

    kind: Literal["assigned", "new_cluster", "not_sure"]
    label: int | None = None


def resolve_assignment(
    answers: Sequence[int],
    rep_labels: Sequence[int],
    covered_all: bool,
    allow_new: bool,
) -> AssignmentOutcome:
    """Decide an assignment from the ordered answers against representatives.

    The caller stops issuing queries at the first Same, so at most the final
    answer can be Same. Rules, in order:

    1. any Same -> assigned to that representative's label;
    2. all Different and new clusters allowed -> new cluster;
    3. representatives cover all k clusters, exactly one NotSure and the rest
       Different -> assigned to the NotSure representative (elimination);
    4. otherwise not sure.
    """
    for ans, label in zip(answers, rep_labels):
        if ans == SAME:
            return AssignmentOutcome(kind="assigned", label=label)
    if all(a == DIFFERENT for a in answers):
        if allow_new:
            return AssignmentOutcome(kind="new_cluster")
        return AssignmentOutcome(kind="not_sure")
    if covered_all and sum(1 for a in answers if a == NOT_SURE) == 1:
        idx = next(i for i, a in enumerate(answers) if a == NOT_SURE)
        return AssignmentOutcome(kind="assigned", label=rep_labels[idx])
    return AssignmentOutcome(kind="not_sure")


def cluster_assignment_query(
    oracle: OracleModel,
    x: Point,
    representatives: Sequence[tuple[int, Point]],
    allow_new: bool,
    rng: Stream | None = None,
) -> AssignmentOutcome:
    """Assign x to a discovered cluster via same-cluster queries against reps.

    ``representatives`` is an ordered list of (discovered label, point);
    queries run in that order and stop early at the first Same. The
    elimination rule (3) applies only when the representatives cover all k of
    the oracle's clusters.
    """
    labels = [label for label, _ in representatives]
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate representative labels")
    oracle.ledger.assignment_count += 1
    answers: list[int] = []
    for _, rep in representatives:
        ans = same_cluster_query(oracle, x, rep, rng)
        answers.append(ans)
        if ans == SAME:
            break
    truth_covered = {oracle.label_of(rep.id) for _, rep in representatives}
    covered_all = len(truth_covered) == oracle.truth.k
    return resolve_assignment(answers, labels, covered_all, allow_new)
