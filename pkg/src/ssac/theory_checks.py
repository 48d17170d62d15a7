"""Numerical verification of the supporting theory.

Covers the transpose dilation's spectral identity, the vector Hoeffding tail
bound (Monte Carlo), the close-center separation property, the margin-derived
pairwise distance bounds, the good-set preconditions of distance-weak
recovery, and the cluster-assignment success lower bound. These are
empirical property checks, not proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ssac.geometry import (
    ClusterGeometry,
    Clustering,
    Dataset,
    compute_geometry,
    good_set,
    margin_gamma,
)
from ssac.oracles import OracleModel
from ssac.rng import Stream, derive_seed

__all__ = [
    "transpose_dilation",
    "lambda_max",
    "HoeffdingTrialConfig",
    "TailRecord",
    "hoeffding_tail_check",
    "default_hoeffding_grid",
    "SeparationReport",
    "separation_check",
    "DistanceBoundsReport",
    "distance_bounds_check",
    "ClusterPrecondition",
    "PreconditionReport",
    "recovery_preconditions",
    "assignment_success_lower_bound",
]


def transpose_dilation(matrix) -> np.ndarray:
    """Symmetric block embedding [[0, A], [A^T, 0]] of a d1 x d2 matrix."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    d1, d2 = a.shape
    out = np.zeros((d1 + d2, d1 + d2))
    out[:d1, d1:] = a
    out[d1:, :d1] = a.T
    return out


def lambda_max(matrix, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Largest-magnitude eigenvalue of a symmetric matrix by power iteration.

    Iterates on M @ M (so the symmetric +/- spectrum of a dilation cannot
    stall the iteration) from a fixed seeded start vector; stops when two
    successive estimates agree to ``tol`` relative.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    d = m.shape[0]
    v = Stream(derive_seed(0x5EED, "power-start", d)).normals(d)
    v /= np.linalg.norm(v)
    estimate = float(np.linalg.norm(m @ v))
    for _ in range(max_iter):
        w = m @ (m @ v)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        new_estimate = float(np.linalg.norm(m @ v))
        if abs(new_estimate - estimate) <= tol * max(new_estimate, 1.0):
            return new_estimate
        estimate = new_estimate
    return estimate


@dataclass(frozen=True)
class HoeffdingTrialConfig:
    m: int
    s: int
    radii: tuple[float, ...]
    t_grid: tuple[float, ...]
    trials: int
    seed: int

    def __post_init__(self):
        if len(self.radii) != self.s:
            raise ValueError("need one radius bound per vector")
        if any(r <= 0 for r in self.radii):
            raise ValueError("radii must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    @property
    def sigma_sq(self) -> float:
        return sum(r * r for r in self.radii) / (self.s**2)


@dataclass(frozen=True)
class TailRecord:
    t: float
    empirical: float
    bound: float
    slack: float
    holds: bool


def hoeffding_tail_check(config: HoeffdingTrialConfig) -> list[TailRecord]:
    """Empirical P(||mean of s sphere-uniform vectors|| > t) vs (m+1)e^(-t^2/2s^2).

    Default sampler: each vector uniform on the radius-r_i sphere (zero mean,
    norm exactly r_i), the distribution-free worst case the bound admits. The
    `holds` flag allows three binomial standard errors of Monte-Carlo slack.
    """
    rng = Stream(derive_seed(config.seed, "hoeffding", config.m, config.s))
    radii = np.asarray(config.radii)
    counts = np.zeros(len(config.t_grid), dtype=np.int64)
    t_arr = np.array(config.t_grid)
    done = 0
    batch_rows = max(1, 2_000_000 // max(1, config.s * config.m))
    while done < config.trials:
        rows = min(batch_rows, config.trials - done)
        raw = rng.normals((rows, config.s, config.m))
        norms = np.sqrt((raw**2).sum(axis=2, keepdims=True))
        norms[norms == 0.0] = 1.0
        vectors = raw / norms * radii[None, :, None]
        sample_norm = np.sqrt((vectors.mean(axis=1) ** 2).sum(axis=1))
        counts += (sample_norm[:, None] > t_arr[None, :]).sum(axis=0)
        done += rows
    records = []
    for t, count in zip(config.t_grid, counts):
        empirical = count / config.trials
        bound = (config.m + 1) * math.exp(-(t**2) / (2.0 * config.sigma_sq))
        slack = 3.0 * math.sqrt(bound * (1.0 - min(bound, 1.0)) / config.trials)
        records.append(
            TailRecord(
                t=t,
                empirical=empirical,
                bound=bound,
                slack=slack,
                holds=empirical <= bound + slack,
            )
        )
    return records


def default_hoeffding_grid(trials: int = 100_000, seed: int = 2024) -> list[HoeffdingTrialConfig]:
    """The standard verification grid: m in {1,2,10}, s in {1,10,100}, unit radii."""
    grid = []
    for m in (1, 2, 10):
        for s in (1, 10, 100):
            sigma = math.sqrt(s) / s  # unit radii
            t_max = 3.0 * sigma * math.sqrt(s)
            t_grid = tuple(np.linspace(0.0, t_max, 8))
            grid.append(
                HoeffdingTrialConfig(
                    m=m, s=s, radii=(1.0,) * s, t_grid=t_grid, trials=trials, seed=seed
                )
            )
    return grid


@dataclass(frozen=True)
class SeparationReport:
    epsilon_ok: bool
    center_ok: bool
    separation_holds: bool

    @property
    def precondition_met(self) -> bool:
        return self.epsilon_ok and self.center_ok


def separation_check(
    dataset: Dataset,
    clustering: Clustering,
    geometry: ClusterGeometry,
    mu_prime,
    i: int,
    epsilon: float,
) -> SeparationReport:
    """Do all of cluster i's members sit closer to mu' than every foreigner?

    Also reports whether the property's hypotheses held: epsilon <= (gamma-1)/2
    and d(mu', mu_i) < epsilon * r(C_i).
    """
    if not 1 <= i <= clustering.k:
        raise IndexError(f"cluster index {i} out of range")
    gamma = margin_gamma(dataset, clustering)
    epsilon_ok = gamma > 1.0 and epsilon <= (gamma - 1.0) / 2.0
    mu = np.asarray(mu_prime, dtype=float)
    center_dist = float(np.linalg.norm(mu - geometry.centers[i - 1]))
    center_ok = center_dist < epsilon * float(geometry.radii[i - 1])
    labels = clustering.label_array(dataset)
    d = np.sqrt(((dataset.coords - mu) ** 2).sum(axis=1))
    own = labels == i
    separation = bool(d[own].max() < d[~own].min())
    return SeparationReport(epsilon_ok=epsilon_ok, center_ok=center_ok, separation_holds=separation)


@dataclass(frozen=True)
class DistanceBoundsReport:
    gamma: float
    inter_applicable: bool
    inter_holds: bool | None  # None when gamma* <= 1
    intra_holds: bool

    @property
    def ok(self) -> bool:
        return (self.inter_holds is not False) and self.intra_holds


def distance_bounds_check(dataset: Dataset, clustering: Clustering) -> DistanceBoundsReport:
    """Exhaustive pair scan of the margin-derived distance bounds.

    (inter) d(x,y) > (gamma-1) max(d(x,mu_i), d(y,mu_j)) for cross pairs,
    checked only when gamma* > 1; (intra) d(x,y) <= 2 r(C_i) always.
    """
    geometry = compute_geometry(dataset, clustering)
    gamma = margin_gamma(dataset, clustering)
    labels = clustering.label_array(dataset)
    coords = dataset.coords
    dists = np.sqrt(((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2))
    centers = geometry.centers[labels - 1]
    d_own = np.sqrt(((coords - centers) ** 2).sum(axis=1))
    cross = labels[:, None] != labels[None, :]
    intra_ok = True
    for i in range(1, clustering.k + 1):
        own = labels == i
        if own.sum() >= 2:
            block = dists[np.ix_(own, own)]
            if block.max() > 2.0 * geometry.radii[i - 1]:
                intra_ok = False
    if gamma > 1.0:
        max_own = np.maximum(d_own[:, None], d_own[None, :])
        if math.isinf(gamma):
            # infinite margin forces every d(., mu) to zero, so the bound
            # degenerates to d(x, y) > 0 for cross pairs
            pair_floor = np.where(max_own == 0.0, 0.0, math.inf)
        else:
            pair_floor = (gamma - 1.0) * max_own
        inter_ok = bool(np.all(dists[cross] > pair_floor[cross]))
        return DistanceBoundsReport(gamma=gamma, inter_applicable=True, inter_holds=inter_ok, intra_holds=intra_ok)
    return DistanceBoundsReport(gamma=gamma, inter_applicable=False, inter_holds=None, intra_holds=intra_ok)


@dataclass(frozen=True)
class ClusterPrecondition:
    cluster: int
    exists_good_point: bool
    min_ratio: float  # min_x d(x, mu_i) / r(C_i)
    slack: float  # threshold - min_ratio


@dataclass(frozen=True)
class PreconditionReport:
    kind: str  # "local" | "global"
    gamma: float
    epsilon: float
    c: float  # good-set scale
    threshold: float  # c - 2 epsilon, the x* existence bound
    parameter_feasible: bool
    q_d: float
    per_cluster: tuple[ClusterPrecondition, ...]

    @property
    def all_exist(self) -> bool:
        return all(pc.exists_good_point for pc in self.per_cluster)


def recovery_preconditions(
    dataset: Dataset,
    clustering: Clustering,
    model: OracleModel,
    epsilon: float,
) -> PreconditionReport:
    """Check the distance-weak recovery preconditions for an oracle model.

    Reports, per cluster, whether a point exists strictly within
    (c - 2 epsilon) * r(C_i) of the center, with c = min(2 rho - 1,
    gamma - nu + 1) for local oracles and c = 2 rho - 1 for global ones, plus
    the good-set probability q_d = min_i |G_i(c)| / |C_i| and the parameter
    feasibility window.
    """
    if model.kind not in ("local", "global"):
        raise ValueError("preconditions are defined for distance-weak oracles only")
    gamma = margin_gamma(dataset, clustering)
    geometry = compute_geometry(dataset, clustering)
    if model.kind == "local":
        c = min(2.0 * model.rho - 1.0, gamma - model.nu + 1.0)
        feasible = gamma > 1.0 and epsilon <= (gamma - 1.0) / 2.0 and gamma <= model.nu <= gamma + 1.0
    else:
        c = 2.0 * model.rho - 1.0
        feasible = gamma > 1.0 and epsilon <= (gamma - 1.0) / 2.0
    threshold = c - 2.0 * epsilon
    labels = clustering.label_array(dataset)
    per_cluster = []
    q_d = 1.0
    for i in range(1, clustering.k + 1):
        own_rows = labels == i
        mu = geometry.centers[i - 1]
        radius = float(geometry.radii[i - 1])
        d = np.sqrt(((dataset.coords[own_rows] - mu) ** 2).sum(axis=1))
        size = int(own_rows.sum())
        if radius == 0.0:
            per_cluster.append(
                ClusterPrecondition(cluster=i, exists_good_point=False, min_ratio=math.inf, slack=-math.inf)
            )
            q_d = 0.0
            continue
        min_ratio = float(d.min()) / radius
        exists = float(d.min()) < threshold * radius
        per_cluster.append(
            ClusterPrecondition(
                cluster=i, exists_good_point=exists, min_ratio=min_ratio, slack=threshold - min_ratio
            )
        )
        q_d = min(q_d, len(good_set(dataset, clustering, geometry, i, c)) / size)
    return PreconditionReport(
        kind=model.kind,
        gamma=gamma,
        epsilon=epsilon,
        c=c,
        threshold=threshold,
        parameter_feasible=feasible,
        q_d=q_d,
        per_cluster=tuple(per_cluster),
    )


def assignment_success_lower_bound(q: float, k: int) -> float:
    """q^(k-1), the success floor of a full-coverage cluster-assignment query."""
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0, 1]")
    if k < 1:
        raise ValueError("k must be >= 1")
    return q ** (k - 1)
