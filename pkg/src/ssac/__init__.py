"""Semi-supervised active clustering (SSAC) under weak same-cluster-query oracles.

Recovers an oracle's k-clustering of Euclidean data with two-phase center/radius
estimation and weak-oracle-aware binary search, simulates four oracle models,
verifies the supporting concentration/margin theory numerically, replicates the
synthetic experiments, and exposes a live HTTP session API so a human can act
as the oracle.
"""

from ssac.geometry import (
    Clustering,
    ClusterGeometry,
    Dataset,
    Point,
    compute_geometry,
    distance,
    good_set,
    is_center_based,
    margin_gamma,
)
from ssac.oracles import (
    DIFFERENT,
    NOT_SURE,
    SAME,
    AssignmentOutcome,
    OracleModel,
    QueryLedger,
    cluster_assignment_query,
    same_cluster_query,
)
from ssac.algorithm import (
    Policy,
    SearchVariant,
    SsacParams,
    SsacResult,
    min_sufficient_beta,
    min_sufficient_eta,
    run_ssac,
)
from ssac.datagen import GenConfig, GenerationError, generate

__all__ = [
    "Point",
    "Dataset",
    "Clustering",
    "ClusterGeometry",
    "distance",
    "compute_geometry",
    "margin_gamma",
    "good_set",
    "is_center_based",
    "SAME",
    "NOT_SURE",
    "DIFFERENT",
    "OracleModel",
    "QueryLedger",
    "AssignmentOutcome",
    "same_cluster_query",
    "cluster_assignment_query",
    "SearchVariant",
    "Policy",
    "SsacParams",
    "SsacResult",
    "run_ssac",
    "min_sufficient_eta",
    "min_sufficient_beta",
    "GenConfig",
    "GenerationError",
    "generate",
]
