"""Euclidean data model: points, clusterings, centers/radii, margins, good sets.

Everything here is a pure function of immutable values; exact floating-point
comparison is used for structural checks unless an operation documents a
tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

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
    "write_dataset",
    "read_dataset",
    "render_dataset",
    "parse_dataset",
    "DatasetFormatError",
]


@dataclass(frozen=True)
class Point:
    """A single observation: stable integer id plus an m-vector of coordinates."""

    id: int
    coords: tuple[float, ...]

    def __init__(self, id: int, coords: Sequence[float]):
        object.__setattr__(self, "id", int(id))
        object.__setattr__(self, "coords", tuple(float(c) for c in coords))
        if len(self.coords) < 1:
            raise ValueError(f"point {self.id}: empty coordinate vector")
        if not all(math.isfinite(c) for c in self.coords):
            raise ValueError(f"point {self.id}: non-finite coordinate")


class Dataset:
    """An ordered collection of points with distinct ids and common dimension."""

    def __init__(self, dim: int, points: list[Point]):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        if not points:
            raise ValueError("dataset must contain at least one point")
        ids = [p.id for p in points]
        if len(set(ids)) != len(ids):
            raise ValueError("point ids must be unique")
        for p in points:
            if len(p.coords) != dim:
                raise ValueError(f"point {p.id} has dimension {len(p.coords)}, expected {dim}")
        self.dim = dim
        self.points = list(points)
        self.ids = ids
        # Row-major coordinate matrix and id -> row lookup, shared by every
        # vectorized operation downstream.
        self.coords = np.array([p.coords for p in points], dtype=np.float64)
        self.row_of = {pid: i for i, pid in enumerate(ids)}
        self._by_id = {p.id: p for p in points}

    def __len__(self) -> int:
        return len(self.points)

    def point(self, pid: int) -> Point:
        return self._by_id[pid]


@dataclass
class Clustering:
    """Assignment of point ids to labels 1..k, with 0 meaning unassigned."""

    k: int
    labels: dict[int, int]

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        bad = [l for l in self.labels.values() if l < 0 or l > self.k]
        if bad:
            raise ValueError(f"labels outside 0..{self.k}: {sorted(set(bad))[:5]}")

    def members(self, label: int) -> list[int]:
        return [pid for pid, l in self.labels.items() if l == label]

    def validate_against(self, dataset: Dataset) -> None:
        if set(self.labels) != set(dataset.ids):
            raise ValueError("clustering must label exactly the dataset's point ids")

    def is_ground_truth(self) -> bool:
        """True when no point is unassigned and every label in 1..k occurs."""
        seen = set(self.labels.values())
        return 0 not in seen and seen == set(range(1, self.k + 1))

    def label_array(self, dataset: Dataset) -> np.ndarray:
        return np.array([self.labels[pid] for pid in dataset.ids], dtype=np.int64)


@dataclass(frozen=True)
class ClusterGeometry:
    """Per-cluster centers (member means) and radii (max member distance)."""

    centers: np.ndarray  # (k, m)
    radii: np.ndarray  # (k,)


def distance(x: Point, y: Point) -> float:
    """Euclidean distance between two points of equal dimension."""
    if len(x.coords) != len(y.coords):
        raise ValueError(f"dimension mismatch: {len(x.coords)} vs {len(y.coords)}")
    return math.dist(x.coords, y.coords)


def compute_geometry(dataset: Dataset, clustering: Clustering) -> ClusterGeometry:
    """Centers and radii of a fully assigned clustering.

    Raises if any point is unassigned or any cluster in 1..k is empty.
    """
    clustering.validate_against(dataset)
    labels = clustering.label_array(dataset)
    if np.any(labels == 0):
        raise ValueError("clustering has unassigned points; geometry undefined")
    centers = np.empty((clustering.k, dataset.dim))
    radii = np.empty(clustering.k)
    for i in range(1, clustering.k + 1):
        rows = dataset.coords[labels == i]
        if rows.shape[0] == 0:
            raise ValueError(f"cluster {i} is empty")
        centers[i - 1] = rows.mean(axis=0)
        radii[i - 1] = float(np.sqrt(((rows - centers[i - 1]) ** 2).sum(axis=1)).max())
    return ClusterGeometry(centers=centers, radii=radii)


def margin_gamma(dataset: Dataset, clustering: Clustering) -> float:
    """Largest margin gamma* of the clustering.

    gamma* = min over clusters i, members x, foreigners y of
    d(y, mu_i) / d(x, mu_i). Pairs with d(x, mu_i) = 0 are skipped (the margin
    inequality is vacuous there); a foreign point coinciding with a center
    forces gamma* = 0; if no cluster has a member at positive distance the
    result is +inf.
    """
    if clustering.k < 2:
        raise ValueError("margin requires at least 2 clusters")
    geometry = compute_geometry(dataset, clustering)
    labels = clustering.label_array(dataset)
    best = math.inf
    for i in range(1, clustering.k + 1):
        mu = geometry.centers[i - 1]
        dist_all = np.sqrt(((dataset.coords - mu) ** 2).sum(axis=1))
        own = labels == i
        foreign_min = float(dist_all[~own].min())
        if foreign_min == 0.0:
            return 0.0
        own_max = float(dist_all[own].max())  # == radius
        if own_max == 0.0:
            continue  # all members coincide with the center: no constraining pair
        best = min(best, foreign_min / own_max)
    return best


def good_set(
    dataset: Dataset,
    clustering: Clustering,
    geometry: ClusterGeometry,
    i: int,
    c: float,
) -> set[int]:
    """Members of cluster i strictly within c * radius(i) of its center."""
    if not 1 <= i <= clustering.k:
        raise IndexError(f"cluster index {i} out of range 1..{clustering.k}")
    labels = clustering.label_array(dataset)
    mu = geometry.centers[i - 1]
    bound = c * geometry.radii[i - 1]
    own_rows = np.nonzero(labels == i)[0]
    d = np.sqrt(((dataset.coords[own_rows] - mu) ** 2).sum(axis=1))
    return {dataset.ids[r] for r, dr in zip(own_rows, d) if dr < bound}


def is_center_based(dataset: Dataset, clustering: Clustering) -> bool:
    """True iff every point's label is its unique nearest center (ties fail)."""
    geometry = compute_geometry(dataset, clustering)
    labels = clustering.label_array(dataset)
    # (n, k) squared distances; exact comparisons by design.
    d2 = ((dataset.coords[:, None, :] - geometry.centers[None, :, :]) ** 2).sum(axis=2)
    for row, label in enumerate(labels):
        own = d2[row, label - 1]
        others = np.delete(d2[row], label - 1)
        if not np.all(others > own):
            return False
    return True


# -- dataset file format -------------------------------------------------------
#
# Plain text, one point per line, comma-separated `id,label,c1,...,cm`,
# preceded by the header `# ssac-dataset v1 dim=<m> k=<k>`. Floats are rendered
# with 17 significant digits, which round-trips IEEE doubles bit-exactly.

_HEADER_PREFIX = "# ssac-dataset v1"


class DatasetFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return format(x, ".17g")


def render_dataset(dataset: Dataset, clustering: Clustering) -> str:
    clustering.validate_against(dataset)
    lines = [f"{_HEADER_PREFIX} dim={dataset.dim} k={clustering.k}"]
    for p in dataset.points:
        coords = ",".join(_fmt(c) for c in p.coords)
        lines.append(f"{p.id},{clustering.labels[p.id]},{coords}")
    return "\n".join(lines) + "\n"


def write_dataset(path: str | Path, dataset: Dataset, clustering: Clustering) -> None:
    Path(path).write_text(render_dataset(dataset, clustering), encoding="ascii")


def parse_dataset(text: str) -> tuple[Dataset, Clustering]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(_HEADER_PREFIX):
        raise DatasetFormatError(f"missing header line '{_HEADER_PREFIX} dim=<m> k=<k>'")
    fields = dict(
        item.split("=", 1) for item in lines[0][len(_HEADER_PREFIX) :].split() if "=" in item
    )
    try:
        dim = int(fields["dim"])
        k = int(fields["k"])
    except (KeyError, ValueError) as exc:
        raise DatasetFormatError(f"malformed header: {lines[0]!r}") from exc
    points: list[Point] = []
    labels: dict[int, int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2 + dim:
            raise DatasetFormatError(f"line {lineno}: expected {2 + dim} fields, got {len(parts)}")
        try:
            pid = int(parts[0])
            label = int(parts[1])
            coords = tuple(float(v) for v in parts[2:])
        except ValueError as exc:
            raise DatasetFormatError(f"line {lineno}: {exc}") from exc
        points.append(Point(id=pid, coords=coords))
        labels[pid] = label
    try:
        dataset = Dataset(dim=dim, points=points)
        clustering = Clustering(k=k, labels=labels)
    except ValueError as exc:
        raise DatasetFormatError(str(exc)) from exc
    return dataset, clustering


def read_dataset(path: str | Path) -> tuple[Dataset, Clustering]:
    return parse_dataset(Path(path).read_text(encoding="ascii"))
