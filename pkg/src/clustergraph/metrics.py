"""Point-to-point metric and the five inter-cluster distance measures.

Every distance in the package flows through :func:`point_distance` /
:func:`distance_block`, so coordinate clouds and precomputed distance
matrices behave identically everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lcm

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .core import PointCloud
from .errors import ConfigError, InternalError, ValidationError

EXTREMAL_KINDS = ("min", "max", "avg")
METRIC_KINDS = EXTREMAL_KINDS + ("hausdorff", "wasserstein")

# Minkowski exponent used by coordinate clouds; 2 = Euclidean.
_minkowski_exponent = 2.0


def set_minkowski_exponent(q: float) -> None:
    q = float(q)
    if not np.isfinite(q) or q < 1.0:
        raise ConfigError(f"Minkowski exponent must be finite and >= 1, got {q}")
    global _minkowski_exponent
    _minkowski_exponent = q


def get_minkowski_exponent() -> float:
    return _minkowski_exponent


@dataclass(frozen=True)
class ClusterMetricChoice:
    """Which inter-cluster measure weights the graph edges.

    ``p`` applies to the wasserstein kind only.
    """

    kind: str
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ConfigError(f"unknown cluster metric {self.kind!r}; choose from {METRIC_KINDS}")
        if not np.isfinite(self.p) or self.p < 1.0:
            raise ConfigError(f"wasserstein exponent p must be finite and >= 1, got {self.p}")

    @property
    def tag(self) -> str:
        if self.kind == "wasserstein":
            return f"wasserstein(p={self.p:g})"
        return self.kind


def metric_from_tag(tag: str) -> ClusterMetricChoice:
    """Inverse of ``ClusterMetricChoice.tag``; lets stages resume from an
    exported graph's metadata."""
    if tag.startswith("wasserstein("):
        if not (tag.startswith("wasserstein(p=") and tag.endswith(")")):
            raise ConfigError(f"malformed metric tag {tag!r}")
        return ClusterMetricChoice("wasserstein", float(tag[len("wasserstein(p=") : -1]))
    return ClusterMetricChoice(tag)


def _check_ids(cloud: PointCloud, ids) -> np.ndarray:
    out = np.asarray(ids, dtype=np.intp).ravel()
    if out.size == 0:
        raise ValidationError("empty cluster")
    if out.min() < 0 or out.max() >= cloud.n_points:
        raise ValidationError(
            f"point id out of range 0..{cloud.n_points - 1}: {int(out.min())}..{int(out.max())}"
        )
    return out


def point_distance(cloud: PointCloud, i: int, j: int) -> float:
    """Distance between two points: Minkowski on coordinates, matrix lookup
    otherwise."""
    if not (0 <= i < cloud.n_points and 0 <= j < cloud.n_points):
        raise ValidationError(f"point id out of range 0..{cloud.n_points - 1}: ({i}, {j})")
    if cloud.dist is not None:
        return float(cloud.dist[i, j])
    diff = np.abs(cloud.points[i] - cloud.points[j])
    q = _minkowski_exponent
    if q == 2.0:
        return float(np.sqrt(np.dot(diff, diff)))
    return float(np.sum(diff**q) ** (1.0 / q))


def distance_row(cloud: PointCloud, i: int) -> np.ndarray:
    """Distances from point ``i`` to every point, as a length-N array."""
    if not 0 <= i < cloud.n_points:
        raise ValidationError(f"point id out of range 0..{cloud.n_points - 1}: {i}")
    if cloud.dist is not None:
        return cloud.dist[i].copy()
    diff = np.abs(cloud.points - cloud.points[i])
    q = _minkowski_exponent
    if q == 2.0:
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return np.sum(diff**q, axis=1) ** (1.0 / q)


def distance_block(cloud: PointCloud, ids_i, ids_j) -> np.ndarray:
    """The |ids_i| x |ids_j| matrix of pairwise distances."""
    a = _check_ids(cloud, ids_i)
    b = _check_ids(cloud, ids_j)
    if cloud.dist is not None:
        return cloud.dist[np.ix_(a, b)]
    diff = np.abs(cloud.points[a][:, None, :] - cloud.points[b][None, :, :])
    q = _minkowski_exponent
    if q == 2.0:
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return np.sum(diff**q, axis=2) ** (1.0 / q)


def _canonical_pair(ids_i, ids_j):
    """Order the two member tuples canonically so every measure is exactly
    symmetric in its arguments (identical floating-point result)."""
    a = tuple(sorted(int(x) for x in ids_i))
    b = tuple(sorted(int(x) for x in ids_j))
    if (len(a), a) <= (len(b), b):
        return a, b, False
    return b, a, True


def cluster_distance_extremal(cloud: PointCloud, ids_i, ids_j, kind: str) -> float:
    """min / max / mean of the point distance over all ordered cross pairs.

    The mean divides by |C_i|*|C_j|, counting shared points of overlapping
    clusters once per side.
    """
    if kind not in EXTREMAL_KINDS:
        raise ConfigError(f"kind must be one of {EXTREMAL_KINDS}, got {kind!r}")
    a, b, _ = _canonical_pair(ids_i, ids_j)
    block = distance_block(cloud, a, b)
    if kind == "min":
        return float(block.min())
    if kind == "max":
        return float(block.max())
    return float(block.sum() / block.size)


def cluster_distance_hausdorff(cloud: PointCloud, ids_i, ids_j) -> float:
    """max over both directions of the farthest point-to-set distance."""
    a, b, _ = _canonical_pair(ids_i, ids_j)
    block = distance_block(cloud, a, b)
    return float(max(block.min(axis=1).max(), block.min(axis=0).max()))


def cluster_distance_wasserstein(cloud: PointCloud, ids_i, ids_j, p: float = 1.0) -> float:
    """p-Wasserstein distance between the uniform distributions on two
    clusters (each cluster carries total mass 1).

    Both marginals are scaled to a common integer grid (the lcm of the
    cluster sizes) and the balanced transportation problem is solved
    exactly with the HiGHS dual simplex; the optimum lands on an integral
    vertex of the transportation polytope, so results match brute-force
    matchings to float precision.
    """
    if not np.isfinite(p) or p < 1.0:
        raise ConfigError(f"wasserstein exponent p must be finite and >= 1, got {p}")
    a, b, _ = _canonical_pair(ids_i, ids_j)
    cost = distance_block(cloud, a, b) ** p
    na, nb = len(a), len(b)
    if a == b:
        return 0.0
    total = lcm(na, nb)
    supply = np.full(na, total // na, dtype=np.float64)
    demand = np.full(nb, total // nb, dtype=np.float64)

    # Equality constraints: row sums = supply, column sums = demand.
    n_var = na * nb
    rows_i = np.repeat(np.arange(na), nb)
    cols_j = np.tile(np.arange(nb), na)
    data = np.ones(2 * n_var)
    rows = np.concatenate([rows_i, na + cols_j])
    cols = np.concatenate([np.arange(n_var), np.arange(n_var)])
    a_eq = sparse.csr_matrix((data, (rows, cols)), shape=(na + nb, n_var))
    b_eq = np.concatenate([supply, demand])

    result = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not result.success:
        raise InternalError(f"transport solver failed: {result.message}")
    plan = result.x.reshape(na, nb)
    # Recompute the objective from the plan; keeps the reported value an
    # exact dot product rather than the solver's internal accumulation.
    value = float(np.dot(plan.ravel(), cost.ravel())) / total
    return float(max(value, 0.0) ** (1.0 / p))


def cluster_distance(cloud: PointCloud, ids_i, ids_j, metric: ClusterMetricChoice) -> float:
    """Dispatch to the configured inter-cluster measure."""
    if metric.kind in EXTREMAL_KINDS:
        return cluster_distance_extremal(cloud, ids_i, ids_j, metric.kind)
    if metric.kind == "hausdorff":
        return cluster_distance_hausdorff(cloud, ids_i, ids_j)
    return cluster_distance_wasserstein(cloud, ids_i, ids_j, metric.p)
