"""k-nearest-neighbor graph over the points and the intrinsic-distance
estimator it induces (shortest paths along the graph).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .core import PointCloud
from .errors import ValidationError
from .metrics import distance_row


class GeodesicIndex:
    """k-nn graph with component labels and cached single-source shortest
    paths.

    Each point contributes directed edges to its k nearest others (ties at
    the k-th distance broken by ascending point id, exactly k neighbors per
    point); the graph is the symmetrized union.  Queries are read-only and
    safe from parallel workers; the per-source cache fill is idempotent.
    """

    def __init__(self, cloud: PointCloud, k: int, chosen: np.ndarray, adjacency):
        self.cloud = cloud
        self.k = k
        self.n_points = cloud.n_points
        self.chosen = chosen  # (N, k) neighbor ids pre-symmetrization
        self.adjacency: dict[int, dict[int, float]] = adjacency
        # Dense construction keeps zero-weight edges (coincident points)
        # that plain sparse matrices would silently drop.
        dense = np.full((self.n_points, self.n_points), np.inf)
        for i, nbrs in adjacency.items():
            for j, w in nbrs.items():
                dense[i, j] = w
        self.matrix = csgraph.csgraph_from_dense(dense, null_value=np.inf)
        self.point_component = _component_labels(self.matrix)
        self._sp_cache: dict[int, np.ndarray] = {}

    def neighbors(self, i: int) -> tuple[tuple[int, float], ...]:
        return tuple(sorted(self.adjacency.get(i, {}).items()))

    def distances_from(self, x: int) -> np.ndarray:
        """Shortest-path distances from ``x`` to every point (cached)."""
        if not 0 <= x < self.n_points:
            raise ValidationError(f"point id out of range 0..{self.n_points - 1}: {x}")
        got = self._sp_cache.get(x)
        if got is None:
            got = csgraph.dijkstra(self.matrix, directed=False, indices=x)
            self._sp_cache[x] = got
        return got

    def component_count(self) -> int:
        return int(self.point_component.max()) + 1


def build_knn_graph(cloud: PointCloud, k: int) -> GeodesicIndex:
    """Build the symmetrized k-nn graph with edge weights equal to the point
    distance."""
    n = cloud.n_points
    if not 1 <= k < n:
        raise ValidationError(f"k must satisfy 1 <= k < N={n}, got {k}")
    ids = np.arange(n)
    chosen = np.empty((n, k), dtype=np.intp)
    adjacency: dict[int, dict[int, float]] = {i: {} for i in range(n)}
    for i in range(n):
        row = distance_row(cloud, i)
        order = np.lexsort((ids, row))
        order = order[order != i][:k]
        chosen[i] = order
        for j, w in zip(order, row[order]):
            adjacency[i][int(j)] = float(w)
            adjacency[int(j)][i] = float(w)
    return GeodesicIndex(cloud, k, chosen, adjacency)


def geodesic_distance(index: GeodesicIndex, x: int, y: int) -> float:
    """Shortest-path length between two points in the k-nn graph; 0 for
    identical ids, +inf across components."""
    if not (0 <= x < index.n_points and 0 <= y < index.n_points):
        raise ValidationError(f"point id out of range 0..{index.n_points - 1}: ({x}, {y})")
    if x == y:
        return 0.0
    if index.point_component[x] != index.point_component[y]:
        return math.inf
    return float(index.distances_from(x)[y])


def components(index: GeodesicIndex) -> tuple[dict[int, int], dict[int, tuple[int, ...]]]:
    """Point -> component id, plus the member list of each component.

    Components are numbered by their smallest member id.
    """
    labels = index.point_component
    mapping = {int(i): int(labels[i]) for i in range(index.n_points)}
    groups: dict[int, list[int]] = {}
    for i, c in mapping.items():
        groups.setdefault(c, []).append(i)
    return mapping, {c: tuple(sorted(ps)) for c, ps in sorted(groups.items())}


def _component_labels(matrix: sparse.csr_matrix) -> np.ndarray:
    _, raw = csgraph.connected_components(matrix, directed=False)
    # Renumber so component ids follow their smallest member id.
    order: dict[int, int] = {}
    for label in raw:
        if label not in order:
            order[int(label)] = len(order)
    return np.array([order[int(l)] for l in raw], dtype=np.intp)
