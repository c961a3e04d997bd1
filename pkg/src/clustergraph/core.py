"""Domain types shared by all modules: point clouds, clusterings, the
cluster-level graph, and distortion reports.

All types are immutable after construction; derived values (shortest-path
tables) are cached internally and never mutate observable state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import InternalError, ValidationError

UNLABELED = "unlabeled"

PARTITION = "partition"
DIVISION = "division"

ORIGINAL = "original"
MERGE = "merge"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


class PointCloud:
    """N points given either as coordinates or as a precomputed distance matrix.

    Point ids are 0..N-1.  The matrix mode exists so finite metric spaces
    that cannot be embedded in any Euclidean space can still be processed;
    downstream code reads distances only through the accessors in
    ``clustergraph.metrics`` so both modes behave identically.
    """

    def __init__(self, *, points=None, dist=None, labels=None):
        if (points is None) == (dist is None):
            raise ValidationError("provide exactly one of points= or dist=")
        self.points: np.ndarray | None = None
        self.dist: np.ndarray | None = None
        if points is not None:
            try:
                pts = np.asarray(points, dtype=np.float64)
            except ValueError as exc:
                raise ValidationError(f"points are not a rectangular numeric array: {exc}") from None
            if pts.ndim != 2 or pts.shape[1] < 1:
                raise ValidationError(
                    f"points must be a 2-D array with at least one feature, got shape {pts.shape}"
                )
            if not np.all(np.isfinite(pts)):
                raise ValidationError("points contain non-finite values")
            self.points = _readonly(pts)
            n = pts.shape[0]
        else:
            try:
                d = np.asarray(dist, dtype=np.float64)
            except ValueError as exc:
                raise ValidationError(f"distance matrix is not a rectangular numeric array: {exc}") from None
            if d.ndim != 2 or d.shape[0] != d.shape[1]:
                raise ValidationError(f"distance matrix must be square, got shape {d.shape}")
            if not np.all(np.isfinite(d)):
                raise ValidationError("distance matrix contains non-finite values")
            if np.any(np.diagonal(d) != 0.0):
                raise ValidationError("distance matrix diagonal must be zero")
            if np.any(d < 0.0):
                raise ValidationError("distance matrix contains negative values")
            if not np.array_equal(d, d.T):
                raise ValidationError("distance matrix is not symmetric")
            self.dist = _readonly(d)
            n = d.shape[0]
        if n == 0:
            raise ValidationError("point cloud is empty")
        self.n_points: int = n
        if labels is not None:
            # Missing labels fall back to the reserved name.
            labels = tuple(
                UNLABELED if x is None or str(x) == "" else str(x) for x in labels
            )
            if len(labels) != n:
                raise ValidationError(
                    f"got {len(labels)} labels for {n} points"
                )
        self.labels: tuple[str, ...] | None = labels

    @classmethod
    def from_coordinates(cls, points, labels=None) -> "PointCloud":
        return cls(points=points, labels=labels)

    @classmethod
    def from_distance_matrix(cls, dist, labels=None) -> "PointCloud":
        return cls(dist=dist, labels=labels)

    @property
    def mode(self) -> str:
        return "coordinates" if self.points is not None else "distance_matrix"

    @property
    def dimension(self) -> int | None:
        return None if self.points is None else self.points.shape[1]

    def label_of(self, i: int) -> str:
        if self.labels is None:
            return UNLABELED
        return self.labels[i]

    def __repr__(self):
        return f"PointCloud(mode={self.mode}, n={self.n_points})"


class Clustering:
    """A named cover of point ids: a partition (disjoint) or a division
    (clusters may overlap).

    Cluster ids are opaque strings; every iteration over clusters follows
    their lexicographic order so downstream results are deterministic.
    """

    def __init__(self, clusters: Mapping[str, Iterable[int]], kind: str = PARTITION):
        if kind not in (PARTITION, DIVISION):
            raise ValidationError(f"unknown clustering kind {kind!r}")
        normalized: dict[str, tuple[int, ...]] = {}
        for cid in sorted(str(c) for c in clusters):
            members = tuple(sorted({int(p) for p in clusters[cid]}))
            if not members:
                raise ValidationError(f"cluster {cid!r} is empty")
            normalized[cid] = members
        if not normalized:
            raise ValidationError("clustering has no clusters")
        if kind == PARTITION:
            seen: dict[int, str] = {}
            for cid, members in normalized.items():
                for p in members:
                    if p in seen:
                        raise ValidationError(
                            f"point {p} appears in clusters {seen[p]!r} and {cid!r}: "
                            "overlap under partition kind"
                        )
                    seen[p] = cid
        self.clusters: dict[str, tuple[int, ...]] = normalized
        self.kind: str = kind
        self._membership: dict[int, tuple[str, ...]] | None = None

    @property
    def cluster_ids(self) -> tuple[str, ...]:
        return tuple(self.clusters)

    def members(self, cid: str) -> tuple[int, ...]:
        return self.clusters[cid]

    def covered_ids(self) -> frozenset[int]:
        out: set[int] = set()
        for members in self.clusters.values():
            out.update(members)
        return frozenset(out)

    def clusters_of(self, point: int) -> tuple[str, ...]:
        """All cluster ids containing ``point``, in lexicographic order."""
        if self._membership is None:
            membership: dict[int, list[str]] = {}
            for cid, members in self.clusters.items():
                for p in members:
                    membership.setdefault(p, []).append(cid)
            self._membership = {p: tuple(cids) for p, cids in membership.items()}
        try:
            return self._membership[point]
        except KeyError:
            raise ValidationError(f"point {point} is not covered by any cluster") from None

    def __len__(self):
        return len(self.clusters)

    def __repr__(self):
        return f"Clustering(kind={self.kind}, n_clusters={len(self.clusters)})"


def validate(cloud: PointCloud, clustering: Clustering) -> None:
    """Cross-check a cloud and a clustering; raises ValidationError on the
    first violated invariant.

    Type-level invariants (finite symmetric matrix, nonempty clusters,
    disjointness under partition kind) are already enforced by the
    constructors; this adds the checks that need both objects: ids in range
    and full coverage of the cloud.
    """
    n = cloud.n_points
    for cid, members in clustering.clusters.items():
        for p in members:
            if not 0 <= p < n:
                raise ValidationError(
                    f"cluster {cid!r} references point {p}, outside 0..{n - 1}"
                )
    covered = clustering.covered_ids()
    if len(covered) != n:
        missing = sorted(set(range(n)) - covered)[:5]
        raise ValidationError(
            f"clustering does not cover the cloud: {n - len(covered)} uncovered "
            f"points (first few: {missing})"
        )


@dataclass(frozen=True)
class VertexData:
    """Payload of one graph vertex (one cluster)."""

    size: int
    members: tuple[int, ...]
    class_composition: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class EdgeData:
    """Payload of one undirected graph edge."""

    weight: float
    distortion: float | None = None
    provenance: str = ORIGINAL


def edge_key(u: str, v: str) -> tuple[str, str]:
    """Canonical unordered key for an edge."""
    return (u, v) if u < v else (v, u)


class ClusterGraph:
    """Weighted graph with one vertex per cluster.

    Edge weights carry an inter-cluster distance in the same units as the
    point metric.  Vertices keep the geodesic component id they were built
    from; only merge-provenance edges may join different components.
    The model is immutable: pruning and merging construct new graphs via
    ``with_edges_removed`` / ``with_edges_added``.
    """

    def __init__(
        self,
        vertices: Mapping[str, VertexData],
        edges: Mapping[tuple[str, str], EdgeData],
        component_of: Mapping[str, int],
        metric_tag: str,
        knn_k: int | None = None,
    ):
        self.vertices: dict[str, VertexData] = {v: vertices[v] for v in sorted(vertices)}
        self.component_of: dict[str, int] = {v: int(component_of[v]) for v in self.vertices}
        self.metric_tag = metric_tag
        self.knn_k = knn_k
        checked: dict[tuple[str, str], EdgeData] = {}
        for (u, v), data in edges.items():
            if u == v:
                raise ValidationError(f"self-loop on vertex {u!r}")
            if u not in self.vertices or v not in self.vertices:
                raise ValidationError(f"edge ({u!r}, {v!r}) references unknown vertex")
            key = edge_key(u, v)
            if key in checked:
                raise ValidationError(f"duplicate edge {key}")
            w = float(data.weight)
            if not np.isfinite(w) or w < 0.0:
                raise ValidationError(f"edge {key} has invalid weight {w!r}")
            if self.component_of[u] != self.component_of[v] and data.provenance != MERGE:
                raise ValidationError(
                    f"edge {key} joins components {self.component_of[u]} and "
                    f"{self.component_of[v]} without merge provenance"
                )
            checked[key] = data
        self.edges: dict[tuple[str, str], EdgeData] = {k: checked[k] for k in sorted(checked)}
        self._order: dict[str, int] = {v: i for i, v in enumerate(self.vertices)}
        self._apsp: np.ndarray | None = None

    # -- basic accessors ---------------------------------------------------

    @property
    def vertex_ids(self) -> tuple[str, ...]:
        return tuple(self.vertices)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def edge_list(self) -> tuple[tuple[str, str], ...]:
        return tuple(self.edges)

    def has_edge(self, u: str, v: str) -> bool:
        return edge_key(u, v) in self.edges

    def weight(self, u: str, v: str) -> float:
        return self.edges[edge_key(u, v)].weight

    def degree(self, u: str) -> int:
        return sum(1 for key in self.edges if u in key)

    def neighbors(self, u: str) -> tuple[str, ...]:
        out = []
        for (a, b) in self.edges:
            if a == u:
                out.append(b)
            elif b == u:
                out.append(a)
        return tuple(sorted(out))

    def vertex_index(self, u: str) -> int:
        return self._order[u]

    def components(self) -> dict[int, tuple[str, ...]]:
        """Vertices grouped by their stored (geodesic) component id."""
        groups: dict[int, list[str]] = {}
        for v, c in self.component_of.items():
            groups.setdefault(c, []).append(v)
        return {c: tuple(vs) for c, vs in sorted(groups.items())}

    def weight_matrix(self) -> np.ndarray:
        """Dense symmetric weight matrix with +inf for absent edges."""
        n = self.n_vertices
        w = np.full((n, n), np.inf)
        np.fill_diagonal(w, 0.0)
        for (u, v), data in self.edges.items():
            i, j = self._order[u], self._order[v]
            w[i, j] = w[j, i] = data.weight
        return w

    def vertex_distances(self) -> np.ndarray:
        """All-pairs shortest-path matrix over vertices (cached)."""
        if self._apsp is None:
            self._apsp = shortest_path_matrix(self.weight_matrix())
        return self._apsp

    def distance(self, u: str, v: str) -> float:
        return float(self.vertex_distances()[self._order[u], self._order[v]])

    def connected_component_count(self) -> int:
        d = self.vertex_distances()
        seen: set[int] = set()
        count = 0
        for i in range(self.n_vertices):
            if i in seen:
                continue
            count += 1
            reach = np.nonzero(np.isfinite(d[i]))[0]
            seen.update(int(j) for j in reach)
        return count

    # -- derivation --------------------------------------------------------

    def with_edges_removed(self, removed: Iterable[tuple[str, str]]) -> "ClusterGraph":
        gone = {edge_key(u, v) for u, v in removed}
        for key in gone:
            if key not in self.edges:
                raise ValidationError(f"cannot remove absent edge {key}")
        kept = {k: d for k, d in self.edges.items() if k not in gone}
        return ClusterGraph(self.vertices, kept, self.component_of, self.metric_tag, self.knn_k)

    def with_edges_added(self, added: Mapping[tuple[str, str], EdgeData]) -> "ClusterGraph":
        merged = dict(self.edges)
        for (u, v), data in added.items():
            key = edge_key(u, v)
            if key in merged:
                raise ValidationError(f"edge {key} already present")
            merged[key] = data
        return ClusterGraph(self.vertices, merged, self.component_of, self.metric_tag, self.knn_k)

    def with_edge_distortions(self, distortions: Mapping[tuple[str, str], float]) -> "ClusterGraph":
        updated = dict(self.edges)
        for (u, v), delta in distortions.items():
            key = edge_key(u, v)
            if key not in updated:
                raise ValidationError(f"distortion given for absent edge {key}")
            old = updated[key]
            updated[key] = EdgeData(old.weight, float(delta), old.provenance)
        return ClusterGraph(self.vertices, updated, self.component_of, self.metric_tag, self.knn_k)

    def __repr__(self):
        return (
            f"ClusterGraph(n_vertices={self.n_vertices}, n_edges={len(self.edges)}, "
            f"metric={self.metric_tag!r})"
        )


def shortest_path_matrix(weights: np.ndarray) -> np.ndarray:
    """Floyd-Warshall over a dense weight matrix with +inf for non-edges.

    Suited to the small vertex counts of cluster graphs; point-level
    shortest paths use sparse Dijkstra in ``clustergraph.geodesics``.
    """
    d = weights.copy()
    n = d.shape[0]
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        np.minimum(d, d[:, k : k + 1] + d[k : k + 1, :], out=d)
    return d


@dataclass(frozen=True)
class PairScore:
    """Distortion score of one unordered vertex pair."""

    delta: float
    weight: float
    pair_count: int


@dataclass(frozen=True)
class DistortionReport:
    """Per-pair, per-component and global metric distortion of a graph.

    ``global_score`` is the point-count-weighted mean of the per-component
    values; the per-component score is the paper-style average only within
    one connected piece, so the aggregation rule is reported explicitly via
    ``aggregation``.
    """

    pair_scores: dict[tuple[str, str], PairScore]
    per_component: dict[int, float]
    global_score: float
    k_used: int
    aggregation: str = "point_count_weighted_mean"

    def __post_init__(self):
        for pair, score in self.pair_scores.items():
            if not np.isfinite(score.delta) or score.delta < 0.0:
                raise InternalError(f"pair {pair} has invalid distortion {score.delta!r}")
            if not 0.0 < score.weight <= 1.0:
                raise InternalError(f"pair {pair} has weight {score.weight!r} outside (0, 1]")
        for comp, value in self.per_component.items():
            if not np.isfinite(value):
                raise InternalError(f"component {comp} has non-finite distortion")
