"""Construction of the per-component complete cluster graph and the
graph-induced distance between points.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations

from .core import (
    UNLABELED,
    ClusterGraph,
    Clustering,
    EdgeData,
    PointCloud,
    VertexData,
    validate,
)
from .errors import ValidationError
from .geodesics import GeodesicIndex
from .metrics import ClusterMetricChoice, cluster_distance


def _class_composition(cloud: PointCloud, members) -> dict[str, float]:
    counts: dict[str, int] = {}
    for p in members:
        label = cloud.label_of(p) if cloud.labels is not None else UNLABELED
        counts[label] = counts.get(label, 0) + 1
    total = len(members)
    return {label: counts[label] / total for label in sorted(counts)}


def build_cluster_graph(
    cloud: PointCloud,
    clustering: Clustering,
    index: GeodesicIndex,
    metric: ClusterMetricChoice,
    threads: int | None = None,
) -> ClusterGraph:
    """One vertex per cluster; a complete graph inside each geodesic
    component, weighted by the chosen inter-cluster distance.

    No edges are created across components.  A cluster whose points span
    two geodesic components is an error: silently reassigning points would
    change the clustering the caller asked for.
    """
    validate(cloud, clustering)
    component_of: dict[str, int] = {}
    vertices: dict[str, VertexData] = {}
    for cid in clustering.cluster_ids:
        members = clustering.members(cid)
        comps = {int(index.point_component[p]) for p in members}
        if len(comps) > 1:
            raise ValidationError(
                f"cluster {cid!r} straddles geodesic components {sorted(comps)}; "
                "increase k or split the cluster before building"
            )
        component_of[cid] = comps.pop()
        vertices[cid] = VertexData(
            size=len(members),
            members=members,
            class_composition=_class_composition(cloud, members),
        )

    pairs = [
        (u, v)
        for u, v in combinations(clustering.cluster_ids, 2)
        if component_of[u] == component_of[v]
    ]

    def weigh(pair):
        u, v = pair
        return cluster_distance(cloud, clustering.members(u), clustering.members(v), metric)

    if threads is not None and threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(weigh, pairs))
    else:
        values = [weigh(pair) for pair in pairs]

    edges = {pair: EdgeData(weight=w) for pair, w in zip(pairs, values)}
    return ClusterGraph(vertices, edges, component_of, metric.tag, knn_k=index.k)


def cluster_graph_distance(graph: ClusterGraph, clustering: Clustering, x: int, y: int) -> float:
    """Distance between two points induced by the graph: the shortest path
    between vertices of clusters containing them (minimized over all
    containing clusters for divisions); 0 when some cluster holds both,
    +inf when their vertices are disconnected.
    """
    cx = clustering.clusters_of(x)
    cy = clustering.clusters_of(y)
    d = graph.vertex_distances()
    best = math.inf
    for a in cx:
        ia = graph.vertex_index(a)
        for b in cy:
            val = d[ia, graph.vertex_index(b)]
            if val < best:
                best = float(val)
    return best
