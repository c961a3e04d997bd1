import numpy as np
import pytest

from clustergraph import (
    ClusterGraph,
    ClusterMetricChoice,
    Clustering,
    EdgeData,
    PointCloud,
    VertexData,
    build_cluster_graph,
    build_knn_graph,
)


def four_cluster_matrix(size=5):
    """Distance matrix of 4 tight clusters: intra 0, cluster 0 at distance 1
    from the rest, the rest at mutual distance 2.  Not Euclidean-embeddable."""
    n = 4 * size
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ci, cj = i // size, j // size
            if ci == cj:
                d[i, j] = 0.0
            elif ci == 0 or cj == 0:
                d[i, j] = 1.0
            else:
                d[i, j] = 2.0
    return d


@pytest.fixture
def four_cluster_setup():
    size = 5
    cloud = PointCloud.from_distance_matrix(four_cluster_matrix(size))
    clustering = Clustering(
        {str(c): [c * size + i for i in range(size)] for c in range(4)}
    )
    index = build_knn_graph(cloud, 5)
    graph = build_cluster_graph(cloud, clustering, index, ClusterMetricChoice("avg"))
    return cloud, clustering, index, graph


@pytest.fixture
def line_cloud():
    return PointCloud.from_coordinates([[0.0], [1.0], [3.0]])


def toy_graph(weights, distortions=None, components=None, metric_tag="avg"):
    """Small hand-built graph; vertices named by the edge keys, each backed
    by a singleton member so the model validates."""
    names = sorted({v for edge in weights for v in edge})
    vertices = {
        name: VertexData(size=1, members=(i,), class_composition={"unlabeled": 1.0})
        for i, name in enumerate(names)
    }
    component_of = {name: 0 for name in names}
    if components:
        component_of.update(components)
    edges = {}
    for (u, v), w in weights.items():
        delta = None if distortions is None else distortions.get((u, v))
        edges[(u, v)] = EdgeData(weight=w, distortion=delta)
    return ClusterGraph(vertices, edges, component_of, metric_tag)


def circle_points(n, radius, offset=0.0):
    angles = offset + 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([radius * np.cos(angles), radius * np.sin(angles)])


def concentric_circles(n_total=500):
    """Evenly spaced points on two concentric circles of radii 1 and 2."""
    inner = circle_points(n_total // 2, 1.0)
    outer = circle_points(n_total - n_total // 2, 2.0)
    return np.vstack([inner, outer])


def random_instance(seed, n_points=40, knn_k=6, cluster_size=4, metric_kind="avg"):
    """Deterministic random dataset with structure worth pruning: points on
    one or two noisy circles, clustered per geodesic component so no cluster
    straddles components."""
    from clustergraph.cluster import kmeans

    rng = np.random.default_rng(seed)
    rings = 1 + int(rng.integers(2))
    chunks = []
    per_ring = n_points // rings
    for ring in range(rings):
        m = per_ring if ring < rings - 1 else n_points - per_ring * (rings - 1)
        radius = 2.0 + 3.0 * ring + rng.uniform(0.0, 1.0)
        angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=m))
        r = radius + rng.normal(0.0, 0.05 * radius, size=m)
        chunks.append(np.column_stack([r * np.cos(angles), r * np.sin(angles)]))
    points = np.vstack(chunks)
    cloud = PointCloud.from_coordinates(points)
    index = build_knn_graph(cloud, knn_k)

    clusters = {}
    for comp, members in sorted(_group_components(index).items()):
        k = max(1, len(members) // cluster_size)
        sub = PointCloud.from_coordinates(points[members])
        part = kmeans(sub, k, seed=seed * 101 + comp)
        for cid, local in part.clusters.items():
            clusters[f"c{comp}_{cid}"] = [members[i] for i in local]
    clustering = Clustering(clusters)
    graph = build_cluster_graph(cloud, clustering, index, ClusterMetricChoice(metric_kind))
    return cloud, clustering, index, graph


def _group_components(index):
    groups = {}
    for i, c in enumerate(index.point_component):
        groups.setdefault(int(c), []).append(i)
    return groups
