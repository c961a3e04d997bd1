"""Independent brute-force reference implementations used by the tests.

These deliberately avoid the library's optimized code paths: shortest paths
come straight from scipy on freshly built dense matrices, averages from
plain Python loops.
"""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np
from scipy.sparse import csgraph

from clustergraph.metrics import point_distance


def brute_extremal(cloud, ids_i, ids_j, kind):
    values = [point_distance(cloud, x, y) for x in ids_i for y in ids_j]
    if kind == "min":
        return min(values)
    if kind == "max":
        return max(values)
    return sum(values) / len(values)


def brute_hausdorff(cloud, ids_i, ids_j):
    forward = max(min(point_distance(cloud, x, y) for y in ids_j) for x in ids_i)
    backward = max(min(point_distance(cloud, x, y) for x in ids_i) for y in ids_j)
    return max(forward, backward)


def matching_wasserstein(cloud, ids_i, ids_j, p=1.0):
    """Exact W_p for equal-size clusters: minimum over all matchings."""
    assert len(ids_i) == len(ids_j), "matching oracle needs equal sizes"
    m = len(ids_i)
    best = math.inf
    for perm in permutations(range(m)):
        cost = sum(point_distance(cloud, ids_i[a], ids_j[perm[a]]) ** p for a in range(m)) / m
        best = min(best, cost)
    return best ** (1.0 / p)


def _dense_shortest_paths(n, edges):
    dense = np.full((n, n), np.inf)
    for (i, j), w in edges.items():
        dense[i, j] = dense[j, i] = w
    matrix = csgraph.csgraph_from_dense(dense, null_value=np.inf)
    return csgraph.dijkstra(matrix, directed=False)


def point_geodesics(index):
    """All-pairs shortest paths over the k-nn graph, rebuilt from its raw
    adjacency."""
    edges = {}
    for i, nbrs in index.adjacency.items():
        for j, w in nbrs.items():
            edges[(min(i, j), max(i, j))] = w
    return _dense_shortest_paths(index.n_points, edges)


def vertex_shortest_paths(graph):
    order = {v: i for i, v in enumerate(graph.vertex_ids)}
    edges = {
        (order[u], order[v]): data.weight for (u, v), data in graph.edges.items()
    }
    return _dense_shortest_paths(graph.n_vertices, edges), order


def brute_global_distortion(graph, clustering, index):
    """Direct evaluation of the distortion formulas: per-pair |log| averages,
    union-size weights, per-component weighted means, and a point-count
    weighted global value."""
    d_point = point_geodesics(index)
    d_vertex, order = vertex_shortest_paths(graph)

    def d_cg(x, y):
        best = math.inf
        for a in clustering.clusters_of(x):
            for b in clustering.clusters_of(y):
                best = min(best, d_vertex[order[a], order[b]])
        return best

    comps: dict[int, list[str]] = {}
    for v, c in graph.component_of.items():
        comps.setdefault(c, []).append(v)

    per_component = {}
    comp_points = {}
    pair_deltas = {}
    for comp, vs in sorted(comps.items()):
        vs = sorted(vs)
        pts = set()
        for v in vs:
            pts.update(graph.vertices[v].members)
        comp_points[comp] = len(pts)
        n = len(vs)
        if n < 2:
            per_component[comp] = 0.0
            continue
        total = 0.0
        for ai in range(n):
            for bi in range(ai + 1, n):
                u, v = vs[ai], vs[bi]
                deltas = []
                for x in graph.vertices[u].members:
                    for y in graph.vertices[v].members:
                        if x == y:
                            continue
                        deltas.append(abs(math.log(d_cg(x, y) / d_point[x, y])))
                union = len(set(graph.vertices[u].members) | set(graph.vertices[v].members))
                w = union / ((n - 1) * comp_points[comp])
                delta = sum(deltas) / len(deltas)
                pair_deltas[(u, v)] = delta
                total += w * delta
        per_component[comp] = (2.0 / (n * (n - 1))) * total
    total_points = sum(comp_points.values())
    global_score = sum(per_component[c] * comp_points[c] for c in per_component) / total_points
    return global_score, per_component, pair_deltas


def enumerate_path_connectivity(graph, i, j):
    """max over all simple paths of 1 / total length (exponential search)."""
    adjacency: dict[str, list[str]] = {v: [] for v in graph.vertex_ids}
    for u, v in graph.edges:
        adjacency[u].append(v)
        adjacency[v].append(u)
    best = [-math.inf]

    def walk(node, seen, length):
        if node == j:
            if length > 0:
                best[0] = max(best[0], 1.0 / length)
            return
        for nxt in adjacency[node]:
            if nxt not in seen:
                walk(nxt, seen | {nxt}, length + graph.weight(node, nxt))

    walk(i, {i}, 0.0)
    return best[0]
