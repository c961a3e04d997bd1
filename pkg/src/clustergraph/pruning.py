"""Edge pruning strategies (distortion threshold, iterative greedy,
connectivity-based) and cross-component merging.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (
    MERGE,
    ClusterGraph,
    Clustering,
    EdgeData,
    PointCloud,
    edge_key,
    shortest_path_matrix,
)
from .distortion import DistortionScorer, naive_global_distortion
from .errors import ConfigError, ValidationError
from .geodesics import GeodesicIndex
from .metrics import ClusterMetricChoice, cluster_distance

STOP_THRESHOLD = "threshold_reached"
STOP_NO_IMPROVING = "no_improving_edge"
STOP_BUDGET = "step_budget"
STOP_FLOOR = "connectivity_floor"

RECIPROCAL_TOTAL = "reciprocal_total"
LITERAL_INVERSE_SUM = "literal_inverse_sum"


@dataclass(frozen=True)
class PruneStep:
    """One removal: the edge, the criterion value (edge distortion, global
    distortion after removal, or cumulative connectivity ratio), the
    component count afterwards, and for connectivity pruning also the
    single-step ratio against the pre-removal edge set."""

    edge: tuple[str, str]
    value: float
    components: int
    step_value: float | None = None


@dataclass(frozen=True)
class PruneTrace:
    strategy: str
    steps: tuple[PruneStep, ...]
    stop_reason: str

    def removed_edges(self) -> tuple[tuple[str, str], ...]:
        return tuple(s.edge for s in self.steps)


def _component_count(vertices, edges) -> int:
    parent = {v: v for v in vertices}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    return len({find(v) for v in vertices})


def threshold_prune(
    graph: ClusterGraph,
    alpha: float,
    distortions: dict[tuple[str, str], float] | None = None,
) -> tuple[ClusterGraph, PruneTrace]:
    """Drop every edge whose distortion exceeds ``alpha`` (boundary kept).

    Disconnection is permitted; the trace reports the component count after
    each removal, worst edges first.
    """
    if not alpha > 0:
        raise ConfigError(f"threshold alpha must be positive, got {alpha}")
    if distortions is None:
        distortions = {}
        for key, data in graph.edges.items():
            if data.distortion is None:
                raise ValidationError(
                    f"edge {key} carries no distortion; score the graph first or pass distortions="
                )
            distortions[key] = data.distortion
    else:
        distortions = {edge_key(u, v): float(d) for (u, v), d in distortions.items()}
        missing = [k for k in graph.edges if k not in distortions]
        if missing:
            raise ValidationError(f"no distortion given for edges {missing[:3]}...")

    doomed = sorted(
        (k for k in graph.edges if distortions[k] > alpha),
        key=lambda k: (-distortions[k], k),
    )
    steps = []
    remaining = set(graph.edges)
    vertices = graph.vertex_ids
    for key in doomed:
        remaining.discard(key)
        steps.append(
            PruneStep(
                edge=key,
                value=distortions[key],
                components=_component_count(vertices, remaining),
            )
        )
    pruned = graph.with_edges_removed(doomed)
    return pruned, PruneTrace("threshold", tuple(steps), STOP_THRESHOLD)


def greedy_prune(
    graph: ClusterGraph,
    clustering: Clustering,
    index: GeodesicIndex,
    max_steps: int | None = None,
    rescoring: str = "factorized",
) -> tuple[ClusterGraph, PruneTrace]:
    """Iteratively remove the edge whose removal minimizes the global
    distortion, as long as it does not increase it.

    Removing an edge that disconnects a component would leave pairs with
    infinite graph distance, so such edges never qualify; the component
    count is invariant along the trace.
    """
    if rescoring not in ("factorized", "naive"):
        raise ConfigError(f"rescoring must be 'factorized' or 'naive', got {rescoring!r}")
    scorer = DistortionScorer(graph, clustering, index) if rescoring == "factorized" else None

    current = graph
    steps: list[PruneStep] = []
    stop = STOP_NO_IMPROVING
    components = current.connected_component_count()

    def score_matrix(d: np.ndarray) -> float:
        assert scorer is not None
        return scorer.global_score(d)

    while True:
        if max_steps is not None and len(steps) >= max_steps:
            stop = STOP_BUDGET
            break
        w = current.weight_matrix()
        base_d = shortest_path_matrix(w)
        base_finite = np.isfinite(base_d)
        if rescoring == "factorized":
            base = score_matrix(base_d)
        else:
            base = naive_global_distortion(current, clustering, index).global_score

        best_edge = None
        best_val = math.inf
        order = {v: i for i, v in enumerate(current.vertex_ids)}
        for key in current.edge_list():
            i, j = order[key[0]], order[key[1]]
            w2 = w.copy()
            w2[i, j] = w2[j, i] = math.inf
            d2 = shortest_path_matrix(w2)
            if not np.array_equal(np.isfinite(d2), base_finite):
                continue  # removal disconnects: infinite distortion
            if rescoring == "factorized":
                val = score_matrix(d2)
            else:
                val = naive_global_distortion(
                    current.with_edges_removed([key]), clustering, index
                ).global_score
            if val <= base and val < best_val:
                best_edge = key
                best_val = val
        if best_edge is None:
            stop = STOP_NO_IMPROVING
            break
        current = current.with_edges_removed([best_edge])
        steps.append(PruneStep(edge=best_edge, value=best_val, components=components))

    return current, PruneTrace("greedy", tuple(steps), stop)


def path_quality(graph: ClusterGraph, path, mode: str = RECIPROCAL_TOTAL) -> float:
    """Quality of a path given as a list of consecutive edges.

    Default mode: reciprocal of the total path length.  The literal mode
    sums per-edge inverses instead; both agree on single edges.
    """
    if mode not in (RECIPROCAL_TOTAL, LITERAL_INVERSE_SUM):
        raise ConfigError(f"unknown path quality mode {mode!r}")
    edges = [edge_key(u, v) for u, v in path]
    if not edges:
        raise ValidationError("path is empty")
    weights = []
    for key in edges:
        if key not in graph.edges:
            raise ValidationError(f"path edge {key} is not in the graph")
        w = graph.edges[key].weight
        if w == 0.0:
            raise ValidationError(f"path edge {key} has zero weight; quality undefined")
        weights.append(w)
    for prev, cur in zip(edges, edges[1:]):
        if not set(prev) & set(cur):
            raise ValidationError(f"edges {prev} and {cur} are not consecutive")
    if mode == LITERAL_INVERSE_SUM:
        return float(sum(1.0 / w for w in weights))
    return float(1.0 / sum(weights))


def connectivity(graph: ClusterGraph, i: str, j: str) -> float:
    """Best-path quality between two vertices: the reciprocal of their
    shortest-path distance, or -inf when no path exists."""
    if i == j:
        raise ValidationError("connectivity needs two distinct vertices")
    d = graph.distance(i, j)
    if math.isinf(d):
        return -math.inf
    if d == 0.0:
        raise ValidationError(f"zero-length path between {i!r} and {j!r}; quality undefined")
    return 1.0 / d


def graph_connectivity(graph: ClusterGraph, vertices=None) -> float:
    """Average connectivity over all vertex pairs of a connected vertex set."""
    ids = tuple(vertices) if vertices is not None else graph.vertex_ids
    n = len(ids)
    if n < 2:
        raise ValidationError(f"graph connectivity needs at least 2 vertices, got {n}")
    d = graph.vertex_distances()
    idx = [graph.vertex_index(v) for v in ids]
    sub = d[np.ix_(idx, idx)]
    off = sub[np.triu_indices(n, k=1)]
    if not np.all(np.isfinite(off)):
        raise ValidationError(
            "vertex set is disconnected; analyze each connected component separately"
        )
    if np.any(off == 0.0):
        raise ValidationError("zero-length path between distinct vertices; quality undefined")
    return float((2.0 / (n * (n - 1))) * np.sum(1.0 / off))


def _bridges(vertices, edges) -> set[tuple[str, str]]:
    """Edges whose removal disconnects their component (iterative Tarjan)."""
    adj: dict[str, list[str]] = {v: [] for v in vertices}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    for v in adj:
        adj[v].sort()
    disc: dict[str, int] = {}
    low: dict[str, int] = {}
    out: set[tuple[str, str]] = set()
    counter = 0
    for root in vertices:
        if root in disc:
            continue
        stack = [(root, None, iter(adj[root]))]
        disc[root] = low[root] = counter
        counter += 1
        while stack:
            node, parent_edge, it = stack[-1]
            advanced = False
            for nxt in it:
                if nxt not in disc:
                    disc[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append((nxt, (node, nxt), iter(adj[nxt])))
                    advanced = True
                    break
                if parent_edge is None or nxt != parent_edge[0]:
                    low[node] = min(low[node], disc[nxt])
            if not advanced:
                stack.pop()
                if parent_edge is not None:
                    p, c = parent_edge
                    low[p] = min(low[p], low[c])
                    if low[c] > disc[p]:
                        out.add(edge_key(p, c))
    return out


def connectivity_prune(
    graph: ClusterGraph,
    removable=None,
    budget: int | None = None,
    rk_floor: float | None = None,
) -> tuple[ClusterGraph, PruneTrace]:
    """Greedily remove the removable edge keeping the most connectivity.

    Never removes a bridge.  Stops at the edge budget, when the cumulative
    connectivity ratio would fall below ``rk_floor``, or when only bridges
    remain.  Trace values are ratios against the original edge set; the
    per-step ratio is reported alongside.
    """
    if removable is None:
        keys = set(graph.edges)
    else:
        keys = {edge_key(u, v) for u, v in removable}
        unknown = keys - set(graph.edges)
        if unknown:
            raise ValidationError(f"removable edges not in graph: {sorted(unknown)[:3]}")
    if not keys:
        raise ValidationError("removable edge set is empty")
    if budget is not None and budget < 0:
        raise ConfigError(f"budget must be nonnegative, got {budget}")

    conn_orig = graph_connectivity(graph)  # raises on disconnected input
    current = graph
    steps: list[PruneStep] = []
    stop = STOP_FLOOR
    components = current.connected_component_count()

    while True:
        if budget is not None and len(steps) >= budget:
            stop = STOP_BUDGET
            break
        live = sorted(keys & set(current.edges))
        bridges = _bridges(current.vertex_ids, current.edge_list())
        candidates = [k for k in live if k not in bridges]
        if not candidates:
            stop = STOP_FLOOR
            break
        conn_current = graph_connectivity(current)
        w = current.weight_matrix()
        order = {v: i for i, v in enumerate(current.vertex_ids)}
        n = current.n_vertices
        triu = np.triu_indices(n, k=1)
        best_edge = None
        best_conn = -math.inf
        for key in candidates:
            i, j = order[key[0]], order[key[1]]
            w2 = w.copy()
            w2[i, j] = w2[j, i] = math.inf
            d2 = shortest_path_matrix(w2)[triu]
            conn_new = float((2.0 / (n * (n - 1))) * np.sum(1.0 / d2))
            if conn_new > best_conn:
                best_conn = conn_new
                best_edge = key
        cum_rk = best_conn / conn_orig
        if rk_floor is not None and cum_rk < rk_floor:
            stop = STOP_FLOOR
            break
        current = current.with_edges_removed([best_edge])
        steps.append(
            PruneStep(
                edge=best_edge,
                value=cum_rk,
                components=components,
                step_value=best_conn / conn_current,
            )
        )

    return current, PruneTrace("connectivity", tuple(steps), stop)


def merge_components(
    graph: ClusterGraph,
    cloud: PointCloud,
    metric: ClusterMetricChoice,
    k_merge: int,
) -> ClusterGraph:
    """Join the graph's components by linking every vertex to its nearest
    vertices in other components, by the same inter-cluster distance that
    weighted the graph.

    Added edges carry merge provenance; duplicates collapse to one edge.
    """
    if k_merge < 1:
        raise ConfigError(f"k_merge must be >= 1, got {k_merge}")
    comps = graph.components()
    if len(comps) < 2:
        warnings.warn("graph has a single component; merge is a no-op", stacklevel=2)
        return graph

    cache: dict[tuple[str, str], float] = {}

    def dist(u: str, v: str) -> float:
        key = edge_key(u, v)
        got = cache.get(key)
        if got is None:
            got = cluster_distance(
                cloud, graph.vertices[u].members, graph.vertices[v].members, metric
            )
            cache[key] = got
        return got

    added: dict[tuple[str, str], EdgeData] = {}
    for v in graph.vertex_ids:
        others = [u for u in graph.vertex_ids if graph.component_of[u] != graph.component_of[v]]
        ranked = sorted(others, key=lambda u: (dist(v, u), u))
        for u in ranked[:k_merge]:
            key = edge_key(v, u)
            if key not in added:
                added[key] = EdgeData(weight=dist(v, u), provenance=MERGE)
    return graph.with_edges_added(added)
