"""Metric-distortion scoring: |log| ratio between graph-induced and
geodesic point distances, averaged per cluster pair and globally.

The scorer factorizes partitions: the graph distance is constant across a
cluster pair, so each pair keeps a sorted array of log geodesic distances
with prefix sums, and re-scoring any candidate graph costs one shortest-path
table plus a vectorized binary search instead of touching point-level data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ClusterGraph, Clustering, DistortionReport, PairScore
from .errors import InternalError, ValidationError
from .geodesics import GeodesicIndex, geodesic_distance


def pair_distortion(d_cg: float, d_k: float) -> float:
    """|ln| of the ratio between the graph-induced and geodesic distances.

    Both inputs must be strictly positive and finite; zero or infinite
    values mean a same-point pair or a cross-component pair leaked past
    upstream filtering.
    """
    if not (0.0 < d_cg < math.inf and 0.0 < d_k < math.inf):
        raise ValidationError(
            f"pair distortion needs strictly positive finite distances, got ({d_cg}, {d_k})"
        )
    return abs(math.log(d_cg / d_k))


def pair_weight(size_union: int, n_vertices: int, n_points: int) -> float:
    """Weight of a cluster pair: union size over (n-1) times the point count,
    favoring interactions between large clusters."""
    if n_vertices < 2:
        raise ValidationError(f"pair weight needs at least 2 vertices, got {n_vertices}")
    return size_union / ((n_vertices - 1) * n_points)


@dataclass(frozen=True)
class EdgeDistortion:
    delta: float
    pair_count: int


def edge_distortion(
    graph: ClusterGraph,
    clustering: Clustering,
    index: GeodesicIndex,
    i: str,
    j: str,
) -> EdgeDistortion:
    """Average pair distortion over cross pairs of two clusters.

    Identical points (possible when clusters overlap) are skipped and
    excluded from the count.
    """
    if i == j:
        raise ValidationError("edge distortion needs two distinct vertices")
    if graph.component_of[i] != graph.component_of[j]:
        raise ValidationError(f"vertices {i!r} and {j!r} lie in different components")
    from .build import cluster_graph_distance

    members_i = graph.vertices[i].members
    members_j = graph.vertices[j].members
    total = 0.0
    count = 0
    for x in members_i:
        row = index.distances_from(x)
        for y in members_j:
            if x == y:
                continue
            total += pair_distortion(cluster_graph_distance(graph, clustering, x, y), row[y])
            count += 1
    if count == 0:
        raise ValidationError(f"no valid cross pairs between {i!r} and {j!r}")
    return EdgeDistortion(delta=total / count, pair_count=count)


class DistortionScorer:
    """Precomputed point-level data for scoring one graph and its pruned
    variants.

    Cross pairs of every same-component vertex pair are grouped by the
    membership profile of their endpoints (one group per pair for
    partitions); each group stores sorted log geodesic distances with
    prefix sums.  ``score`` then needs only a vertex shortest-path matrix.
    Variants must share the scorer graph's vertex set and components.
    """

    def __init__(
        self,
        graph: ClusterGraph,
        clustering: Clustering,
        index: GeodesicIndex,
        pair_cap: int | None = None,
        seed: int = 0,
    ):
        self.graph = graph
        self.index = index
        self.k_used = index.k
        self.pair_cap = pair_cap
        self.sampled = False

        ids = graph.vertex_ids
        vindex = {v: i for i, v in enumerate(ids)}
        members = {v: np.asarray(graph.vertices[v].members, dtype=np.intp) for v in ids}

        # Membership profile of every point: vertex indices of all clusters
        # containing it (drives the graph distance for divisions).
        profile: dict[int, tuple[int, ...]] = {}
        for p in sorted(clustering.covered_ids()):
            profile[p] = tuple(sorted(vindex[c] for c in clustering.clusters_of(p)))

        comps = graph.components()
        self.components: list[dict] = []
        self.pair_labels: list[tuple[str, str]] = []
        groups_values: list[np.ndarray] = []
        groups_pair: list[int] = []
        groups_prof: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
        pair_weights: list[float] = []
        pair_counts: list[int] = []
        pair_component: list[int] = []

        for comp_id, vs in comps.items():
            n = len(vs)
            comp_points: set[int] = set()
            for v in vs:
                comp_points.update(graph.vertices[v].members)
            n_points = len(comp_points)
            pair_slice_start = len(self.pair_labels)
            for ai in range(n):
                for bi in range(ai + 1, n):
                    u, v = vs[ai], vs[bi]
                    pair_idx = len(self.pair_labels)
                    self.pair_labels.append((u, v))
                    pair_component.append(len(self.components))
                    union = len(set(members[u]) | set(members[v]))
                    pair_weights.append(pair_weight(union, n, n_points))
                    triples = self._gather(members[u], members[v], profile)
                    triples = self._maybe_sample(triples, pair_idx, seed)
                    count = sum(len(vals) for _, vals in triples)
                    if count == 0:
                        raise ValidationError(f"no valid cross pairs between {u!r} and {v!r}")
                    pair_counts.append(count)
                    for prof_pair, vals in triples:
                        groups_values.append(np.log(vals))
                        groups_pair.append(pair_idx)
                        groups_prof.append(prof_pair)
            self.components.append(
                {
                    "id": comp_id,
                    "n_vertices": n,
                    "n_points": n_points,
                    "pair_range": (pair_slice_start, len(self.pair_labels)),
                }
            )

        self.n_pairs = len(self.pair_labels)
        self.pair_weights = np.asarray(pair_weights, dtype=np.float64)
        self.pair_counts = np.asarray(pair_counts, dtype=np.intp)
        self.pair_component = np.asarray(pair_component, dtype=np.intp)
        self._build_group_tables(groups_values, groups_pair, groups_prof)

    # -- precomputation ----------------------------------------------------

    def _gather(self, members_i, members_j, profile):
        """Collect geodesic distances of all cross pairs (skipping identical
        points), grouped by the endpoint membership profiles."""
        by_prof_j: dict[tuple[int, ...], list[int]] = {}
        for pos, y in enumerate(members_j):
            by_prof_j.setdefault(profile[int(y)], []).append(pos)

        collected: dict[tuple[tuple[int, ...], tuple[int, ...]], list[np.ndarray]] = {}
        for x in members_i:
            x = int(x)
            row = self.index.distances_from(x)[members_j]
            px = profile[x]
            for py, positions in sorted(by_prof_j.items()):
                ys = members_j[positions]
                keep = ys != x
                if not keep.any():
                    continue
                if set(px) & set(py):
                    raise ValidationError(
                        f"distinct points {x} and {int(ys[keep][0])} share a cluster: "
                        "graph distance is zero, distortion undefined"
                    )
                vals = row[positions][keep]
                if not np.all(np.isfinite(vals)):
                    raise InternalError(
                        f"infinite geodesic distance from point {x} inside one component"
                    )
                if np.any(vals <= 0.0):
                    raise ValidationError(
                        f"zero geodesic distance between point {x} and a distinct point; "
                        "coincident points cannot be scored"
                    )
                collected.setdefault((px, py), []).append(vals)
        return [(prof, np.concatenate(chunks)) for prof, chunks in sorted(collected.items())]

    def _maybe_sample(self, triples, pair_idx, seed):
        if self.pair_cap is None:
            return triples
        total = sum(len(vals) for _, vals in triples)
        if total <= self.pair_cap:
            return triples
        self.sampled = True
        rng = np.random.default_rng([seed, pair_idx])
        keep = np.sort(rng.choice(total, size=self.pair_cap, replace=False))
        out = []
        offset = 0
        for prof, vals in triples:
            local = keep[(keep >= offset) & (keep < offset + len(vals))] - offset
            if local.size:
                out.append((prof, vals[local]))
            offset += len(vals)
        return out

    def _build_group_tables(self, values, pairs, profs):
        self.n_groups = len(values)
        if self.n_groups == 0:
            self.group_pair = np.zeros(0, dtype=np.intp)
            return
        m_max = max(len(v) for v in values)
        table = np.full((self.n_groups, m_max), np.inf)
        prefix = np.zeros((self.n_groups, m_max + 1))
        sizes = np.empty(self.n_groups, dtype=np.intp)
        for g, vals in enumerate(values):
            vals = np.sort(vals)
            sizes[g] = len(vals)
            table[g, : len(vals)] = vals
            prefix[g, 1 : len(vals) + 1] = np.cumsum(vals)
            prefix[g, len(vals) + 1 :] = prefix[g, len(vals)]
        self.group_table = table
        self.group_prefix = prefix
        self.group_sizes = sizes
        self.group_totals = prefix[np.arange(self.n_groups), sizes]
        self.group_pair = np.asarray(pairs, dtype=np.intp)
        # Partition fast path: every profile is a single vertex.
        simple = all(len(a) == 1 and len(b) == 1 for a, b in profs)
        if simple:
            self.group_ia = np.asarray([a[0] for a, _ in profs], dtype=np.intp)
            self.group_ja = np.asarray([b[0] for _, b in profs], dtype=np.intp)
            self.group_profiles = None
        else:
            self.group_ia = None
            self.group_ja = None
            self.group_profiles = profs

    # -- scoring -----------------------------------------------------------

    def _group_dcg(self, d: np.ndarray) -> np.ndarray:
        if self.group_ia is not None:
            return d[self.group_ia, self.group_ja]
        out = np.empty(self.n_groups)
        for g, (pa, pb) in enumerate(self.group_profiles):
            out[g] = d[np.ix_(pa, pb)].min()
        return out

    def pair_deltas(self, d: np.ndarray) -> np.ndarray:
        """Per-pair average distortion for a vertex shortest-path matrix.

        Entries are +inf where the matrix disconnects a pair.
        """
        if self.n_pairs == 0:
            return np.zeros(0)
        dcg = self._group_dcg(d)
        finite = np.isfinite(dcg)
        if np.any(dcg[finite] <= 0.0):
            raise ValidationError("zero graph distance between distinct clusters")
        sums = np.full(self.n_groups, np.inf)
        if finite.any():
            t = np.log(dcg[finite])
            tab = self.group_table[finite]
            cut = (tab <= t[:, None]).sum(axis=1)
            rows = np.nonzero(finite)[0]
            below = self.group_prefix[rows, cut]
            m = self.group_sizes[finite]
            tot = self.group_totals[finite]
            sums[finite] = t * cut - below + (tot - below) - t * (m - cut)
        deltas = np.zeros(self.n_pairs)
        hit_inf = np.zeros(self.n_pairs, dtype=bool)
        hit_inf[self.group_pair[~finite]] = True
        np.add.at(deltas, self.group_pair[finite], sums[finite])
        deltas = deltas / self.pair_counts
        deltas[hit_inf] = np.inf
        return deltas

    def component_scores(self, d: np.ndarray) -> np.ndarray:
        """Weighted average distortion of every component (+inf when any of
        its pairs is disconnected)."""
        deltas = self.pair_deltas(d)
        out = np.zeros(len(self.components))
        for ci, comp in enumerate(self.components):
            lo, hi = comp["pair_range"]
            n = comp["n_vertices"]
            if n < 2:
                continue
            chunk = deltas[lo:hi]
            if not np.all(np.isfinite(chunk)):
                out[ci] = np.inf
                continue
            out[ci] = (2.0 / (n * (n - 1))) * float(np.dot(self.pair_weights[lo:hi], chunk))
        return out

    def global_score(self, d: np.ndarray) -> float:
        """Point-count-weighted mean of the component scores; +inf when any
        component is internally disconnected."""
        scores = self.component_scores(d)
        if not np.all(np.isfinite(scores)):
            return math.inf
        weights = np.asarray([c["n_points"] for c in self.components], dtype=np.float64)
        return float(np.dot(scores, weights) / weights.sum())

    def report(self, graph: ClusterGraph | None = None) -> DistortionReport:
        """Full distortion report for ``graph`` (default: the scorer's own)."""
        target = graph if graph is not None else self.graph
        d = target.vertex_distances()
        deltas = self.pair_deltas(d)
        if not np.all(np.isfinite(deltas)):
            bad = self.pair_labels[int(np.nonzero(~np.isfinite(deltas))[0][0])]
            raise InternalError(f"vertex pair {bad} has no finite graph distance in its component")
        comp_scores = self.component_scores(d)
        pair_scores = {
            self.pair_labels[i]: PairScore(
                delta=float(deltas[i]),
                weight=float(self.pair_weights[i]),
                pair_count=int(self.pair_counts[i]),
            )
            for i in range(self.n_pairs)
        }
        per_component = {
            comp["id"]: float(comp_scores[ci]) for ci, comp in enumerate(self.components)
        }
        weights = np.asarray([c["n_points"] for c in self.components], dtype=np.float64)
        global_score = float(np.dot(comp_scores, weights) / weights.sum())
        return DistortionReport(
            pair_scores=pair_scores,
            per_component=per_component,
            global_score=global_score,
            k_used=self.k_used,
        )


def global_distortion(
    graph: ClusterGraph,
    clustering: Clustering,
    index: GeodesicIndex,
    pair_cap: int | None = None,
    seed: int = 0,
) -> DistortionReport:
    """Score a graph: per-pair, per-component, and global distortion.

    The sum runs over all same-component vertex pairs, not only surviving
    edges; pair scores use shortest paths so they stay defined after
    pruning.
    """
    scorer = DistortionScorer(graph, clustering, index, pair_cap=pair_cap, seed=seed)
    return scorer.report()


def naive_global_distortion(
    graph: ClusterGraph,
    clustering: Clustering,
    index: GeodesicIndex,
) -> DistortionReport:
    """Reference evaluation with plain per-point-pair loops; no
    factorization, no caching beyond the geodesic index.  Slow; used to
    cross-check the optimized path.
    """
    from .build import cluster_graph_distance

    comps = graph.components()
    pair_scores: dict[tuple[str, str], PairScore] = {}
    per_component: dict[int, float] = {}
    comp_points: dict[int, int] = {}
    for comp_id, vs in comps.items():
        points: set[int] = set()
        for v in vs:
            points.update(graph.vertices[v].members)
        comp_points[comp_id] = len(points)
        n = len(vs)
        if n < 2:
            per_component[comp_id] = 0.0
            continue
        total = 0.0
        for ai in range(n):
            for bi in range(ai + 1, n):
                u, v = vs[ai], vs[bi]
                acc = 0.0
                count = 0
                for x in graph.vertices[u].members:
                    for y in graph.vertices[v].members:
                        if x == y:
                            continue
                        acc += pair_distortion(
                            cluster_graph_distance(graph, clustering, x, y),
                            geodesic_distance(index, x, y),
                        )
                        count += 1
                if count == 0:
                    raise ValidationError(f"no valid cross pairs between {u!r} and {v!r}")
                union = len(set(graph.vertices[u].members) | set(graph.vertices[v].members))
                w = pair_weight(union, n, comp_points[comp_id])
                delta = acc / count
                pair_scores[(u, v)] = PairScore(delta=delta, weight=w, pair_count=count)
                total += w * delta
        per_component[comp_id] = (2.0 / (n * (n - 1))) * total
    weights = np.asarray([comp_points[c] for c in per_component], dtype=np.float64)
    values = np.asarray([per_component[c] for c in per_component], dtype=np.float64)
    return DistortionReport(
        pair_scores=pair_scores,
        per_component=per_component,
        global_score=float(np.dot(values, weights) / weights.sum()),
        k_used=index.k,
    )
