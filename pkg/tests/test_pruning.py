import math

import numpy as np
import pytest

from clustergraph import (
    ClusterMetricChoice,
    Clustering,
    ConfigError,
    PointCloud,
    ValidationError,
    build_cluster_graph,
    build_knn_graph,
    connectivity,
    connectivity_prune,
    global_distortion,
    graph_connectivity,
    greedy_prune,
    merge_components,
    path_quality,
    threshold_prune,
)
from clustergraph.core import MERGE
from clustergraph.pruning import (
    LITERAL_INVERSE_SUM,
    STOP_BUDGET,
    STOP_FLOOR,
    STOP_NO_IMPROVING,
    STOP_THRESHOLD,
    _bridges,
)
from conftest import random_instance, toy_graph
from oracles import enumerate_path_connectivity


@pytest.fixture
def triangle():
    return toy_graph({("a", "b"): 1.0, ("a", "c"): 1.0, ("b", "c"): 1.0})


@pytest.fixture
def unit_path():
    return toy_graph({("a", "b"): 1.0, ("b", "c"): 1.0})


class TestThreshold:
    def fixture(self):
        return toy_graph(
            {("a", "b"): 1.0, ("b", "c"): 1.0, ("a", "c"): 1.0},
            distortions={("a", "b"): 0.1, ("b", "c"): 0.5, ("a", "c"): 0.9},
        )

    def test_boundary_kept(self):
        pruned, trace = threshold_prune(self.fixture(), alpha=0.5)
        assert set(pruned.edge_list()) == {("a", "b"), ("b", "c")}
        assert trace.stop_reason == STOP_THRESHOLD
        assert trace.steps[0].edge == ("a", "c")

    def test_alpha_above_max_keeps_all(self):
        pruned, trace = threshold_prune(self.fixture(), alpha=0.9)
        assert len(pruned.edges) == 3
        assert trace.steps == ()

    def test_alpha_below_min_removes_all(self):
        pruned, trace = threshold_prune(self.fixture(), alpha=0.05)
        assert pruned.edge_list() == ()
        assert trace.steps[-1].components == 3

    def test_component_counts_monotone(self):
        _, trace = threshold_prune(self.fixture(), alpha=0.05)
        counts = [s.components for s in trace.steps]
        assert counts == sorted(counts)

    def test_nestedness_over_alpha_grid(self):
        for seed in (0, 1, 2):
            _, clustering, index, graph = random_instance(seed, n_points=32)
            report = global_distortion(graph, clustering, index)
            scored = graph.with_edge_distortions(
                {e: report.pair_scores[e].delta for e in graph.edges}
            )
            deltas = [d.distortion for d in scored.edges.values()]
            grid = np.linspace(min(deltas) / 2, max(deltas), 6)
            previous = None
            for alpha in grid:
                kept = set(threshold_prune(scored, alpha=float(alpha))[0].edge_list())
                if previous is not None:
                    assert previous <= kept
                previous = kept
            full = threshold_prune(scored, alpha=max(deltas))[0]
            assert set(full.edge_list()) == set(scored.edge_list())

    def test_missing_distortion_rejected(self, triangle):
        with pytest.raises(ValidationError, match="no distortion"):
            threshold_prune(triangle, alpha=1.0)

    def test_explicit_distortions_accepted(self, triangle):
        pruned, _ = threshold_prune(
            triangle, alpha=0.2, distortions={e: 0.1 for e in triangle.edge_list()}
        )
        assert len(pruned.edges) == 3


class TestGreedy:
    def line_fixture(self):
        # three singleton clusters on a line; the k-nn graph is the path
        cloud = PointCloud.from_coordinates([[0.0], [1.0], [2.0]])
        clustering = Clustering({"a": {0}, "b": {1}, "c": {2}})
        index = build_knn_graph(cloud, 1)
        graph = build_cluster_graph(cloud, clustering, index, ClusterMetricChoice("avg"))
        return cloud, clustering, index, graph

    def test_removes_the_long_chord(self):
        cloud, clustering, index, graph = self.line_fixture()
        assert len(graph.edges) == 3
        pruned, trace = greedy_prune(graph, clustering, index)
        assert set(pruned.edge_list()) == {("a", "b"), ("b", "c")}
        assert trace.removed_edges() == (("a", "c"),)
        assert trace.stop_reason == STOP_NO_IMPROVING

    def test_tree_is_left_alone(self, unit_path):
        cloud = PointCloud.from_coordinates([[0.0], [1.0], [2.0]])
        clustering = Clustering({"a": {0}, "b": {1}, "c": {2}})
        index = build_knn_graph(cloud, 1)
        graph = build_cluster_graph(cloud, clustering, index, ClusterMetricChoice("avg"))
        tree = graph.with_edges_removed([("a", "c")])
        pruned, trace = greedy_prune(tree, clustering, index)
        assert pruned.edge_list() == tree.edge_list()
        assert trace.steps == ()
        assert trace.stop_reason == STOP_NO_IMPROVING

    def test_trace_non_increasing_and_components_constant(self):
        for seed in range(6):
            _, clustering, index, graph = random_instance(seed, n_points=36)
            pruned, trace = greedy_prune(graph, clustering, index)
            values = [s.value for s in trace.steps]
            assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
            base = global_distortion(graph, clustering, index).global_score
            if values:
                assert values[0] <= base + 1e-12
            assert pruned.connected_component_count() == graph.connected_component_count()
            assert all(s.components == graph.connected_component_count() for s in trace.steps)

    def test_deterministic_reruns(self):
        _, clustering, index, graph = random_instance(9, n_points=36)
        first = greedy_prune(graph, clustering, index)[1]
        second = greedy_prune(graph, clustering, index)[1]
        assert first == second

    def test_max_steps_budget(self):
        _, clustering, index, graph = random_instance(1, n_points=36)
        full_trace = greedy_prune(graph, clustering, index)[1]
        if len(full_trace.steps) < 2:
            pytest.skip("fixture prunes fewer than 2 edges")
        pruned, trace = greedy_prune(graph, clustering, index, max_steps=1)
        assert len(trace.steps) == 1
        assert trace.stop_reason == STOP_BUDGET
        assert trace.steps[0] == full_trace.steps[0]

    def test_naive_rescoring_agrees(self):
        _, clustering, index, graph = random_instance(5, n_points=24, cluster_size=3)
        fast = greedy_prune(graph, clustering, index, rescoring="factorized")
        slow = greedy_prune(graph, clustering, index, rescoring="naive")
        assert fast[1].removed_edges() == slow[1].removed_edges()
        for a, b in zip(fast[1].steps, slow[1].steps):
            assert a.value == pytest.approx(b.value, abs=1e-9)

    def test_bad_rescoring_mode(self, four_cluster_setup):
        _, clustering, index, graph = four_cluster_setup
        with pytest.raises(ConfigError):
            greedy_prune(graph, clustering, index, rescoring="sloppy")


class TestPathQuality:
    def test_single_edge_both_modes(self):
        g = toy_graph({("a", "b"): 2.0})
        assert path_quality(g, [("a", "b")]) == 0.5
        assert path_quality(g, [("a", "b")], mode=LITERAL_INVERSE_SUM) == 0.5

    def test_two_unit_edges(self, unit_path):
        path = [("a", "b"), ("b", "c")]
        assert path_quality(unit_path, path) == 0.5
        assert path_quality(unit_path, path, mode=LITERAL_INVERSE_SUM) == 2.0

    def test_weights_one_and_three(self):
        g = toy_graph({("a", "b"): 1.0, ("b", "c"): 3.0})
        path = [("a", "b"), ("b", "c")]
        assert path_quality(g, path) == 0.25
        assert path_quality(g, path, mode=LITERAL_INVERSE_SUM) == pytest.approx(4.0 / 3.0)

    def test_rejects_zero_weight(self):
        g = toy_graph({("a", "b"): 0.0})
        for mode in (None, LITERAL_INVERSE_SUM):
            with pytest.raises(ValidationError, match="zero weight"):
                if mode is None:
                    path_quality(g, [("a", "b")])
                else:
                    path_quality(g, [("a", "b")], mode=mode)

    def test_rejects_gaps_and_unknown_edges(self, triangle):
        with pytest.raises(ValidationError, match="empty"):
            path_quality(triangle, [])
        g = toy_graph({("a", "b"): 1.0, ("c", "d"): 1.0, ("b", "c"): 1.0})
        with pytest.raises(ValidationError, match="consecutive"):
            path_quality(g, [("a", "b"), ("c", "d")])
        with pytest.raises(ValidationError, match="not in the graph"):
            path_quality(triangle, [("a", "z")])


class TestConnectivity:
    def test_adjacent_unit_edge(self, triangle):
        assert connectivity(triangle, "a", "b") == 1.0

    def test_path_endpoints(self, unit_path):
        assert connectivity(unit_path, "a", "c") == 0.5

    def test_disconnected_sentinel(self):
        g = toy_graph({("a", "b"): 1.0, ("c", "d"): 1.0})
        assert connectivity(g, "a", "c") == -math.inf

    def test_shortcut_beats_direct_edge(self):
        g = toy_graph({("a", "b"): 10.0, ("a", "c"): 1.0, ("b", "c"): 1.0})
        assert connectivity(g, "a", "b") == 0.5

    def test_matches_path_enumeration(self):
        for seed in (0, 1):
            _, _, _, graph = random_instance(seed, n_points=18, cluster_size=3)
            ids = graph.vertex_ids
            for i in range(len(ids)):
                for j in range(i + 1, len(ids)):
                    if graph.component_of[ids[i]] != graph.component_of[ids[j]]:
                        continue
                    want = enumerate_path_connectivity(graph, ids[i], ids[j])
                    assert connectivity(graph, ids[i], ids[j]) == pytest.approx(
                        want, abs=1e-9
                    )

    def test_graph_connectivity_triangle(self, triangle):
        assert graph_connectivity(triangle) == pytest.approx(1.0, abs=1e-12)

    def test_graph_connectivity_path(self, unit_path):
        assert graph_connectivity(unit_path) == pytest.approx(5.0 / 6.0, abs=1e-12)

    def test_graph_connectivity_two_vertices(self):
        g = toy_graph({("a", "b"): 4.0})
        assert graph_connectivity(g) == 0.25

    def test_graph_connectivity_rejects_disconnected(self):
        g = toy_graph({("a", "b"): 1.0, ("c", "d"): 1.0})
        with pytest.raises(ValidationError, match="disconnected"):
            graph_connectivity(g)

    def test_removal_never_raises_connectivity(self):
        _, _, _, graph = random_instance(2, n_points=18, cluster_size=3)
        comps = graph.components()
        for comp, ids in comps.items():
            if len(ids) < 3:
                continue
            sub_edges = {k: d.weight for k, d in graph.edges.items() if k[0] in ids}
            sub = toy_graph(sub_edges)
            base = graph_connectivity(sub)
            for edge in sub.edge_list():
                if edge in _bridges(sub.vertex_ids, sub.edge_list()):
                    continue
                after = graph_connectivity(sub.with_edges_removed([edge]))
                assert after <= base + 1e-12


class TestConnectivityPrune:
    def test_triangle_budget_one(self, triangle):
        pruned, trace = connectivity_prune(triangle, budget=1)
        assert trace.stop_reason == STOP_BUDGET
        assert len(trace.steps) == 1
        # threeway tie broken by edge id order
        assert trace.steps[0].edge == ("a", "b")
        assert trace.steps[0].value == pytest.approx((5.0 / 6.0) / 1.0, abs=1e-12)
        assert trace.steps[0].step_value == pytest.approx(5.0 / 6.0, abs=1e-12)
        assert len(pruned.edges) == 2

    def test_bridges_never_removed(self, unit_path):
        pruned, trace = connectivity_prune(unit_path, budget=5)
        assert trace.steps == ()
        assert trace.stop_reason == STOP_FLOOR
        assert len(pruned.edges) == 2

    def test_budget_exceeding_non_bridges(self, triangle):
        pruned, trace = connectivity_prune(triangle, budget=10)
        # removing one edge leaves a path of bridges
        assert len(trace.steps) == 1
        assert trace.stop_reason == STOP_FLOOR
        assert len(pruned.edges) == 2

    def test_rk_floor_stops_early(self, triangle):
        _, trace = connectivity_prune(triangle, rk_floor=0.9)
        assert trace.steps == ()
        assert trace.stop_reason == STOP_FLOOR

    def test_rk_monotone_and_bounded(self):
        _, _, _, graph = random_instance(4, n_points=20, cluster_size=4)
        comps = graph.components()
        ids = max(comps.values(), key=len)
        if len(ids) < 4:
            pytest.skip("largest component too small")
        sub = toy_graph({k: d.weight for k, d in graph.edges.items() if k[0] in ids})
        _, trace = connectivity_prune(sub)
        values = [s.value for s in trace.steps]
        assert all(0.0 < v <= 1.0 + 1e-12 for v in values)
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))

    def test_restricted_removable_set(self, triangle):
        pruned, trace = connectivity_prune(triangle, removable=[("b", "c")], budget=5)
        assert trace.removed_edges() == (("b", "c"),)
        assert ("a", "b") in pruned.edges and ("a", "c") in pruned.edges

    def test_empty_removable_rejected(self, triangle):
        with pytest.raises(ValidationError, match="empty"):
            connectivity_prune(triangle, removable=[])

    def test_disconnected_input_rejected(self):
        g = toy_graph({("a", "b"): 1.0, ("c", "d"): 1.0})
        with pytest.raises(ValidationError, match="disconnected"):
            connectivity_prune(g, budget=1)


class TestMerge:
    def two_blob_setup(self, n_per=8, k=2):
        rng = np.random.default_rng(0)
        pts = np.vstack(
            [rng.normal(0, 0.3, (n_per, 2)), rng.normal(20, 0.3, (n_per, 2))]
        )
        cloud = PointCloud.from_coordinates(pts)
        index = build_knn_graph(cloud, k)
        half = n_per // 2
        clustering = Clustering(
            {
                "a": range(half),
                "b": range(half, n_per),
                "c": range(n_per, n_per + half),
                "d": range(n_per + half, 2 * n_per),
            }
        )
        graph = build_cluster_graph(cloud, clustering, index, ClusterMetricChoice("avg"))
        return cloud, clustering, index, graph

    def test_two_single_vertex_components(self):
        rng = np.random.default_rng(1)
        pts = np.vstack([rng.normal(0, 0.2, (4, 2)), rng.normal(9, 0.2, (4, 2))])
        cloud = PointCloud.from_coordinates(pts)
        index = build_knn_graph(cloud, 2)
        clustering = Clustering({"left": range(4), "right": range(4, 8)})
        graph = build_cluster_graph(cloud, clustering, index, ClusterMetricChoice("avg"))
        merged = merge_components(graph, cloud, ClusterMetricChoice("avg"), k_merge=1)
        assert len(merged.edges) == 1
        (key,) = merged.edge_list()
        assert merged.edges[key].provenance == MERGE

    def test_merge_connects_and_weights_match_metric(self):
        cloud, clustering, index, graph = self.two_blob_setup()
        assert len(graph.components()) == 2
        merged = merge_components(graph, cloud, ClusterMetricChoice("avg"), k_merge=1)
        assert merged.connected_component_count() == 1
        from clustergraph.metrics import cluster_distance

        for key, data in merged.edges.items():
            if data.provenance != MERGE:
                continue
            want = cluster_distance(
                cloud,
                merged.vertices[key[0]].members,
                merged.vertices[key[1]].members,
                ClusterMetricChoice("avg"),
            )
            assert data.weight == pytest.approx(want, abs=1e-12)

    def test_three_components_connect_with_k1(self):
        rng = np.random.default_rng(2)
        pts = np.vstack(
            [
                rng.normal(0, 0.2, (4, 2)),
                rng.normal(15, 0.2, (4, 2)),
                rng.normal([0, 30], 0.2, (4, 2)),
            ]
        )
        cloud = PointCloud.from_coordinates(pts)
        index = build_knn_graph(cloud, 2)
        assert index.component_count() == 3
        clustering = Clustering({"a": range(4), "b": range(4, 8), "c": range(8, 12)})
        graph = build_cluster_graph(cloud, clustering, index, ClusterMetricChoice("avg"))
        merged = merge_components(graph, cloud, ClusterMetricChoice("avg"), k_merge=1)
        assert merged.connected_component_count() == 1

    def test_single_component_warns_noop(self, four_cluster_setup):
        cloud, _, _, graph = four_cluster_setup
        with pytest.warns(UserWarning, match="single component"):
            merged = merge_components(graph, cloud, ClusterMetricChoice("avg"), k_merge=2)
        assert merged is graph

    def test_merge_then_prune_keeps_originals(self):
        cloud, clustering, index, graph = self.two_blob_setup()
        merged = merge_components(graph, cloud, ClusterMetricChoice("avg"), k_merge=3)
        merge_edges = [k for k, d in merged.edges.items() if d.provenance == MERGE]
        originals = set(merged.edges) - set(merge_edges)
        pruned, trace = connectivity_prune(merged, removable=merge_edges, budget=len(merge_edges))
        assert originals <= set(pruned.edges)
        assert pruned.connected_component_count() == 1
        assert set(trace.removed_edges()) <= set(merge_edges)
