"""End-to-end orchestration: points -> clustering -> geodesic index ->
complete cluster graph -> distortion -> pruning -> optional merge ->
exported artifacts.

Identical configuration produces byte-identical artifacts; progress and
timings go to stderr only.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

from . import io as cg_io
from .build import build_cluster_graph
from .cluster import kmeans, per_label_clustering
from .core import MERGE, Clustering, PointCloud
from .distortion import DistortionScorer
from .errors import ConfigError
from .geodesics import build_knn_graph
from .metrics import ClusterMetricChoice, set_minkowski_exponent
from .pruning import connectivity_prune, greedy_prune, merge_components, threshold_prune

# Defaults mirror the concentric-circles experiment.
DEFAULTS: dict = {
    "points": None,
    "distance_matrix": None,
    "clustering": None,
    "kmeans_k": 20,
    "per_label": False,
    "k_per_class": 5,
    "seed": 0,
    "knn_k": 10,
    "metric": "avg",
    "wasserstein_p": 1.0,
    "minkowski": 2.0,
    "prune": "greedy",
    "alpha": None,
    "max_steps": None,
    "budget": None,
    "rk_floor": None,
    "merge_k": 3,
    "merge_budget": 20,
    "pair_cap": None,
    "threads": None,
    "formats": ["json"],
    "output_dir": "clustergraph_out",
}

PRUNE_STRATEGIES = ("none", "threshold", "greedy", "connectivity")


def resolve_config(config: dict) -> dict:
    """Overlay a config dict onto the defaults.

    Keys present in ``config`` win even when set to None (an explicit null
    disables optional stages such as merging).
    """
    unknown = set(config) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = dict(DEFAULTS)
    merged.update(config)
    if merged["points"] is None and merged["distance_matrix"] is None:
        raise ConfigError("config needs one of 'points' or 'distance_matrix'")
    if merged["points"] is not None and merged["distance_matrix"] is not None:
        raise ConfigError("'points' and 'distance_matrix' are mutually exclusive")
    if merged["prune"] not in PRUNE_STRATEGIES:
        raise ConfigError(f"prune must be one of {PRUNE_STRATEGIES}, got {merged['prune']!r}")
    if merged["prune"] == "threshold" and merged["alpha"] is None:
        raise ConfigError("threshold pruning needs 'alpha'")
    return merged


class _Stage:
    """Context manager printing one timing line per stage to stderr."""

    def __init__(self, name: str, timings: list):
        self.name = name
        self.timings = timings

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        self.timings.append({"stage": self.name, "seconds": elapsed})
        status = "failed" if exc_type else "done"
        print(f"[{self.name}] {status} in {elapsed:.3f}s", file=sys.stderr)
        return False


def run_pipeline(config: dict) -> dict:
    """Execute the full pipeline and write artifacts into the output
    directory; returns a machine-readable summary."""
    cfg = resolve_config(config)
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    set_minkowski_exponent(cfg["minkowski"])
    timings: list[dict] = []
    artifacts: list[str] = []
    summary: dict = {"config": {k: cfg[k] for k in sorted(cfg)}}

    def emit(name: str, writer) -> Path:
        path = out_dir / name
        writer(path)
        artifacts.append(str(path))
        return path

    with _Stage("load", timings):
        if cfg["points"] is not None:
            cloud = cg_io.load_points(cfg["points"])
        else:
            cloud = cg_io.load_points(cfg["distance_matrix"], distance_matrix=True)
    summary["n_points"] = cloud.n_points

    with _Stage("cluster", timings):
        if cfg["clustering"] is not None:
            clustering = cg_io.load_clustering(cfg["clustering"], n_points=cloud.n_points)
        elif cfg["per_label"]:
            clustering = per_label_clustering(cloud, cfg["k_per_class"], cfg["seed"])
            emit("clustering.csv", lambda p: cg_io.save_clustering(clustering, p))
        else:
            clustering = kmeans(cloud, cfg["kmeans_k"], cfg["seed"])
            emit("clustering.csv", lambda p: cg_io.save_clustering(clustering, p))
    summary["n_clusters"] = len(clustering)
    summary["clustering_kind"] = clustering.kind

    with _Stage("knn", timings):
        index = build_knn_graph(cloud, cfg["knn_k"])
    summary["knn_components"] = index.component_count()

    metric = ClusterMetricChoice(cfg["metric"], cfg["wasserstein_p"])
    with _Stage("build", timings):
        graph = build_cluster_graph(cloud, clustering, index, metric, threads=cfg["threads"])
    summary["graph_components"] = len(graph.components())
    summary["edges_initial"] = len(graph.edges)

    with _Stage("score", timings):
        scorer = DistortionScorer(
            graph, clustering, index, pair_cap=cfg["pair_cap"], seed=cfg["seed"]
        )
        report = scorer.report()
        graph = graph.with_edge_distortions(
            {e: report.pair_scores[e].delta for e in graph.edges}
        )
    summary["global_distortion"] = report.global_score
    emit("graph.json", lambda p: cg_io.export_graph(graph, p, "json", report))
    emit("report.json", lambda p: cg_io.save_report(report, p))

    current = graph
    if cfg["prune"] != "none":
        with _Stage("prune", timings):
            if cfg["prune"] == "threshold":
                current, trace = threshold_prune(current, cfg["alpha"])
            elif cfg["prune"] == "greedy":
                current, trace = greedy_prune(
                    current, clustering, index, max_steps=cfg["max_steps"]
                )
            else:
                current, trace = connectivity_prune(
                    current, budget=cfg["budget"], rk_floor=cfg["rk_floor"]
                )
        summary["prune_steps"] = len(trace.steps)
        summary["prune_stop"] = trace.stop_reason
        emit("pruned.json", lambda p: cg_io.export_graph(current, p, "json"))
        emit("prune_trace.json", lambda p: cg_io.save_trace(trace, p))

    if cfg["merge_k"] is not None and len(current.components()) > 1:
        with _Stage("merge", timings):
            merged = merge_components(current, cloud, metric, cfg["merge_k"])
            merge_edges = [
                e for e, data in merged.edges.items() if data.provenance == MERGE
            ]
            summary["merge_edges_added"] = len(merge_edges)
            if cfg["merge_budget"]:
                merged, merge_trace = connectivity_prune(
                    merged, removable=merge_edges, budget=cfg["merge_budget"]
                )
                emit("merge_trace.json", lambda p: cg_io.save_trace(merge_trace, p))
                summary["merge_prune_steps"] = len(merge_trace.steps)
                summary["merge_prune_stop"] = merge_trace.stop_reason
            current = merged
        emit("merged.json", lambda p: cg_io.export_graph(current, p, "json"))

    with _Stage("export", timings):
        for fmt in cfg["formats"]:
            emit(f"final.{fmt}", lambda p, f=fmt: cg_io.export_graph(current, p, f))

    summary["edges_final"] = len(current.edges)
    summary["final_connected_components"] = current.connected_component_count()
    summary["artifacts"] = artifacts
    summary["timings"] = timings
    return summary
