"""Command-line interface.

Subcommands mirror the pipeline stages (cluster, build, score, prune,
merge, export, stability) plus ``pipeline`` which runs everything from a
flat JSON config; any config key can be overridden by the flag of the same
name.  Exit codes: 0 success, 1 input/validation error, 2 configuration
error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import io as cg_io
from .build import build_cluster_graph
from .cluster import kmeans, per_label_clustering
from .core import MERGE, validate
from .distortion import DistortionScorer
from .errors import ConfigError, InternalError, ValidationError
from .geodesics import build_knn_graph
from .metrics import ClusterMetricChoice, metric_from_tag, set_minkowski_exponent
from .pipeline import run_pipeline
from .pruning import connectivity_prune, greedy_prune, merge_components, threshold_prune
from .stability import check_stability


def _add_input_flags(sub, matrix_ok=True):
    sub.add_argument("--points", help="point CSV (one row per point)")
    if matrix_ok:
        sub.add_argument("--distance-matrix", help="square distance-matrix CSV")


def _load_cloud(args):
    points = getattr(args, "points", None)
    matrix = getattr(args, "distance_matrix", None)
    if points and matrix:
        raise ConfigError("--points and --distance-matrix are mutually exclusive")
    if points:
        return cg_io.load_points(points)
    if matrix:
        return cg_io.load_points(matrix, distance_matrix=True)
    raise ConfigError("an input is required: --points or --distance-matrix")


def _metric_choice(args) -> ClusterMetricChoice:
    return ClusterMetricChoice(args.metric, args.wasserstein_p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clustergraph",
        description="Cluster-level graph summaries with distortion scoring and pruning",
    )
    parser.add_argument("--threads", type=int, default=None, help="worker threads for graph construction")
    parser.add_argument("--minkowski", type=float, default=2.0, help="point metric exponent (2 = Euclidean)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="k-means or per-label clustering to CSV")
    _add_input_flags(p, matrix_ok=False)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-label", action="store_true", help="cluster each class separately")
    p.add_argument("--k-per-class", type=int, default=5)
    p.add_argument("--output", required=True)

    p = sub.add_parser("build", help="build the complete per-component cluster graph")
    _add_input_flags(p)
    p.add_argument("--clustering", required=True, help="point_id,cluster_id CSV")
    p.add_argument("--knn-k", type=int, default=10)
    p.add_argument("--metric", default="avg", choices=["min", "max", "avg", "hausdorff", "wasserstein"])
    p.add_argument("--wasserstein-p", type=float, default=1.0)
    p.add_argument("--output", required=True)

    p = sub.add_parser("score", help="score a graph's metric distortion")
    _add_input_flags(p)
    p.add_argument("--clustering", required=True)
    p.add_argument("--graph", required=True, help="graph JSON from 'build'")
    p.add_argument("--pair-cap", type=int, default=None, help="subsample cross pairs per cluster pair")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="distortion report JSON")
    p.add_argument("--annotated-graph", help="also write the graph with per-edge distortion")

    p = sub.add_parser("prune", help="prune a scored graph")
    _add_input_flags(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--clustering", help="needed for greedy pruning")
    p.add_argument("--strategy", required=True, choices=["threshold", "greedy", "connectivity"])
    p.add_argument("--alpha", type=float, help="distortion threshold")
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--rk-floor", type=float, default=None)
    p.add_argument("--merge-only", action="store_true", help="restrict to merge-provenance edges")
    p.add_argument("--output", required=True)
    p.add_argument("--trace", help="prune trace JSON")

    p = sub.add_parser("merge", help="link components via nearest cross-component vertices")
    _add_input_flags(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--k-merge", type=int, default=3)
    p.add_argument("--output", required=True)

    p = sub.add_parser("export", help="convert a graph JSON to graphml or dot")
    p.add_argument("--graph", required=True)
    p.add_argument("--format", required=True, choices=["json", "graphml", "dot"])
    p.add_argument("--output", required=True)

    p = sub.add_parser("stability", help="diameter-bound diagnostics between two clusterings")
    _add_input_flags(p)
    p.add_argument("--clustering-a", required=True)
    p.add_argument("--clustering-b", required=True)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("pipeline", help="run the full pipeline from a config file")
    p.add_argument("--config", help="flat JSON config; flags below override it")
    for key, flag_type in [
        ("points", str),
        ("distance-matrix", str),
        ("clustering", str),
        ("kmeans-k", int),
        ("k-per-class", int),
        ("seed", int),
        ("knn-k", int),
        ("metric", str),
        ("wasserstein-p", float),
        ("alpha", float),
        ("max-steps", int),
        ("budget", int),
        ("rk-floor", float),
        ("merge-k", int),
        ("merge-budget", int),
        ("pair-cap", int),
        ("output-dir", str),
    ]:
        p.add_argument(f"--{key}", type=flag_type, default=None)
    p.add_argument("--per-label", action="store_true", default=None)
    p.add_argument("--prune", choices=["none", "threshold", "greedy", "connectivity"], default=None)
    p.add_argument("--no-merge", action="store_true", help="skip the merge stage")
    p.add_argument("--formats", nargs="+", choices=["json", "graphml", "dot"], default=None)
    p.add_argument("--json", action="store_true", help="machine-readable summary on stdout")

    return parser


def _cmd_cluster(args) -> int:
    cloud = _load_cloud(args)
    if args.per_label:
        clustering = per_label_clustering(cloud, args.k_per_class, args.seed)
    else:
        clustering = kmeans(cloud, args.k, args.seed)
    cg_io.save_clustering(clustering, args.output)
    print(f"wrote {len(clustering)} clusters to {args.output}")
    return 0


def _cmd_build(args) -> int:
    cloud = _load_cloud(args)
    clustering = cg_io.load_clustering(args.clustering, n_points=cloud.n_points)
    validate(cloud, clustering)
    index = build_knn_graph(cloud, args.knn_k)
    graph = build_cluster_graph(cloud, clustering, index, _metric_choice(args), threads=args.threads)
    cg_io.export_graph(graph, args.output, "json")
    print(
        f"built graph: {graph.n_vertices} vertices, {len(graph.edges)} edges, "
        f"{len(graph.components())} components -> {args.output}"
    )
    return 0


def _rebuild_index(args, cloud, graph):
    if graph.knn_k is None:
        raise ConfigError("graph metadata lacks k; cannot rebuild the geodesic index")
    return build_knn_graph(cloud, graph.knn_k)


def _cmd_score(args) -> int:
    cloud = _load_cloud(args)
    clustering = cg_io.load_clustering(args.clustering, n_points=cloud.n_points)
    graph = cg_io.import_graph(args.graph)
    index = _rebuild_index(args, cloud, graph)
    scorer = DistortionScorer(graph, clustering, index, pair_cap=args.pair_cap, seed=args.seed)
    report = scorer.report()
    cg_io.save_report(report, args.output)
    if args.annotated_graph:
        annotated = graph.with_edge_distortions(
            {e: report.pair_scores[e].delta for e in graph.edges}
        )
        cg_io.export_graph(annotated, args.annotated_graph, "json", report)
    print(f"global distortion {report.global_score:.6g} -> {args.output}")
    return 0


def _cmd_prune(args) -> int:
    graph = cg_io.import_graph(args.graph)
    if args.strategy == "threshold":
        if args.alpha is None:
            raise ConfigError("threshold pruning needs --alpha")
        pruned, trace = threshold_prune(graph, args.alpha)
    elif args.strategy == "greedy":
        if not args.clustering:
            raise ConfigError("greedy pruning needs --clustering and point input")
        cloud = _load_cloud(args)
        clustering = cg_io.load_clustering(args.clustering, n_points=cloud.n_points)
        index = _rebuild_index(args, cloud, graph)
        pruned, trace = greedy_prune(graph, clustering, index, max_steps=args.max_steps)
    else:
        removable = None
        if args.merge_only:
            removable = [e for e, d in graph.edges.items() if d.provenance == MERGE]
        pruned, trace = connectivity_prune(
            graph, removable=removable, budget=args.budget, rk_floor=args.rk_floor
        )
    cg_io.export_graph(pruned, args.output, "json")
    if args.trace:
        cg_io.save_trace(trace, args.trace)
    print(
        f"removed {len(trace.steps)} edges ({trace.stop_reason}); "
        f"{len(pruned.edges)} remain -> {args.output}"
    )
    return 0


def _cmd_merge(args) -> int:
    graph = cg_io.import_graph(args.graph)
    cloud = _load_cloud(args)
    metric = metric_from_tag(graph.metric_tag)
    merged = merge_components(graph, cloud, metric, args.k_merge)
    cg_io.export_graph(merged, args.output, "json")
    added = sum(1 for d in merged.edges.values() if d.provenance == MERGE)
    print(f"added {added} merge edges -> {args.output}")
    return 0


def _cmd_export(args) -> int:
    graph = cg_io.import_graph(args.graph)
    cg_io.export_graph(graph, args.output, args.format)
    print(f"wrote {args.format} -> {args.output}")
    return 0


def _cmd_stability(args) -> int:
    cloud = _load_cloud(args)
    first = cg_io.load_clustering(args.clustering_a, n_points=cloud.n_points)
    second = cg_io.load_clustering(args.clustering_b, n_points=cloud.n_points)
    report = check_stability(cloud, first, second, delta=args.delta)
    if args.json:
        print(
            json.dumps(
                {
                    "delta": report.delta,
                    "max_cluster_diameter": report.max_cluster_diameter,
                    "cluster_image_worst": report.cluster_image_worst,
                    "vertex_image_worst": report.vertex_image_worst,
                    "violations": list(report.violations),
                    "ok": report.ok,
                },
                indent=2,
            )
        )
    else:
        print(f"delta = {report.delta:.6g} (max cluster diameter {report.max_cluster_diameter:.6g})")
        print(f"worst cluster-image ratio: {report.cluster_image_worst:.6g} (bound 1)")
        for kind, ratio in sorted(report.vertex_image_worst.items()):
            print(f"worst vertex-image ratio [{kind}]: {ratio:.6g} (bound 1)")
        print("OK" if report.ok else f"{len(report.violations)} violations")
    return 0 if report.ok else 1


def _cmd_pipeline(args) -> int:
    config: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    overrides = {
        "points": args.points,
        "distance_matrix": args.distance_matrix,
        "clustering": args.clustering,
        "kmeans_k": args.kmeans_k,
        "k_per_class": args.k_per_class,
        "per_label": args.per_label,
        "seed": args.seed,
        "knn_k": args.knn_k,
        "metric": args.metric,
        "wasserstein_p": args.wasserstein_p,
        "prune": args.prune,
        "alpha": args.alpha,
        "max_steps": args.max_steps,
        "budget": args.budget,
        "rk_floor": args.rk_floor,
        "merge_k": args.merge_k,
        "merge_budget": args.merge_budget,
        "pair_cap": args.pair_cap,
        "threads": args.threads,
        "formats": args.formats,
        "output_dir": args.output_dir,
    }
    config.update({k: v for k, v in overrides.items() if v is not None})
    if args.no_merge:
        config["merge_k"] = None
    summary = run_pipeline(config)
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        print(
            f"pipeline done: {summary['n_points']} points, {summary['n_clusters']} clusters, "
            f"{summary['edges_initial']} -> {summary['edges_final']} edges, "
            f"{summary['final_connected_components']} final components"
        )
        print(f"artifacts: {', '.join(summary['artifacts'])}")
    return 0


COMMANDS = {
    "cluster": _cmd_cluster,
    "build": _cmd_build,
    "score": _cmd_score,
    "prune": _cmd_prune,
    "merge": _cmd_merge,
    "export": _cmd_export,
    "stability": _cmd_stability,
    "pipeline": _cmd_pipeline,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    set_minkowski_exponent(args.minkowski)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error [{args.command}]: {exc}", file=sys.stderr)
        return 2
    except InternalError as exc:
        print(f"internal error [{args.command}]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
