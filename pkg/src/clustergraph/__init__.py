"""Weighted cluster-level graph summaries: build a graph on any clustering,
score how faithfully it reproduces the data's geodesic metric, and prune or
merge it into a compact structure-preserving summary.
"""

from .build import build_cluster_graph, cluster_graph_distance
from .cluster import kmeans, per_label_clustering
from .core import (
    ClusterGraph,
    Clustering,
    DistortionReport,
    EdgeData,
    PointCloud,
    VertexData,
    validate,
)
from .distortion import (
    DistortionScorer,
    edge_distortion,
    global_distortion,
    naive_global_distortion,
    pair_distortion,
    pair_weight,
)
from .errors import ClusterGraphError, ConfigError, InternalError, ValidationError
from .geodesics import GeodesicIndex, build_knn_graph, components, geodesic_distance
from .metrics import (
    ClusterMetricChoice,
    cluster_distance,
    cluster_distance_extremal,
    cluster_distance_hausdorff,
    cluster_distance_wasserstein,
    point_distance,
)
from .pipeline import run_pipeline
from .pruning import (
    PruneStep,
    PruneTrace,
    connectivity,
    connectivity_prune,
    graph_connectivity,
    greedy_prune,
    merge_components,
    path_quality,
    threshold_prune,
)
from .stability import (
    StabilityReport,
    check_stability,
    image_of_cluster,
    image_of_vertex,
    set_diameter,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterGraph",
    "ClusterGraphError",
    "ClusterMetricChoice",
    "Clustering",
    "ConfigError",
    "DistortionReport",
    "DistortionScorer",
    "EdgeData",
    "GeodesicIndex",
    "InternalError",
    "PointCloud",
    "PruneStep",
    "PruneTrace",
    "StabilityReport",
    "ValidationError",
    "VertexData",
    "build_cluster_graph",
    "build_knn_graph",
    "check_stability",
    "cluster_distance",
    "cluster_distance_extremal",
    "cluster_distance_hausdorff",
    "cluster_distance_wasserstein",
    "cluster_graph_distance",
    "components",
    "connectivity",
    "connectivity_prune",
    "edge_distortion",
    "geodesic_distance",
    "global_distortion",
    "graph_connectivity",
    "greedy_prune",
    "image_of_cluster",
    "image_of_vertex",
    "kmeans",
    "merge_components",
    "naive_global_distortion",
    "pair_distortion",
    "pair_weight",
    "path_quality",
    "per_label_clustering",
    "point_distance",
    "run_pipeline",
    "set_diameter",
    "threshold_prune",
    "validate",
]
