"""Diagnostics comparing two clusterings of the same cloud: images of
clusters and vertices, and the diameter bounds they provably satisfy when
every cluster is small.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import ClusterGraph, Clustering, PointCloud, edge_key
from .errors import ValidationError
from .metrics import cluster_distance_extremal, distance_block

# Relative slack for the theorem checks; distances are floats.
_REL_EPS = 1e-9


def image_of_cluster(members, other: Clustering) -> frozenset[int]:
    """Union of all clusters of ``other`` that intersect the given id set."""
    members = frozenset(int(p) for p in members)
    if not members:
        raise ValidationError("empty cluster has no image")
    covered = other.covered_ids()
    missing = members - covered
    if missing:
        raise ValidationError(
            f"points {sorted(missing)[:5]} are not covered by the other clustering"
        )
    out: set[int] = set()
    for cid, other_members in other.clusters.items():
        if members & set(other_members):
            out.update(other_members)
    return frozenset(out)


def set_diameter(cloud: PointCloud, members) -> float:
    """Greatest pairwise distance within an id set; 0 for singletons."""
    ids = sorted(int(p) for p in members)
    if not ids:
        raise ValidationError("empty set has no diameter")
    if len(ids) == 1:
        return 0.0
    return float(distance_block(cloud, ids, ids).max())


def image_of_vertex(
    graph_c: ClusterGraph, u: str, graph_d: ClusterGraph
) -> tuple[frozenset[str], float]:
    """Vertices of ``graph_d`` whose clusters meet the cluster of ``u``,
    plus the diameter of the clique they span (max edge weight).

    ``graph_d`` must be unpruned: the image has to be a clique.
    """
    members = set(graph_c.vertices[u].members)
    image = frozenset(
        v for v in graph_d.vertex_ids if members & set(graph_d.vertices[v].members)
    )
    if not image:
        raise ValidationError(f"vertex {u!r} has an empty image; clouds do not match")
    diameter = 0.0
    ordered = sorted(image)
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            key = edge_key(a, b)
            if key not in graph_d.edges:
                raise ValidationError(
                    f"image vertices {a!r} and {b!r} are not adjacent; "
                    "the second graph must be complete (unpruned)"
                )
            diameter = max(diameter, graph_d.edges[key].weight)
    return image, diameter


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of the diameter-bound checks between two clusterings.

    Ratios are observed value over permitted bound; every ratio must stay
    at or below 1 for valid inputs, so values near 1 flag tight cases and
    values above 1 indicate a bug.
    """

    delta: float
    max_cluster_diameter: float
    cluster_image_worst: float
    vertex_image_worst: dict[str, float]
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_stability(
    cloud: PointCloud,
    first: Clustering,
    second: Clustering,
    delta: float | None = None,
) -> StabilityReport:
    """Verify the image-diameter bounds of one clustering against another.

    Requires every cluster of both clusterings to have diameter at most
    ``delta``; when ``delta`` is omitted it is set to the largest observed
    cluster diameter, which makes the check a pure theorem test.  Point
    images of clusters of ``first`` must then have diameter at most
    3*delta, and vertex images must span cliques of diameter at most
    3*delta under the max and avg cluster distances and at most delta
    under min.
    """
    diameters: dict[tuple[str, str], float] = {}
    for tag, clustering in (("first", first), ("second", second)):
        for cid, members in clustering.clusters.items():
            diameters[(tag, cid)] = set_diameter(cloud, members)
    max_diam = max(diameters.values())
    if delta is None:
        delta = max_diam
    else:
        delta = float(delta)
        offenders = [k for k, v in diameters.items() if v > delta * (1 + _REL_EPS)]
        if offenders:
            tag, cid = offenders[0]
            raise ValidationError(
                f"cluster {cid!r} of the {tag} clustering has diameter "
                f"{diameters[(tag, cid)]:.6g} > delta={delta:.6g}"
            )
    if delta <= 0:
        # All clusters are singletons or coincident; bounds hold trivially.
        return StabilityReport(
            delta=delta,
            max_cluster_diameter=max_diam,
            cluster_image_worst=0.0,
            vertex_image_worst={"min": 0.0, "max": 0.0, "avg": 0.0},
            violations=(),
        )

    violations: list[str] = []
    cluster_worst = 0.0
    for cid, members in first.clusters.items():
        image = image_of_cluster(members, second)
        ratio = set_diameter(cloud, image) / (3.0 * delta)
        cluster_worst = max(cluster_worst, ratio)
        if ratio > 1 + _REL_EPS:
            violations.append(f"image of cluster {cid!r} exceeds 3*delta (ratio {ratio:.6g})")

    bounds = {"min": delta, "max": 3.0 * delta, "avg": 3.0 * delta}
    vertex_worst = {kind: 0.0 for kind in bounds}
    second_ids = list(second.clusters)
    for cid, members in first.clusters.items():
        touched = [
            d for d in second_ids if set(members) & set(second.members(d))
        ]
        for i, a in enumerate(touched):
            for b in touched[i + 1 :]:
                for kind, bound in bounds.items():
                    value = cluster_distance_extremal(
                        cloud, second.members(a), second.members(b), kind
                    )
                    ratio = value / bound
                    vertex_worst[kind] = max(vertex_worst[kind], ratio)
                    if ratio > 1 + _REL_EPS:
                        violations.append(
                            f"image of vertex {cid!r} exceeds the {kind} bound "
                            f"on pair ({a!r}, {b!r}) (ratio {ratio:.6g})"
                        )

    return StabilityReport(
        delta=delta,
        max_cluster_diameter=max_diam,
        cluster_image_worst=cluster_worst,
        vertex_image_worst=vertex_worst,
        violations=tuple(violations),
    )
