"""Built-in seeded k-means so the pipeline runs end to end without external
tools, plus per-label (multi-level) clustering.
"""

from __future__ import annotations

import numpy as np

from .core import Clustering, PointCloud
from .errors import ValidationError

MAX_ITER = 300


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _plus_plus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Standard D^2 seeding; falls back to uniform choice among unchosen
    points when all remaining squared distances are zero."""
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _squared_distances(points, points[chosen])[:, 0]
    while len(chosen) < k:
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            nxt = int(rng.choice(n, p=probs))
        else:
            free = np.setdiff1d(np.arange(n), np.asarray(chosen))
            nxt = int(free[rng.integers(len(free))])
        chosen.append(nxt)
        d2 = np.minimum(d2, _squared_distances(points, points[[nxt]])[:, 0])
    return points[chosen].copy()


def _repair_empty(points, centroids, assignment, empty):
    """Reseat an empty centroid on the point farthest from its assigned
    centroid, never stealing the sole member of a singleton cluster."""
    d2 = _squared_distances(points, centroids)
    own = d2[np.arange(len(points)), assignment]
    sizes = np.bincount(assignment, minlength=centroids.shape[0])
    movable = sizes[assignment] >= 2
    if not movable.any():
        raise ValidationError("cannot repair empty cluster: all clusters are singletons")
    own = np.where(movable, own, -np.inf)
    far = int(np.argmax(own))  # argmax ties resolve to the lowest id
    centroids[empty] = points[far]
    assignment[far] = empty
    return centroids, assignment


def kmeans(cloud: PointCloud, k: int, seed: int, max_iter: int = MAX_ITER) -> Clustering:
    """Deterministic Lloyd iterations from a seeded k-means++ start.

    Converges when no assignment changes or after ``max_iter`` rounds;
    empty clusters are repaired by reseeding to the farthest point, so the
    result always has exactly k nonempty clusters.
    """
    if cloud.points is None:
        raise ValidationError("k-means needs coordinates; distance-matrix clouds cannot move centroids")
    n = cloud.n_points
    if not 1 <= k <= n:
        raise ValidationError(f"k must satisfy 1 <= k <= N={n}, got {k}")
    points = cloud.points
    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(points, k, rng)
    assignment = np.argmin(_squared_distances(points, centroids), axis=1)
    for _ in range(max_iter):
        for cid in range(k):
            if not np.any(assignment == cid):
                centroids, assignment = _repair_empty(points, centroids, assignment, cid)
        for cid in range(k):
            centroids[cid] = points[assignment == cid].mean(axis=0)
        new_assignment = np.argmin(_squared_distances(points, centroids), axis=1)
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
    for cid in range(k):
        if not np.any(assignment == cid):
            centroids, assignment = _repair_empty(points, centroids, assignment, cid)

    width = len(str(k - 1))
    clusters = {
        f"{cid:0{width}d}": np.nonzero(assignment == cid)[0].tolist() for cid in range(k)
    }
    return Clustering(clusters, kind="partition")


def per_label_clustering(
    cloud: PointCloud,
    k_per_class: int,
    seed: int,
    labels=None,
) -> Clustering:
    """Run k-means separately inside every class; the result refines the
    label partition, so each cluster is monochromatic.

    Cluster ids are ``<class>/<index>``.
    """
    if cloud.points is None:
        raise ValidationError("per-label clustering needs coordinates")
    if labels is None:
        labels = cloud.labels
    if labels is None:
        raise ValidationError("per-label clustering needs a class label for every point")
    labels = [str(x) for x in labels]
    if len(labels) != cloud.n_points:
        raise ValidationError(f"got {len(labels)} labels for {cloud.n_points} points")

    by_class: dict[str, list[int]] = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)

    clusters: dict[str, list[int]] = {}
    for class_index, (label, ids) in enumerate(sorted(by_class.items())):
        if len(ids) < k_per_class:
            raise ValidationError(
                f"class {label!r} has {len(ids)} points, fewer than k_per_class={k_per_class}"
            )
        sub = PointCloud.from_coordinates(cloud.points[ids])
        # Independent, reproducible stream per class.
        child_seed = int(np.random.SeedSequence([seed, class_index]).generate_state(1)[0])
        part = kmeans(sub, k_per_class, seed=child_seed)
        for sub_id, members in part.clusters.items():
            clusters[f"{label}/{sub_id}"] = [ids[m] for m in members]
    return Clustering(clusters, kind="partition")
