"""File ingestion and graph export.

Inputs: point CSV (one row per point, optional header, optional ``label``
column), square distance-matrix CSV, and two-column clustering CSV.
Outputs: graph JSON (round-trips to an identical model), GraphML, DOT,
plus JSON distortion reports and prune traces.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .core import (
    ClusterGraph,
    Clustering,
    DistortionReport,
    EdgeData,
    PairScore,
    PointCloud,
    VertexData,
)
from .errors import ValidationError
from .pruning import PruneStep, PruneTrace

MATRIX_SYMMETRY_TOL = 1e-9


def _read_rows(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ValidationError(f"{path}: empty file")
    return rows


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def load_points(path, distance_matrix: bool = False, label_column: str = "label") -> PointCloud:
    """Read a point CSV (or an N x N distance matrix with
    ``distance_matrix=True``).

    A header row is detected by non-numeric cells; in coordinate mode a
    header column named ``label`` is captured as the per-point class.
    """
    rows = _read_rows(path)
    header: list[str] | None = None
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise ValidationError(f"{path}: header but no data rows")

    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValidationError(f"{path}: row {i} has {len(row)} cells, expected {width}")

    if distance_matrix:
        try:
            matrix = np.array([[float(c) for c in row] for row in rows])
        except ValueError as exc:
            raise ValidationError(f"{path}: non-numeric cell in distance matrix: {exc}") from None
        if matrix.shape[0] != matrix.shape[1]:
            raise ValidationError(
                f"{path}: distance matrix must be square, got {matrix.shape[0]}x{matrix.shape[1]}"
            )
        gap = float(np.abs(matrix - matrix.T).max()) if matrix.size else 0.0
        if gap > MATRIX_SYMMETRY_TOL:
            raise ValidationError(f"{path}: distance matrix asymmetric by {gap:g}")
        matrix = (matrix + matrix.T) / 2.0
        return PointCloud.from_distance_matrix(matrix)

    label_idx = None
    if header is not None and label_column in header:
        label_idx = header.index(label_column)
    feature_idx = [i for i in range(width) if i != label_idx]
    if not feature_idx:
        raise ValidationError(f"{path}: no feature columns")
    points = np.empty((len(rows), len(feature_idx)))
    labels: list[str] | None = [] if label_idx is not None else None
    for r, row in enumerate(rows):
        for c, idx in enumerate(feature_idx):
            cell = row[idx].strip()
            if not _is_number(cell):
                raise ValidationError(f"{path}: non-numeric feature cell {cell!r} at row {r}")
            points[r, c] = float(cell)
        if labels is not None:
            labels.append(row[label_idx].strip())
    return PointCloud.from_coordinates(points, labels=labels)


def load_clustering(path, n_points: int | None = None) -> Clustering:
    """Read a two-column ``point_id,cluster_id`` CSV.

    A point id repeated across distinct clusters makes the result a
    division; otherwise it is a partition.
    """
    rows = _read_rows(path)
    if not _is_number(rows[0][0]):
        rows = rows[1:]  # header row
        if not rows:
            raise ValidationError(f"{path}: header but no data rows")
    clusters: dict[str, set[int]] = {}
    owners: dict[int, set[str]] = {}
    for r, row in enumerate(rows):
        if len(row) < 2:
            raise ValidationError(f"{path}: row {r} needs point_id,cluster_id")
        cell = row[0].strip()
        try:
            point = int(cell)
        except ValueError:
            raise ValidationError(f"{path}: bad point id {cell!r} at row {r}") from None
        cid = row[1].strip()
        if not cid:
            raise ValidationError(f"{path}: empty cluster id at row {r}")
        if n_points is not None and not 0 <= point < n_points:
            raise ValidationError(f"{path}: unknown point id {point} (cloud has {n_points})")
        clusters.setdefault(cid, set()).add(point)
        owners.setdefault(point, set()).add(cid)
    kind = "division" if any(len(cids) > 1 for cids in owners.values()) else "partition"
    return Clustering(clusters, kind=kind)


def save_clustering(clustering: Clustering, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_id", "cluster_id"])
        for cid in clustering.cluster_ids:
            for p in clustering.members(cid):
                writer.writerow([p, cid])


# -- graph serialization ---------------------------------------------------


def graph_to_dict(graph: ClusterGraph, report: DistortionReport | None = None) -> dict:
    nodes = []
    for vid in graph.vertex_ids:
        data = graph.vertices[vid]
        nodes.append(
            {
                "id": vid,
                "size": data.size,
                "members": list(data.members),
                "component": graph.component_of[vid],
                "composition": {k: data.class_composition[k] for k in sorted(data.class_composition)},
            }
        )
    edges = []
    for (u, v), data in graph.edges.items():
        entry = {"source": u, "target": v, "weight": data.weight}
        if data.distortion is not None:
            entry["distortion"] = data.distortion
        entry["provenance"] = data.provenance
        edges.append(entry)
    meta: dict = {"metric_tag": graph.metric_tag, "k": graph.knn_k}
    if report is not None:
        meta["global_distortion"] = report.global_score
    return {"nodes": nodes, "edges": edges, "meta": meta}


def graph_from_dict(payload: dict) -> ClusterGraph:
    vertices = {}
    component_of = {}
    for node in payload["nodes"]:
        vid = str(node["id"])
        vertices[vid] = VertexData(
            size=int(node["size"]),
            members=tuple(int(p) for p in node["members"]),
            class_composition={str(k): float(f) for k, f in node.get("composition", {}).items()},
        )
        component_of[vid] = int(node["component"])
    edges = {}
    for entry in payload["edges"]:
        key = (str(entry["source"]), str(entry["target"]))
        edges[key] = EdgeData(
            weight=float(entry["weight"]),
            distortion=float(entry["distortion"]) if "distortion" in entry else None,
            provenance=str(entry.get("provenance", "original")),
        )
    meta = payload.get("meta", {})
    return ClusterGraph(
        vertices,
        edges,
        component_of,
        metric_tag=str(meta.get("metric_tag", "unknown")),
        knn_k=int(meta["k"]) if meta.get("k") is not None else None,
    )


def _write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def export_graph(
    graph: ClusterGraph,
    path,
    fmt: str = "json",
    report: DistortionReport | None = None,
) -> None:
    """Write a graph as JSON, GraphML, or DOT.

    The JSON form carries everything needed to rebuild the model, so
    export -> import -> export is byte-identical.
    """
    if fmt == "json":
        _write_text(path, json.dumps(graph_to_dict(graph, report), indent=2) + "\n")
    elif fmt == "graphml":
        _write_text(path, _to_graphml(graph))
    elif fmt == "dot":
        _write_text(path, _to_dot(graph))
    else:
        raise ValidationError(f"unknown export format {fmt!r}; use json, graphml, or dot")


def import_graph(path) -> ClusterGraph:
    with open(path, encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh))


_GRAPHML_KEYS = [
    ("d_size", "node", "size", "long"),
    ("d_component", "node", "component", "long"),
    ("d_composition", "node", "composition", "string"),
    ("d_weight", "edge", "weight", "double"),
    ("d_distortion", "edge", "distortion", "double"),
    ("d_provenance", "edge", "provenance", "string"),
]


def _to_graphml(graph: ClusterGraph) -> str:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
    ]
    for key_id, domain, name, kind in _GRAPHML_KEYS:
        lines.append(
            f'  <key id="{key_id}" for="{domain}" attr.name="{name}" attr.type="{kind}"/>'
        )
    lines.append('  <graph edgedefault="undirected">')
    for vid in graph.vertex_ids:
        data = graph.vertices[vid]
        comp_json = json.dumps(
            {k: data.class_composition[k] for k in sorted(data.class_composition)}
        )
        lines.append(f"    <node id={quoteattr(vid)}>")
        lines.append(f'      <data key="d_size">{data.size}</data>')
        lines.append(f'      <data key="d_component">{graph.component_of[vid]}</data>')
        lines.append(f'      <data key="d_composition">{escape(comp_json)}</data>')
        lines.append("    </node>")
    for (u, v), data in graph.edges.items():
        lines.append(f"    <edge source={quoteattr(u)} target={quoteattr(v)}>")
        lines.append(f'      <data key="d_weight">{data.weight!r}</data>')
        if data.distortion is not None:
            lines.append(f'      <data key="d_distortion">{data.distortion!r}</data>')
        lines.append(f'      <data key="d_provenance">{data.provenance}</data>')
        lines.append("    </edge>")
    lines.append("  </graph>")
    lines.append("</graphml>")
    return "\n".join(lines) + "\n"


def _dot_quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _to_dot(graph: ClusterGraph) -> str:
    lines = ["graph clustergraph {"]
    for vid in graph.vertex_ids:
        data = graph.vertices[vid]
        lines.append(f"  {_dot_quote(vid)} [label={_dot_quote(vid)}, size={data.size}];")
    for (u, v), data in graph.edges.items():
        attrs = f"len={data.weight!r}, label={_dot_quote(f'{data.weight:.4g}')}"
        if data.provenance != "original":
            attrs += f", style=dashed, provenance={_dot_quote(data.provenance)}"
        lines.append(f"  {_dot_quote(u)} -- {_dot_quote(v)} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- report / trace serialization -------------------------------------------


def report_to_dict(report: DistortionReport) -> dict:
    return {
        "k": report.k_used,
        "global": report.global_score,
        "aggregation": report.aggregation,
        "per_component": {str(c): v for c, v in sorted(report.per_component.items())},
        "pairs": [
            {
                "source": u,
                "target": v,
                "delta": score.delta,
                "weight": score.weight,
                "pair_count": score.pair_count,
            }
            for (u, v), score in sorted(report.pair_scores.items())
        ],
    }


def report_from_dict(payload: dict) -> DistortionReport:
    pair_scores = {
        (entry["source"], entry["target"]): PairScore(
            delta=float(entry["delta"]),
            weight=float(entry["weight"]),
            pair_count=int(entry["pair_count"]),
        )
        for entry in payload["pairs"]
    }
    return DistortionReport(
        pair_scores=pair_scores,
        per_component={int(c): float(v) for c, v in payload["per_component"].items()},
        global_score=float(payload["global"]),
        k_used=int(payload["k"]),
        aggregation=str(payload.get("aggregation", "point_count_weighted_mean")),
    )


def save_report(report: DistortionReport, path) -> None:
    _write_text(path, json.dumps(report_to_dict(report), indent=2) + "\n")


def trace_to_dict(trace: PruneTrace) -> dict:
    steps = []
    for step in trace.steps:
        entry = {
            "edge": list(step.edge),
            "value": step.value,
            "components": step.components,
        }
        if step.step_value is not None:
            entry["step_value"] = step.step_value
        steps.append(entry)
    return {"strategy": trace.strategy, "stop_reason": trace.stop_reason, "steps": steps}


def trace_from_dict(payload: dict) -> PruneTrace:
    steps = tuple(
        PruneStep(
            edge=(entry["edge"][0], entry["edge"][1]),
            value=float(entry["value"]),
            components=int(entry["components"]),
            step_value=float(entry["step_value"]) if "step_value" in entry else None,
        )
        for entry in payload["steps"]
    )
    return PruneTrace(payload["strategy"], steps, payload["stop_reason"])


def save_trace(trace: PruneTrace, path) -> None:
    _write_text(path, json.dumps(trace_to_dict(trace), indent=2) + "\n")
