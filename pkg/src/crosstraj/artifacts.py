"""Pipeline artifact schemas and the glue that builds them.

Stages hand data to each other through JSON files: the ingest step writes a
self-contained graph payload (nodes, features, member coordinates, per-sample
bounds, cell counts), prediction writes scored edges, path mining writes
grouped paths, and summarization writes per-path geometry. Everything is
dumped with sorted keys and full float precision so a rerun with the same
seed produces byte-identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import graph as graphmod
from . import spatial
from .errors import FormatError, NotFoundError, ValidationError
from .ingest import PopulationNode, Sample

GRAPH_FORMAT = "crosstraj-graph"
PREDICTIONS_FORMAT = "crosstraj-predictions"
PATHS_FORMAT = "crosstraj-paths"
SUMMARIES_FORMAT = "crosstraj-summaries"
ENRICHMENT_FORMAT = "crosstraj-enrichment"
VERSION = 1

BOUNDS_MARGIN = 0.15
TOP_FRACTION = 0.15


@dataclass
class SampleInfo:
    stage: int
    bounds: Tuple[float, float, float, float]
    n_cells: int


@dataclass
class GraphPayload:
    samples: Dict[str, SampleInfo]
    nodes: List[PopulationNode]
    cells: Dict[str, np.ndarray]  # node_id -> (n, 2) member coordinates
    cell_counts: dict

    def __post_init__(self):
        self.by_id = {n.node_id: n for n in self.nodes}

    def node(self, node_id: str) -> PopulationNode:
        try:
            return self.by_id[node_id]
        except KeyError:
            raise NotFoundError(f"unknown node {node_id!r}") from None

    def feature_matrix(self) -> np.ndarray:
        return np.vstack([n.features for n in self.nodes])

    def types(self) -> List[str]:
        return [n.cell_type for n in self.nodes]

    def stages(self) -> List[int]:
        return [n.stage for n in self.nodes]

    def ids(self) -> List[str]:
        return [n.node_id for n in self.nodes]


def _dump(payload: dict, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _load(path: str | Path, expected_format: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(payload, dict) or payload.get("format") != expected_format:
        raise FormatError(f"{path}: expected a {expected_format} file")
    return payload


# ---------------------------------------------------------------------------
# Graph payload


def _sample_bounds(sample: Sample, margin: float = BOUNDS_MARGIN) -> Tuple[float, float, float, float]:
    xs = np.array([c.x for c in sample.cells])
    ys = np.array([c.y for c in sample.cells])
    return _padded_bounds(xs, ys, margin)


def _padded_bounds(xs: np.ndarray, ys: np.ndarray, margin: float) -> Tuple[float, float, float, float]:
    xmin, xmax = float(xs.min()), float(xs.max())
    ymin, ymax = float(ys.min()), float(ys.max())
    dx = max(xmax - xmin, 1e-6) * margin
    dy = max(ymax - ymin, 1e-6) * margin
    return (xmin - dx, xmax + dx, ymin - dy, ymax + dy)


def build_graph_payload(samples: Sequence[Sample], nodes: Sequence[PopulationNode]) -> dict:
    by_sample = {s.sample_id: s for s in samples}
    node_rows = []
    for n in sorted(nodes, key=lambda n: n.node_id):
        sample = by_sample[n.sample_id]
        coords = n.coords(sample)
        node_rows.append(
            {
                "id": n.node_id,
                "sample_id": n.sample_id,
                "stage": n.stage,
                "cell_type": n.cell_type,
                "count": n.count,
                "centroid": [n.centroid[0], n.centroid[1]],
                "degs": [[g, float(z), float(p)] for g, z, p in n.degs],
                "features": [float(v) for v in n.features],
                "cells": [[float(x), float(y)] for x, y in coords],
            }
        )
    return {
        "format": GRAPH_FORMAT,
        "version": VERSION,
        "samples": {
            s.sample_id: {
                "stage": s.stage,
                "bounds": list(_sample_bounds(s)),
                "n_cells": len(s.cells),
            }
            for s in samples
        },
        "cell_counts": graphmod.cell_counts_by_stage(samples),
        "nodes": node_rows,
    }


def write_graph(payload: dict, path: str | Path) -> None:
    _dump(payload, path)


def read_graph(path: str | Path) -> GraphPayload:
    raw = _load(path, GRAPH_FORMAT)
    samples = {
        sid: SampleInfo(stage=int(s["stage"]), bounds=tuple(s["bounds"]), n_cells=int(s["n_cells"]))
        for sid, s in raw["samples"].items()
    }
    nodes = []
    cells = {}
    for row in raw["nodes"]:
        features = np.asarray(row["features"], dtype=np.float64)
        nodes.append(
            PopulationNode(
                node_id=row["id"],
                sample_id=row["sample_id"],
                stage=int(row["stage"]),
                cell_type=row["cell_type"],
                cell_indices=[],
                degs=[(g, float(z), float(p)) for g, z, p in row["degs"]],
                features=features,
                centroid=(float(row["centroid"][0]), float(row["centroid"][1])),
                count=int(row["count"]),
            )
        )
        cells[row["id"]] = np.asarray(row["cells"], dtype=np.float64).reshape(-1, 2)
    nodes.sort(key=lambda n: n.node_id)
    return GraphPayload(samples=samples, nodes=nodes, cells=cells, cell_counts=raw["cell_counts"])


# ---------------------------------------------------------------------------
# Predictions


def write_predictions(edges, threshold: float, path: str | Path) -> None:
    rows = [
        {"src": e.src, "dst": e.dst, "probability": float(e.probability)}
        for e in sorted(edges, key=lambda e: (e.src, e.dst))
    ]
    _dump(
        {"format": PREDICTIONS_FORMAT, "version": VERSION, "threshold": float(threshold), "edges": rows},
        path,
    )


def read_predictions(path: str | Path) -> Tuple[List[graphmod.InstanceEdge], float]:
    raw = _load(path, PREDICTIONS_FORMAT)
    edges = [
        graphmod.InstanceEdge(src=r["src"], dst=r["dst"], probability=float(r["probability"]))
        for r in raw["edges"]
    ]
    return edges, float(raw["threshold"])


# ---------------------------------------------------------------------------
# Path mining


def mine_paths(
    payload: GraphPayload,
    edges: Sequence[graphmod.InstanceEdge],
    max_len: Optional[int] = None,
    top_fraction: float = TOP_FRACTION,
) -> Tuple[List[graphmod.DevPath], List[str]]:
    """Filter predicted edges onto the graph, group chains, cut the top slice."""
    g = graphmod.build_global_graph(payload.nodes)
    kept, _ = graphmod.filter_edges(g, edges)
    g.instance_edges = kept
    paths = graphmod.group_paths(g, max_len=max_len)
    top = graphmod.top_frequency_paths(paths, fraction=top_fraction)
    return paths, [p.path_id for p in top]


def write_paths(
    paths: Sequence[graphmod.DevPath],
    top_ids: Sequence[str],
    path: str | Path,
    max_len: Optional[int] = None,
    top_fraction: float = TOP_FRACTION,
) -> None:
    rows = [
        {
            "id": p.path_id,
            "types": list(p.type_sequence),
            "frequency": p.frequency,
            "trajectories": [list(t.steps) for t in p.trajectories],
        }
        for p in paths
    ]
    _dump(
        {
            "format": PATHS_FORMAT,
            "version": VERSION,
            "params": {"max_len": max_len, "top_fraction": top_fraction},
            "paths": rows,
            "top_ids": list(top_ids),
        },
        path,
    )


def read_paths(path: str | Path) -> Tuple[List[graphmod.DevPath], List[str]]:
    raw = _load(path, PATHS_FORMAT)
    paths = []
    for row in raw["paths"]:
        trajectories = [
            graphmod.TrajectoryInstance(steps=tuple(steps), edges=[])
            for steps in row["trajectories"]
        ]
        paths.append(
            graphmod.DevPath(
                type_sequence=tuple(row["types"]),
                frequency=int(row["frequency"]),
                trajectories=trajectories,
            )
        )
    return paths, list(raw["top_ids"])


# ---------------------------------------------------------------------------
# Summaries


def _pooled_positions(dev_path: graphmod.DevPath) -> List[List[str]]:
    """Per position in the type sequence, the sorted participating node ids."""
    positions: List[set] = [set() for _ in dev_path.type_sequence]
    for traj in dev_path.trajectories:
        for i, node_id in enumerate(traj.steps):
            positions[i].add(node_id)
    return [sorted(p) for p in positions]


def _outer_vertices(contours: List[np.ndarray]) -> np.ndarray:
    if not contours:
        raise ValidationError("no outer contour to compare")
    return np.vstack([p[:-1] for p in contours])


def summarize_path(
    payload: GraphPayload, dev_path: graphmod.DevPath, core_type: Optional[str] = None
) -> dict:
    """Geometry row for one path: per-type pooled contours, directions, links.

    All coordinates are translated so the core type's pooled centroid sits at
    the origin; when the core type is absent from the path the first node
    anchors instead.
    """
    if not dev_path.trajectories:
        raise ValidationError(f"path {dev_path.path_id} has no trajectories")
    positions = _pooled_positions(dev_path)
    pooled = []
    for ids in positions:
        pts = np.vstack([payload.cells[node_id] for node_id in ids])
        pooled.append(pts)

    anchor_idx = 0
    if core_type is not None and core_type in dev_path.type_sequence:
        anchor_idx = dev_path.type_sequence.index(core_type)
    anchor = pooled[anchor_idx].mean(axis=0)

    node_rows = []
    vertex_sets = []
    for cell_type, ids, pts in zip(dev_path.type_sequence, positions, pooled):
        aligned = pts - anchor
        bounds = _padded_bounds(aligned[:, 0], aligned[:, 1], BOUNDS_MARGIN)
        cs = spatial.contour_set(aligned, bounds)
        counts = [payload.node(i).count for i in ids]
        direction = spatial.direction_summary(aligned, counts_per_sample=counts)
        vertex_sets.append(_outer_vertices(cs.outer))
        node_rows.append(
            {
                "cell_type": cell_type,
                "populations": ids,
                "n_cells": int(aligned.shape[0]),
                "bounds": list(bounds),
                "outer": [p.tolist() for p in cs.outer],
                "inner": [p.tolist() for p in cs.inner],
                "x_hist": cs.x_hist.tolist(),
                "y_hist": cs.y_hist.tolist(),
                "centroid": [float(v) for v in aligned.mean(axis=0)],
                "theta": direction.theta,
                "r_std": direction.r_std,
                "lambda1": direction.lambda1,
                "lambda2": direction.lambda2,
                "mean_count": direction.mean_count,
            }
        )

    links = []
    for i in range(len(node_rows) - 1):
        score = spatial.contour_similarity(vertex_sets[i], vertex_sets[i + 1])
        links.append(
            {
                "src_type": dev_path.type_sequence[i],
                "dst_type": dev_path.type_sequence[i + 1],
                "d_ab": score.d_ab,
                "d_ba": score.d_ba,
                "d_sym": score.d_sym,
            }
        )
    return {
        "id": dev_path.path_id,
        "types": list(dev_path.type_sequence),
        "frequency": dev_path.frequency,
        "anchor": [float(anchor[0]), float(anchor[1])],
        "nodes": node_rows,
        "links": links,
    }


def build_summaries(
    payload: GraphPayload,
    dev_paths: Sequence[graphmod.DevPath],
    core_type: Optional[str] = None,
) -> dict:
    return {
        "format": SUMMARIES_FORMAT,
        "version": VERSION,
        "core": core_type,
        "paths": [summarize_path(payload, p, core_type) for p in dev_paths],
    }


def write_summaries(summaries: dict, path: str | Path) -> None:
    _dump(summaries, path)


def read_summaries(path: str | Path) -> dict:
    return _load(path, SUMMARIES_FORMAT)


# ---------------------------------------------------------------------------
# Trajectory rows


def trajectory_id(dev_path: graphmod.DevPath, index: int) -> str:
    return f"{dev_path.path_id}#{index}"


def build_trajectory_rows(payload: GraphPayload, dev_path: graphmod.DevPath) -> dict:
    """Per trajectory instance: one step per population with its boundary."""
    rows = []
    for idx, traj in enumerate(dev_path.trajectories):
        steps = []
        for node_id in traj.steps:
            node = payload.node(node_id)
            pts = payload.cells[node_id]
            if pts.shape[0] >= 4:
                try:
                    boundary = [p.tolist() for p in spatial.alpha_shape(pts)]
                except ValidationError:
                    boundary = []
            else:
                boundary = []
            steps.append(
                {
                    "node_id": node_id,
                    "sample_id": node.sample_id,
                    "stage": node.stage,
                    "cell_type": node.cell_type,
                    "count": node.count,
                    "centroid": [node.centroid[0], node.centroid[1]],
                    "boundary": boundary,
                    "cells": pts.tolist(),
                }
            )
        rows.append({"trajectory_id": trajectory_id(dev_path, idx), "steps": steps})
    return {"path_id": dev_path.path_id, "frequency": dev_path.frequency, "trajectories": rows}


# ---------------------------------------------------------------------------
# Gene sets for enrichment


def background_genes(payload: GraphPayload) -> List[str]:
    """Union of every population's ranked genes."""
    out = set()
    for node in payload.nodes:
        out.update(g for g, _, _ in node.degs)
    return sorted(out)


def trajectory_target_genes(payload: GraphPayload, node_ids: Sequence[str]) -> List[str]:
    out = set()
    for node_id in node_ids:
        out.update(g for g, _, _ in payload.node(node_id).degs)
    return sorted(out)


def find_path(dev_paths: Sequence[graphmod.DevPath], path_id: str) -> graphmod.DevPath:
    for p in dev_paths:
        if p.path_id == path_id:
            return p
    raise NotFoundError(f"unknown path {path_id!r}")


def resolve_trajectory(dev_paths: Sequence[graphmod.DevPath], traj_id: str):
    """Split "<path_id>#<index>" and return (path, trajectory instance)."""
    if "#" not in traj_id:
        raise NotFoundError(f"malformed trajectory id {traj_id!r}")
    path_id, _, idx_text = traj_id.rpartition("#")
    path = find_path(dev_paths, path_id)
    try:
        idx = int(idx_text)
        traj = path.trajectories[idx]
    except (ValueError, IndexError):
        raise NotFoundError(f"unknown trajectory {traj_id!r}") from None
    return path, traj


def write_enrichment(results, trajectory: str, path: str | Path) -> None:
    rows = [
        {
            "term_id": r.term_id,
            "name": r.name,
            "namespace": r.namespace,
            "k": r.k,
            "K": r.K,
            "n": r.n,
            "N": r.N,
            "p": r.p,
            "fdr": r.p_adj,
            "significant": r.significant,
            "genes": list(r.genes),
        }
        for r in results
    ]
    _dump(
        {"format": ENRICHMENT_FORMAT, "version": VERSION, "trajectory": trajectory, "rows": rows},
        path,
    )


def read_enrichment(path: str | Path) -> dict:
    return _load(path, ENRICHMENT_FORMAT)
