"""Stage runners shared by the command line and the HTTP service.

Each runner reads upstream artifacts, calls the corresponding module work,
writes downstream artifacts, and returns a small summary dict suitable for
printing or attaching to a job record.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import artifacts, enrich as enrichmod, gnn, ingest, synth
from .errors import ValidationError

logger = logging.getLogger(__name__)


def run_ingest(
    data_dir: str | Path,
    out_path: str | Path,
    embeddings_path: Optional[str] = None,
    min_cells: int = ingest.MIN_CELLS,
    n_degs: int = ingest.N_DEGS,
) -> dict:
    samples = ingest.load_dataset(data_dir)
    samples = ingest.normalize_expression(samples)
    if embeddings_path:
        table = ingest.GeneEmbeddingTable.load(embeddings_path)
    else:
        table = ingest.GeneEmbeddingTable()
    nodes = ingest.build_population_nodes(samples, table, min_cells=min_cells, n_degs=n_degs)
    if not nodes:
        raise ValidationError("no populations large enough to build nodes")
    payload = artifacts.build_graph_payload(samples, nodes)
    artifacts.write_graph(payload, out_path)
    return {
        "graph": str(out_path),
        "n_samples": len(samples),
        "n_nodes": len(nodes),
        "n_cells": sum(len(s.cells) for s in samples),
        "embeddings": table.provenance,
    }


def _label_indices(payload: artifacts.GraphPayload, labels: Sequence[tuple]) -> list:
    index = {node_id: i for i, node_id in enumerate(payload.ids())}
    pairs = []
    for src, dst in labels:
        if src not in index:
            raise ValidationError(f"label edge references unknown node {src!r}")
        if dst not in index:
            raise ValidationError(f"label edge references unknown node {dst!r}")
        pairs.append((index[src], index[dst]))
    return pairs


def build_model_config(overrides: Optional[dict] = None) -> gnn.ModelConfig:
    base = asdict(gnn.ModelConfig())
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(base)
    if unknown:
        raise ValidationError(f"unknown model config keys: {sorted(unknown)}")
    base.update(overrides)
    base["threshold_grid"] = tuple(base["threshold_grid"])
    return gnn.ModelConfig(**base)


def run_train(
    graph_path: str | Path,
    edges_path: str | Path,
    model_out: str | Path,
    report_out: Optional[str | Path] = None,
    config_overrides: Optional[dict] = None,
    ablation: str = "none",
    seed: int = 0,
    progress: Optional[Callable[[int, int], None]] = None,
) -> dict:
    payload = artifacts.read_graph(graph_path)
    labels = synth.load_edge_labels(edges_path)
    pairs = _label_indices(payload, labels)
    config = gnn.make_ablation(build_model_config(config_overrides), ablation)
    model, report = gnn.train(
        payload.feature_matrix(),
        payload.types(),
        payload.stages(),
        pairs,
        config=config,
        seed=seed,
        progress=progress,
    )
    gnn.save_model(model, model_out, threshold=report.threshold)
    if report_out is not None:
        Path(report_out).parent.mkdir(parents=True, exist_ok=True)
        with open(report_out, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return {
        "model": str(model_out),
        "threshold": report.threshold,
        "n_params": report.n_params,
        "test_balanced_acc": report.test_balanced_acc,
        "val_balanced_acc": report.val_balanced_acc,
        "final_train_loss": report.train_losses[-1],
        "wall_time_s": report.wall_time_s,
        "seed": seed,
        "ablation": ablation,
    }


def run_predict(
    graph_path: str | Path,
    model_path: str | Path,
    out_path: str | Path,
    threshold: Optional[float] = None,
) -> dict:
    payload = artifacts.read_graph(graph_path)
    model, saved_threshold = gnn.load_model(model_path)
    if threshold is None:
        threshold = saved_threshold
    if threshold is None:
        raise ValidationError("no threshold stored in the model file; pass one explicitly")
    edges = gnn.predict_edges(
        model,
        payload.feature_matrix(),
        payload.types(),
        payload.stages(),
        payload.ids(),
        threshold,
    )
    artifacts.write_predictions(edges, threshold, out_path)
    return {"predictions": str(out_path), "threshold": threshold, "n_edges": len(edges)}


def run_paths(
    graph_path: str | Path,
    predictions_path: str | Path,
    out_path: str | Path,
    max_len: Optional[int] = None,
    top_fraction: float = artifacts.TOP_FRACTION,
) -> dict:
    payload = artifacts.read_graph(graph_path)
    edges, _ = artifacts.read_predictions(predictions_path)
    paths, top_ids = artifacts.mine_paths(payload, edges, max_len=max_len, top_fraction=top_fraction)
    artifacts.write_paths(paths, top_ids, out_path, max_len=max_len, top_fraction=top_fraction)
    return {
        "paths": str(out_path),
        "n_paths": len(paths),
        "n_top": len(top_ids),
        "max_frequency": max((p.frequency for p in paths), default=0),
    }


def run_summarize(
    graph_path: str | Path,
    paths_path: str | Path,
    out_path: str | Path,
    core_type: Optional[str] = None,
    path_ids: Optional[Sequence[str]] = None,
) -> dict:
    payload = artifacts.read_graph(graph_path)
    paths, top_ids = artifacts.read_paths(paths_path)
    wanted = list(path_ids) if path_ids else list(top_ids)
    selected = [artifacts.find_path(paths, pid) for pid in wanted]
    summaries = artifacts.build_summaries(payload, selected, core_type=core_type)
    artifacts.write_summaries(summaries, out_path)
    return {"summaries": str(out_path), "n_paths": len(selected), "core": core_type}


def run_enrich(
    graph_path: str | Path,
    paths_path: str | Path,
    trajectory_id: str,
    obo_path: str | Path,
    gaf_path: str | Path,
    out_path: str | Path,
    alpha: float = enrichmod.ALPHA,
) -> dict:
    payload = artifacts.read_graph(graph_path)
    paths, _ = artifacts.read_paths(paths_path)
    _, traj = artifacts.resolve_trajectory(paths, trajectory_id)
    target = artifacts.trajectory_target_genes(payload, traj.steps)
    background = artifacts.background_genes(payload)
    term_graph = enrichmod.load_term_graph(obo_path)
    annotations = enrichmod.load_annotations(gaf_path, term_graph)
    results = enrichmod.enrich(target, background, annotations, term_graph, alpha=alpha)
    artifacts.write_enrichment(results, trajectory_id, out_path)
    return {
        "enrichment": str(out_path),
        "trajectory": trajectory_id,
        "n_terms": len(results),
        "n_significant": sum(1 for r in results if r.significant),
        "top_term": results[0].term_id if results else None,
    }


def evaluate_on_planted(
    data_dir: str | Path,
    config_overrides: Optional[dict] = None,
    ablation: str = "none",
    seed: int = 0,
    progress: Optional[Callable[[int, int], None]] = None,
) -> dict:
    """Train on a planted-lineage dataset and report held-out accuracy.

    The full in-memory path: ingest the dataset, read the planted edges as
    labels, train, and return the report fields the evaluation table needs.
    """
    samples = ingest.normalize_expression(ingest.load_dataset(data_dir))
    table = ingest.GeneEmbeddingTable()
    nodes = ingest.build_population_nodes(samples, table)
    payload_dict = artifacts.build_graph_payload(samples, nodes)
    gp = artifacts.GraphPayload(
        samples={
            sid: artifacts.SampleInfo(s["stage"], tuple(s["bounds"]), s["n_cells"])
            for sid, s in payload_dict["samples"].items()
        },
        nodes=sorted(nodes, key=lambda n: n.node_id),
        cells={},
        cell_counts=payload_dict["cell_counts"],
    )
    labels = synth.load_edge_labels(Path(data_dir) / synth.TRUTH_FILENAME)
    pairs = _label_indices(gp, labels)
    config = gnn.make_ablation(build_model_config(config_overrides), ablation)
    model, report = gnn.train(
        gp.feature_matrix(), gp.types(), gp.stages(), pairs, config=config, seed=seed, progress=progress
    )
    return {
        "seed": seed,
        "ablation": ablation,
        "threshold": report.threshold,
        "threshold_table": report.threshold_table,
        "val_balanced_acc": report.val_balanced_acc,
        "test_balanced_acc": report.test_balanced_acc,
        "n_params": report.n_params,
        "wall_time_s": report.wall_time_s,
    }
