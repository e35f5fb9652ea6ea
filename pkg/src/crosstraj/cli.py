"""Command-line driver for the full pipeline.

Subcommands map to the pipeline stages (synth, ingest, train, predict,
paths, summarize, enrich), plus `serve` for the HTTP service and `eval`
for the planted-lineage evaluation table. `--format json` switches every
command to machine-readable output; `--config` points at a JSON file with
"model" / "synth" override sections; CROSSTRAJ_DATA_DIR sets the default
service data directory.
"""

from __future__ import annotations

import json
import logging
import os
import socket
import tempfile
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np

from . import pipeline, synth
from .errors import CrosstrajError

logger = logging.getLogger(__name__)

DATA_DIR_ENV = "CROSSTRAJ_DATA_DIR"


def _echo(ctx, result: dict, text_lines) -> None:
    if ctx.obj["format"] == "json":
        click.echo(json.dumps(result, sort_keys=True, default=str))
    else:
        for line in text_lines:
            click.echo(line)


def _config_section(ctx, name: str) -> dict:
    return dict(ctx.obj["config"].get(name, {}))


def _fail(exc: Exception) -> None:
    raise click.ClickException(str(exc))


@click.group()
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True, help="Output format.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON file with 'model' / 'synth' override sections.")
@click.option("-v", "--verbose", is_flag=True, help="Enable info-level logging.")
@click.pass_context
def main(ctx, fmt, config_path, verbose):
    """Cross-sample developmental trajectory toolkit."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    config = {}
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise click.ClickException(f"{config_path} must hold a JSON object")
    ctx.obj = {"format": fmt, "config": config}


@main.command("synth")
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--stages", type=int, default=3, show_default=True)
@click.option("--samples-per-stage", type=int, default=2, show_default=True)
@click.option("--types", "n_types", type=int, default=6, show_default=True)
@click.option("--cells", type=int, default=200, show_default=True, help="Cells per population.")
@click.pass_context
def synth_cmd(ctx, out_dir, seed, stages, samples_per_stage, n_types, cells):
    """Generate a planted-lineage dataset with ground-truth edges."""
    overrides = _config_section(ctx, "synth")
    overrides.update(
        {
            "seed": seed,
            "n_stages": stages,
            "samples_per_stage": samples_per_stage,
            "n_types": n_types,
            "cells_per_population": cells,
        }
    )
    base = asdict(synth.SynthConfig())
    unknown = set(overrides) - set(base)
    if unknown:
        raise click.ClickException(f"unknown synth config keys: {sorted(unknown)}")
    base.update(overrides)
    base["stage_shift"] = tuple(base["stage_shift"])
    try:
        result = synth.synthesize(out_dir, synth.SynthConfig(**base))
    except CrosstrajError as exc:
        _fail(exc)
    summary = {
        "root": result.root,
        "n_samples": len(result.sample_ids),
        "n_nodes": len(result.node_ids),
        "n_truth_edges": len(result.truth_edges),
        "seed": seed,
    }
    _echo(
        ctx,
        summary,
        [
            f"wrote dataset to {result.root}",
            f"samples: {len(result.sample_ids)}  populations: {len(result.node_ids)}  truth edges: {len(result.truth_edges)}",
        ],
    )


@main.command("ingest")
@click.argument("data_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default="graph.json", show_default=True)
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), default=None, help="Gene embedding table (gene_id + 1024 values per line); hashed fallback otherwise.")
@click.option("--min-cells", type=int, default=3, show_default=True)
@click.option("--n-degs", type=int, default=20, show_default=True)
@click.pass_context
def ingest_cmd(ctx, data_dir, out_path, embeddings, min_cells, n_degs):
    """Load a dataset, build population nodes, write the graph payload."""
    try:
        result = pipeline.run_ingest(data_dir, out_path, embeddings, min_cells, n_degs)
    except CrosstrajError as exc:
        _fail(exc)
    _echo(
        ctx,
        result,
        [
            f"wrote {result['graph']}",
            f"samples: {result['n_samples']}  nodes: {result['n_nodes']}  cells: {result['n_cells']}  embeddings: {result['embeddings']}",
        ],
    )


@main.command("train")
@click.option("--graph", "graph_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--edges", "edges_path", type=click.Path(exists=True, dir_okay=False), required=True, help="Positive edges, one 'src<TAB>dst' per line.")
@click.option("--out", "model_out", type=click.Path(dir_okay=False), default="model.ckpt", show_default=True)
@click.option("--report", "report_out", type=click.Path(dir_okay=False), default=None, help="Optional JSON training report path.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epochs", type=int, default=None, help="Override the configured epoch count.")
@click.option("--ablation", type=click.Choice(["none", "no_gat", "no_fusion"]), default="none", show_default=True)
@click.pass_context
def train_cmd(ctx, graph_path, edges_path, model_out, report_out, seed, epochs, ablation):
    """Train the link predictor on labeled positive edges."""
    overrides = _config_section(ctx, "model")
    if epochs is not None:
        overrides["epochs"] = epochs
    try:
        result = pipeline.run_train(
            graph_path,
            edges_path,
            model_out,
            report_out=report_out,
            config_overrides=overrides,
            ablation=ablation,
            seed=seed,
        )
    except CrosstrajError as exc:
        _fail(exc)
    _echo(
        ctx,
        result,
        [
            f"wrote {result['model']} ({result['n_params']} parameters)",
            f"threshold: {result['threshold']:.2f}  val acc: {result['val_balanced_acc']:.4f}  test acc: {result['test_balanced_acc']:.4f}",
            f"final train loss: {result['final_train_loss']:.6f}  wall time: {result['wall_time_s']:.1f}s",
        ],
    )


@main.command("predict")
@click.option("--graph", "graph_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default="predictions.json", show_default=True)
@click.option("--threshold", type=float, default=None, help="Override the stored decision threshold.")
@click.pass_context
def predict_cmd(ctx, graph_path, model_path, out_path, threshold):
    """Score admissible node pairs and keep those above the threshold."""
    try:
        result = pipeline.run_predict(graph_path, model_path, out_path, threshold)
    except CrosstrajError as exc:
        _fail(exc)
    _echo(
        ctx,
        result,
        [f"wrote {result['predictions']}: {result['n_edges']} edges at threshold {result['threshold']:.2f}"],
    )


@main.command("paths")
@click.option("--graph", "graph_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--predictions", "predictions_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default="paths.json", show_default=True)
@click.option("--max-len", type=int, default=None, help="Longest chain length; defaults to the stage count.")
@click.option("--top-fraction", type=float, default=0.15, show_default=True)
@click.pass_context
def paths_cmd(ctx, graph_path, predictions_path, out_path, max_len, top_fraction):
    """Group predicted edges into typed paths and cut the top slice."""
    try:
        result = pipeline.run_paths(graph_path, predictions_path, out_path, max_len, top_fraction)
    except CrosstrajError as exc:
        _fail(exc)
    _echo(
        ctx,
        result,
        [f"wrote {result['paths']}: {result['n_paths']} paths, top slice {result['n_top']} (max frequency {result['max_frequency']})"],
    )


@main.command("summarize")
@click.option("--graph", "graph_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--paths", "paths_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default="summaries.json", show_default=True)
@click.option("--core", "core_type", default=None, help="Cell type anchoring the shared coordinate frame.")
@click.option("--ids", default=None, help="Comma-separated path ids; defaults to the top slice.")
@click.pass_context
def summarize_cmd(ctx, graph_path, paths_path, out_path, core_type, ids):
    """Compute contour/direction summaries for selected paths."""
    path_ids = [p for p in ids.split(",") if p] if ids else None
    try:
        result = pipeline.run_summarize(graph_path, paths_path, out_path, core_type, path_ids)
    except CrosstrajError as exc:
        _fail(exc)
    _echo(ctx, result, [f"wrote {result['summaries']} for {result['n_paths']} paths"])


@main.command("enrich")
@click.option("--graph", "graph_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--paths", "paths_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--trajectory", "trajectory_id", required=True, help="Trajectory id, e.g. 'A>B>C#0'.")
@click.option("--obo", "obo_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--gaf", "gaf_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default="enrichment.json", show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.pass_context
def enrich_cmd(ctx, graph_path, paths_path, trajectory_id, obo_path, gaf_path, out_path, alpha):
    """Term over-representation for one trajectory's gene set."""
    try:
        result = pipeline.run_enrich(
            graph_path, paths_path, trajectory_id, obo_path, gaf_path, out_path, alpha
        )
    except CrosstrajError as exc:
        _fail(exc)
    _echo(
        ctx,
        result,
        [
            f"wrote {result['enrichment']}: {result['n_terms']} terms, {result['n_significant']} significant",
            f"top term: {result['top_term']}",
        ],
    )


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True, help="0 binds an ephemeral port.")
@click.option("--data-dir", default=None, help=f"Project root (default ${DATA_DIR_ENV} or ./crosstraj_data).")
@click.option("--ui-dir", type=click.Path(exists=True, file_okay=False), default=None, help="Static frontend bundle to serve at /.")
@click.pass_context
def serve_cmd(ctx, host, port, data_dir, ui_dir):
    """Run the exploration service."""
    import uvicorn

    from .service import create_app

    data_dir = data_dir or os.environ.get(DATA_DIR_ENV) or "./crosstraj_data"
    app = create_app(data_dir, ui_dir=ui_dir)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((host, port))
    bound_port = sock.getsockname()[1]
    click.echo(f"serving on http://{host}:{bound_port} (data dir: {data_dir})")
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])


@main.command("eval")
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False), default=None, help="Existing planted dataset; otherwise datasets are generated per seed.")
@click.option("--seeds", default="0,1,2,3,4", show_default=True, help="Comma-separated dataset/training seeds.")
@click.option("--epochs", type=int, default=None)
@click.option("--ablation", type=click.Choice(["none", "no_gat", "no_fusion"]), default="none", show_default=True)
@click.option("--cells", type=int, default=200, show_default=True)
@click.pass_context
def eval_cmd(ctx, data_dir, seeds, epochs, ablation, cells):
    """Planted-lineage recovery table: per-seed accuracy and thresholds."""
    overrides = _config_section(ctx, "model")
    if epochs is not None:
        overrides["epochs"] = epochs
    seed_list = [int(s) for s in seeds.split(",") if s != ""]
    rows = []
    try:
        with tempfile.TemporaryDirectory(prefix="crosstraj-eval-") as tmp:
            for seed in seed_list:
                if data_dir is None:
                    root = Path(tmp) / f"seed{seed}"
                    synth.synthesize(root, synth.SynthConfig(seed=seed, cells_per_population=cells))
                else:
                    root = Path(data_dir)
                rows.append(
                    pipeline.evaluate_on_planted(
                        root, config_overrides=overrides, ablation=ablation, seed=seed
                    )
                )
    except CrosstrajError as exc:
        _fail(exc)

    mean_acc = float(np.mean([r["test_balanced_acc"] for r in rows]))
    result = {"rows": rows, "mean_test_balanced_acc": mean_acc, "ablation": ablation}
    lines = [f"{'seed':>6} {'threshold':>10} {'val acc':>9} {'test acc':>9} {'time':>7}"]
    for r in rows:
        lines.append(
            f"{r['seed']:>6} {r['threshold']:>10.2f} {r['val_balanced_acc']:>9.4f} "
            f"{r['test_balanced_acc']:>9.4f} {r['wall_time_s']:>6.1f}s"
        )
    lines.append(f"mean test balanced ACC: {mean_acc:.4f} (ablation: {ablation})")
    lines.append("threshold table (last seed): " + ", ".join(
        f"{t:.2f}:{'-' if p is None else format(p, '.3f')}" for t, p in rows[-1]["threshold_table"]
    ))
    _echo(ctx, result, lines)


if __name__ == "__main__":
    main(prog_name="crosstraj")
