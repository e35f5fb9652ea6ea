"""Synthetic datasets with a planted developmental lineage.

Cell types form parallel chains across stages (type at stage s+1 descends
from the chain's type at stage s). Each type carries a signature gene set;
a child keeps a fixed fraction of its parent's signature and adds fresh
genes. Cells draw Poisson counts (signature genes at a high rate), and
populations sit at chain-separated, stage-shifted spatial centroids so both
expression and geometry carry the lineage signal.

Everything funnels through one seeded generator and fixed orderings, so a
given seed always produces byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from .errors import ValidationError

TRUTH_FILENAME = "edges.tsv"
SYNTH_MANIFEST = "synth_manifest.json"
ONTOLOGY_FILENAME = "terms.obo"
ANNOTATIONS_FILENAME = "annotations.gaf"


@dataclass(frozen=True)
class SynthConfig:
    n_stages: int = 3
    samples_per_stage: int = 2
    n_types: int = 6
    cells_per_population: int = 200
    n_genes: int = 400
    signature_size: int = 20
    inherit_fraction: float = 0.6
    background_rate: float = 0.5
    signature_rate: float = 8.0
    chain_gap: float = 120.0
    stage_shift: Tuple[float, float] = (0.0, 50.0)
    drift_sigma: float = 10.0
    sample_jitter: float = 4.0
    cell_sigma: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if self.n_stages < 2:
            raise ValidationError("need at least 2 stages")
        if self.n_types % self.n_stages != 0:
            raise ValidationError("n_types must be divisible by n_stages")
        if self.signature_size < 2:
            raise ValidationError("signature_size must be >= 2")
        n_chains = self.n_types // self.n_stages
        fresh = self.signature_size - math.ceil(self.inherit_fraction * self.signature_size)
        needed = n_chains * (self.signature_size + fresh * (self.n_stages - 1))
        if self.n_genes < needed + 10:
            raise ValidationError(f"n_genes too small; need > {needed + 10}")


@dataclass
class SynthResult:
    root: str
    sample_ids: List[str]
    node_ids: List[str]
    truth_edges: List[Tuple[str, str]]
    lineage: Dict[str, str]  # child type -> parent type
    signatures: Dict[str, List[str]]


def _type_name(stage: int, chain: int, n_chains: int) -> str:
    return f"T{stage * n_chains + chain:02d}"


def synthesize(out_dir: str | Path, config: SynthConfig | None = None) -> SynthResult:
    """Write a full dataset plus planted-truth edges and a toy ontology."""
    config = config or SynthConfig()
    rng = np.random.default_rng(config.seed)
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)

    n_chains = config.n_types // config.n_stages
    genes = [f"G{i:04d}" for i in range(config.n_genes)]
    keep = math.ceil(config.inherit_fraction * config.signature_size)

    # signatures: chains allocate fresh genes from a shared pointer so sets
    # never collide across chains
    signatures: Dict[str, List[str]] = {}
    lineage: Dict[str, str] = {}
    next_free = 0

    def take(n: int) -> List[str]:
        nonlocal next_free
        block = genes[next_free : next_free + n]
        next_free += n
        return block

    for chain in range(n_chains):
        parent_type = _type_name(0, chain, n_chains)
        signatures[parent_type] = sorted(take(config.signature_size))
        for stage in range(1, config.n_stages):
            child_type = _type_name(stage, chain, n_chains)
            inherited_idx = rng.choice(config.signature_size, size=keep, replace=False)
            inherited = [signatures[parent_type][i] for i in sorted(inherited_idx)]
            fresh = take(config.signature_size - keep)
            signatures[child_type] = sorted(inherited + fresh)
            lineage[child_type] = parent_type
            parent_type = child_type

    # spatial layout: per-type centroid = chain anchor + per-stage shift + drift
    type_centroid: Dict[str, np.ndarray] = {}
    shift = np.asarray(config.stage_shift, dtype=np.float64)
    for chain in range(n_chains):
        pos = np.array([chain * config.chain_gap, 0.0])
        type_centroid[_type_name(0, chain, n_chains)] = pos.copy()
        for stage in range(1, config.n_stages):
            pos = pos + shift + np.array([rng.normal(0.0, config.drift_sigma), 0.0])
            type_centroid[_type_name(stage, chain, n_chains)] = pos.copy()

    manifest: Dict[str, int] = {}
    sample_ids: List[str] = []
    node_ids: List[str] = []
    for stage in range(config.n_stages):
        for rep in range(config.samples_per_stage):
            sample_id = f"st{stage}_r{rep}"
            sample_ids.append(sample_id)
            manifest[sample_id] = stage
            sample_dir = root / sample_id
            sample_dir.mkdir(exist_ok=True)

            rows_meta = []
            rows_expr = []
            cell_counter = 0
            for chain in range(n_chains):
                cell_type = _type_name(stage, chain, n_chains)
                node_ids.append(f"{sample_id}::{cell_type}")
                center = type_centroid[cell_type] + rng.normal(
                    0.0, config.sample_jitter, size=2
                )
                coords = center + rng.normal(
                    0.0, config.cell_sigma, size=(config.cells_per_population, 2)
                )
                rates = np.full(config.n_genes, config.background_rate)
                sig_idx = [genes.index(g) for g in signatures[cell_type]]
                rates[sig_idx] = config.signature_rate
                counts = rng.poisson(rates, size=(config.cells_per_population, config.n_genes))
                for i in range(config.cells_per_population):
                    cell_id = f"{sample_id}_c{cell_counter:04d}"
                    cell_counter += 1
                    rows_meta.append(
                        (cell_id, round(float(coords[i, 0]), 4), round(float(coords[i, 1]), 4), cell_type)
                    )
                    rows_expr.append((cell_id, counts[i]))

            meta = pd.DataFrame(rows_meta, columns=["cell_id", "x", "y", "cell_type"])
            meta.to_csv(sample_dir / "meta.csv", index=False, float_format="%.4f")
            expr = pd.DataFrame(
                np.vstack([r[1] for r in rows_expr]),
                columns=genes,
            )
            expr.insert(0, "cell_id", [r[0] for r in rows_expr])
            expr.to_csv(sample_dir / "matrix.csv", index=False)

    with open(root / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    # planted truth: within a chain, every population pair with increasing stage
    truth: List[Tuple[str, str]] = []
    by_type: Dict[str, List[str]] = {}
    for sample_id in sample_ids:
        stage = manifest[sample_id]
        for chain in range(n_chains):
            t = _type_name(stage, chain, n_chains)
            by_type.setdefault(t, []).append(sample_id)
    for chain in range(n_chains):
        chain_types = [_type_name(s, chain, n_chains) for s in range(config.n_stages)]
        for si in range(config.n_stages):
            for sj in range(si + 1, config.n_stages):
                for sa in by_type[chain_types[si]]:
                    for sb in by_type[chain_types[sj]]:
                        truth.append((f"{sa}::{chain_types[si]}", f"{sb}::{chain_types[sj]}"))
    truth.sort()
    with open(root / TRUTH_FILENAME, "w", encoding="utf-8") as fh:
        for src, dst in truth:
            fh.write(f"{src}\t{dst}\n")

    _write_ontology(root, signatures, lineage, n_chains, config)

    summary = {
        "config": asdict(config),
        "lineage": lineage,
        "signatures": signatures,
        "type_centroids": {t: [round(float(v), 4) for v in c] for t, c in type_centroid.items()},
        "samples": manifest,
        "n_truth_edges": len(truth),
    }
    with open(root / SYNTH_MANIFEST, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return SynthResult(
        root=str(root),
        sample_ids=sample_ids,
        node_ids=sorted(node_ids),
        truth_edges=truth,
        lineage=lineage,
        signatures={t: list(g) for t, g in signatures.items()},
    )


def _write_ontology(root: Path, signatures, lineage, n_chains: int, config: SynthConfig) -> None:
    """Toy term hierarchy: root <- chain programs <- per-type terms."""
    ROOT_TERM = "TRJ:0000001"
    lines = ["format-version: 1.2", "ontology: synthetic-lineage", ""]
    lines += ["[Term]", f"id: {ROOT_TERM}", "name: developmental lineage", "namespace: synthetic_process", ""]

    chain_term = {c: f"TRJ:{10 + c:07d}" for c in range(n_chains)}
    for c in range(n_chains):
        lines += [
            "[Term]",
            f"id: {chain_term[c]}",
            f"name: lineage {c} program",
            "namespace: synthetic_process",
            f"is_a: {ROOT_TERM} ! developmental lineage",
            "",
        ]
    type_term = {}
    for idx, cell_type in enumerate(sorted(signatures)):
        chain = (int(cell_type[1:])) % n_chains
        term_id = f"TRJ:{100 + idx:07d}"
        type_term[cell_type] = term_id
        lines += [
            "[Term]",
            f"id: {term_id}",
            f"name: {cell_type} identity program",
            "namespace: synthetic_process",
            f"is_a: {chain_term[chain]} ! lineage {chain} program",
            "",
        ]
    (root / ONTOLOGY_FILENAME).write_text("\n".join(lines), encoding="utf-8")

    gaf_rows = []
    for cell_type in sorted(signatures):
        for gene in signatures[cell_type]:
            gaf_rows.append(
                "\t".join(
                    [
                        "SYNTH",  # db
                        gene,  # object id
                        gene,  # symbol
                        "",  # qualifier
                        type_term[cell_type],  # term
                        "SYNTH:ref",  # reference
                        "IEA",  # evidence
                        "",
                        "P",
                        gene,
                        "",
                        "gene",
                        "taxon:0",
                        "20260101",
                        "SYNTH",
                    ]
                )
            )
    header = "!gaf-version: 2.2\n"
    (root / ANNOTATIONS_FILENAME).write_text(
        header + "\n".join(sorted(gaf_rows)) + "\n", encoding="utf-8"
    )


def load_edge_labels(path: str | Path) -> List[Tuple[str, str]]:
    """Read src<TAB>dst node-id pairs, one per line."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) != 2:
                raise ValidationError(f"{path} line {lineno}: expected two node ids")
            out.append((parts[0], parts[1]))
    if not out:
        raise ValidationError(f"no edges found in {path}")
    return out
