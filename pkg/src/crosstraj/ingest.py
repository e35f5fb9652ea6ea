"""Dataset loading, normalization, DEG ranking and node feature assembly.

Dataset layout on disk::

    <root>/manifest.json              {"sample_id": stage_int, ...}
    <root>/<sample_id>/matrix.csv     rows=cells, first column cell_id,
                                      remaining columns one per gene
    <root>/<sample_id>/meta.csv       columns cell_id, x, y, cell_type

Embedding table: one record per line, ``gene_id`` followed by 1024
space-separated reals.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import FormatError, ValidationError

logger = logging.getLogger(__name__)

LIBRARY_SIZE = 10_000.0
EMBED_DIM = 1024
FEATURE_DIM = 2048
N_DEGS = 20
MIN_CELLS = 3
HIST_SIDE = 31

META_COLUMNS = ("cell_id", "x", "y", "cell_type")


@dataclass
class Cell:
    cell_id: str
    sample_id: str
    cell_type: str
    x: float
    y: float
    expression: Dict[str, float]


@dataclass
class Sample:
    sample_id: str
    stage: int
    cells: List[Cell]
    normalized: bool = False


@dataclass
class PopulationNode:
    """One (sample, cell_type) group with its 2048-d feature vector."""

    node_id: str
    sample_id: str
    stage: int
    cell_type: str
    cell_indices: List[int]
    degs: List[Tuple[str, float, float]]  # (gene_id, score, p), score-descending
    features: np.ndarray
    centroid: Tuple[float, float]
    count: int

    def coords(self, sample: Sample) -> np.ndarray:
        return np.array(
            [(sample.cells[i].x, sample.cells[i].y) for i in self.cell_indices],
            dtype=np.float64,
        )


class GeneEmbeddingTable:
    """gene_id -> 1024-d vector; either file-loaded or a hash fallback.

    The fallback deterministically derives a unit vector from the gene id, so
    tests and the synthetic pipeline run without any external model output.
    Unknown genes fail loudly unless the fallback is active.
    """

    def __init__(self, vectors: Optional[Dict[str, np.ndarray]] = None, seed: int = 0):
        self._vectors = vectors
        self._cache: Dict[str, np.ndarray] = {}
        self._seed = seed
        self.provenance = "file-loaded" if vectors is not None else "fallback"

    @classmethod
    def load(cls, path: str | Path) -> "GeneEmbeddingTable":
        vectors: Dict[str, np.ndarray] = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != EMBED_DIM + 1:
                    raise FormatError(
                        f"{path}:{lineno}: expected gene_id + {EMBED_DIM} values, got {len(parts) - 1}"
                    )
                vectors[parts[0]] = np.array([float(v) for v in parts[1:]], dtype=np.float64)
        return cls(vectors)

    def lookup(self, gene_id: str) -> np.ndarray:
        if self._vectors is not None:
            try:
                return self._vectors[gene_id]
            except KeyError:
                raise KeyError(f"gene {gene_id!r} missing from embedding table") from None
        vec = self._cache.get(gene_id)
        if vec is None:
            digest = hashlib.sha256(f"{self._seed}:{gene_id}".encode()).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            vec = rng.standard_normal(EMBED_DIM)
            vec /= np.linalg.norm(vec)
            self._cache[gene_id] = vec
        return vec

    def __contains__(self, gene_id: str) -> bool:
        if self._vectors is None:
            return True
        return gene_id in self._vectors


# ---------------------------------------------------------------------------
# Loading


def load_dataset(root_path: str | Path) -> List[Sample]:
    """Read every sample directory listed in <root>/manifest.json."""
    root = Path(root_path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise FormatError(f"missing manifest: {manifest_path}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if not isinstance(manifest, dict) or not manifest:
        raise FormatError(f"{manifest_path} must map sample_id -> stage")

    samples = []
    for sample_id in sorted(manifest):
        stage = manifest[sample_id]
        if not isinstance(stage, int) or stage < 0:
            raise FormatError(f"sample {sample_id!r}: stage must be a non-negative integer")
        samples.append(_load_sample(root / sample_id, sample_id, stage))
    return samples


def _load_sample(sample_dir: Path, sample_id: str, stage: int) -> Sample:
    matrix_path = sample_dir / "matrix.csv"
    meta_path = sample_dir / "meta.csv"
    for p in (matrix_path, meta_path):
        if not p.exists():
            raise FormatError(f"sample {sample_id!r}: missing {p.name}")

    meta = pd.read_csv(meta_path, dtype=str)
    missing = [c for c in META_COLUMNS if c not in meta.columns]
    if missing:
        raise FormatError(f"sample {sample_id!r}: meta.csv missing column {missing[0]!r}")

    matrix = pd.read_csv(matrix_path)
    if matrix.columns[0] != "cell_id":
        raise FormatError(f"sample {sample_id!r}: matrix.csv first column must be cell_id")
    genes = list(matrix.columns[1:])
    expr_by_cell: Dict[str, Dict[str, float]] = {}
    values = matrix[genes].to_numpy(dtype=np.float64)
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise FormatError(f"sample {sample_id!r}: expression values must be finite and >= 0")
    for row_idx, cell_id in enumerate(matrix["cell_id"].astype(str)):
        row = values[row_idx]
        nz = np.nonzero(row)[0]
        expr_by_cell[cell_id] = {genes[j]: float(row[j]) for j in nz}

    cells = []
    for row_idx, row in enumerate(meta.itertuples(index=False)):
        cell_id = str(row.cell_id)
        try:
            x = float(row.x)
            y = float(row.y)
        except (TypeError, ValueError):
            raise FormatError(
                f"sample {sample_id!r}: meta.csv row {row_idx}: cannot parse coordinates"
            ) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise FormatError(f"sample {sample_id!r}: meta.csv row {row_idx}: non-finite coordinate")
        cell_type = row.cell_type
        if not isinstance(cell_type, str) or not cell_type or cell_type == "nan":
            raise FormatError(f"sample {sample_id!r}: meta.csv row {row_idx}: empty cell_type")
        if cell_id not in expr_by_cell:
            raise FormatError(f"sample {sample_id!r}: cell {cell_id!r} absent from matrix.csv")
        cells.append(Cell(cell_id, sample_id, cell_type, x, y, expr_by_cell[cell_id]))

    return Sample(sample_id=sample_id, stage=stage, cells=cells)


# ---------------------------------------------------------------------------
# Normalization


def normalize_expression(samples: Sequence[Sample]) -> List[Sample]:
    """Counts-per-10,000 then log1p, once per dataset.

    Cells with zero total count are dropped with a logged warning. Callers
    must not normalize twice; the per-sample ``normalized`` flag tracks this.
    """
    out = []
    for sample in samples:
        if sample.normalized:
            raise ValidationError(f"sample {sample.sample_id!r} is already normalized")
        kept = []
        for cell in sample.cells:
            total = sum(cell.expression.values())
            if total <= 0:
                logger.warning(
                    "dropping cell %s in sample %s: zero total count", cell.cell_id, sample.sample_id
                )
                continue
            scale = LIBRARY_SIZE / total
            expr = {g: math.log1p(v * scale) for g, v in cell.expression.items()}
            kept.append(Cell(cell.cell_id, cell.sample_id, cell.cell_type, cell.x, cell.y, expr))
        out.append(Sample(sample.sample_id, sample.stage, kept, normalized=True))
    return out


# ---------------------------------------------------------------------------
# DEG ranking (one-sided Wilcoxon rank-sum, target > background)

_EXACT_MAX_N = 20


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_rank_p(ranks: np.ndarray, n_target: int, observed: float) -> float:
    """P[rank sum of a random size-n_target subset >= observed].

    Dynamic program over doubled midranks (integers), independent of the
    brute-force enumeration used as the test oracle.
    """
    doubled = np.rint(ranks * 2).astype(int)
    total = int(doubled.sum())
    # counts[k][s] = number of k-subsets with doubled-rank sum s
    counts = [[0] * (total + 1) for _ in range(n_target + 1)]
    counts[0][0] = 1
    for r in doubled:
        for k in range(n_target - 1, -1, -1):
            row = counts[k]
            nxt = counts[k + 1]
            for s in range(total - r, -1, -1):
                if row[s]:
                    nxt[s + r] += row[s]
    threshold = int(round(observed * 2))
    favourable = sum(c for s, c in enumerate(counts[n_target]) if s >= threshold)
    return favourable / math.comb(len(ranks), n_target)


def rank_sum_test(target: np.ndarray, background: np.ndarray) -> Tuple[float, float]:
    """One-sided rank-sum evidence that target values are higher.

    Returns (z_score, p_value). Exact permutation p for small pooled sizes,
    tie-corrected normal approximation otherwise.
    """
    target = np.asarray(target, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    n_t, n_b = len(target), len(background)
    if n_t == 0 or n_b == 0:
        raise ValidationError("rank-sum test needs non-empty groups")
    pooled = np.concatenate([target, background])
    ranks = _midranks(pooled)
    rank_sum = float(ranks[:n_t].sum())
    mean = n_t * (n_t + n_b + 1) / 2.0

    n = n_t + n_b
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts)).sum())
    var = n_t * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return 0.0, 1.0
    z = (rank_sum - mean) / math.sqrt(var)

    if n <= _EXACT_MAX_N:
        p = _exact_rank_p(ranks, n_t, rank_sum)
    else:
        # continuity-corrected upper tail
        z_cc = (rank_sum - mean - 0.5) / math.sqrt(var)
        p = 0.5 * math.erfc(z_cc / math.sqrt(2.0))
    return z, min(max(p, 0.0), 1.0)


def rank_degs(
    target_cells: Sequence[Cell],
    background_cells: Sequence[Cell],
    k: int = N_DEGS,
) -> List[Tuple[str, float, float]]:
    """Top-k genes with one-sided rank-sum evidence of higher target expression.

    Genes constant across both groups carry no information and are excluded.
    """
    if not target_cells or not background_cells:
        raise ValidationError("rank_degs requires non-empty target and background")
    target_ids = {id(c) for c in target_cells}
    if any(id(c) in target_ids for c in background_cells):
        raise ValidationError("target and background cells must be disjoint")

    genes = set()
    for cell in target_cells:
        genes.update(cell.expression)
    for cell in background_cells:
        genes.update(cell.expression)

    t_vals = {g: np.array([c.expression.get(g, 0.0) for c in target_cells]) for g in genes}
    b_vals = {g: np.array([c.expression.get(g, 0.0) for c in background_cells]) for g in genes}

    scored = []
    for gene in genes:
        tv, bv = t_vals[gene], b_vals[gene]
        if tv.min() == tv.max() == bv.min() == bv.max():
            continue
        z, p = rank_sum_test(tv, bv)
        scored.append((gene, z, p))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


# ---------------------------------------------------------------------------
# Feature assembly


def population_gene_feature(
    degs: Sequence[Tuple[str, float, float]] | Sequence[str],
    table: GeneEmbeddingTable,
) -> np.ndarray:
    """Unweighted mean of the DEG embedding vectors."""
    gene_ids = [d[0] if isinstance(d, tuple) else d for d in degs]
    if not gene_ids:
        raise ValidationError("population_gene_feature requires at least one DEG")
    unresolved = [g for g in gene_ids if g not in table]
    resolved = [g for g in gene_ids if g in table]
    if not resolved:
        raise ValidationError(f"no DEG resolvable in embedding table: {unresolved}")
    vectors = np.stack([table.lookup(g) for g in resolved])
    return vectors.mean(axis=0)


def spatial_feature(coords: np.ndarray, dim: int = EMBED_DIM) -> np.ndarray:
    """Fixed-length spatial descriptor of a population's cell coordinates.

    Layout: [centroid x, centroid y, lambda1, lambda2, principal-axis angle,
    31x31 occupancy histogram (row-major, sums to 1), zero padding]. The
    histogram and eigen quantities are computed on centered coordinates, so
    translation moves only the centroid slots.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ValidationError("coords must be an N x 2 array")
    if coords.shape[0] < MIN_CELLS:
        raise ValidationError(f"spatial_feature needs >= {MIN_CELLS} cells, got {coords.shape[0]}")

    centroid = coords.mean(axis=0)
    centered = coords - centroid
    cov = centered.T @ centered / coords.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    lam1, lam2 = float(eigvals[1]), float(eigvals[0])
    principal = eigvecs[:, 1]
    angle = math.atan2(principal[1], principal[0]) % math.pi

    hist = _occupancy_histogram(centered)

    out = np.zeros(dim, dtype=np.float64)
    out[0:2] = centroid
    out[2] = lam1
    out[3] = max(lam2, 0.0)
    out[4] = angle
    out[5 : 5 + HIST_SIDE * HIST_SIDE] = hist
    return out


def _occupancy_histogram(centered: np.ndarray) -> np.ndarray:
    def axis_edges(values: np.ndarray) -> np.ndarray:
        lo, hi = float(values.min()), float(values.max())
        if hi <= lo:
            lo, hi = lo - 0.5, lo + 0.5
        return np.linspace(lo, hi, HIST_SIDE + 1)

    hist, _, _ = np.histogram2d(
        centered[:, 0], centered[:, 1], bins=[axis_edges(centered[:, 0]), axis_edges(centered[:, 1])]
    )
    return (hist / centered.shape[0]).reshape(-1)


def build_population_nodes(
    samples: Sequence[Sample],
    table: GeneEmbeddingTable,
    min_cells: int = MIN_CELLS,
    n_degs: int = N_DEGS,
) -> List[PopulationNode]:
    """One node per (sample, cell_type) with >= min_cells members.

    DEGs are ranked against the other cells of the same sample. Output order
    is sorted by (sample_id, cell_type) so repeated runs are byte-identical.
    """
    nodes = []
    for sample in samples:
        if not sample.normalized:
            raise ValidationError(f"sample {sample.sample_id!r} must be normalized first")
        by_type: Dict[str, List[int]] = {}
        for idx, cell in enumerate(sample.cells):
            by_type.setdefault(cell.cell_type, []).append(idx)
        for cell_type in sorted(by_type):
            indices = by_type[cell_type]
            if len(indices) < min_cells:
                logger.warning(
                    "skipping population %s/%s: %d cells < min_cells=%d",
                    sample.sample_id,
                    cell_type,
                    len(indices),
                    min_cells,
                )
                continue
            members = [sample.cells[i] for i in indices]
            background = [c for c in sample.cells if c.cell_type != cell_type]
            if not background:
                logger.warning(
                    "skipping population %s/%s: no background cells in sample",
                    sample.sample_id,
                    cell_type,
                )
                continue
            degs = rank_degs(members, background, k=n_degs)
            if not degs:
                logger.warning("skipping population %s/%s: no informative genes", sample.sample_id, cell_type)
                continue
            gene_feat = population_gene_feature(degs, table)
            coords = np.array([(c.x, c.y) for c in members], dtype=np.float64)
            spat_feat = spatial_feature(coords)
            features = np.concatenate([gene_feat, spat_feat])
            assert features.shape[0] == FEATURE_DIM
            centroid = coords.mean(axis=0)
            nodes.append(
                PopulationNode(
                    node_id=f"{sample.sample_id}::{cell_type}",
                    sample_id=sample.sample_id,
                    stage=sample.stage,
                    cell_type=cell_type,
                    cell_indices=indices,
                    degs=degs,
                    features=features,
                    centroid=(float(centroid[0]), float(centroid[1])),
                    count=len(indices),
                )
            )
    nodes.sort(key=lambda n: (n.sample_id, n.cell_type))
    return nodes
