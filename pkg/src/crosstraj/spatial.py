"""Density grids, coverage contours, boundaries, similarity and direction.

The per-population pipeline: Gaussian KDE on a 100x100 grid, mass-coverage
levels (94% inner / 98% outer), marching-squares contour extraction,
Douglas-Peucker simplification, axis projections, plus sample boundaries via
alpha shapes. Contour similarity is the reciprocal of mean bidirectional
nearest-point distances; direction summaries come from the covariance
eigendecomposition of the raw cell coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .errors import ValidationError

GRID_SIZE = 100
HIST_BINS = 100
OUTER_COVERAGE = 0.98
INNER_COVERAGE = 0.94
SIM_EPSILON = 1e-6
DEFAULT_SIMPLIFY_CELLS = 0.5

Bounds = Tuple[float, float, float, float]  # xmin, xmax, ymin, ymax
Polygon = np.ndarray  # (k, 2), closed: first row == last row


@dataclass
class DensityGrid:
    bounds: Bounds
    values: np.ndarray  # (nx, ny), values[i, j] at (x_centers[i], y_centers[j])
    bandwidth: Tuple[float, float]

    @property
    def cell_size(self) -> Tuple[float, float]:
        xmin, xmax, ymin, ymax = self.bounds
        return (xmax - xmin) / self.values.shape[0], (ymax - ymin) / self.values.shape[1]

    @property
    def x_centers(self) -> np.ndarray:
        xmin, xmax, _, _ = self.bounds
        dx = (xmax - xmin) / self.values.shape[0]
        return xmin + dx * (np.arange(self.values.shape[0]) + 0.5)

    @property
    def y_centers(self) -> np.ndarray:
        _, _, ymin, ymax = self.bounds
        dy = (ymax - ymin) / self.values.shape[1]
        return ymin + dy * (np.arange(self.values.shape[1]) + 0.5)

    def total_mass(self) -> float:
        dx, dy = self.cell_size
        return float(self.values.sum() * dx * dy)


@dataclass
class ContourSet:
    outer: List[Polygon]  # 98% coverage
    inner: List[Polygon]  # 94% coverage
    x_hist: np.ndarray  # 100 bins, sums to 1
    y_hist: np.ndarray


@dataclass
class DirectionSummary:
    theta: float  # [0, 2*pi)
    r_std: float  # sqrt(lambda2 / (lambda1 + lambda2)) in [0, 1/sqrt(2)]
    lambda1: float
    lambda2: float
    centroid: Tuple[float, float]
    mean_count: float


@dataclass
class SimilarityScore:
    d_ab: float
    d_ba: float
    d_sym: float


# ---------------------------------------------------------------------------
# Density estimation


def scott_bandwidth(values: np.ndarray, axis_range: float) -> float:
    n = len(values)
    std = float(np.std(values, ddof=1)) if n > 1 else 0.0
    h = std * n ** (-1.0 / 6.0)
    floor = 0.01 * axis_range
    return max(h, floor, 1e-12)


def density_grid(coords: np.ndarray, bounds: Bounds, grid_size: int = GRID_SIZE) -> DensityGrid:
    """Gaussian KDE evaluated at grid cell centers; Scott's rule per axis."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape[0] < 3:
        raise ValidationError("density grid needs >= 3 points")
    xmin, xmax, ymin, ymax = bounds
    if xmax <= xmin or ymax <= ymin:
        raise ValidationError("bounds must span a positive area")
    if (
        coords[:, 0].min() < xmin
        or coords[:, 0].max() > xmax
        or coords[:, 1].min() < ymin
        or coords[:, 1].max() > ymax
    ):
        raise ValidationError("bounds must cover all points")

    hx = scott_bandwidth(coords[:, 0], xmax - xmin)
    hy = scott_bandwidth(coords[:, 1], ymax - ymin)
    dx = (xmax - xmin) / grid_size
    dy = (ymax - ymin) / grid_size
    gx = xmin + dx * (np.arange(grid_size) + 0.5)
    gy = ymin + dy * (np.arange(grid_size) + 0.5)
    values = kernels.kde_grid(coords[:, 0], coords[:, 1], gx, gy, hx, hy)
    return DensityGrid(bounds=tuple(bounds), values=values, bandwidth=(hx, hy))


def coverage_level(grid: DensityGrid, fraction: float) -> float:
    """Largest density level whose superlevel cells carry >= fraction of mass."""
    if not 0.0 < fraction < 1.0:
        raise ValidationError("fraction must be in (0, 1)")
    flat = np.sort(grid.values.reshape(-1))[::-1]
    cum = np.cumsum(flat)
    target = fraction * cum[-1]
    idx = int(np.searchsorted(cum, target))
    idx = min(idx, len(flat) - 1)
    return float(flat[idx])


# ---------------------------------------------------------------------------
# Marching squares

# Each case maps to (entry_edge, exit_edge) pairs; edges of a 2x2 cell are
# indexed 0=bottom(j), 1=right(i+1), 2=top(j+1), 3=left(i). Corner bit order:
# 1=(i,j), 2=(i+1,j), 4=(i+1,j+1), 8=(i,j+1).
_SEGMENT_TABLE: Dict[int, List[Tuple[int, int]]] = {
    0: [],
    1: [(3, 0)],
    2: [(0, 1)],
    3: [(3, 1)],
    4: [(1, 2)],
    5: [],  # saddle, resolved at runtime
    6: [(0, 2)],
    7: [(3, 2)],
    8: [(2, 3)],
    9: [(2, 0)],
    10: [],  # saddle
    11: [(2, 1)],
    12: [(1, 3)],
    13: [(1, 0)],
    14: [(0, 3)],
    15: [],
}


def extract_contours(grid: DensityGrid, level: float) -> List[Polygon]:
    """Closed iso-polygons at the given level via marching squares.

    The value field is padded with one ring below any positive level so every
    contour closes. Vertices are linearly interpolated on lattice edges and
    returned in data coordinates.
    """
    if level <= 0:
        raise ValidationError("level must be positive")
    values = grid.values
    if level > values.max():
        return []

    nx, ny = values.shape
    padded = np.full((nx + 2, ny + 2), min(0.0, values.min()) - 1.0, dtype=np.float64)
    padded[1:-1, 1:-1] = values

    dxc, dyc = grid.cell_size
    x0 = grid.bounds[0] + 0.5 * dxc - dxc  # lattice index 0 = pad ring center
    y0 = grid.bounds[2] + 0.5 * dyc - dyc

    def lattice_to_data(fi: float, fj: float) -> Tuple[float, float]:
        return (x0 + fi * dxc, y0 + fj * dyc)

    # Vertex per crossed lattice edge, computed once so shared endpoints are
    # bitwise identical and chaining can key on edge ids.
    verts: Dict[Tuple[int, int, str], Tuple[float, float]] = {}

    def edge_vertex(i: int, j: int, orient: str) -> Tuple[int, int, str]:
        key = (i, j, orient)
        if key not in verts:
            v0 = padded[i, j]
            v1 = padded[i + 1, j] if orient == "h" else padded[i, j + 1]
            t = (level - v0) / (v1 - v0)
            if orient == "h":
                verts[key] = lattice_to_data(i + t, j)
            else:
                verts[key] = lattice_to_data(i, j + t)
        return key

    def cell_edge_key(i: int, j: int, edge: int) -> Tuple[int, int, str]:
        if edge == 0:
            return edge_vertex(i, j, "h")
        if edge == 1:
            return edge_vertex(i + 1, j, "v")
        if edge == 2:
            return edge_vertex(i, j + 1, "h")
        return edge_vertex(i, j, "v")

    segments: List[Tuple[Tuple[int, int, str], Tuple[int, int, str]]] = []
    for i in range(nx + 1):
        for j in range(ny + 1):
            corners = (padded[i, j], padded[i + 1, j], padded[i + 1, j + 1], padded[i, j + 1])
            case = 0
            if corners[0] >= level:
                case |= 1
            if corners[1] >= level:
                case |= 2
            if corners[2] >= level:
                case |= 4
            if corners[3] >= level:
                case |= 8
            if case in (0, 15):
                continue
            if case in (5, 10):
                center_above = sum(corners) / 4.0 >= level
                if case == 5:
                    pairs = [(3, 2), (1, 0)] if center_above else [(3, 0), (1, 2)]
                else:
                    pairs = [(0, 3), (2, 1)] if center_above else [(0, 1), (2, 3)]
            else:
                pairs = _SEGMENT_TABLE[case]
            for a, b in pairs:
                segments.append((cell_edge_key(i, j, a), cell_edge_key(i, j, b)))

    return _chain_segments(segments, verts)


def _chain_segments(segments, verts) -> List[Polygon]:
    nxt: Dict[Tuple[int, int, str], Tuple[int, int, str]] = {}
    for a, b in segments:
        nxt[a] = b
    polygons = []
    visited = set()
    for start in list(nxt):
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        current = nxt[start]
        while current != start and current not in visited:
            chain.append(current)
            visited.add(current)
            current = nxt.get(current)
            if current is None:
                break
        if current == start and len(chain) >= 3:
            pts = [verts[k] for k in chain] + [verts[start]]
            polygons.append(np.array(pts, dtype=np.float64))
    polygons.sort(key=lambda p: (p[:, 0].min(), p[:, 1].min()))
    return polygons


# ---------------------------------------------------------------------------
# Simplification


def simplify_contour(polygon: Polygon, epsilon: float) -> Polygon:
    """Douglas-Peucker with closure preserved; output vertices subset of input."""
    polygon = np.asarray(polygon, dtype=np.float64)
    if polygon.shape[0] < 4 or not np.array_equal(polygon[0], polygon[-1]):
        raise ValidationError("expected a closed polygon with >= 4 vertices")
    if epsilon < 0:
        raise ValidationError("epsilon must be >= 0")
    if epsilon == 0:
        return polygon.copy()

    ring = polygon[:-1]
    # anchor at the vertex farthest from ring[0] to split the ring into two chains
    dists = np.hypot(*(ring - ring[0]).T)
    pivot = int(np.argmax(dists))
    if pivot == 0:
        return polygon.copy()
    first = _dp_chain(ring[: pivot + 1], epsilon)
    second = _dp_chain(np.vstack([ring[pivot:], ring[:1]]), epsilon)
    return np.vstack([first[:-1], second])


def _dp_chain(points: np.ndarray, epsilon: float) -> np.ndarray:
    if len(points) <= 2:
        return points
    start, end = points[0], points[-1]
    seg = end - start
    seg_len = np.hypot(*seg)
    if seg_len == 0:
        d = np.hypot(*(points[1:-1] - start).T)
    else:
        rel = points[1:-1] - start
        d = np.abs(seg[0] * rel[:, 1] - seg[1] * rel[:, 0]) / seg_len
    idx = int(np.argmax(d))
    if d[idx] > epsilon:
        left = _dp_chain(points[: idx + 2], epsilon)
        right = _dp_chain(points[idx + 1 :], epsilon)
        return np.vstack([left[:-1], right])
    return np.vstack([start, end])


# ---------------------------------------------------------------------------
# Projections


def axis_projection(coords: np.ndarray, bounds: Bounds, bins: int = HIST_BINS) -> Tuple[np.ndarray, np.ndarray]:
    """Frequency histograms of x and y over the bounds, each normalized to 1."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape[0] < 1:
        raise ValidationError("axis projection needs >= 1 point")
    xmin, xmax, ymin, ymax = bounds
    x_hist, _ = np.histogram(coords[:, 0], bins=bins, range=(xmin, xmax))
    y_hist, _ = np.histogram(coords[:, 1], bins=bins, range=(ymin, ymax))
    n = coords.shape[0]
    return x_hist / n, y_hist / n


# ---------------------------------------------------------------------------
# Alpha shape


def default_alpha(coords: np.ndarray) -> float:
    coords = np.asarray(coords, dtype=np.float64)
    spans = coords.max(axis=0) - coords.min(axis=0)
    diagonal = float(np.hypot(*spans))
    if diagonal <= 0:
        raise ValidationError("degenerate point set for alpha shape")
    return 2.0 / (0.1 * diagonal)


def alpha_shape(coords: np.ndarray, alpha: Optional[float] = None) -> List[Polygon]:
    """Concave boundary polygons: Delaunay triangles with circumradius < 1/alpha."""
    from scipy.spatial import Delaunay, QhullError

    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape[0] < 4:
        raise ValidationError("alpha shape needs >= 4 points")
    if alpha is None:
        alpha = default_alpha(coords)
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    try:
        tri = Delaunay(coords)
    except QhullError as exc:
        raise ValidationError(f"cannot triangulate points: {exc}") from None

    radius_cap = 1.0 / alpha
    boundary: Dict[Tuple[int, int], int] = {}
    for ia, ib, ic in tri.simplices:
        pa, pb, pc = coords[ia], coords[ib], coords[ic]
        a = float(np.hypot(*(pb - pc)))
        b = float(np.hypot(*(pa - pc)))
        c = float(np.hypot(*(pa - pb)))
        area2 = abs(float((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])))
        if area2 <= 0:
            continue
        circum_r = a * b * c / (2.0 * area2)
        if circum_r >= radius_cap:
            continue
        for u, v in ((ia, ib), (ib, ic), (ic, ia)):
            key = (min(u, v), max(u, v))
            boundary[key] = boundary.get(key, 0) + 1

    edges = [k for k, cnt in boundary.items() if cnt == 1]
    return _chain_boundary(coords, edges)


def _chain_boundary(coords: np.ndarray, edges: List[Tuple[int, int]]) -> List[Polygon]:
    adj: Dict[int, List[int]] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    remaining = {tuple(sorted(e)) for e in edges}
    polys = []
    while remaining:
        start_edge = min(remaining)
        remaining.discard(start_edge)
        start, current = start_edge
        loop = [start, current]
        while current != start:
            candidates = [
                w for w in sorted(adj.get(current, ())) if tuple(sorted((current, w))) in remaining
            ]
            if not candidates:
                break
            nxt = candidates[0]
            remaining.discard(tuple(sorted((current, nxt))))
            loop.append(nxt)
            current = nxt
        if current == start and len(loop) >= 4:
            polys.append(coords[np.array(loop)])
    polys.sort(key=lambda p: -_ring_area(p))
    return polys


def _ring_area(polygon: Polygon) -> float:
    x, y = polygon[:-1, 0], polygon[:-1, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def polygon_area(polygon: Polygon) -> float:
    return _ring_area(np.asarray(polygon, dtype=np.float64))


# ---------------------------------------------------------------------------
# Similarity


def contour_similarity(c1: np.ndarray, c2: np.ndarray) -> SimilarityScore:
    """Reciprocal mean bidirectional nearest-vertex distance between contours."""
    c1 = np.asarray(c1, dtype=np.float64).reshape(-1, 2)
    c2 = np.asarray(c2, dtype=np.float64).reshape(-1, 2)
    if c1.shape[0] == 0 or c2.shape[0] == 0:
        raise ValidationError("contours must have at least one vertex")
    d_ab, d_ba = kernels.min_dist_means(c1, c2)
    d_sym = 2.0 / (d_ab + d_ba + SIM_EPSILON)
    return SimilarityScore(d_ab=float(d_ab), d_ba=float(d_ba), d_sym=float(d_sym))


def column_similarity(selected: np.ndarray, column: Sequence[np.ndarray]) -> List[float]:
    """d_sym of the selected contour against each contour in the column."""
    return [contour_similarity(selected, other).d_sym for other in column]


# ---------------------------------------------------------------------------
# Direction


def direction_summary(
    coords: np.ndarray,
    counts_per_sample: Optional[Sequence[float]] = None,
    skew_tol: float = 1e-9,
) -> DirectionSummary:
    """Principal direction and stability ratio of a coordinate cloud.

    theta is the angle of the leading covariance eigenvector, oriented so the
    third central moment of the projections along it is >= 0; at a skewness
    tie the canonical half-plane angle in [0, pi) is used.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape[0] < 3:
        raise ValidationError("direction summary needs >= 3 points")
    centroid = coords.mean(axis=0)
    centered = coords - centroid
    cov = centered.T @ centered / coords.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    lam1, lam2 = float(eigvals[1]), float(max(eigvals[0], 0.0))
    if lam1 + lam2 <= 0:
        raise ValidationError("zero covariance: all points coincide")

    principal = eigvecs[:, 1]
    proj = centered @ principal
    scale = float(np.sqrt(lam1)) if lam1 > 0 else 1.0
    skew = float(np.mean((proj / scale) ** 3))
    if abs(skew) <= skew_tol:
        theta = math.atan2(principal[1], principal[0]) % math.pi
    else:
        if skew < 0:
            principal = -principal
        theta = math.atan2(principal[1], principal[0]) % (2.0 * math.pi)

    r_std = math.sqrt(lam2 / (lam1 + lam2))
    mean_count = float(np.mean(counts_per_sample)) if counts_per_sample is not None else float(coords.shape[0])
    return DirectionSummary(
        theta=float(theta),
        r_std=float(r_std),
        lambda1=lam1,
        lambda2=lam2,
        centroid=(float(centroid[0]), float(centroid[1])),
        mean_count=mean_count,
    )


# ---------------------------------------------------------------------------
# Composite per-population summary


def contour_set(
    coords: np.ndarray,
    bounds: Bounds,
    simplify_epsilon_cells: float = DEFAULT_SIMPLIFY_CELLS,
) -> ContourSet:
    """Full contour payload for one population: 98%/94% polygons + projections."""
    grid = density_grid(coords, bounds)
    dx, dy = grid.cell_size
    eps = simplify_epsilon_cells * 0.5 * (dx + dy)
    polys = {}
    for name, fraction in (("outer", OUTER_COVERAGE), ("inner", INNER_COVERAGE)):
        level = coverage_level(grid, fraction)
        polys[name] = [simplify_contour(p, eps) for p in extract_contours(grid, level)]
    x_hist, y_hist = axis_projection(coords, bounds)
    return ContourSet(outer=polys["outer"], inner=polys["inner"], x_hist=x_hist, y_hist=y_hist)
