"""Density grids, contours, simplification, alpha shapes, similarity."""

import math

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from crosstraj import spatial
from crosstraj.errors import ValidationError


def _padded_bounds(coords, pad=1.5):
    xmin, ymin = coords.min(axis=0) - pad
    xmax, ymax = coords.max(axis=0) + pad
    return (xmin, xmax, ymin, ymax)


def _points_inside(polygon, points):
    """Even-odd rule membership for each point."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    for (x1, y1), (x2, y2) in zip(polygon[:-1], polygon[1:]):
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xint)
    return inside


def _segment_distance(point, a, b):
    ab = b - a
    t = np.clip(np.dot(point - a, ab) / max(np.dot(ab, ab), 1e-300), 0.0, 1.0)
    return float(np.hypot(*(point - (a + t * ab))))


# ---------------------------------------------------------------------------
# Density estimation


def test_density_grid_mass_and_layout():
    rng = np.random.default_rng(0)
    coords = rng.normal(size=(5000, 2))
    bounds = _padded_bounds(coords)
    grid = spatial.density_grid(coords, bounds)
    assert grid.values.shape == (spatial.GRID_SIZE, spatial.GRID_SIZE)
    assert grid.total_mass() == pytest.approx(1.0, abs=0.02)
    assert (grid.values >= 0).all()
    # centers sit mid-cell
    dx, dy = grid.cell_size
    assert grid.x_centers[0] == pytest.approx(bounds[0] + dx / 2)
    assert grid.y_centers[-1] == pytest.approx(bounds[3] - dy / 2)


def test_density_grid_peak_tracks_data():
    rng = np.random.default_rng(1)
    coords = rng.normal(loc=(4.0, -2.0), scale=0.5, size=(2000, 2))
    grid = spatial.density_grid(coords, _padded_bounds(coords))
    i, j = np.unravel_index(np.argmax(grid.values), grid.values.shape)
    assert grid.x_centers[i] == pytest.approx(4.0, abs=0.3)
    assert grid.y_centers[j] == pytest.approx(-2.0, abs=0.3)


def test_density_grid_validation():
    with pytest.raises(ValidationError):
        spatial.density_grid(np.zeros((2, 2)), (0, 1, 0, 1))
    coords = np.array([[0.0, 0.0], [0.5, 0.5], [2.0, 0.5]])
    with pytest.raises(ValidationError):
        spatial.density_grid(coords, (0, 1, 0, 1))  # point outside bounds
    with pytest.raises(ValidationError):
        spatial.density_grid(coords, (5, 5, 0, 1))  # empty span


def test_scott_bandwidth_floor():
    same = np.full(100, 3.0)
    assert spatial.scott_bandwidth(same, 10.0) == pytest.approx(0.1)  # 1% of range
    spread = np.linspace(0, 1, 100)
    expected = np.std(spread, ddof=1) * 100 ** (-1 / 6)
    assert spatial.scott_bandwidth(spread, 1.0) == pytest.approx(expected)


def test_coverage_level_mass_property():
    rng = np.random.default_rng(2)
    coords = np.vstack(
        [
            rng.normal(loc=(-2.0, 0.0), scale=0.6, size=(1500, 2)),
            rng.normal(loc=(2.5, 1.0), scale=0.4, size=(1500, 2)),
        ]
    )
    grid = spatial.density_grid(coords, _padded_bounds(coords))
    total = grid.values.sum()
    for fraction in (0.5, spatial.INNER_COVERAGE, spatial.OUTER_COVERAGE):
        level = spatial.coverage_level(grid, fraction)
        at_or_above = grid.values[grid.values >= level].sum()
        strictly_above = grid.values[grid.values > level].sum()
        assert at_or_above >= fraction * total - 1e-9
        assert strictly_above < fraction * total


def test_coverage_level_ordering():
    rng = np.random.default_rng(3)
    coords = rng.normal(size=(1000, 2))
    grid = spatial.density_grid(coords, _padded_bounds(coords))
    assert spatial.coverage_level(grid, 0.5) > spatial.coverage_level(grid, 0.98)


# ---------------------------------------------------------------------------
# Marching squares


def _radial_grid(r_levels=True):
    """values[i, j] = exp(-r^2 / 2) at cell centers over [-3, 3]^2."""
    bounds = (-3.0, 3.0, -3.0, 3.0)
    n = spatial.GRID_SIZE
    dx = 6.0 / n
    centers = -3.0 + dx * (np.arange(n) + 0.5)
    xx, yy = np.meshgrid(centers, centers, indexing="ij")
    values = np.exp(-(xx**2 + yy**2) / 2.0)
    return spatial.DensityGrid(bounds=bounds, values=values, bandwidth=(1.0, 1.0))


def test_contours_of_analytic_circle():
    grid = _radial_grid()
    radius = 1.2
    level = math.exp(-(radius**2) / 2.0)
    polys = spatial.extract_contours(grid, level)
    assert len(polys) == 1
    poly = polys[0]
    assert np.array_equal(poly[0], poly[-1])
    dx, dy = grid.cell_size
    cell_diag = math.hypot(dx, dy)
    radii = np.hypot(poly[:, 0], poly[:, 1])
    assert np.abs(radii - radius).max() <= cell_diag
    assert spatial.polygon_area(poly) == pytest.approx(math.pi * radius**2, rel=0.05)
    # the density peak lies inside
    assert _points_inside(poly, np.array([[0.0, 0.0]]))[0]


def test_contours_two_blobs():
    rng = np.random.default_rng(4)
    coords = np.vstack(
        [
            rng.normal(loc=(-4.0, 0.0), scale=0.5, size=(800, 2)),
            rng.normal(loc=(4.0, 0.0), scale=0.5, size=(800, 2)),
        ]
    )
    grid = spatial.density_grid(coords, _padded_bounds(coords))
    level = spatial.coverage_level(grid, 0.90)
    polys = spatial.extract_contours(grid, level)
    assert len(polys) == 2
    centers = sorted(float(np.mean(p[:-1, 0])) for p in polys)
    assert centers[0] == pytest.approx(-4.0, abs=0.5)
    assert centers[1] == pytest.approx(4.0, abs=0.5)
    # deterministic ordering by (xmin, ymin)
    mins = [tuple(p.min(axis=0)) for p in polys]
    assert mins == sorted(mins)


def test_contours_empty_when_level_above_max():
    grid = _radial_grid()
    assert spatial.extract_contours(grid, 2.0) == []


def test_contour_vertices_interpolate_level():
    """Each vertex sits on a lattice edge where interpolation hits the level."""
    grid = _radial_grid()
    level = math.exp(-0.5)
    (poly,) = spatial.extract_contours(grid, level)
    xc, yc = grid.x_centers, grid.y_centers
    for x, y in poly[:-1]:
        on_x = np.isclose(xc, x, atol=1e-9).any()
        on_y = np.isclose(yc, y, atol=1e-9).any()
        assert on_x or on_y  # one coordinate coincides with a cell center line


# ---------------------------------------------------------------------------
# Simplification


def test_simplify_zero_epsilon_copies():
    ring = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]], dtype=float)
    out = spatial.simplify_contour(ring, 0.0)
    assert np.array_equal(out, ring)
    assert out is not ring


def test_simplify_removes_collinear_vertices():
    ring = np.array(
        [[0, 0], [0.5, 0], [1, 0], [1, 0.5], [1, 1], [0.5, 1], [0, 1], [0, 0.5], [0, 0]],
        dtype=float,
    )
    out = spatial.simplify_contour(ring, 0.01)
    assert out.shape[0] < ring.shape[0]
    assert np.array_equal(out[0], out[-1])
    corners = {(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)}
    assert corners <= {tuple(v) for v in out[:-1]}


def test_simplify_deviation_bound():
    """Removed vertices stay within epsilon of the simplified ring (convex case)."""
    t = np.linspace(0, 2 * np.pi, 101)
    ring = np.column_stack([np.cos(t), np.sin(t)])
    ring[-1] = ring[0]
    eps = 0.01
    out = spatial.simplify_contour(ring, eps)
    assert out.shape[0] < ring.shape[0]
    originals = {tuple(v) for v in ring}
    assert {tuple(v) for v in out} <= originals  # vertex subset
    for vertex in ring[:-1]:
        d = min(
            _segment_distance(vertex, out[i], out[i + 1]) for i in range(out.shape[0] - 1)
        )
        assert d <= eps + 1e-9


def test_simplify_rejects_open_polygons():
    with pytest.raises(ValidationError):
        spatial.simplify_contour(np.array([[0, 0], [1, 0], [1, 1]], dtype=float), 0.1)
    with pytest.raises(ValidationError):
        spatial.simplify_contour(
            np.array([[0, 0], [1, 0], [1, 1], [2, 2]], dtype=float), 0.1
        )
    ring = np.array([[0, 0], [1, 0], [1, 1], [0, 0]], dtype=float)
    with pytest.raises(ValidationError):
        spatial.simplify_contour(ring, -1.0)


# ---------------------------------------------------------------------------
# Axis projections


def test_axis_projection_normalized():
    rng = np.random.default_rng(5)
    coords = rng.uniform(0.0, 1.0, size=(500, 2))
    x_hist, y_hist = spatial.axis_projection(coords, (0, 1, 0, 1))
    assert x_hist.shape == (spatial.HIST_BINS,)
    assert x_hist.sum() == pytest.approx(1.0)
    assert y_hist.sum() == pytest.approx(1.0)


def test_axis_projection_peak_location():
    coords = np.full((50, 2), [0.955, 0.105])
    x_hist, y_hist = spatial.axis_projection(coords, (0, 1, 0, 1))
    assert int(np.argmax(x_hist)) == 95
    assert int(np.argmax(y_hist)) == 10


# ---------------------------------------------------------------------------
# Alpha shapes


def test_alpha_shape_tiny_alpha_recovers_hull():
    rng = np.random.default_rng(6)
    coords = rng.uniform(-1.0, 1.0, size=(300, 2))
    polys = spatial.alpha_shape(coords, alpha=1e-9)
    hull = ConvexHull(coords)
    assert len(polys) == 1
    assert spatial.polygon_area(polys[0]) == pytest.approx(hull.volume, rel=1e-9)


def test_alpha_shape_detects_concavity():
    rng = np.random.default_rng(7)
    angle = rng.uniform(0.3 * np.pi, 1.7 * np.pi, size=3000)
    radius = rng.uniform(0.6, 1.0, size=3000)
    coords = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    polys = spatial.alpha_shape(coords)
    assert polys
    hull_area = ConvexHull(coords).volume
    largest = spatial.polygon_area(polys[0])
    assert largest < 0.8 * hull_area
    areas = [spatial.polygon_area(p) for p in polys]
    assert areas == sorted(areas, reverse=True)
    for p in polys:
        assert np.array_equal(p[0], p[-1])


def test_alpha_shape_validation():
    with pytest.raises(ValidationError):
        spatial.alpha_shape(np.zeros((3, 2)))
    line = np.column_stack([np.arange(10.0), np.arange(10.0)])
    with pytest.raises(ValidationError):
        spatial.alpha_shape(line)  # collinear, no triangulation
    with pytest.raises(ValidationError):
        spatial.alpha_shape(np.random.default_rng(0).normal(size=(10, 2)), alpha=-1.0)


def test_default_alpha_scale():
    coords = np.array([[0.0, 0.0], [3.0, 4.0]])  # diagonal 5
    assert spatial.default_alpha(coords) == pytest.approx(2.0 / 0.5)
    with pytest.raises(ValidationError):
        spatial.default_alpha(np.zeros((3, 2)))


# ---------------------------------------------------------------------------
# Similarity


def test_similarity_symmetry_exact():
    rng = np.random.default_rng(8)
    a = rng.normal(size=(40, 2))
    b = rng.normal(loc=3.0, size=(55, 2))
    ab = spatial.contour_similarity(a, b)
    ba = spatial.contour_similarity(b, a)
    assert ab.d_sym == ba.d_sym
    assert ab.d_ab == ba.d_ba and ab.d_ba == ba.d_ab


def test_similarity_identity():
    a = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    score = spatial.contour_similarity(a, a)
    assert score.d_ab == 0.0 and score.d_ba == 0.0
    assert score.d_sym == pytest.approx(2.0 / spatial.SIM_EPSILON)


def test_similarity_monotone_under_translation():
    rng = np.random.default_rng(9)
    a = rng.normal(size=(30, 2))
    previous = math.inf
    for shift in (1.0, 2.0, 4.0, 8.0, 16.0):
        score = spatial.contour_similarity(a, a + [shift, 0.0])
        assert score.d_sym < previous
        previous = score.d_sym


def test_column_similarity():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    column = [a, a + [5.0, 0.0], a + [10.0, 0.0]]
    scores = spatial.column_similarity(a, column)
    assert len(scores) == 3
    assert scores[0] > scores[1] > scores[2]


def test_similarity_rejects_empty():
    with pytest.raises(ValidationError):
        spatial.contour_similarity(np.zeros((0, 2)), np.zeros((3, 2)))


# ---------------------------------------------------------------------------
# Direction summaries


def test_direction_collinear_r_std_zero():
    t = np.linspace(0.0, 5.0, 50)
    coords = np.column_stack([t, 2.0 * t + 1.0])
    summary = spatial.direction_summary(coords)
    assert summary.r_std == pytest.approx(0.0, abs=1e-8)
    assert summary.lambda2 == pytest.approx(0.0, abs=1e-12)


def test_direction_isotropic_r_std():
    rng = np.random.default_rng(10)
    coords = rng.normal(size=(10_000, 2))
    summary = spatial.direction_summary(coords)
    assert summary.r_std == pytest.approx(1.0 / math.sqrt(2.0), abs=0.02)


def test_direction_skew_orients_theta():
    rng = np.random.default_rng(11)
    x = rng.gamma(2.0, 1.0, size=4000)  # long tail toward +x
    y = rng.normal(scale=0.1, size=4000)
    summary = spatial.direction_summary(np.column_stack([x, y]))
    assert abs(math.remainder(summary.theta, 2 * math.pi)) < 0.1
    flipped = spatial.direction_summary(np.column_stack([-x, y]))
    assert abs(math.remainder(flipped.theta - math.pi, 2 * math.pi)) < 0.1
    rotated = spatial.direction_summary(np.column_stack([-y, x]))
    assert abs(math.remainder(rotated.theta - math.pi / 2, 2 * math.pi)) < 0.1


def test_direction_symmetric_cloud_collapses_mod_pi():
    coords = np.array(
        [[3.0, 0.0], [-3.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 0.5], [0.0, -0.5]]
    )
    summary = spatial.direction_summary(coords)
    assert 0.0 <= summary.theta < math.pi
    assert summary.theta == pytest.approx(0.0, abs=1e-9)


def test_direction_summary_counts_and_validation():
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    summary = spatial.direction_summary(coords, counts_per_sample=[10, 20])
    assert summary.mean_count == 15.0
    assert spatial.direction_summary(coords).mean_count == 3.0
    with pytest.raises(ValidationError):
        spatial.direction_summary(coords[:2])
    with pytest.raises(ValidationError):
        spatial.direction_summary(np.zeros((5, 2)))  # coincident points


# ---------------------------------------------------------------------------
# Composite summary


def test_contour_set_composite():
    rng = np.random.default_rng(12)
    coords = rng.normal(size=(2000, 2))
    cs = spatial.contour_set(coords, _padded_bounds(coords))
    assert cs.outer and cs.inner
    assert cs.x_hist.sum() == pytest.approx(1.0)
    assert cs.y_hist.sum() == pytest.approx(1.0)
    outer_area = sum(spatial.polygon_area(p) for p in cs.outer)
    inner_area = sum(spatial.polygon_area(p) for p in cs.inner)
    assert outer_area > inner_area  # 98% region strictly contains 94% region
    for poly in cs.outer + cs.inner:
        assert np.array_equal(poly[0], poly[-1])
