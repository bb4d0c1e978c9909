import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerfields import procedural
from layerfields.bvh import LEAF_SIZE, build_bvh
from layerfields.mesh import TriangleMesh
from layerfields.winding import (
    closest_point,
    second_nearest_distance,
    triangle_solid_angle,
    winding_at,
    winding_exact,
    winding_fast,
)


def cube_minus_top():
    cube = procedural.make_cube(1.0)
    keep = [i for i, t in enumerate(cube.triangles)
            if not np.allclose(cube.vertices[t][:, 2], 0.5)]
    return TriangleMesh(cube.vertices, cube.triangles[keep])


# --- solid angle ------------------------------------------------------------

def test_octant_triangle_solid_angle():
    # unit-axis triangle seen from the origin covers one octant: 4*pi/8
    a, b, c = np.eye(3)
    assert triangle_solid_angle(a, b, c, np.zeros(3)) == pytest.approx(np.pi / 2, abs=1e-12)


def test_solid_angle_orientation_antisymmetry(rng):
    for _ in range(50):
        a, b, c = rng.standard_normal((3, 3))
        p = rng.standard_normal(3)
        # swapping two vertices reorders the denominator sum, so the match is
        # exact only up to rounding
        assert triangle_solid_angle(a, c, b, p) == pytest.approx(
            -triangle_solid_angle(a, b, c, p), abs=1e-12
        )


def test_solid_angle_degenerate_is_zero():
    a = np.array([0.0, 0.0, 1.0])
    assert triangle_solid_angle(a, a, a, np.zeros(3)) == 0.0
    b = np.array([0.0, 1.0, 1.0])
    assert triangle_solid_angle(a, b, a, np.zeros(3)) == 0.0


def test_solid_angle_at_corner_is_zero():
    a, b, c = np.eye(3)
    assert triangle_solid_angle(a, b, c, a) == 0.0


# --- exact winding ----------------------------------------------------------

def test_cube_winding_integrality(cube, rng):
    inside = rng.uniform(-0.45, 0.45, (200, 3))
    w = winding_exact(cube, inside)
    assert np.abs(w - 1.0).max() < 1e-9
    outside = rng.uniform(0.55, 2.0, (200, 3)) * rng.choice([-1, 1], (200, 3))
    w = winding_exact(cube, outside)
    assert np.abs(w).max() < 1e-9


def test_cube_minus_top_center():
    assert winding_exact(cube_minus_top(), np.zeros(3)) == pytest.approx(5.0 / 6.0, abs=1e-9)


def test_winding_additivity_over_partitions(cube, rng):
    pts = rng.uniform(-1, 1, (20, 3))
    total = winding_exact(cube, pts)
    split = np.zeros(20)
    for lo, hi in ((0, 5), (5, 12)):
        part = TriangleMesh(cube.vertices, cube.triangles[lo:hi])
        split += winding_exact(part, pts)
    assert np.abs(total - split).max() < 1e-12


def test_orientation_flip_negates_winding(sphere, rng):
    pts = rng.uniform(-0.5, 0.5, (50, 3))
    # flipping reorders the solid-angle denominator terms: equal to rounding
    assert np.allclose(
        winding_exact(sphere, pts), -winding_exact(sphere.flipped(), pts),
        rtol=0, atol=1e-12,
    )


def test_winding_jump_across_surface():
    quad = procedural.make_quad(1.0)
    p = np.array([0.3, 0.6, 0.0])
    above = winding_exact(quad, p + [0, 0, 1e-4])
    below = winding_exact(quad, p - [0, 0, 1e-4])
    assert below - above == pytest.approx(1.0, abs=1e-3)


def test_winding_scalar_and_batch_agree(cube):
    p = np.array([0.1, 0.2, 0.3])
    assert winding_exact(cube, p) == winding_exact(cube, p[None, :])[0]


# --- BVH --------------------------------------------------------------------

def test_bvh_single_triangle_single_leaf():
    m = TriangleMesh(np.eye(3), [[0, 1, 2]])
    bvh = build_bvh(m)
    assert bvh.num_nodes == 1
    assert bvh.left[0] == -1


def test_bvh_closed_mesh_normals_cancel(cube):
    bvh = build_bvh(cube)
    leaf = bvh.left == -1
    assert np.abs(bvh.normal[leaf].sum(axis=0)).max() < 1e-9
    assert np.abs(bvh.normal[0]).max() < 1e-9  # root aggregate too


def test_bvh_node_count_bound():
    m = procedural.subdivided_sphere(100_000)
    bvh = build_bvh(m)
    assert bvh.num_nodes <= 2 * m.num_triangles
    leaf = bvh.left == -1
    assert bvh.count[leaf].max() <= LEAF_SIZE
    assert bvh.count[leaf].sum() == m.num_triangles
    # leaf order is a permutation of the triangle ids
    assert np.array_equal(np.sort(bvh.order), np.arange(m.num_triangles))


def test_bvh_area_aggregates(sphere):
    bvh = build_bvh(sphere)
    assert bvh.area[0] == pytest.approx(sphere.total_area(), rel=1e-12)


# --- fast winding -----------------------------------------------------------

def test_beta_zero_is_bitwise_exact(open_cylinder, rng):
    bvh = build_bvh(open_cylinder)
    pts = rng.uniform(-0.5, 0.5, (500, 3))
    assert np.array_equal(winding_fast(bvh, pts, beta=0.0), winding_exact(open_cylinder, pts))


def test_fast_winding_accuracy(sphere, rng):
    bvh = build_bvh(sphere)
    pts = rng.uniform(-0.6, 0.6, (2000, 3))
    err = np.abs(winding_fast(bvh, pts, beta=2.0) - winding_exact(sphere, pts))
    assert err.max() <= 1e-3


def test_fast_winding_error_monotone_in_beta(open_cylinder, rng):
    bvh = build_bvh(open_cylinder)
    pts = rng.uniform(-0.6, 0.6, (1000, 3))
    exact = winding_exact(open_cylinder, pts)
    errs = [np.abs(winding_fast(bvh, pts, beta=b) - exact).max() for b in (0.5, 1.0, 2.0, 4.0)]
    for lo, hi in zip(errs[1:], errs[:-1]):
        assert lo <= hi + 1e-15


def test_fast_winding_far_field_decay(sphere):
    bvh = build_bvh(sphere)
    p = np.array([100.0 * bvh.bounding_radius(), 0.0, 0.0])
    assert abs(winding_fast(bvh, p, beta=2.0)) <= 1e-4


def test_fast_winding_rejects_negative_beta(sphere):
    with pytest.raises(ValueError):
        winding_fast(build_bvh(sphere), np.zeros(3), beta=-1.0)


# --- closest point ----------------------------------------------------------

def test_closest_point_on_quad():
    quad = procedural.make_quad(1.0)
    bvh = build_bvh(quad)
    q, d, tri = closest_point(bvh, np.array([0.3, 0.4, 0.2]))
    assert d == pytest.approx(0.2, abs=1e-12)
    assert np.allclose(q, [0.3, 0.4, 0.0])
    # outside the square: nearest point is the corner
    q, d, tri = closest_point(bvh, np.array([2.0, 2.0, 0.0]))
    assert np.allclose(q, [1.0, 1.0, 0.0])
    assert d == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_closest_point_matches_brute_force(sphere, rng):
    bvh = build_bvh(sphere)
    pts = rng.uniform(-0.5, 0.5, (100, 3))
    _, d, tri = closest_point(bvh, pts)
    a, b, c = sphere.triangle_corners()
    for p, dk in zip(pts, d):
        # brute force: dense barycentric scan over every triangle. Scan points
        # lie on the surface, so they can only overestimate the true distance.
        best = np.inf
        for u in np.linspace(0, 1, 9):
            for v in np.linspace(0, 1, 9):
                if u + v <= 1 + 1e-12:
                    q = (1 - u - v) * a + u * b + v * c
                    best = min(best, np.linalg.norm(q - p, axis=1).min())
        assert dk <= best + 1e-9
        assert best - dk < 0.02  # within the scan's resolution
    assert tri.min() >= 0 and tri.max() < sphere.num_triangles


def test_closest_point_distance_radial_on_sphere(rng):
    m = procedural.make_uv_sphere(0.3, n_lat=64, n_lon=128)
    bvh = build_bvh(m)
    pts = rng.uniform(-0.5, 0.5, (200, 3))
    r = np.linalg.norm(pts, axis=1)
    _, d, _ = closest_point(bvh, pts)
    assert np.abs(d - np.abs(r - 0.3)).max() < 2e-3  # faceting error only


def test_second_nearest_excludes_adjacent_sheet():
    # two parallel quads; the foot point lies on the close sheet, so with an
    # exclusion radius smaller than the sheet gap the second distance is to
    # the far sheet
    near = procedural.make_quad(1.0, z=0.0)
    far = procedural.make_quad(1.0, z=1.0)
    m = TriangleMesh(
        np.vstack([near.vertices, far.vertices]),
        np.vstack([near.triangles, far.triangles + 4]),
    )
    bvh = build_bvh(m)
    p = np.array([0.5, 0.5, 0.2])
    foot, d1, _ = closest_point(bvh, p)
    d2 = second_nearest_distance(bvh, p, foot, rho=0.5)
    assert d1 == pytest.approx(0.2, abs=1e-12)
    assert d2 == pytest.approx(0.8, abs=1e-12)


def _triangulated_plane(size: float, n: int) -> TriangleMesh:
    xs = np.linspace(0.0, size, n + 1)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    verts = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])
    idx = np.arange((n + 1) * (n + 1)).reshape(n + 1, n + 1)
    a = idx[:-1, :-1].ravel()
    b = idx[1:, :-1].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[:-1, 1:].ravel()
    tris = np.vstack([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    return TriangleMesh(verts, tris)


def test_second_nearest_single_sheet_flat_geometry():
    # fine flat sheet: the closest surface point outside the exclusion ball
    # sits near distance sqrt(d^2 + rho^2) for a query at height d. Exclusion
    # is per triangle, so the bound is loose by up to one cell diagonal.
    plane = _triangulated_plane(4.0, 64)
    bvh = build_bvh(plane)
    p = np.array([2.0, 2.0, 0.3])
    foot, d1, _ = closest_point(bvh, p)
    d2 = second_nearest_distance(bvh, p, foot, rho=0.4)
    cell_diag = np.sqrt(2.0) * 4.0 / 64
    assert d1 == pytest.approx(0.3, abs=1e-12)
    assert np.hypot(0.3, 0.4) - 1e-12 <= d2 <= np.hypot(0.3, 0.4 + cell_diag)


def test_second_nearest_is_inf_when_everything_excluded():
    quad = procedural.make_quad(1.0, z=0.0)
    bvh = build_bvh(quad)
    p = np.array([0.5, 0.5, 0.1])
    foot, _, _ = closest_point(bvh, p)
    d2 = second_nearest_distance(bvh, p, foot, rho=10.0)
    assert np.isinf(d2)


def test_winding_at_flags_on_surface_queries(cube):
    bvh = build_bvh(cube)
    w, flagged = winding_at(bvh, np.array([0.5, 0.0, 0.0]))
    assert flagged
    assert np.isfinite(w)
    w, flagged = winding_at(bvh, np.array([0.0, 0.0, 0.0]))
    assert not flagged
    assert w == pytest.approx(1.0, abs=1e-3)


# --- properties -------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_property_flip_negates_and_beta0_exact(seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((10, 3))
    t = rng.integers(0, 10, (6, 3))
    m = TriangleMesh(v, t)
    pts = rng.standard_normal((5, 3)) * 2
    w = winding_exact(m, pts)
    # flipping reorders the solid-angle denominator terms: equal to rounding
    assert np.allclose(w, -winding_exact(m.flipped(), pts), rtol=0, atol=1e-12)
    assert np.array_equal(w, winding_fast(build_bvh(m), pts, beta=0.0))
