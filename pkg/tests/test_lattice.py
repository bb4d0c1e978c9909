import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerfields.lattice import (
    GridError,
    GridSpec,
    ScalarGrid,
    fill,
    gradient,
    load_grid,
    marching_cubes,
    node_gradient_magnitude,
    save_grid,
    trilinear,
)
from layerfields.mesh import Aabb, validate


def affine_grid(coef=(1.0, 2.0, -0.5), const=0.25, dims=(9, 7, 5)):
    spec = GridSpec(Aabb([0, 0, 0], [1, 1, 1]), dims)
    g = spec.empty_grid()
    pts = g.lattice_points()
    vals = pts @ np.asarray(coef) + const
    return g.with_values(vals.reshape(dims, order="F")), np.asarray(coef), const


def test_grid_spec_normalizes_dims():
    spec = GridSpec(Aabb([0, 0, 0], [1, 1, 1]), 16)
    assert spec.dims == (16, 16, 16)
    spec = GridSpec(Aabb([0, 0, 0], [1, 1, 1]), (4, 8, 16))
    assert spec.dims == (4, 8, 16)
    with pytest.raises(GridError):
        GridSpec(Aabb([0, 0, 0], [1, 1, 1]), 1)


def test_grid_spec_from_spacing():
    spec = GridSpec.from_spacing(Aabb([0, 0, 0], [1, 2, 0.1]), 0.1)
    assert spec.dims == (11, 21, 2)
    assert np.all(spec.spacing <= 0.1 + 1e-12)


def test_lattice_points_x_fastest_order():
    spec = GridSpec(Aabb([0, 0, 0], [1, 1, 1]), (3, 2, 2))
    pts = spec.empty_grid().lattice_points()
    # x varies fastest, then y, then z
    assert np.allclose(pts[0], [0, 0, 0])
    assert np.allclose(pts[1], [0.5, 0, 0])
    assert np.allclose(pts[2], [1.0, 0, 0])
    assert np.allclose(pts[3], [0, 1, 0])
    assert np.allclose(pts[6], [0, 0, 1])


def test_fill_batch_and_scalar_fields_agree():
    spec = GridSpec(Aabb([0, 0, 0], [1, 1, 1]), 5)
    batch = fill(lambda pts: pts[:, 0] + 2 * pts[:, 1], spec)
    scalar = fill(lambda p: p[0] + 2 * p[1], spec)
    assert np.array_equal(batch.values, scalar.values)


def test_fill_rejects_wrong_length():
    spec = GridSpec(Aabb([0, 0, 0], [1, 1, 1]), 4)
    with pytest.raises(GridError):
        fill(lambda pts: np.zeros(3), spec)


def test_trilinear_reproduces_affine_fields(rng):
    grid, coef, const = affine_grid()
    pts = rng.random((200, 3))
    assert np.abs(trilinear(grid, pts) - (pts @ coef + const)).max() < 1e-12
    p = np.array([0.31, 0.67, 0.11])
    assert trilinear(grid, p) == pytest.approx(p @ coef + const, abs=1e-12)


def test_trilinear_at_nodes_recovers_node_values(rng):
    # node coordinates are origin + i*spacing; dividing back by spacing can be
    # off by an ulp, so recovery is exact only up to rounding
    spec = GridSpec(Aabb([0, 0, 0], [1, 1, 1]), 6)
    vals = rng.standard_normal(spec.dims)
    grid = ScalarGrid(spec.origin, spec.spacing, vals)
    pts = grid.lattice_points()
    assert np.allclose(trilinear(grid, pts), vals.ravel(order="F"), rtol=0, atol=1e-12)


def test_trilinear_outside_bounds_raises():
    grid, _, _ = affine_grid()
    with pytest.raises(GridError):
        trilinear(grid, np.array([1.5, 0.5, 0.5]))


def test_gradient_of_affine_field(rng):
    grid, coef, _ = affine_grid()
    pts = rng.random((50, 3)) * 0.5 + 0.25  # keep the stencil in bounds
    g = gradient(grid, pts)
    assert np.abs(g - coef).max() < 1e-10


def test_node_gradient_magnitude_affine():
    grid, coef, _ = affine_grid()
    gm = node_gradient_magnitude(grid)
    assert np.abs(gm - np.linalg.norm(coef)).max() < 1e-10


def test_grid_requires_min_shape():
    with pytest.raises(GridError):
        ScalarGrid(np.zeros(3), np.ones(3), np.zeros((1, 4, 4)))
    with pytest.raises(GridError):
        ScalarGrid(np.zeros(3), np.array([1.0, 0.0, 1.0]), np.zeros((4, 4, 4)))


def test_save_load_round_trip(tmp_path, rng):
    spec = GridSpec(Aabb([-1, 0, 2], [1, 3, 4]), (6, 5, 4))
    vals = rng.standard_normal(spec.dims).astype(np.float32).astype(np.float64)
    grid = ScalarGrid(spec.origin, spec.spacing, vals)
    p = save_grid(grid, tmp_path / "g")
    assert p.name == "g.json"
    g2 = load_grid(p)
    assert g2.same_shape(grid)
    assert np.array_equal(g2.values, grid.values)  # f32-representable -> bitwise
    # save(load(p)) reproduces both files bit-exactly
    save_grid(g2, tmp_path / "h")
    assert (tmp_path / "g.f32").read_bytes() == (tmp_path / "h.f32").read_bytes()
    assert (tmp_path / "g.json").read_text() == (tmp_path / "h.json").read_text()


def test_payload_is_x_fastest_little_endian_f32(tmp_path):
    grid, coef, const = affine_grid(dims=(3, 2, 2))
    save_grid(grid, tmp_path / "g")
    raw = np.frombuffer((tmp_path / "g.f32").read_bytes(), dtype="<f4")
    expected = grid.values.ravel(order="F").astype("<f4")
    assert np.array_equal(raw, expected)
    header = json.loads((tmp_path / "g.json").read_text())
    assert header["order"] == "x-fastest"
    assert header["dims"] == [3, 2, 2]


def test_load_rejects_bad_payload(tmp_path):
    grid, _, _ = affine_grid(dims=(3, 3, 3))
    save_grid(grid, tmp_path / "g")
    (tmp_path / "g.f32").write_bytes(b"\0" * 4)
    with pytest.raises(GridError):
        load_grid(tmp_path / "g.json")


def test_marching_cubes_sphere_sdf():
    spec = GridSpec(Aabb([-0.5] * 3, [0.5] * 3), 48)
    grid = fill(lambda pts: np.linalg.norm(pts, axis=1) - 0.3, spec)
    m = marching_cubes(grid, iso=0.0)
    rep = validate(m)
    assert rep.boundary_edge_count == 0 and rep.nonmanifold_edge_count == 0
    r = np.linalg.norm(m.vertices, axis=1)
    assert np.abs(r - 0.3).max() < 2e-3
    # positive-outside field -> outward normals -> positive signed volume
    a, b, c = m.triangle_corners()
    vol = np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0
    assert vol == pytest.approx(4 / 3 * np.pi * 0.3**3, rel=5e-3)


def test_marching_cubes_empty_level_set():
    spec = GridSpec(Aabb([0, 0, 0], [1, 1, 1]), 8)
    grid = fill(lambda pts: np.ones(len(pts)), spec)
    m = marching_cubes(grid, iso=0.0)
    assert m.num_triangles == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_property_trilinear_within_node_range(seed):
    rng = np.random.default_rng(seed)
    grid = ScalarGrid(np.zeros(3), np.ones(3), rng.standard_normal((4, 4, 4)))
    pts = rng.random((50, 3)) * 3.0
    v = trilinear(grid, pts)
    assert v.min() >= grid.values.min() - 1e-12
    assert v.max() <= grid.values.max() + 1e-12
