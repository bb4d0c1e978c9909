import numpy as np
import pytest

from layerfields import procedural
from layerfields.mesh import TriangleMesh, validate
from layerfields.trim import NonManifoldBoundaryError, boundary_loops, trim_by_gif


def test_boundary_loops_quad():
    loops = boundary_loops(procedural.make_quad())
    assert len(loops) == 1
    assert loops[0][0] == 0  # canonical start at lowest vertex
    assert sorted(loops[0]) == [0, 1, 2, 3]


def test_boundary_loops_closed_mesh_is_empty(cube):
    assert boundary_loops(cube) == []


def test_boundary_loops_open_cylinder(open_cylinder):
    loops = boundary_loops(open_cylinder)
    assert len(loops) == 2  # one rim at each end
    n_seg = 48
    assert all(len(l) == n_seg for l in loops)


def test_boundary_loops_deterministic(open_cylinder):
    assert boundary_loops(open_cylinder) == boundary_loops(open_cylinder)


def test_boundary_loops_follow_triangle_winding():
    quad = procedural.make_quad()
    (loop,) = boundary_loops(quad)
    # +z-facing quad: boundary runs counter-clockwise seen from +z
    assert loop == [0, 1, 2, 3]


def test_nonmanifold_boundary_raises():
    # three triangles sharing one edge
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]], float)
    m = TriangleMesh(v, [[0, 1, 2], [0, 3, 1], [0, 1, 4]])
    with pytest.raises(NonManifoldBoundaryError):
        boundary_loops(m)


def test_trim_keeps_everything_when_positive(cube):
    out = trim_by_gif(cube, lambda pts: np.ones(len(pts)))
    assert out.mesh.num_triangles == cube.num_triangles
    assert out.boundary_loops == ()


def test_trim_drops_everything_when_nonpositive(cube):
    out = trim_by_gif(cube, lambda pts: -np.ones(len(pts)))
    assert out.mesh.num_triangles == 0
    # zero is outside the kept region as well
    out = trim_by_gif(cube, lambda pts: np.zeros(len(pts)))
    assert out.mesh.num_triangles == 0


def test_trim_single_triangle_crossing_positions():
    m = TriangleMesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], float), [[0, 1, 2]])
    out = trim_by_gif(m, lambda pts: 0.5 - pts[:, 0])  # keep x < 0.5
    kept = out.mesh
    assert kept.num_triangles == 2  # quad region split into two triangles
    # new vertices sit exactly at the linear zero crossing x = 0.5
    xs = kept.vertices[:, 0]
    assert np.isclose(xs.max(), 0.5, atol=1e-15)
    assert np.count_nonzero(np.isclose(xs, 0.5, atol=1e-15)) == 2
    assert kept.vertices[:, 0].min() == 0.0
    # total kept area: original 0.5 minus the cut corner 0.125
    assert kept.total_area() == pytest.approx(0.375, abs=1e-15)


def test_trim_keep_one_vertex_side():
    m = TriangleMesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], float), [[0, 1, 2]])
    out = trim_by_gif(m, lambda pts: pts[:, 0] - 0.5)  # keep x > 0.5
    assert out.mesh.num_triangles == 1
    assert out.mesh.total_area() == pytest.approx(0.125, abs=1e-15)


def test_trim_plane_cut_through_cylinder(open_cylinder):
    # keep the z > 0 half; expect a clean wall with two rims
    out = trim_by_gif(open_cylinder, lambda pts: pts[:, 2])
    m = out.mesh
    assert m.num_triangles > 0
    assert np.all(m.vertices[:, 2] >= -1e-12)
    assert len(out.boundary_loops) == 2
    # cut rim lies exactly in the z = 0 plane
    zs = sorted(float(np.mean(m.vertices[list(l), 2])) for l in out.boundary_loops)
    assert zs[0] == pytest.approx(0.0, abs=1e-12)
    assert zs[1] == pytest.approx(0.3, abs=1e-12)
    rep = validate(m)
    assert rep.nonmanifold_edge_count == 0


def test_trim_crossing_snaps_to_endpoint():
    m = TriangleMesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], float), [[0, 1, 2]])
    # zero crossing within 1e-6 of vertex 0 along both edges: snaps, no slivers
    t = 1e-8
    out = trim_by_gif(m, lambda pts: np.where(pts.sum(axis=1) < 1e-12, -t, 1.0 - t))
    assert out.mesh.num_triangles == 1
    assert out.mesh.num_vertices == 3  # no new vertices created


def test_trim_shared_edge_crossings_are_welded():
    quad = procedural.make_quad()
    out = trim_by_gif(quad, lambda pts: 0.5 - pts[:, 1])  # cuts the shared diagonal
    rep = validate(out.mesh)
    assert rep.nonmanifold_edge_count == 0
    # a welded cut leaves a single boundary loop around the kept half
    assert len(out.boundary_loops) == 1


def test_trim_handles_batch_and_scalar_fields(cube):
    batch = trim_by_gif(cube, lambda pts: pts[:, 0])
    scalar = trim_by_gif(cube, lambda p: float(p[0]))
    assert np.array_equal(batch.mesh.vertices, scalar.mesh.vertices)
    assert np.array_equal(batch.mesh.triangles, scalar.mesh.triangles)
