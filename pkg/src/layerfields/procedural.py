"""Deterministic synthetic meshes used by the CLI demos, benchmarks, and tests."""

from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh


def make_quad(size: float = 1.0, z: float = 0.0, name: str = "quad") -> TriangleMesh:
    """Unit square [0,size]^2 in the z-plane, two triangles, +z normal."""
    v = np.array(
        [[0, 0, z], [size, 0, z], [size, size, z], [0, size, z]], dtype=np.float64
    )
    t = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    return TriangleMesh(v, t, name=name)


def make_cube(size: float = 1.0, center=(0.0, 0.0, 0.0), name: str = "cube") -> TriangleMesh:
    """Closed 12-triangle cube with outward orientation."""
    h = size / 2.0
    c = np.asarray(center, dtype=np.float64)
    corners = np.array(
        [[sx, sy, sz] for sx in (-h, h) for sy in (-h, h) for sz in (-h, h)],
        dtype=np.float64,
    ) + c
    # index bit layout: x*4 + y*2 + z
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    tris = []
    for a, b, cc, d in quads:
        tris.append((a, b, cc))
        tris.append((a, cc, d))
    return TriangleMesh(corners, np.array(tris, dtype=np.int64), name=name)


def make_uv_sphere(
    radius: float = 0.3,
    center=(0.0, 0.0, 0.0),
    n_lat: int = 24,
    n_lon: int = 48,
    name: str = "sphere",
) -> TriangleMesh:
    """Closed UV sphere with outward orientation."""
    c = np.asarray(center, dtype=np.float64)
    verts = [c + np.array([0.0, 0.0, radius])]
    for i in range(1, n_lat):
        theta = np.pi * i / n_lat
        st, ct = np.sin(theta), np.cos(theta)
        for j in range(n_lon):
            phi = 2 * np.pi * j / n_lon
            verts.append(c + radius * np.array([st * np.cos(phi), st * np.sin(phi), ct]))
    verts.append(c + np.array([0.0, 0.0, -radius]))
    south = len(verts) - 1
    tris = []
    ring = lambda i, j: 1 + (i - 1) * n_lon + (j % n_lon)
    for j in range(n_lon):  # top cap
        tris.append((0, ring(1, j), ring(1, j + 1)))
    for i in range(1, n_lat - 1):
        for j in range(n_lon):
            a, b = ring(i, j), ring(i, j + 1)
            d, e = ring(i + 1, j), ring(i + 1, j + 1)
            tris.append((a, d, e))
            tris.append((a, e, b))
    for j in range(n_lon):  # bottom cap
        tris.append((south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)))
    return TriangleMesh(np.array(verts), np.array(tris, dtype=np.int64), name=name)


def _cylinder_rings(radius, height, center, n_seg, n_rings):
    c = np.asarray(center, dtype=np.float64)
    zs = np.linspace(-height / 2.0, height / 2.0, n_rings + 1)
    phis = 2 * np.pi * np.arange(n_seg) / n_seg
    verts = []
    for z in zs:
        for phi in phis:
            verts.append(c + np.array([radius * np.cos(phi), radius * np.sin(phi), z]))
    return np.array(verts), zs


def make_open_cylinder(
    radius: float = 0.3,
    height: float = 0.6,
    center=(0.0, 0.0, 0.0),
    n_seg: int = 64,
    n_rings: int = 16,
    name: str = "open_cylinder",
) -> TriangleMesh:
    """Axis-aligned (z) cylinder wall with open top and bottom, outward orientation."""
    verts, _ = _cylinder_rings(radius, height, center, n_seg, n_rings)
    tris = []
    for i in range(n_rings):
        for j in range(n_seg):
            a = i * n_seg + j
            b = i * n_seg + (j + 1) % n_seg
            d = (i + 1) * n_seg + j
            e = (i + 1) * n_seg + (j + 1) % n_seg
            tris.append((a, b, e))
            tris.append((a, e, d))
    return TriangleMesh(verts, np.array(tris, dtype=np.int64), name=name)


def make_closed_cylinder(
    radius: float = 0.3,
    height: float = 0.6,
    center=(0.0, 0.0, 0.0),
    n_seg: int = 64,
    n_rings: int = 16,
    name: str = "closed_cylinder",
) -> TriangleMesh:
    """Cylinder wall plus top/bottom cap fans; closed, outward orientation."""
    wall = make_open_cylinder(radius, height, center, n_seg, n_rings, name=name)
    c = np.asarray(center, dtype=np.float64)
    verts = list(wall.vertices)
    tris = [tuple(t) for t in wall.triangles]
    bot = len(verts)
    verts.append(c + np.array([0.0, 0.0, -height / 2.0]))
    top = len(verts)
    verts.append(c + np.array([0.0, 0.0, height / 2.0]))
    n_top0 = wall.num_vertices - n_seg  # first vertex of the top ring
    for j in range(n_seg):
        tris.append((bot, (j + 1) % n_seg, j))  # bottom cap faces -z
        tris.append((top, n_top0 + j, n_top0 + (j + 1) % n_seg))  # top cap faces +z
    return TriangleMesh(np.array(verts), np.array(tris, dtype=np.int64), name=name)


def make_dented_cylinder(
    radius: float = 0.35,
    height: float = 0.8,
    center=(0.0, 0.0, 0.0),
    n_seg: int = 96,
    n_rings: int = 48,
    dent_depth: float = 0.10,
    dent_half_angle: float = 1.4,
    dent_half_height: float = 0.25,
    dent_phi: float = 0.0,
    name: str = "dented_cylinder",
) -> TriangleMesh:
    """Open cylinder wall with a smooth radial dent centered at phi=dent_phi, z=0.

    The dent is a separable raised-cosine: depth_max at the center vertex
    (exactly, when n_seg and n_rings are even so a vertex lands there),
    tapering to zero at +/- dent_half_angle and +/- dent_half_height.
    Used as a layered fixture whose deepest penetration into an inner
    surface is known in closed form.
    """
    base = make_open_cylinder(radius, height, center, n_seg, n_rings, name=name)
    c = np.asarray(center, dtype=np.float64)
    v = base.vertices - c
    phi = np.arctan2(v[:, 1], v[:, 0])
    dphi = np.mod(phi - dent_phi + np.pi, 2.0 * np.pi) - np.pi
    u = dphi / dent_half_angle
    w = v[:, 2] / dent_half_height
    bump = np.where(
        (np.abs(u) < 1.0) & (np.abs(w) < 1.0),
        (0.5 + 0.5 * np.cos(np.pi * u)) * (0.5 + 0.5 * np.cos(np.pi * w)),
        0.0,
    )
    r = np.hypot(v[:, 0], v[:, 1])
    scale = (r - dent_depth * bump) / r
    v[:, 0] *= scale
    v[:, 1] *= scale
    return TriangleMesh(v + c, base.triangles, name=name)


def make_bumpy_sphere(
    radius: float = 0.3,
    center=(0.0, 0.0, 0.0),
    n_lat: int = 24,
    n_lon: int = 48,
    amplitude: float = 0.05,
    seed: int = 7,
    name: str = "bumpy_sphere",
) -> TriangleMesh:
    """Closed sphere with a deterministic radial perturbation; a generic closed fixture."""
    base = make_uv_sphere(radius, (0, 0, 0), n_lat, n_lon, name=name)
    v = base.vertices.copy()
    rng = np.random.default_rng(seed)
    # smooth low-frequency bump field so neighbors stay consistent
    coef = rng.normal(size=(3, 3))
    x, y, z = v[:, 0] / radius, v[:, 1] / radius, v[:, 2] / radius
    bump = (
        coef[0, 0] * np.sin(2 * x) * np.cos(3 * y)
        + coef[1, 1] * np.sin(3 * y + 1.0) * np.cos(2 * z)
        + coef[2, 2] * np.sin(4 * z + 0.5) * np.cos(x)
    )
    scale = 1.0 + amplitude * bump / (np.abs(bump).max() or 1.0)
    v = v * scale[:, None] + np.asarray(center, dtype=np.float64)
    return TriangleMesh(v, base.triangles, name=name)


def subdivided_sphere(target_triangles: int, radius: float = 0.3, name: str = "dense_sphere") -> TriangleMesh:
    """UV sphere with roughly `target_triangles` triangles (benchmark fixture)."""
    # triangles = 2 * n_lon * (n_lat - 1); keep the 2:1 lon:lat aspect
    n_lat = max(4, int(np.sqrt(target_triangles / 4.0)))
    n_lon = 2 * n_lat
    return make_uv_sphere(radius, (0, 0, 0), n_lat, n_lon, name=name)
