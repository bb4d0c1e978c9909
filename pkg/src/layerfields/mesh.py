"""Triangle-mesh container, OBJ I/O, validation, and area-uniform surface sampling.

Meshes may be open (non-watertight): garments generally are. All coordinates
are in meters; vertices are float64, triangle indices int64. Meshes are treated
as immutable after construction.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEGENERATE_AREA = 1e-12  # m^2; triangles below this are flagged, never dropped


class MeshError(Exception):
    pass


class ObjParseError(MeshError):
    """Raised for malformed OBJ content; message carries the line number."""


@dataclass(frozen=True)
class Aabb:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "min", np.asarray(self.min, dtype=np.float64))
        object.__setattr__(self, "max", np.asarray(self.max, dtype=np.float64))
        if not np.all(self.min <= self.max):
            raise ValueError("Aabb requires min <= max componentwise")

    def expanded(self, fraction: float) -> "Aabb":
        """Grow by `fraction` of the extent on every side (degenerate axes get 1e-3 m)."""
        ext = self.max - self.min
        pad = fraction * np.where(ext > 0, ext, 1e-3)
        return Aabb(self.min - pad, self.max + pad)

    def union(self, other: "Aabb") -> "Aabb":
        return Aabb(np.minimum(self.min, other.min), np.maximum(self.max, other.max))

    def contains(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(points)
        return np.all((p >= self.min) & (p <= self.max), axis=1)


@dataclass(frozen=True)
class ValidationReport:
    boundary_edge_count: int
    nonmanifold_edge_count: int
    degenerate_triangle_count: int

    @property
    def is_watertight(self) -> bool:
        return self.boundary_edge_count == 0 and self.nonmanifold_edge_count == 0


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (nv, 3) float64
    triangles: np.ndarray  # (nt, 3) int64
    name: str = ""

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3))
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        v.setflags(write=False)
        t.setflags(write=False)
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError("triangle index out of range")

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def triangle_corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        t = self.triangles
        return self.vertices[t[:, 0]], self.vertices[t[:, 1]], self.vertices[t[:, 2]]

    def triangle_areas(self) -> np.ndarray:
        a, b, c = self.triangle_corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def total_area(self) -> float:
        return float(self.triangle_areas().sum())

    def bounds(self) -> Aabb:
        if not len(self.vertices):
            raise MeshError("empty mesh has no bounds")
        return Aabb(self.vertices.min(axis=0), self.vertices.max(axis=0))

    def flipped(self) -> "TriangleMesh":
        """Same geometry with all triangle orientations reversed."""
        return TriangleMesh(self.vertices, self.triangles[:, ::-1], name=self.name)


def load_obj(path: str | Path, name: str | None = None) -> TriangleMesh:
    """Parse an ASCII Wavefront OBJ file.

    Reads `v` and `f` records; polygonal faces are fan-triangulated; `vn`/`vt`
    and per-corner `/`-suffixes are ignored; negative indices are resolved
    relative to the vertices seen so far. Errors report the offending line.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"OBJ file not found: {path}")
    vertices: list[tuple[float, float, float]] = []
    triangles: list[tuple[int, int, int]] = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise ObjParseError(f"{path}:{lineno}: vertex needs 3 coordinates")
                try:
                    vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError as exc:
                    raise ObjParseError(f"{path}:{lineno}: bad vertex coordinate: {exc}")
            elif tag == "f":
                if len(parts) < 4:
                    raise ObjParseError(f"{path}:{lineno}: face needs at least 3 indices")
                idx = []
                for tok in parts[1:]:
                    head = tok.split("/", 1)[0]
                    try:
                        i = int(head)
                    except ValueError:
                        raise ObjParseError(f"{path}:{lineno}: bad face index {tok!r}")
                    if i < 0:
                        i = len(vertices) + i  # OBJ negative indexing, 0-based result
                    else:
                        i = i - 1
                    if i < 0 or i >= len(vertices):
                        raise ObjParseError(
                            f"{path}:{lineno}: face index {tok!r} out of range "
                            f"(have {len(vertices)} vertices)"
                        )
                    idx.append(i)
                for k in range(1, len(idx) - 1):  # fan triangulation
                    triangles.append((idx[0], idx[k], idx[k + 1]))
            # vn, vt, usemtl, o, g, s, mtllib ... all ignored
    v = np.array(vertices, dtype=np.float64).reshape(-1, 3)
    t = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    return TriangleMesh(v, t, name=name if name is not None else path.stem)


def save_obj(mesh: TriangleMesh, path: str | Path) -> None:
    """Write an ASCII OBJ. Coordinates use shortest round-trip repr, so
    load_obj(save_obj(m)) reproduces vertices bitwise and triangles exactly."""
    path = Path(path)
    lines = []
    for x, y, z in mesh.vertices:
        lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
    for i, j, k in mesh.triangles:
        lines.append(f"f {i + 1} {j + 1} {k + 1}")
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def _edge_counts(triangles: np.ndarray) -> Counter:
    cnt: Counter = Counter()
    for a, b, c in triangles:
        for e in ((a, b), (b, c), (c, a)):
            cnt[(min(e), max(e))] += 1
    return cnt


def validate(mesh: TriangleMesh) -> ValidationReport:
    """Edge-incidence counts over the triangle set. Pure function."""
    cnt = _edge_counts(mesh.triangles)
    boundary = sum(1 for n in cnt.values() if n == 1)
    nonmanifold = sum(1 for n in cnt.values() if n > 2)
    degenerate = int(np.count_nonzero(mesh.triangle_areas() < DEGENERATE_AREA))
    return ValidationReport(boundary, nonmanifold, degenerate)


def surface_sample(
    mesh: TriangleMesh, n: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw `n` area-uniform points on the surface.

    Returns (points (n,3), triangle ids (n,)). Deterministic for a fixed seed.
    """
    areas = mesh.triangle_areas()
    total = areas.sum()
    if total <= 0:
        raise MeshError("surface_sample needs positive total area")
    rng = np.random.default_rng(seed)
    cum = np.cumsum(areas)
    tri = np.searchsorted(cum, rng.random(n) * total, side="right")
    tri = np.minimum(tri, len(areas) - 1).astype(np.int64)
    # uniform barycentric coordinates via the sqrt trick
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    u = 1.0 - r1
    v = r1 * (1.0 - r2)
    w = r1 * r2
    a = mesh.vertices[mesh.triangles[tri, 0]]
    b = mesh.vertices[mesh.triangles[tri, 1]]
    c = mesh.vertices[mesh.triangles[tri, 2]]
    pts = u[:, None] * a + v[:, None] * b + w[:, None] * c
    return pts, tri
