"""Regular-grid scalar fields: storage, interpolation, finite differences,
isosurface extraction, and the JSON + raw-float32 file format.

Grids are axis-aligned lattices. `values` has shape (nx, ny, nz) indexed
[ix, iy, iz]; the serialized payload is x-fastest (Fortran ravel) little-endian
float32 in a sibling `.f32` file next to the JSON header.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from skimage import measure

from .mesh import Aabb, TriangleMesh


class GridError(Exception):
    pass


@dataclass(frozen=True)
class ScalarGrid:
    origin: np.ndarray  # (3,)
    spacing: np.ndarray  # (3,) per-axis step, > 0
    values: np.ndarray  # (nx, ny, nz) float64

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64).reshape(3)
        s = np.asarray(self.spacing, dtype=np.float64).reshape(3)
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise GridError("values must be a 3D array")
        if any(d < 2 for d in v.shape):
            raise GridError("grids need at least 2 samples per axis")
        if not np.all(s > 0):
            raise GridError("spacing must be positive")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "spacing", s)
        object.__setattr__(self, "values", v)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape

    def bounds(self) -> Aabb:
        return Aabb(self.origin, self.origin + self.spacing * (np.array(self.dims) - 1))

    def lattice_points(self) -> np.ndarray:
        """All lattice points, (N, 3), x-fastest flat order."""
        nx, ny, nz = self.dims
        ax = [self.origin[k] + self.spacing[k] * np.arange(self.dims[k]) for k in range(3)]
        X, Y, Z = np.meshgrid(*ax, indexing="ij")
        return np.ascontiguousarray(
            np.stack([X.ravel(order="F"), Y.ravel(order="F"), Z.ravel(order="F")], axis=1)
        )

    def with_values(self, values: np.ndarray) -> "ScalarGrid":
        return ScalarGrid(self.origin, self.spacing, values)

    def same_shape(self, other: "ScalarGrid") -> bool:
        return (
            self.dims == other.dims
            and np.array_equal(self.origin, other.origin)
            and np.array_equal(self.spacing, other.spacing)
        )


@dataclass(frozen=True)
class GridSpec:
    bounds: Aabb
    dims: tuple[int, int, int]

    def __post_init__(self):
        d = self.dims
        if isinstance(d, (int, np.integer)):
            d = (int(d),) * 3
        else:
            d = tuple(int(x) for x in d)
            if len(d) == 1:
                d = d * 3
        if len(d) != 3:
            raise GridError("dims must be a count or a 3-tuple")
        if any(x < 2 for x in d):
            raise GridError("GridSpec needs at least 2 samples per axis")
        object.__setattr__(self, "dims", d)

    @classmethod
    def from_spacing(cls, bounds: Aabb, spacing: float) -> "GridSpec":
        ext = bounds.max - bounds.min
        dims = tuple(max(2, int(np.ceil(e / spacing)) + 1) for e in ext)
        return cls(bounds, dims)

    @property
    def origin(self) -> np.ndarray:
        return self.bounds.min

    @property
    def spacing(self) -> np.ndarray:
        ext = self.bounds.max - self.bounds.min
        return ext / (np.array(self.dims) - 1)

    def empty_grid(self) -> ScalarGrid:
        return ScalarGrid(self.origin, self.spacing, np.zeros(self.dims))


def fill(field, spec: GridSpec, threads: int = 1) -> ScalarGrid:
    """Evaluate `field` at every lattice point. `field` may take an (N, 3)
    batch (preferred) or a single point; `threads` is forwarded when the
    field accepts it."""
    grid = spec.empty_grid()
    pts = grid.lattice_points()
    try:
        vals = field(pts, threads=threads)
    except TypeError:
        try:
            vals = field(pts)
        except Exception:
            vals = None
        if vals is None or np.asarray(vals).size != len(pts):
            # a scalar field fed a batch either raised or broadcast wrongly
            vals = np.array([field(p) for p in pts])
    vals = np.asarray(vals, dtype=np.float64).reshape(-1)
    if vals.shape[0] != len(pts):
        raise GridError("field did not return one value per lattice point")
    return grid.with_values(vals.reshape(spec.dims, order="F"))


def _locate(grid: ScalarGrid, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rel = (pts - grid.origin) / grid.spacing
    dims = np.array(grid.dims)
    eps = 1e-9
    if np.any(rel < -eps) or np.any(rel > dims - 1 + eps):
        raise GridError("point outside grid bounds")
    rel = np.clip(rel, 0.0, dims - 1)
    i0 = np.minimum(rel.astype(np.int64), dims - 2)
    frac = rel - i0
    return i0, frac


def trilinear(grid: ScalarGrid, p):
    """Standard trilinear blend of the 8 surrounding samples."""
    pts = np.atleast_2d(np.asarray(p, dtype=np.float64))
    scalar = np.asarray(p).ndim == 1
    i0, f = _locate(grid, pts)
    v = grid.values
    ix, iy, iz = i0[:, 0], i0[:, 1], i0[:, 2]
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    c000 = v[ix, iy, iz]
    c100 = v[ix + 1, iy, iz]
    c010 = v[ix, iy + 1, iz]
    c110 = v[ix + 1, iy + 1, iz]
    c001 = v[ix, iy, iz + 1]
    c101 = v[ix + 1, iy, iz + 1]
    c011 = v[ix, iy + 1, iz + 1]
    c111 = v[ix + 1, iy + 1, iz + 1]
    c00 = c000 * (1 - fx) + c100 * fx
    c10 = c010 * (1 - fx) + c110 * fx
    c01 = c001 * (1 - fx) + c101 * fx
    c11 = c011 * (1 - fx) + c111 * fx
    c0 = c00 * (1 - fy) + c10 * fy
    c1 = c01 * (1 - fy) + c11 * fy
    out = c0 * (1 - fz) + c1 * fz
    return float(out[0]) if scalar else out


def gradient(grid: ScalarGrid, p):
    """Central differences of trilinear values with step = spacing (per axis)."""
    pts = np.atleast_2d(np.asarray(p, dtype=np.float64))
    scalar = np.asarray(p).ndim == 1
    out = np.empty_like(pts)
    for k in range(3):
        step = np.zeros(3)
        step[k] = grid.spacing[k]
        out[:, k] = (trilinear(grid, pts + step) - trilinear(grid, pts - step)) / (
            2.0 * grid.spacing[k]
        )
    return out[0] if scalar else out


def node_gradient_magnitude(grid: ScalarGrid) -> np.ndarray:
    """|grad| at every lattice node by central differences (one-sided at the
    boundary); equals `gradient` evaluated at interior nodes."""
    gx, gy, gz = np.gradient(
        grid.values, grid.spacing[0], grid.spacing[1], grid.spacing[2]
    )
    return np.sqrt(gx * gx + gy * gy + gz * gz)


def marching_cubes(grid: ScalarGrid, iso: float = 0.0) -> TriangleMesh:
    """Table-driven isosurface extraction (Lewiner variant via scikit-image).

    Vertices lie on cell edges whose endpoint values straddle `iso` and are
    welded by shared edge; orientation has outward normals pointing toward
    increasing field (positive-outside SDF convention). Returns an empty mesh
    when the level set is absent. Deterministic.
    """
    try:
        verts, faces, _, _ = measure.marching_cubes(
            grid.values,
            level=iso,
            spacing=tuple(grid.spacing),
            allow_degenerate=False,
        )
    except ValueError:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    verts = verts + grid.origin
    return TriangleMesh(verts, faces.astype(np.int64))


def save_grid(grid: ScalarGrid, path: str | Path) -> Path:
    """Write `<path>.json` header plus `<path>.f32` raw little-endian float32
    payload in x-fastest order. save(load(p)) reproduces both files bit-exactly."""
    path = Path(path)
    base = path.with_suffix("") if path.suffix == ".json" else path
    header = {
        "origin": list(grid.origin),
        "spacing": list(grid.spacing),
        "dims": list(grid.dims),
        "order": "x-fastest",
    }
    base.with_suffix(".json").write_text(json.dumps(header, indent=2) + "\n")
    payload = grid.values.ravel(order="F").astype("<f4").tobytes()
    base.with_suffix(".f32").write_bytes(payload)
    return base.with_suffix(".json")


def load_grid(path: str | Path) -> ScalarGrid:
    path = Path(path)
    base = path.with_suffix("") if path.suffix in (".json", ".f32") else path
    header = json.loads(base.with_suffix(".json").read_text())
    if header.get("order") != "x-fastest":
        raise GridError(f"unsupported payload order {header.get('order')!r}")
    dims = tuple(int(d) for d in header["dims"])
    raw = np.frombuffer(base.with_suffix(".f32").read_bytes(), dtype="<f4")
    if raw.size != int(np.prod(dims)):
        raise GridError("payload size does not match dims")
    values = raw.astype(np.float64).reshape(dims, order="F")
    return ScalarGrid(np.array(header["origin"]), np.array(header["spacing"]), values)
