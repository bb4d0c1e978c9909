"""Covering DAG, covering loss, and covering enforcement on SDF grids.

Layer j "covers" the layers in covers(j); wherever the indication fields of
j and a covered layer i overlap, the outer SDF must stay below the inner one:
s_j(p) < s_i(p). The loss combines a hinge on violations with a quadratic
regularizer on the SDF difference; enforcement clamps s_j to s_i - epsilon at
offending lattice points, innermost layers first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lattice import GridSpec, ScalarGrid
from .mesh import Aabb, MeshError, TriangleMesh, surface_sample

BODY_LAYER_ID = 0


class ManifestError(Exception):
    pass


@dataclass(frozen=True)
class CoveringParams:
    lam: float = 0.2  # quadratic regularizer weight
    epsilon: float = 1e-3  # enforcement margin, meters

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class Layer:
    id: int
    name: str
    mesh_path: str
    covers: tuple[int, ...] = ()


@dataclass(frozen=True)
class LayerManifest:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        ids = [l.id for l in self.layers]
        if len(set(ids)) != len(ids):
            raise ManifestError("duplicate layer ids")
        known = set(ids)
        for l in self.layers:
            for c in l.covers:
                if c not in known:
                    raise ManifestError(f"layer {l.id} covers unknown layer {c}")
            if l.id == BODY_LAYER_ID and l.covers:
                raise ManifestError("body layer 0 must not cover other layers")
        self.topological_order()  # raises on cycles

    def layer(self, layer_id: int) -> Layer:
        for l in self.layers:
            if l.id == layer_id:
                return l
        raise ManifestError(f"no layer with id {layer_id}")

    def pairs(self) -> list[tuple[int, int]]:
        """(outer j, inner i) covering pairs, deterministic order."""
        return [(l.id, i) for l in sorted(self.layers, key=lambda x: x.id) for i in sorted(l.covers)]

    def topological_order(self) -> list[int]:
        """Layer ids ordered innermost first (covered before coverer)."""
        ids = sorted(l.id for l in self.layers)
        deps = {l.id: set(l.covers) for l in self.layers}
        out: list[int] = []
        done: set[int] = set()
        while len(out) < len(ids):
            progress = False
            for i in ids:
                if i in done:
                    continue
                if deps[i] <= done:
                    out.append(i)
                    done.add(i)
                    progress = True
            if not progress:
                raise ManifestError("covering relation contains a cycle")
        return out


def load_manifest(path: str | Path) -> tuple[LayerManifest, dict]:
    """Read the manifest JSON. Returns (manifest, extras) where extras carries
    the optional `params` (w_h, delta, epsilon, lambda) and `grid`
    (resolution, margin) sections verbatim."""
    path = Path(path)
    doc = json.loads(path.read_text())
    layers = []
    for entry in doc.get("layers", []):
        layers.append(
            Layer(
                id=int(entry["id"]),
                name=str(entry.get("name", f"layer{entry['id']}")),
                mesh_path=str(entry["mesh"]),
                covers=tuple(int(c) for c in entry.get("covers", [])),
            )
        )
    if not layers:
        raise ManifestError(f"{path}: manifest has no layers")
    extras = {"params": doc.get("params", {}), "grid": doc.get("grid", {})}
    return LayerManifest(tuple(layers)), extras


def save_manifest(
    manifest: LayerManifest, path: str | Path, params: dict | None = None, grid: dict | None = None
) -> None:
    doc = {
        "layers": [
            {"id": l.id, "name": l.name, "mesh": l.mesh_path, "covers": list(l.covers)}
            for l in manifest.layers
        ]
    }
    if params:
        doc["params"] = params
    if grid:
        doc["grid"] = grid
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


@dataclass(frozen=True)
class PairStats:
    outer: int
    inner: int
    overlap_points: int
    violation_count: int
    max_violation_m: float
    hinge_sum: float
    quadratic_sum: float

    @property
    def total(self) -> float:
        return self.hinge_sum + self.quadratic_sum


@dataclass(frozen=True)
class CoveringReport:
    pairs: tuple[PairStats, ...]
    lam: float

    @property
    def total_loss(self) -> float:
        return float(sum(p.total for p in self.pairs))

    @property
    def hinge_total(self) -> float:
        return float(sum(p.hinge_sum for p in self.pairs))

    @property
    def violation_count(self) -> int:
        return int(sum(p.violation_count for p in self.pairs))

    @property
    def max_penetration_cm(self) -> float:
        return 100.0 * max((p.max_violation_m for p in self.pairs), default=0.0)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "total_loss": self.total_loss,
            "hinge_total": self.hinge_total,
            "violation_count": self.violation_count,
            "max_penetration_cm": self.max_penetration_cm,
            "pairs": [
                {
                    "outer": p.outer,
                    "inner": p.inner,
                    "overlap_points": p.overlap_points,
                    "violation_count": p.violation_count,
                    "max_violation_m": p.max_violation_m,
                    "hinge_sum": p.hinge_sum,
                    "quadratic_sum": p.quadratic_sum,
                }
                for p in self.pairs
            ],
        }


def covering_loss(
    points: np.ndarray,
    sdf: dict,
    gif: dict,
    manifest: LayerManifest,
    params: CoveringParams = CoveringParams(),
) -> tuple[float, CoveringReport]:
    """Sum over covering pairs and points of
    h_j*h_i*[max(s_j - s_i, 0) + lambda*(s_j - s_i)^2].

    `sdf` and `gif` map layer id to a point-batch evaluator; the body layer's
    indication field is identically 1 if omitted from `gif`.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    stats = []
    svals: dict[int, np.ndarray] = {}
    hvals: dict[int, np.ndarray] = {}

    def sval(i):
        if i not in svals:
            if i not in sdf:
                raise ManifestError(f"missing sdf evaluator for layer {i}")
            svals[i] = np.asarray(sdf[i](pts), dtype=np.float64).reshape(-1)
        return svals[i]

    def hval(i):
        if i not in hvals:
            if i in gif:
                hvals[i] = np.asarray(gif[i](pts), dtype=np.float64).reshape(-1)
            elif i == BODY_LAYER_ID:
                hvals[i] = np.ones(len(pts))
            else:
                raise ManifestError(f"missing gif evaluator for layer {i}")
        return hvals[i]

    for j, i in manifest.pairs():
        hh = hval(j) * hval(i)
        diff = sval(j) - sval(i)
        hinge = np.maximum(diff, 0.0)
        quad = params.lam * diff * diff
        mask = hh > 0
        viol = mask & (hinge > 0)
        stats.append(
            PairStats(
                outer=j,
                inner=i,
                overlap_points=int(np.count_nonzero(mask)),
                violation_count=int(np.count_nonzero(viol)),
                max_violation_m=float((hh * hinge).max(initial=0.0)),
                hinge_sum=float((hh * hinge).sum()),
                quadratic_sum=float((hh * quad).sum()),
            )
        )
    report = CoveringReport(tuple(stats), lam=params.lam)
    return report.total_loss, report


def grid_covering_report(
    sdf_grids: dict[int, ScalarGrid],
    gif_grids: dict[int, ScalarGrid],
    manifest: LayerManifest,
    params: CoveringParams = CoveringParams(),
) -> CoveringReport:
    """Covering loss of Eq.-style hinge + quadratic evaluated at every lattice
    point of the shared grid (the enforcement checkpoints)."""
    stats = []
    for j, i in manifest.pairs():
        hj = gif_grids[j].values > 0.5 if j in gif_grids else np.ones(sdf_grids[j].dims, bool)
        hi = gif_grids[i].values > 0.5 if i in gif_grids else np.ones(sdf_grids[i].dims, bool)
        mask = hj & hi
        diff = sdf_grids[j].values - sdf_grids[i].values
        hinge = np.where(mask, np.maximum(diff, 0.0), 0.0)
        quad = np.where(mask, params.lam * diff * diff, 0.0)
        stats.append(
            PairStats(
                outer=j,
                inner=i,
                overlap_points=int(np.count_nonzero(mask)),
                violation_count=int(np.count_nonzero(hinge > 0)),
                max_violation_m=float(hinge.max(initial=0.0)),
                hinge_sum=float(hinge.sum()),
                quadratic_sum=float(quad.sum()),
            )
        )
    return CoveringReport(tuple(stats), lam=params.lam)


def overlap_mask(gif_i: ScalarGrid, gif_j: ScalarGrid) -> ScalarGrid:
    """Pointwise AND of the two binary indication grids (> 0.5)."""
    if not gif_i.same_shape(gif_j):
        raise ValueError("overlap_mask requires identically shaped grids")
    both = (gif_i.values > 0.5) & (gif_j.values > 0.5)
    return gif_i.with_values(both.astype(np.float64))


def enforce_covering(
    sdf_grids: dict[int, ScalarGrid],
    gif_grids: dict[int, ScalarGrid],
    manifest: LayerManifest,
    params: CoveringParams = CoveringParams(),
) -> dict[int, ScalarGrid]:
    """Clamp s_j to s_i - epsilon wherever both indication fields are 1 and
    s_j > s_i - epsilon. Layers are processed innermost first so inner values
    are final before an outer layer is clamped against them; a single pass
    removes all lattice-point violations. Idempotent; never raises any value.
    """
    ref = next(iter(sdf_grids.values()))
    for g in list(sdf_grids.values()) + list(gif_grids.values()):
        if not ref.same_shape(g):
            raise ValueError("all grids must share origin/spacing/dims")
    out = {i: g.values.copy() for i, g in sdf_grids.items()}
    for j in manifest.topological_order():
        layer = manifest.layer(j)
        for i in sorted(layer.covers):
            if j not in out or i not in out:
                raise ManifestError(f"missing SDF grid for pair ({j}, {i})")
            hj = gif_grids[j].values > 0.5 if j in gif_grids else np.ones(ref.dims, bool)
            hi = gif_grids[i].values > 0.5 if i in gif_grids else np.ones(ref.dims, bool)
            limit = out[i] - params.epsilon
            mask = hj & hi & (out[j] > limit)
            out[j][mask] = limit[mask]
    return {i: sdf_grids[i].with_values(v) for i, v in out.items()}


@dataclass(frozen=True)
class SamplePointSet:
    surface_points: np.ndarray  # (n, 3) near-surface samples (normal-perturbed)
    random_points: np.ndarray  # (m, 3) uniform box samples
    sigma: float
    ratio: float


def sample_training_points(
    mesh: TriangleMesh,
    box: Aabb,
    n_surface: int = 20480,
    sigma: float = 0.05,
    ratio: float = 1.0 / 16.0,
    seed: int = 0,
) -> SamplePointSet:
    """Area-uniform surface samples with isotropic Gaussian offsets (std
    `sigma`), plus round(n_surface*ratio) uniform samples in `box`.
    Deterministic per seed."""
    if mesh.num_triangles == 0:
        raise MeshError("cannot sample an empty mesh")
    pts, _ = surface_sample(mesh, n_surface, seed)
    rng = np.random.default_rng(seed + 1)
    perturbed = pts + rng.normal(0.0, sigma, size=pts.shape)
    n_random = int(round(n_surface * ratio))
    lo, hi = box.min, box.max
    random_pts = lo + rng.random((n_random, 3)) * (hi - lo)
    return SamplePointSet(perturbed, random_pts, sigma=sigma, ratio=ratio)
