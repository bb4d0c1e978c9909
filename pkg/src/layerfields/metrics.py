"""Evaluation metrics: Chamfer distance, point-to-surface error, maximum
penetration depth, and grid L1 comparison. Distances are internal meters;
reported values are centimeters."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .bvh import build_bvh
from .lattice import ScalarGrid
from .mesh import MeshError, TriangleMesh, surface_sample
from .winding import closest_point

DEFAULT_SAMPLES = 100_000
DEFAULT_PENETRATION_SAMPLES = 200_000
M_TO_CM = 100.0


@dataclass(frozen=True)
class MetricsReport:
    chamfer_cm: float
    p2s_cm: float
    p2s_reverse_cm: float
    max_penetration_cm: float | None
    n_samples: int
    seed: int
    direction: str = "recon->truth"

    def to_dict(self) -> dict:
        return asdict(self)


def p2s(
    source: TriangleMesh,
    target: TriangleMesh,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads: int = 1,
) -> float:
    """Mean unsigned distance (cm) from n area-uniform samples of `source`
    to the `target` surface."""
    if source.num_triangles == 0 or target.num_triangles == 0:
        raise MeshError("p2s requires two non-empty meshes")
    pts, _ = surface_sample(source, n, seed)
    _, d, _ = closest_point(build_bvh(target), pts, threads=threads)
    return float(d.mean()) * M_TO_CM


def chamfer(
    a: TriangleMesh,
    b: TriangleMesh,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads: int = 1,
) -> float:
    """Symmetrized point-to-surface distance (cm); the seed applies per
    direction, so chamfer(a, b) == chamfer(b, a) bitwise."""
    return 0.5 * (p2s(a, b, n, seed, threads) + p2s(b, a, n, seed, threads))


def max_penetration(
    inner: TriangleMesh,
    outer_sdf,
    overlap=None,
    n: int = DEFAULT_PENETRATION_SAMPLES,
    seed: int = 0,
) -> float:
    """Max positive outer-layer SDF (cm) over area-uniform samples of the
    inner surface restricted to overlap(p) = 1; zero when the covering
    relationship holds there (or no sample overlaps)."""
    if inner.num_triangles == 0:
        raise MeshError("max_penetration requires a non-empty inner mesh")
    pts, _ = surface_sample(inner, n, seed)
    if overlap is not None:
        mask = np.asarray(overlap(pts)).reshape(-1) > 0.5
        pts = pts[mask]
    if len(pts) == 0:
        return 0.0
    s = np.asarray(outer_sdf(pts), dtype=np.float64).reshape(-1)
    return float(np.maximum(s, 0.0).max()) * M_TO_CM


def field_l1(a: ScalarGrid, b: ScalarGrid) -> float:
    """Mean absolute difference over all lattice points."""
    if not a.same_shape(b):
        raise ValueError("field_l1 requires identically shaped grids")
    return float(np.abs(a.values - b.values).mean())


def compare_meshes(
    recon: TriangleMesh,
    truth: TriangleMesh,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads: int = 1,
) -> MetricsReport:
    fwd = p2s(recon, truth, n, seed, threads)
    rev = p2s(truth, recon, n, seed, threads)
    return MetricsReport(
        chamfer_cm=0.5 * (fwd + rev),
        p2s_cm=fwd,
        p2s_reverse_cm=rev,
        max_penetration_cm=None,
        n_samples=n,
        seed=seed,
    )


def hausdorff(a: TriangleMesh, b: TriangleMesh, n: int = 50_000, seed: int = 0,
              threads: int = 1) -> float:
    """Symmetric sampled Hausdorff distance in meters (test/diagnostic aid)."""
    pa, _ = surface_sample(a, n, seed)
    pb, _ = surface_sample(b, n, seed)
    _, da, _ = closest_point(build_bvh(b), pa, threads=threads)
    _, db, _ = closest_point(build_bvh(a), pb, threads=threads)
    return float(max(da.max(), db.max()))
