"""Median-split bounding-volume hierarchy over triangles.

Each node carries far-field aggregates (area-weighted normal sum, area-weighted
centroid, total area) used by the dipole approximation of the winding number.
The tree is flattened into plain arrays so both kernel backends can walk it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import MeshError, TriangleMesh

LEAF_SIZE = 8

# The far-field test compares query distance against ``beta * node.radius``.
# A first-order dipole over a node of area A and geometric radius r has a
# next-order error term of roughly A*r / (4*pi*d^3), so the stored radius is
# inflated to max(r, RADIUS_ERROR_SCALE * cbrt(A*r)): the criterion then only
# accepts the dipole where that term is small. Total error scales roughly with
# the inverse cube of this constant; 4.6 keeps the worst winding error at
# beta=2 below 7e-4 across open and closed fixture meshes (the bare geometric
# radius alone gives ~3e-2) without degenerating near-field evaluation to the
# exact sum.
RADIUS_ERROR_SCALE = 4.6


@dataclass(frozen=True)
class BvhIndex:
    mesh: TriangleMesh
    order: np.ndarray  # leaf-order position -> original triangle id
    nmin: np.ndarray  # (M, 3)
    nmax: np.ndarray  # (M, 3)
    left: np.ndarray  # (M,) int64, -1 for leaves
    right: np.ndarray  # (M,) int64
    start: np.ndarray  # (M,) int64, leaf slice into leaf-order arrays
    count: np.ndarray  # (M,) int64
    centroid: np.ndarray  # (M, 3) area-weighted centroid
    normal: np.ndarray  # (M, 3) aggregate area-weighted normal (m^2)
    area: np.ndarray  # (M,)
    radius: np.ndarray  # (M,) error-calibrated far-field radius (see RADIUS_ERROR_SCALE)
    tv: np.ndarray  # (nt, 9) corners in ORIGINAL triangle order
    tvl: np.ndarray  # (nt, 9) corners in leaf order

    @property
    def num_nodes(self) -> int:
        return len(self.left)

    def bounding_radius(self) -> float:
        return float(self.radius[0])


def build_bvh(
    mesh: TriangleMesh,
    leaf_size: int = LEAF_SIZE,
    radius_scale: float = RADIUS_ERROR_SCALE,
) -> BvhIndex:
    """Deterministic construction: longest-axis median split, stable sorts.

    `radius_scale` controls the error-driven inflation of the far-field
    radius; 0.0 stores the bare geometric radius, which keeps the dipole
    error around a few 1e-2 — acceptable only where the winding number is
    known to be integral (inside/outside tests against a watertight mesh,
    where the decision margin is 0.5)."""
    if radius_scale < 0.0:
        raise ValueError("radius_scale must be non-negative")
    nt = mesh.num_triangles
    if nt == 0:
        raise MeshError("cannot build a BVH over an empty mesh")
    a, b, c = mesh.triangle_corners()
    tmin = np.minimum(np.minimum(a, b), c)
    tmax = np.maximum(np.maximum(a, b), c)
    tcent = (a + b + c) / 3.0
    anorm = 0.5 * np.cross(b - a, c - a)  # norm == triangle area
    tarea = np.linalg.norm(anorm, axis=1)

    nmin, nmax, left, right, start, count = [], [], [], [], [], []
    centroid, normal, area, radius = [], [], [], []
    order: list[np.ndarray] = []
    n_assigned = 0

    def rec(ids: np.ndarray) -> int:
        nonlocal n_assigned
        node = len(left)
        lo = tmin[ids].min(axis=0)
        hi = tmax[ids].max(axis=0)
        asum = float(tarea[ids].sum())
        nsum = anorm[ids].sum(axis=0)
        if asum > 0.0:
            cen = (tarea[ids, None] * tcent[ids]).sum(axis=0) / asum
        else:
            cen = 0.5 * (lo + hi)
        geo = float(np.sqrt(np.maximum((lo - cen) ** 2, (hi - cen) ** 2).sum()))
        rad = max(geo, radius_scale * float(np.cbrt(asum * geo)))
        nmin.append(lo)
        nmax.append(hi)
        centroid.append(cen)
        normal.append(nsum)
        area.append(asum)
        radius.append(rad)
        left.append(-1)
        right.append(-1)
        start.append(0)
        count.append(0)
        if len(ids) <= leaf_size:
            start[node] = n_assigned
            count[node] = len(ids)
            order.append(ids)
            n_assigned += len(ids)
            return node
        ext = tcent[ids].max(axis=0) - tcent[ids].min(axis=0)
        axis = int(np.argmax(ext))
        sorted_ids = ids[np.argsort(tcent[ids, axis], kind="stable")]
        half = len(sorted_ids) // 2
        left[node] = rec(sorted_ids[:half])
        right[node] = rec(sorted_ids[half:])
        return node

    import sys

    limit = sys.getrecursionlimit()
    depth_bound = int(np.ceil(np.log2(max(nt, 2)))) + 64
    if limit < depth_bound + 100:
        sys.setrecursionlimit(depth_bound + 100)
    rec(np.arange(nt, dtype=np.int64))

    order_arr = np.concatenate(order).astype(np.int64)
    tv = np.ascontiguousarray(np.hstack([a, b, c]))
    return BvhIndex(
        mesh=mesh,
        order=order_arr,
        nmin=np.ascontiguousarray(np.array(nmin)),
        nmax=np.ascontiguousarray(np.array(nmax)),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        start=np.array(start, dtype=np.int64),
        count=np.array(count, dtype=np.int64),
        centroid=np.ascontiguousarray(np.array(centroid)),
        normal=np.ascontiguousarray(np.array(normal)),
        area=np.array(area),
        radius=np.array(radius),
        tv=tv,
        tvl=np.ascontiguousarray(tv[order_arr]),
    )
