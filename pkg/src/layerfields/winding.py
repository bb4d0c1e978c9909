"""Generalized winding number W(p) and closest-point queries.

W(p) is the sum of signed solid angles of all triangles at p, divided by 4*pi:
fractional for open meshes, near-integer for closed ones. `winding_fast`
approximates far BVH nodes by a first-order dipole term with accuracy knob
beta (beta=0 falls back to exact evaluation in original triangle order, so it
matches `winding_exact` bitwise).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels
from .bvh import BvhIndex, build_bvh  # noqa: F401  (re-exported)
from .mesh import TriangleMesh

FOUR_PI = 4.0 * np.pi
ON_SURFACE_EPS = 1e-9  # m; queries closer than this are offset (see winding_at)
ON_SURFACE_OFFSET = 1e-8  # m

DEFAULT_BETA = 2.0


def _as_points(p) -> tuple[np.ndarray, bool]:
    arr = np.ascontiguousarray(np.asarray(p, dtype=np.float64))
    if arr.ndim == 1:
        return arr.reshape(1, 3), True
    return arr.reshape(-1, 3), False


def _run_chunked(fn, pts: np.ndarray, outs: list[np.ndarray], threads: int) -> None:
    """Split the query set row-wise across threads; per-row results are
    independent, so the output is bitwise identical for any thread count."""
    n = len(pts)
    if threads <= 1 or n < 2 * threads or _kernels.impl.NAME != "compiled":
        fn(pts, *outs)
        return
    bounds = np.linspace(0, n, threads + 1, dtype=int)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        futs = [
            ex.submit(fn, pts[lo:hi], *[o[lo:hi] for o in outs])
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        for f in futs:
            f.result()


def triangle_solid_angle(a, b, c, p) -> float:
    """Signed solid angle (steradians) subtended by oriented triangle (a,b,c)
    at p; antisymmetric under orientation flip; 0 for degenerate triangles and
    for p coincident with a corner."""
    tv = np.ascontiguousarray(
        np.concatenate(
            [np.asarray(a, float), np.asarray(b, float), np.asarray(c, float)]
        ).reshape(1, 9)
    )
    pts, _ = _as_points(p)
    out = np.empty(len(pts))
    _kernels.impl.solid_angle_sum(tv, pts, out)
    return float(out[0]) if len(pts) == 1 else out


def winding_exact(mesh: TriangleMesh, p, threads: int = 1):
    """Exact W(p); summation in ascending triangle-index order."""
    pts, scalar = _as_points(p)
    a, b, c = mesh.triangle_corners()
    tv = np.ascontiguousarray(np.hstack([a, b, c]))
    out = np.empty(len(pts))
    _run_chunked(lambda P, O: _kernels.impl.solid_angle_sum(tv, P, O), pts, [out], threads)
    w = out / FOUR_PI
    return float(w[0]) if scalar else w


def winding_fast(bvh: BvhIndex, p, beta: float = DEFAULT_BETA, threads: int = 1):
    """Approximate W(p): nodes farther than beta * node_radius from p are
    replaced by their dipole term. beta = 0 forces exact evaluation."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    pts, scalar = _as_points(p)
    out = np.empty(len(pts))
    if beta == 0.0:
        _run_chunked(
            lambda P, O: _kernels.impl.solid_angle_sum(bvh.tv, P, O), pts, [out], threads
        )
    else:
        def fn(P, O):
            _kernels.impl.winding_fast(
                bvh.nmin, bvh.nmax, bvh.left, bvh.right, bvh.start, bvh.count,
                bvh.centroid, bvh.normal, bvh.radius, bvh.tvl, P, beta, O,
            )

        _run_chunked(fn, pts, [out], threads)
    w = out / FOUR_PI
    return float(w[0]) if scalar else w


def closest_point(bvh: BvhIndex, p, threads: int = 1):
    """Globally nearest surface point. Returns (point, distance, triangle id);
    batched inputs give arrays. Triangle ids refer to the original mesh."""
    pts, scalar = _as_points(p)
    out_q = np.empty((len(pts), 3))
    out_d = np.empty(len(pts))
    out_t = np.empty(len(pts), dtype=np.int64)

    def fn(P, Q, D, T):
        _kernels.impl.closest_point(
            bvh.nmin, bvh.nmax, bvh.left, bvh.right, bvh.start, bvh.count,
            bvh.tvl, P, Q, D, T,
        )

    _run_chunked(fn, pts, [out_q, out_d, out_t], threads)
    tri = bvh.order[out_t]
    if scalar:
        return out_q[0], float(out_d[0]), int(tri[0])
    return out_q, out_d, tri


def second_nearest_distance(bvh: BvhIndex, p, foot, rho: float, cap=None, threads: int = 1):
    """Distance to the nearest surface point at least `rho` away from `foot`
    (the first closest point). Used as a medial-axis proxy: near the medial
    axis two distinct surface regions are nearly equidistant, so this second
    distance nearly coincides with the first.

    `cap` (scalar or per-point) clips the search: the result saturates at cap
    where nothing closer exists, which prunes the traversal dramatically when
    only "is there a second sheet within cap?" is asked. Returns inf (the
    default cap) when no surface point outside the exclusion ball exists."""
    pts, scalar = _as_points(p)
    foot_pts = np.ascontiguousarray(np.atleast_2d(np.asarray(foot, dtype=np.float64)))
    caps = np.broadcast_to(
        np.inf if cap is None else np.asarray(cap, dtype=np.float64), (len(pts),)
    )
    caps = np.ascontiguousarray(caps)
    out = np.empty(len(pts))

    def fn(P, F, C, O):
        _kernels.impl.second_nearest(
            bvh.nmin, bvh.nmax, bvh.left, bvh.right, bvh.start, bvh.count,
            bvh.tvl, P, F, float(rho), C, O,
        )

    _run_chunked(fn, pts, [foot_pts, caps, out], threads)
    if scalar:
        return float(out[0])
    return out


def winding_at(bvh: BvhIndex, p, beta: float = DEFAULT_BETA) -> tuple[float, bool]:
    """W(p) with on-surface handling: if p lies within 1e-9 m of the surface,
    the query is answered at p offset 1e-8 m along the local triangle normal
    and flagged. Keeps downstream grid sampling free of undefined values."""
    p = np.asarray(p, dtype=np.float64).reshape(3)
    q, d, tri = closest_point(bvh, p)
    if d >= ON_SURFACE_EPS:
        return float(winding_fast(bvh, p, beta=beta)), False
    a, b, c = (bvh.mesh.vertices[i] for i in bvh.mesh.triangles[tri])
    n = np.cross(b - a, c - a)
    norm = np.linalg.norm(n)
    if norm == 0.0:
        n = np.array([0.0, 0.0, 1.0])
    else:
        n = n / norm
    return float(winding_fast(bvh, p + ON_SURFACE_OFFSET * n, beta=beta)), True
