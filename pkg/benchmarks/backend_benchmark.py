#!/usr/bin/env python3
"""Throughput comparison between the compiled kernels and the numpy fallback.

Runs the three hot query kernels (exact winding, dipole-accelerated winding,
closest point) over the same mesh/query sets with both backends and prints
queries/second plus the speedup factor.

Usage: python3 benchmarks/backend_benchmark.py [--tris 20000] [--queries 20000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from layerfields._kernels import fastcore, purepy
from layerfields.bvh import build_bvh
from layerfields.procedural import make_uv_sphere


def subdivided_sphere(target_tris: int):
    n_lat = max(8, int(np.sqrt(target_tris / 4)))
    return make_uv_sphere(0.3, n_lat=n_lat, n_lon=2 * n_lat)


def bench(label, fn, n_queries, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    rate = n_queries / best
    print(f"  {label:<28s} {best:8.3f} s   {rate:12,.0f} q/s")
    return rate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tris", type=int, default=20_000)
    ap.add_argument("--queries", type=int, default=20_000)
    ap.add_argument("--beta", type=float, default=2.0)
    args = ap.parse_args()

    mesh = subdivided_sphere(args.tris)
    bvh = build_bvh(mesh)
    rng = np.random.default_rng(0)
    pts = np.ascontiguousarray(rng.uniform(-0.6, 0.6, (args.queries, 3)))
    print(f"mesh: {mesh.num_triangles} triangles, {args.queries} queries\n")

    rates: dict[tuple[str, str], float] = {}
    for impl, name in ((fastcore, "compiled"), (purepy, "pure")):
        print(f"[{name}]")
        out = np.empty(len(pts))

        rates[(name, "winding exact")] = bench(
            "winding exact", lambda: impl.solid_angle_sum(bvh.tv, pts, out), len(pts)
        )
        rates[(name, "winding fast")] = bench(
            "winding fast (beta=2)",
            lambda: impl.winding_fast(
                bvh.nmin, bvh.nmax, bvh.left, bvh.right, bvh.start, bvh.count,
                bvh.centroid, bvh.normal, bvh.radius, bvh.tvl, pts, args.beta, out,
            ),
            len(pts),
        )
        q = np.empty_like(pts)
        t = np.empty(len(pts), dtype=np.int64)
        rates[(name, "closest point")] = bench(
            "closest point",
            lambda: impl.closest_point(
                bvh.nmin, bvh.nmax, bvh.left, bvh.right, bvh.start, bvh.count,
                bvh.tvl, pts, q, out, t,
            ),
            len(pts),
        )
        print()

    print("speedup (compiled / pure):")
    for kernel in ("winding exact", "winding fast", "closest point"):
        ratio = rates[("compiled", kernel)] / rates[("pure", kernel)]
        print(f"  {kernel:<28s} {ratio:6.1f}x")


if __name__ == "__main__":
    main()
