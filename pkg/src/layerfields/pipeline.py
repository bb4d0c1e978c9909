"""Manifest-driven pipeline: meshes -> fields -> closed extractions + SDF grids
-> covering enforcement -> trimmed garments -> reports.

Every stage reads its inputs from and writes its artifacts to the output
directory, so stages are independently invocable. A `PIPELINE.partial` marker
names the stage in flight; it is removed only when the requested stages all
succeed. All randomness is seeded from the config.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fields as F
from . import layering as L
from . import lattice as G
from . import metrics as M
from . import trim as T
from .bvh import build_bvh
from .mesh import Aabb, TriangleMesh, load_obj, save_obj
from .winding import winding_fast

STAGES = ("fields", "extract", "enforce", "trim", "metrics")


class PipelineError(Exception):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


@dataclass(frozen=True)
class PipelineConfig:
    manifest_path: Path
    out_dir: Path
    resolution: int | None = None  # None: manifest value or 128
    beta: float = 2.0
    seed: int = 0
    threads: int = 1
    stages: tuple[str, ...] = STAGES
    penetration_samples: int = 200_000

    def __post_init__(self):
        for s in self.stages:
            if s not in STAGES:
                raise ValueError(f"unknown stage {s!r}; valid: {', '.join(STAGES)}")
        if self.resolution is not None and self.resolution < 32:
            raise ValueError("resolution must be >= 32 per axis")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


class _Ctx:
    """Shared state resolved once per run: manifest, params, grid spec."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.manifest, extras = L.load_manifest(cfg.manifest_path)
        p = extras.get("params", {})
        self.field_params = F.FieldParams(
            w_h=float(p.get("w_h", 0.75)), delta=float(p.get("delta", 0.01))
        )
        self.covering_params = L.CoveringParams(
            lam=float(p.get("lambda", 0.2)), epsilon=float(p.get("epsilon", 1e-3))
        )
        g = extras.get("grid", {})
        res = cfg.resolution if cfg.resolution is not None else int(g.get("resolution", 128))
        if res < 32:
            raise ValueError("resolution must be >= 32 per axis")
        self.margin = float(g.get("margin", F.GRID_MARGIN))
        base = cfg.manifest_path.parent
        self.meshes: dict[int, TriangleMesh] = {}
        for layer in self.manifest.layers:
            mp = Path(layer.mesh_path)
            if not mp.is_absolute():
                mp = base / mp
            self.meshes[layer.id] = load_obj(mp, name=layer.name)
        bounds = None
        for m in self.meshes.values():
            bounds = m.bounds() if bounds is None else bounds.union(m.bounds())
        self.spec = G.GridSpec(bounds.expanded(self.margin), res)

    def prefix(self, layer_id: int) -> Path:
        layer = self.manifest.layer(layer_id)
        return self.cfg.out_dir / f"layer{layer.id:02d}_{layer.name}"

    def grid_path(self, layer_id: int, kind: str) -> Path:
        return self.prefix(layer_id).with_name(self.prefix(layer_id).name + f"_{kind}")

    def load_grid(self, layer_id: int, kind: str) -> G.ScalarGrid:
        return G.load_grid(self.grid_path(layer_id, kind))


def _stage_fields(ctx: _Ctx) -> None:
    cfg = ctx.cfg
    for layer in ctx.manifest.layers:
        mesh = ctx.meshes[layer.id]
        bvh = build_bvh(mesh)
        w = F.winding_grid(bvh, ctx.spec, beta=cfg.beta, threads=cfg.threads)
        occ = w.with_values(w.values - 0.5)
        G.save_grid(occ, ctx.grid_path(layer.id, "occupancy"))
        if layer.id == L.BODY_LAYER_ID:
            # the body's indication field is 1 everywhere
            ones = w.with_values(np.ones(w.dims))
            G.save_grid(ones, ctx.grid_path(layer.id, "gif_arg"))
            G.save_grid(ones, ctx.grid_path(layer.id, "gif"))
        else:
            g = w.with_values(F.gif_argument(w.values, ctx.field_params))
            G.save_grid(g, ctx.grid_path(layer.id, "gif_arg"))
            h = w.with_values((g.values > 0).astype(np.float64))
            G.save_grid(h, ctx.grid_path(layer.id, "gif"))
        _log(f"  fields: layer {layer.id} ({layer.name}) done")


def _stage_extract(ctx: _Ctx) -> None:
    cfg = ctx.cfg
    for layer in ctx.manifest.layers:
        occ = ctx.load_grid(layer.id, "occupancy")
        closed = G.marching_cubes(occ.with_values(-occ.values), iso=0.0)
        if closed.num_triangles == 0:
            raise ValueError(f"layer {layer.id}: occupancy level set absent (grid too coarse)")
        closed = TriangleMesh(closed.vertices, closed.triangles, name=f"{layer.name}_closed")
        save_obj(closed, ctx.prefix(layer.id).with_name(ctx.prefix(layer.id).name + "_closed.obj"))
        # bare radius: winding of the closed mesh is integral, sign-safe
        cb = build_bvh(closed, radius_scale=0.0)
        pts = occ.lattice_points()
        s = F.signed_distance_to_closed(cb, pts, beta=cfg.beta, threads=cfg.threads)
        sdf = occ.with_values(s.reshape(occ.dims, order="F"))
        G.save_grid(sdf, ctx.grid_path(layer.id, "sdf_pre"))
        _log(f"  extract: layer {layer.id} closed mesh {closed.num_triangles} tris")


def _stage_enforce(ctx: _Ctx) -> None:
    sdf = {l.id: ctx.load_grid(l.id, "sdf_pre") for l in ctx.manifest.layers}
    gif = {l.id: ctx.load_grid(l.id, "gif") for l in ctx.manifest.layers}
    before = L.grid_covering_report(sdf, gif, ctx.manifest, ctx.covering_params)
    enforced = L.enforce_covering(sdf, gif, ctx.manifest, ctx.covering_params)
    after = L.grid_covering_report(enforced, gif, ctx.manifest, ctx.covering_params)
    for lid, grid in enforced.items():
        G.save_grid(grid, ctx.grid_path(lid, "sdf_post"))
    report = {
        "epsilon": ctx.covering_params.epsilon,
        "before": before.to_dict(),
        "after": after.to_dict(),
    }
    (ctx.cfg.out_dir / "covering_report.json").write_text(json.dumps(report, indent=2) + "\n")
    _log(
        f"  enforce: lattice hinge {before.hinge_total:.6g} -> {after.hinge_total:.6g}, "
        f"violations {before.violation_count} -> {after.violation_count}"
    )


def _stage_trim(ctx: _Ctx) -> None:
    cfg = ctx.cfg
    for layer in ctx.manifest.layers:
        sdf = ctx.load_grid(layer.id, "sdf_post")
        extracted = G.marching_cubes(sdf, iso=0.0)
        if extracted.num_triangles == 0:
            raise ValueError(f"layer {layer.id}: post-enforcement SDF has no zero level set")
        if layer.id == L.BODY_LAYER_ID:
            trimmed = TriangleMesh(extracted.vertices, extracted.triangles,
                                   name=f"{layer.name}_trimmed")
            n_loops = 0
        else:
            bvh = build_bvh(ctx.meshes[layer.id])

            def g(pts, _bvh=bvh):
                w = winding_fast(_bvh, pts, beta=cfg.beta, threads=cfg.threads)
                return F.gif_argument(w, ctx.field_params)

            result = T.trim_by_gif(extracted, g)
            trimmed = TriangleMesh(result.mesh.vertices, result.mesh.triangles,
                                   name=f"{layer.name}_trimmed")
            n_loops = len(result.boundary_loops)
        save_obj(trimmed, ctx.prefix(layer.id).with_name(ctx.prefix(layer.id).name + "_trimmed.obj"))
        _log(f"  trim: layer {layer.id} -> {trimmed.num_triangles} tris, {n_loops} loops")


def _stage_metrics(ctx: _Ctx) -> None:
    cfg = ctx.cfg
    gif = {l.id: ctx.load_grid(l.id, "gif") for l in ctx.manifest.layers}
    sdf_post = {l.id: ctx.load_grid(l.id, "sdf_post") for l in ctx.manifest.layers}
    trimmed = {
        l.id: load_obj(ctx.prefix(l.id).with_name(ctx.prefix(l.id).name + "_trimmed.obj"))
        for l in ctx.manifest.layers
    }
    bvhs = {l.id: build_bvh(ctx.meshes[l.id]) for l in ctx.manifest.layers}

    def strict_overlap(j, i):
        def fn(pts):
            hj = G.trilinear(gif[j], pts) >= 1.0 - 1e-9
            hi = G.trilinear(gif[i], pts) >= 1.0 - 1e-9
            return (hj & hi).astype(float)

        return fn

    pairs = []
    for j, i in ctx.manifest.pairs():
        # before: original meshes; outer signed distance from the open mesh
        # (unsigned closest-point distance, negative where winding > 0.5)
        def outer_sdf_mesh(pts, _b=bvhs[j]):
            from .winding import closest_point as _cp

            _, d, _ = _cp(_b, pts, threads=cfg.threads)
            w = winding_fast(_b, pts, beta=cfg.beta, threads=cfg.threads)
            return np.where(w > 0.5, -d, d)

        before = M.max_penetration(
            ctx.meshes[i], outer_sdf_mesh, strict_overlap(j, i),
            n=cfg.penetration_samples, seed=cfg.seed,
        )
        after = M.max_penetration(
            trimmed[i], lambda pts: G.trilinear(sdf_post[j], pts), strict_overlap(j, i),
            n=cfg.penetration_samples, seed=cfg.seed,
        )
        pairs.append({
            "outer": j,
            "inner": i,
            "max_penetration_before_cm": before,
            "max_penetration_after_cm": after,
        })
        _log(f"  metrics: pair ({j} covers {i}) penetration {before:.3f} -> {after:.3f} cm")
    doc = {
        "n_samples": cfg.penetration_samples,
        "seed": cfg.seed,
        "pairs": pairs,
        "max_penetration_before_cm": max((p["max_penetration_before_cm"] for p in pairs), default=0.0),
        "max_penetration_after_cm": max((p["max_penetration_after_cm"] for p in pairs), default=0.0),
    }
    (ctx.cfg.out_dir / "metrics.json").write_text(json.dumps(doc, indent=2) + "\n")


_STAGE_FNS = {
    "fields": _stage_fields,
    "extract": _stage_extract,
    "enforce": _stage_enforce,
    "trim": _stage_trim,
    "metrics": _stage_metrics,
}


def run_pipeline(cfg: PipelineConfig) -> None:
    """Run the requested stages in canonical order; on failure, leave a
    `PIPELINE.partial` marker naming the failed stage and re-raise."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    marker = cfg.out_dir / "PIPELINE.partial"
    ctx = _Ctx(cfg)
    requested = [s for s in STAGES if s in cfg.stages]
    for stage in requested:
        marker.write_text(stage + "\n")
        t0 = time.perf_counter()
        _log(f"[{stage}] start")
        try:
            _STAGE_FNS[stage](ctx)
        except Exception as exc:
            _log(f"[{stage}] FAILED after {time.perf_counter() - t0:.2f}s: {exc}")
            raise PipelineError(stage, exc) from exc
        _log(f"[{stage}] done in {time.perf_counter() - t0:.2f}s")
    if marker.exists():
        marker.unlink()
