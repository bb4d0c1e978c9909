"""Command-line interface.

Subcommands mirror the pipeline stages so each step is independently
invocable: pipeline, fields, extract, enforce, trim, metrics, sample-points.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .layering import sample_training_points
from .mesh import load_obj
from .metrics import compare_meshes
from .pipeline import STAGES, PipelineConfig, PipelineError, run_pipeline


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", required=True, type=Path, help="layer manifest JSON")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--res", type=int, default=None, help="grid resolution per axis (>= 32)")
    p.add_argument("--beta", type=float, default=2.0, help="fast-winding accuracy knob")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="worker cap; results are thread-count independent")


def _pipeline_cfg(args, stages) -> PipelineConfig:
    return PipelineConfig(
        manifest_path=args.manifest,
        out_dir=args.out,
        resolution=args.res,
        beta=args.beta,
        seed=args.seed,
        threads=args.threads,
        stages=tuple(stages),
    )


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="layerfields",
                                 description="Multi-layer garment implicit-field pipeline")
    ap.add_argument("--version", action="version", version=f"layerfields {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="run the full (or stage-gated) pipeline")
    _add_pipeline_args(p)
    p.add_argument("--stages", default=",".join(STAGES),
                   help=f"comma-separated subset of: {','.join(STAGES)}")

    for stage in STAGES[:-1]:
        sp = sub.add_parser(stage, help=f"run only the '{stage}' stage")
        _add_pipeline_args(sp)

    pm = sub.add_parser("metrics", help="compare two meshes, or run the pipeline metrics stage")
    pm.add_argument("--recon", type=Path, help="reconstructed OBJ")
    pm.add_argument("--truth", type=Path, help="ground-truth OBJ")
    pm.add_argument("--n", type=int, default=100_000, help="surface samples per direction")
    pm.add_argument("--seed", type=int, default=0)
    pm.add_argument("--threads", type=int, default=1)
    pm.add_argument("--out", type=Path, default=None, help="report JSON (default: stdout)")
    pm.add_argument("--manifest", type=Path, help="run the pipeline metrics stage instead")
    pm.add_argument("--pipeline-out", type=Path, help="pipeline output dir (with --manifest)")
    pm.add_argument("--res", type=int, default=None)
    pm.add_argument("--beta", type=float, default=2.0)

    ps = sub.add_parser("sample-points", help="training-style point sampling for one mesh")
    ps.add_argument("--mesh", required=True, type=Path)
    ps.add_argument("--n", type=int, default=20480, help="near-surface sample count")
    ps.add_argument("--sigma", type=float, default=0.05, help="normal perturbation std (m)")
    ps.add_argument("--ratio", type=float, default=1.0 / 16.0, help="random:near-surface ratio")
    ps.add_argument("--margin", type=float, default=0.10, help="box expansion around the mesh")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--out", required=True, type=Path, help="output .npz")

    args = ap.parse_args(argv)
    try:
        if args.command == "pipeline":
            stages = [s.strip() for s in args.stages.split(",") if s.strip()]
            run_pipeline(_pipeline_cfg(args, stages))
        elif args.command in STAGES[:-1]:
            run_pipeline(_pipeline_cfg(args, [args.command]))
        elif args.command == "metrics":
            if args.manifest is not None:
                if args.pipeline_out is None:
                    ap.error("--pipeline-out is required with --manifest")
                cfg = PipelineConfig(
                    manifest_path=args.manifest, out_dir=args.pipeline_out,
                    resolution=args.res, beta=args.beta, seed=args.seed,
                    threads=args.threads, stages=("metrics",),
                )
                run_pipeline(cfg)
            else:
                if args.recon is None or args.truth is None:
                    ap.error("metrics needs --recon and --truth (or --manifest)")
                report = compare_meshes(
                    load_obj(args.recon), load_obj(args.truth),
                    n=args.n, seed=args.seed, threads=args.threads,
                )
                text = json.dumps(report.to_dict(), indent=2) + "\n"
                if args.out is not None:
                    args.out.write_text(text)
                else:
                    sys.stdout.write(text)
        elif args.command == "sample-points":
            mesh = load_obj(args.mesh)
            box = mesh.bounds().expanded(args.margin)
            ss = sample_training_points(
                mesh, box, n_surface=args.n, sigma=args.sigma, ratio=args.ratio, seed=args.seed
            )
            np.savez(
                args.out,
                surface_points=ss.surface_points,
                random_points=ss.random_points,
                sigma=ss.sigma,
                ratio=ss.ratio,
                seed=args.seed,
            )
            print(
                f"wrote {len(ss.surface_points)} near-surface + "
                f"{len(ss.random_points)} random points to {args.out}"
            )
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
