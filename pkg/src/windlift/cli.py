"""Command line entry points.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime
failure. Failures print one JSON object to stderr so callers can parse them.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .geometry import CutCurve, WindingField, field_raster
from .neural import load_checkpoint, save_checkpoint
from .scenefile import load_scene_dict, scene_from_dict
from .sim import Simulator, run_trajectory, save_trajectory
from .training import (
    TrainConfig,
    load_dataset,
    reconstruction_error,
    train_data_driven,
    train_data_free,
)


def _emit_error(code: str, message: str) -> None:
    sys.stderr.write(json.dumps(
        {"error": {"code": code, "message": message}}) + "\n")


class _Parser(argparse.ArgumentParser):
    """argparse that fails with the machine-readable contract."""

    def error(self, message):
        _emit_error("invalid_config", message)
        raise SystemExit(1)


def _load_train_config(path) -> tuple[TrainConfig, list[CutCurve] | None]:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    variants = raw.pop("curve_variants", None)
    if variants is not None:
        variants = [CutCurve(v["polylines"],
                             alpha_mode=v.get("alpha_mode", "sequential"))
                    for v in variants]
    return TrainConfig.from_dict(raw), variants


def _scene_bundle(path):
    doc = load_scene_dict(path)
    return doc, scene_from_dict(doc)


# -- subcommands ---------------------------------------------------------------

def _cmd_field(args) -> None:
    _, scene = _scene_bundle(args.scene)
    alpha = scene.curve.alpha if args.alpha is None else args.alpha
    field = WindingField(scene.curve.with_alpha(alpha), scene.tip_radius_eps)
    bounds = args.bounds if args.bounds else list(scene.domain.bbox())
    raster = field_raster(field, bounds, args.grid, args.grid)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            np.savetxt(fh, raster, delimiter=",", fmt="%.17g")
    else:
        np.savetxt(sys.stdout, raster, delimiter=",", fmt="%.17g")
    if args.png:
        from PIL import Image

        lo, hi = float(raster.min()), float(raster.max())
        span = hi - lo if hi > lo else 1.0
        gray = np.clip((raster - lo) / span, 0.0, 1.0)
        # image rows run top-down, the raster's run bottom-up
        img = Image.fromarray((gray[::-1] * 255.0).astype(np.uint8), "L")
        img.save(args.png)


def _cmd_train_free(args) -> None:
    doc, scene = _scene_bundle(args.scene)
    config, variants = _load_train_config(args.config)
    curves = variants if variants else scene.curve
    basis, stats = train_data_free(scene.domain, curves, scene.material,
                                   config,
                                   pinned_regions=doc.get("pinned", ()))
    save_checkpoint(args.out, basis)
    print(json.dumps({"checkpoint": args.out, "steps": stats["steps"],
                      "final_loss": stats["loss"][-1] if stats["loss"]
                      else None,
                      "seconds": stats["seconds"]}))


def _cmd_train_data(args) -> None:
    ds = load_dataset(args.dataset)
    config, _ = _load_train_config(args.config)
    basis, _, stats = train_data_driven(ds, config)
    save_checkpoint(args.out, basis)
    print(json.dumps({"checkpoint": args.out, "steps": stats["steps"],
                      "final_loss": stats["loss"][-1] if stats["loss"]
                      else None,
                      "seconds": stats["seconds"]}))


def _cmd_simulate(args) -> None:
    _, scene = _scene_bundle(args.scene)
    basis = load_checkpoint(args.checkpoint)
    sim = Simulator(basis, scene)
    if args.alpha is not None:
        sim.set_cut(alpha=args.alpha)
    traj = run_trajectory(sim, args.frames, stride=args.stride)
    save_trajectory(args.out, traj)
    print(json.dumps({"out": args.out, "frames": args.frames,
                      "stride": args.stride}))


def _cmd_eval(args) -> None:
    basis = load_checkpoint(args.checkpoint)
    ds = load_dataset(args.dataset)
    mse = reconstruction_error(basis, ds, ablate_height=args.ablate_height)
    print(json.dumps({"mse": mse}))


def _cmd_serve(args) -> None:
    from .scenefile import load_scene
    from .service import SimulationSession, serve

    scene = load_scene(args.scene) if args.scene else None
    session = SimulationSession(load_checkpoint(args.checkpoint), scene=scene,
                                stride=args.stride, reference=args.reference)
    serve(session, host=args.host, port=args.port, fps=args.fps)


# -- parser ---------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="windlift")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("field", help="rasterize the cut's winding field")
    p.add_argument("--scene", required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--bounds", type=float, nargs=4, default=None,
                   metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.add_argument("--png", default=None, help="optional grayscale image")
    p.set_defaults(func=_cmd_field)

    p = sub.add_parser("train-free", help="energy-based training")
    p.add_argument("--scene", required=True)
    p.add_argument("--config", required=True, help="TOML training options")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.set_defaults(func=_cmd_train_free)

    p = sub.add_parser("train-data", help="snapshot-fitting training")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", required=True, help="TOML training options")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.set_defaults(func=_cmd_train_data)

    p = sub.add_parser("simulate", help="run frames and write a trajectory")
    p.add_argument("--scene", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--alpha", type=float, default=None,
                   help="override the scene's cut fraction")
    p.add_argument("--out", required=True, help="trajectory path (JSONL)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("eval", help="basis reconstruction error on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--ablate-height", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="websocket simulation service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--scene", default=None, help="optional initial scene")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--reference", action="store_true",
                   help="zero wall-clock stats for reproducible streams")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    try:
        args.func(args)
    except (ValueError, OSError) as err:
        _emit_error("invalid_config", str(err))
        return 1
    except KeyboardInterrupt:
        return 0
    except Exception as err:  # noqa: BLE001 - contract maps the rest to 2
        _emit_error("runtime_failure", f"{type(err).__name__}: {err}")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
