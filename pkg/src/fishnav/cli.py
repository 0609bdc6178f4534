"""Command line entry point: calibrate, render, run, sequence, evaluate.

Exit codes: 0 success, 1 failed or partially failed run, 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import ConfigError, FishnavError, InvalidInputError

log = logging.getLogger("fishnav")

SUITES = ("floor", "corridor", "doors", "all")


def _config(args):
    from .pipeline import PipelineConfig

    over = {"seed": args.seed, "workers": args.workers, "output_dir": args.out}
    if args.config:
        return PipelineConfig.load(args.config, **over)
    return PipelineConfig.from_dict({}, **over)


def _suite(name):
    from .synthetic.suites import corridor_scene, door_suite, floor_suite

    if name == "floor":
        return floor_suite()
    if name == "corridor":
        return [corridor_scene()]
    if name == "doors":
        return door_suite()
    return floor_suite() + [corridor_scene()] + door_suite()


def cmd_calibrate(args):
    from .calibration import calibrate, load_correspondences, save_correspondences, \
        synthetic_correspondences
    from .synthetic.scene import default_extrinsic

    if args.correspondences:
        corrs = load_correspondences(args.correspondences)
    else:
        T = default_extrinsic()
        rng = np.random.default_rng(args.seed or 0)
        corrs = synthetic_correspondences(T.rotation, T.translation, args.synthetic, rng, args.noise_deg)
    res = calibrate(corrs)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(out / "extrinsic.json", res.to_dict())
    if not args.correspondences:
        save_correspondences(corrs, out / "correspondences.json")
    print(f"rotation rms {res.rotation_rms:.3g}, translation rms {res.translation_rms:.3g}; "
          f"wrote {out / 'extrinsic.json'}")
    return 0


def cmd_render(args):
    from .synthetic.render import render_scene
    from .synthetic.scene import load_scene, save_scene

    scenes = [load_scene(p) for p in args.scene] if args.scene else _suite(args.suite)
    out = Path(args.out or "rendered")
    out.mkdir(parents=True, exist_ok=True)
    frames = []
    for sc in scenes:
        fr = render_scene(sc)
        d = out / sc.name
        d.mkdir(exist_ok=True)
        save_scene(sc, d / "scene.json")
        io.write_depth_png(d / "depth.png", fr.depth)
        io.write_rgb_png(d / "fisheye.png", fr.fisheye)
        io.write_mask_png(d / "gt_floor.png", fr.gt_floor_mask)
        io.write_gray_png(d / "gt_doors.png", np.minimum(fr.gt_door_regions * 40, 255))
        io.write_ply(d / "cloud.ply", fr.cloud.points)
        frames.append({"id": sc.name, "scene": f"{sc.name}/scene.json", "depth": f"{sc.name}/depth.png",
                       "fisheye": f"{sc.name}/fisheye.png"})
        print(f"{sc.name}: visible floor {fr.gt_visible_floor_area:.2f} m2")
    io.write_json(out / "manifest.json", {"frames": frames})
    return 0


def cmd_run(args):
    from .pipeline import FrameInput, run_frame, save_frame_outputs
    from .synthetic.render import render_scene
    from .synthetic.scene import load_scene

    config = _config(args)
    scene = load_scene(args.scene) if args.scene else None
    truth = render_scene(scene) if scene is not None else None
    if args.depth and args.fisheye:
        depth, rgb = io.read_depth_png(args.depth), io.read_rgb_png(args.fisheye)
    elif truth is not None:
        depth, rgb = truth.depth, truth.fisheye
    else:
        raise InvalidInputError("run needs --scene or both --depth and --fisheye")
    fid = args.frame_id or (scene.name if scene else Path(args.fisheye).stem)
    frame = FrameInput(fid, depth, rgb, scene, truth)
    res = run_frame(config, frame)
    out = Path(args.out or config.output_dir)
    save_frame_outputs(res, frame, out, config.overlays)
    io.write_json(out / "result.json", res.to_dict())
    tm = {"stages_ms": {k: round(v, 3) for k, v in res.timings.items()}}
    if "door_seconds" in res.metrics:
        tm["door_seconds"] = {k: round(v, 3) for k, v in res.metrics["door_seconds"].items()}
    io.write_json(out / "timings.json", tm)
    from .navigation import format_commands
    print(format_commands(fid, res.commands))
    return 0


def cmd_sequence(args):
    from .pipeline import run_sequence

    config = _config(args)
    out = Path(args.out or config.output_dir)
    report = run_sequence(config, args.manifest, out)
    for text in report.tables.values():
        print(text)
    for f in report.failures:
        print(f"FAILED {f['frame_id']} at {f['stage']}: {f['error']}", file=sys.stderr)
    print(f"{len(report.frames)} frames ok, {len(report.failures)} failed; report in {out / 'report.json'}")
    return report.status


def cmd_evaluate(args):
    from .synthetic.metrics import evaluate_floor
    from .synthetic.render import render_scene
    from .synthetic.scene import load_scene

    fr = render_scene(load_scene(args.scene))
    mask = io.read_mask_png(args.mask)
    if mask.shape != fr.gt_floor_mask.shape:
        raise InvalidInputError(f"mask is {mask.shape[1]}x{mask.shape[0]}, scene renders "
                                f"{fr.gt_floor_mask.shape[1]}x{fr.gt_floor_mask.shape[0]}")
    m = evaluate_floor(mask, fr)
    d = {k: round(v, 6) for k, v in m.to_dict().items()}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        io.write_json(Path(args.out) / "floor_metrics.json", d)
    print(" ".join(f"{k}={v:.3f}" for k, v in d.items()))
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config JSON")
    common.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
    common.add_argument("--workers", type=int, help="parallel frames (sequence)")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="fishnav", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("calibrate", parents=[common], help="estimate the depth-to-fisheye extrinsic")
    c.add_argument("--correspondences", help="JSON list of {point_d, dir_d, normal_f}")
    c.add_argument("--synthetic", type=int, default=30, help="generate this many synthetic lines instead")
    c.add_argument("--noise-deg", type=float, default=0.0, help="normal noise for synthetic lines")
    c.set_defaults(func=cmd_calibrate)

    r = sub.add_parser("render", parents=[common], help="render harness scenes to PNG/PLY")
    r.add_argument("--scene", nargs="*", help="scene JSON files")
    r.add_argument("--suite", choices=SUITES, default="all")
    r.set_defaults(func=cmd_render)

    f = sub.add_parser("run", parents=[common], help="process one frame")
    f.add_argument("--scene", help="scene JSON (renders the inputs and enables metrics)")
    f.add_argument("--depth", help="16-bit depth PNG in millimetres")
    f.add_argument("--fisheye", help="fisheye RGB PNG")
    f.add_argument("--frame-id")
    f.set_defaults(func=cmd_run)

    s = sub.add_parser("sequence", parents=[common], help="process a manifest of frames")
    s.add_argument("manifest", help="manifest JSON")
    s.set_defaults(func=cmd_sequence)

    e = sub.add_parser("evaluate", parents=[common], help="score a floor mask against a scene")
    e.add_argument("--scene", required=True)
    e.add_argument("--mask", required=True)
    e.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except FishnavError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
