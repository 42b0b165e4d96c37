"""Command-line interface.

Subcommands: synth, fit, eval, render, gradcheck, model-info. Exit codes:
0 success, 1 usage error, 2 runtime error. Log level comes from the
SILHOUFIT_LOG environment variable (error, info, debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import torch

from . import imgio, synth
from .engine import finite_diff_check, make_target_from_mask
from .fitting import FitConfig, GroundTruth, fit, init_params, save_fit_result
from .hand_model import HandParams, load_model, make_stylized_hand, pose_mesh, save_model
from .losses import LossWeights, MODE_FULL, MODE_SILHOUETTE
from .metrics import evaluate
from .render import Camera, render_hard, render_soft

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route through our exit-code policy
        raise UsageError(message)


def _setup_logging():
    level = os.environ.get("SILHOUFIT_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        raise UsageError(f"SILHOUFIT_LOG: expected one of {sorted(levels)}, got {level!r}")
    logging.basicConfig(level=levels[level], format="%(levelname)s %(name)s: %(message)s")


def _load_camera(path) -> Camera:
    try:
        return Camera.from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"camera file {path}: {exc}") from exc


def _default_camera() -> Camera:
    return Camera(fx=150.0, fy=150.0, cx=63.5, cy=63.5, width=128, height=128)


def _build_parser() -> _Parser:
    parser = _Parser(prog="silhoufit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate a synthetic dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--views", type=int, default=1)
    p.add_argument("--camera", default=None, help="camera JSON (default: built-in 128x128)")
    p.add_argument("--distance", type=float, default=synth.DEFAULT_CAMERA_DISTANCE)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("fit", help="fit hand parameters to a mask")
    p.add_argument("--model", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--camera", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--gt", default=None, help="ground-truth JSON (enables mode 'full')")
    p.add_argument("--mode", choices=["full", "silhouette"], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--iterations-stage1", type=int, default=None)
    p.add_argument("--iterations-stage2", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("eval", help="evaluate predictions against ground truth")
    p.add_argument("--pred", required=True, help="directory of per-sample fit outputs")
    p.add_argument("--gt", required=True, help="synthetic dataset directory")
    p.add_argument("--out", default=None, help="write the report JSON here")

    p = sub.add_parser("render", help="render a silhouette from parameters")
    p.add_argument("--model", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--camera", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--soft", action="store_true")
    p.add_argument("--sigma", type=float, default=None)

    p = sub.add_parser("gradcheck", help="finite-difference check of the gradients")
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--size", type=int, default=64)

    p = sub.add_parser("model-info", help="report model dimensions and hashes")
    p.add_argument("--model", required=True)

    p = sub.add_parser("make-model", help="write the built-in stylized test model")
    p.add_argument("--out", required=True)
    p.add_argument("--npc", type=int, choices=[6, 45], default=6)

    return parser


def _cmd_synth(args) -> int:
    model = load_model(args.model)
    camera = _load_camera(args.camera) if args.camera else _default_camera()
    cameras = [camera] * args.views
    synth.generate(
        model,
        cameras,
        args.count,
        args.seed,
        args.out,
        camera_distance=args.distance,
        jobs=args.jobs,
    )
    print(f"wrote {args.count} sample(s) x {args.views} view(s) to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    model = load_model(args.model)
    camera = _load_camera(args.camera)
    mask = imgio.read_mask_png(args.mask)
    config = FitConfig.from_file(args.config) if args.config else FitConfig()

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.restarts is not None:
        overrides["restarts"] = args.restarts
    if args.iterations_stage1 is not None:
        overrides["iterations_stage1"] = args.iterations_stage1
    if args.iterations_stage2 is not None:
        overrides["iterations_stage2"] = args.iterations_stage2
    if args.learning_rate is not None:
        overrides["learning_rate"] = args.learning_rate

    gt = None
    if args.gt is not None:
        loaded = synth.load_gt(args.gt)
        gt = GroundTruth(
            joints=loaded["joints"],
            mesh=pose_mesh(model, loaded["params"])[0],
            params=loaded["params"],
        )
    mode = args.mode
    if mode is None:
        mode = "full" if gt is not None else "silhouette"
    overrides["mode"] = MODE_FULL if mode == "full" else MODE_SILHOUETTE
    if overrides["mode"] == MODE_FULL and gt is None:
        raise ValueError("--mode full requires --gt")

    d = config.to_dict()
    d.update(overrides)
    config = FitConfig.from_dict(d)

    result = fit(model, camera, mask, config, gt=gt, jobs=args.jobs)
    save_fit_result(result, args.out)
    final = result.loss_trace[-1]
    print(f"best restart {result.best_restart}, final total {final.total:.6g}")
    if result.metrics is not None:
        print(result.metrics.to_table())
    return 0


def _cmd_eval(args) -> int:
    gt_dir = Path(args.gt)
    pred_dir = Path(args.pred)
    manifest_path = gt_dir / "manifest.json"
    if not manifest_path.exists():
        raise ValueError(f"gt directory {gt_dir}: missing manifest.json")
    manifest = json.loads(manifest_path.read_text())

    gt_joints, pred_joints = [], []
    gt_meshes, pred_meshes = [], []
    gt_masks, pred_masks = [], []
    matched = 0
    for entry in manifest["samples"]:
        stem = f"{entry['id']:05d}_v{entry['view']}"
        result_path = pred_dir / stem / "result.json"
        if not result_path.exists():
            continue
        matched += 1
        gt_data = synth.load_gt(gt_dir / entry["files"]["gt"])
        result = json.loads(result_path.read_text())
        gt_joints.append(gt_data["joints"].positions)
        pred_joints.append(torch.tensor(result["joints"], dtype=torch.float64))
        gt_meshes.append(gt_data["vertices"])
        pred_meshes.append(torch.tensor(result["vertices"], dtype=torch.float64))
        gt_masks.append(imgio.read_mask_png(gt_dir / entry["files"]["mask"]))
        pred_masks.append(imgio.read_mask_png(pred_dir / stem / "silhouette_hard.png"))
    if matched == 0:
        raise ValueError(f"pred directory {pred_dir}: no per-sample result.json found")

    report = evaluate(
        gt_joints=gt_joints,
        pred_joints=pred_joints,
        gt_meshes=gt_meshes,
        pred_meshes=pred_meshes,
        gt_masks=gt_masks,
        pred_masks=pred_masks,
    )
    print(report.to_table())
    if args.out:
        Path(args.out).write_text(report.to_json())
    else:
        print(report.to_json())
    return 0


def _cmd_render(args) -> int:
    model = load_model(args.model)
    camera = _load_camera(args.camera)
    try:
        params = HandParams.from_dict(json.loads(Path(args.params).read_text()))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ValueError(f"params file {args.params}: {exc}") from exc
    mesh, _ = pose_mesh(model, params)
    if args.soft:
        image = render_soft(camera, mesh, sigma=args.sigma)
    else:
        image = render_hard(camera, mesh)
    imgio.write_mask_png(image, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_gradcheck(args) -> int:
    model = load_model(args.model)
    size = args.size
    camera = Camera(
        fx=1.2 * size, fy=1.2 * size, cx=(size - 1) / 2, cy=(size - 1) / 2,
        width=size, height=size,
    )
    rng = np.random.default_rng([args.seed, 7])
    target_params = HandParams.zeros(model.n_pc)
    target_params.theta = torch.from_numpy(rng.uniform(-1.0, 1.0, size=model.n_pc))
    target_params.rotation = torch.from_numpy(rng.uniform(-np.pi / 6, np.pi / 6, size=3))
    target_params.translation = torch.tensor([0.0, 0.0, 0.45], dtype=torch.float64)
    gt_mesh, gt_joints = pose_mesh(model, target_params)
    mask = render_hard(camera, gt_mesh)
    target = make_target_from_mask(mask, camera)

    eval_params = init_params(1, args.seed, model.n_pc, model, camera, mask)
    offsets = torch.from_numpy(rng.normal(0.0, 1e-3, size=(778, 3)))
    report = finite_diff_check(
        model, camera, eval_params, offsets, target, LossWeights(),
        mode=MODE_FULL, gt_joints=gt_joints, gt_mesh=gt_mesh,
        h=args.h, offset_samples=6,
    )
    print(report.to_json())
    if report.max_rel_err > 1e-2:
        print(f"FAIL: max relative error {report.max_rel_err:.4g} > 1e-2", file=sys.stderr)
        return 2
    print(f"OK: max relative error {report.max_rel_err:.4g}")
    return 0


def _cmd_model_info(args) -> int:
    path = Path(args.model)
    model = load_model(path)
    import hashlib

    info = {
        "file": str(path),
        "file_sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
        "content_sha256": model.sha256(),
        "vertices": int(model.template_vertices.shape[0]),
        "faces": int(model.faces.shape[0]),
        "skeleton_joints": len(model.kinematic_parents),
        "regressed_joints": int(model.joint_regressor.shape[0]),
        "n_pc": model.n_pc,
        "shape_coeffs": int(model.shape_basis.shape[2]),
        "pose_axes": int(model.pose_mean.shape[0]),
    }
    print(json.dumps(info, indent=2))
    return 0


def _cmd_make_model(args) -> int:
    save_model(make_stylized_hand(n_pc=args.npc), args.out)
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "fit": _cmd_fit,
    "eval": _cmd_eval,
    "render": _cmd_render,
    "gradcheck": _cmd_gradcheck,
    "model-info": _cmd_model_info,
    "make-model": _cmd_make_model,
}


def run(argv=None) -> int:
    """Parse and execute; returns the process exit code."""
    torch.set_num_threads(max(1, int(os.environ.get("SILHOUFIT_THREADS", "1"))))
    try:
        _setup_logging()
        args = _build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        logger.debug("runtime failure", exc_info=True)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
