"""Synthetic dataset generation: sampled parameters to masks + ground truth.

Pose coefficients are drawn uniformly from [-2, 2), each global rotation
axis from [-pi, pi); shape is fixed at the mean and the hand sits at a
canonical camera distance. Multi-view emission yaws the hand about its
wrist's vertical axis (fixed radius), one view per supplied camera, and
stores the composed parameters per view so every emitted sample re-renders
bit-exactly from its own ground truth.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from . import imgio
from .hand_model import (
    HandModel,
    HandParams,
    Joints,
    HandMesh,
    axis_angle_from_matrix,
    pose_mesh,
    rodrigues,
)
from .image_ops import contour_of_binary, distance_transform
from .render import Camera, SilhouetteImage, render_hard

logger = logging.getLogger(__name__)

MANIFEST_FORMAT_VERSION = 1
DEFAULT_CAMERA_DISTANCE = 0.5  # meters
MAX_RESAMPLE_ATTEMPTS = 100


@dataclass
class SyntheticSample:
    id: int
    params: HandParams
    mask: SilhouetteImage
    joints_gt: Joints
    mesh_gt: HandMesh
    view_index: int
    camera: Camera


def sample_params(
    rng: np.random.Generator, n_pc: int, camera_distance: float = DEFAULT_CAMERA_DISTANCE
) -> HandParams:
    """Draw pose and global rotation; shape stays at the mean."""
    theta = rng.uniform(-2.0, 2.0, size=n_pc)
    rotation = rng.uniform(-math.pi, math.pi, size=3)
    params = HandParams.zeros(n_pc)
    params.theta = torch.from_numpy(theta)
    params.rotation = torch.from_numpy(rotation)
    params.translation = torch.tensor([0.0, 0.0, camera_distance], dtype=torch.float64)
    return params


def default_view_yaws(num_views: int) -> list:
    """Evenly spread yaw angles; five views give -60..60 degrees."""
    if num_views == 1:
        return [0.0]
    span = math.radians(120.0)
    return [(-span / 2) + span * i / (num_views - 1) for i in range(num_views)]


def compose_view(params: HandParams, yaw: float) -> HandParams:
    """Yaw the hand about the vertical axis through its wrist."""
    if yaw == 0.0:
        return params
    r_view = rodrigues(torch.tensor([0.0, yaw, 0.0], dtype=torch.float64))
    r_base = rodrigues(params.rotation)
    composed = axis_angle_from_matrix(r_view @ r_base)
    return HandParams(
        theta=params.theta.clone(),
        beta=params.beta.clone(),
        rotation=composed,
        translation=params.translation.clone(),
    )


def render_sample(model: HandModel, camera: Camera, params: HandParams) -> SyntheticSample:
    mesh, joints = pose_mesh(model, params)
    mask = render_hard(camera, mesh)
    return SyntheticSample(
        id=-1, params=params, mask=mask, joints_gt=joints, mesh_gt=mesh, view_index=0,
        camera=camera,
    )


def _gt_dict(sample: SyntheticSample) -> dict:
    d = sample.params.to_dict()
    d.update(
        {
            "id": sample.id,
            "view": sample.view_index,
            "joints": sample.joints_gt.positions.numpy().tolist(),
            "vertices": sample.mesh_gt.vertices.numpy().tolist(),
        }
    )
    return d


def load_gt(path) -> dict:
    """Ground-truth JSON as written by generate(); params plus arrays."""
    raw = json.loads(Path(path).read_text())
    return {
        "id": raw["id"],
        "view": raw["view"],
        "params": HandParams.from_dict(raw),
        "joints": Joints(positions=torch.tensor(raw["joints"], dtype=torch.float64)),
        "vertices": torch.tensor(raw["vertices"], dtype=torch.float64),
    }


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def generate(
    model: HandModel,
    cameras: list,
    count: int,
    seed: int,
    out_dir,
    view_yaws: list | None = None,
    camera_distance: float = DEFAULT_CAMERA_DISTANCE,
    jobs: int = 1,
) -> dict:
    """Emit `count` samples, each under every camera/view, plus a manifest.

    Per (sample, view): mask PNG, cached ".dfield" distance field, and a
    ground-truth JSON. Deterministic given the seed; samples whose render
    is empty (hand out of frame) are resampled with a logged count.
    """
    if not cameras:
        raise ValueError("cameras: need at least one")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if view_yaws is None:
        view_yaws = default_view_yaws(len(cameras))
    if len(view_yaws) != len(cameras):
        raise ValueError(
            f"view_yaws: {len(view_yaws)} angles for {len(cameras)} cameras"
        )

    def build_sample(i: int):
        rng = np.random.default_rng([seed, i])
        views = None
        for attempt in range(MAX_RESAMPLE_ATTEMPTS):
            base = sample_params(rng, model.n_pc, camera_distance)
            views = []
            for v, (camera, yaw) in enumerate(zip(cameras, view_yaws)):
                params_v = compose_view(base, yaw)
                s = render_sample(model, camera, params_v)
                s.id, s.view_index = i, v
                views.append(s)
            if all(bool((s.mask.pixels > 0).any()) for s in views):
                if attempt:
                    logger.info("sample %d: resampled %d time(s)", i, attempt)
                return views
        raise RuntimeError(f"sample {i}: no in-frame draw after {MAX_RESAMPLE_ATTEMPTS} attempts")

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            all_views = list(pool.map(build_sample, range(count)))
    else:
        all_views = [build_sample(i) for i in range(count)]

    entries = []
    for views in all_views:
        for s in views:
            stem = f"{s.id:05d}_v{s.view_index}"
            mask_path = out / f"{stem}_mask.png"
            dfield_path = out / f"{stem}.dfield"
            gt_path = out / f"{stem}_gt.json"
            imgio.write_mask_png(s.mask, mask_path)
            contour = contour_of_binary(s.mask)
            dfield = distance_transform(contour, s.camera.width, s.camera.height)
            imgio.write_float_grid(dfield.values, dfield_path)
            gt_path.write_text(json.dumps(_gt_dict(s), sort_keys=True))
            entries.append(
                {
                    "id": s.id,
                    "view": s.view_index,
                    "files": {
                        "mask": mask_path.name,
                        "dfield": dfield_path.name,
                        "gt": gt_path.name,
                    },
                    "sha256": {
                        "mask": _sha256(mask_path),
                        "dfield": _sha256(dfield_path),
                        "gt": _sha256(gt_path),
                    },
                }
            )

    manifest = {
        "format_version": MANIFEST_FORMAT_VERSION,
        "seed": seed,
        "count": count,
        "model_sha256": model.sha256(),
        "cameras": [c.to_dict() for c in cameras],
        "view_yaws": list(view_yaws),
        "camera_distance": camera_distance,
        "samples": entries,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest
