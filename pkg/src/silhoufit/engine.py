"""Gradient contract for the full pipeline.

Builds the differentiable graph parameters -> mesh -> render -> losses and
returns the exact gradient of the total loss with respect to every
parameter entry (and per-vertex offsets when present). A finite-difference
harness cross-checks the analytic gradients coordinate by coordinate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import torch

from .hand_model import HandMesh, HandModel, HandParams, Joints, pose_mesh, regress_joints
from .image_ops import DistanceField
from .losses import LossBreakdown, LossWeights, total_loss_terms
from .render import Camera, SilhouetteImage, render_soft


@dataclass
class FitTarget:
    """A target mask with its precomputed contour distance field."""

    mask: SilhouetteImage
    dfield: DistanceField


def make_target_from_mask(
    mask: SilhouetteImage, camera: Camera, dtype: torch.dtype = torch.float64
) -> FitTarget:
    """Validate the mask against the camera and precompute its distance field."""
    from .image_ops import contour_of_binary, distance_transform
    from .validation import check_mask

    check_mask(mask.pixels, "mask")
    if mask.pixels.shape != (camera.height, camera.width):
        raise ValueError(
            f"mask: size {tuple(mask.pixels.shape)} does not match camera "
            f"{camera.height}x{camera.width}"
        )
    contour = contour_of_binary(mask)
    if contour.numel() == 0:
        raise ValueError("mask: empty; nothing to fit")
    dfield = distance_transform(contour, camera.width, camera.height)
    dfield.values = dfield.values.to(dtype)
    return FitTarget(
        mask=SilhouetteImage(pixels=mask.pixels.to(dtype), kind="hard"), dfield=dfield
    )


@dataclass
class Gradient:
    d_theta: torch.Tensor
    d_beta: torch.Tensor
    d_rotation: torch.Tensor
    d_translation: torch.Tensor
    d_offsets: torch.Tensor | None = None

    def validate(self) -> "Gradient":
        for name in ("d_theta", "d_beta", "d_rotation", "d_translation", "d_offsets"):
            t = getattr(self, name)
            if t is not None and not torch.isfinite(t).all():
                raise ValueError(f"{name}: non-finite gradient")
        return self


def _grad_or_zeros(leaf: torch.Tensor) -> torch.Tensor:
    return leaf.grad.detach().clone() if leaf.grad is not None else torch.zeros_like(leaf)


def evaluate_loss(
    model: HandModel,
    camera: Camera,
    params: HandParams,
    offsets: torch.Tensor | None,
    target: FitTarget,
    weights: LossWeights,
    *,
    mode: str = "full",
    gt_joints: Joints | None = None,
    gt_mesh: HandMesh | None = None,
    sigma: float | None = None,
    border_band: int = 0,
    prior_weight: float = 0.0,
):
    """Forward pass of the composite loss.

    A graph is built exactly when the supplied parameter tensors require
    gradients; plain tensors give a cheap inference pass.
    """
    prelim_mesh, prelim_joints = pose_mesh(model, params)
    if offsets is not None:
        refined_mesh = HandMesh(vertices=prelim_mesh.vertices + offsets, faces=prelim_mesh.faces)
    else:
        refined_mesh = prelim_mesh
    refined_joints = regress_joints(model, refined_mesh)
    rendered = render_soft(camera, refined_mesh, sigma=sigma)
    total, terms = total_loss_terms(
        weights,
        rendered=rendered,
        target=target.mask,
        dfield=target.dfield,
        prelim_joints=prelim_joints,
        refined_joints=refined_joints,
        prelim_mesh=prelim_mesh,
        refined_mesh=refined_mesh,
        gt_joints=gt_joints,
        gt_mesh=gt_mesh,
        mode=mode,
        border_band=border_band,
        prior_weight=prior_weight,
        params=params,
    )
    for name, value in terms.items():
        if not torch.isfinite(value.detach()):
            raise ValueError(f"loss term {name!r} is non-finite")
    breakdown = LossBreakdown(total=float(total.detach()))
    for name, value in terms.items():
        setattr(breakdown, name, float(value.detach()))
    state = {
        "prelim_mesh": prelim_mesh,
        "prelim_joints": prelim_joints,
        "refined_mesh": refined_mesh,
        "refined_joints": refined_joints,
        "rendered": rendered,
    }
    return total, breakdown, state


def loss_gradient(
    model: HandModel,
    camera: Camera,
    params: HandParams,
    offsets: torch.Tensor | None,
    target: FitTarget,
    weights: LossWeights,
    *,
    mode: str = "full",
    gt_joints: Joints | None = None,
    gt_mesh: HandMesh | None = None,
    sigma: float | None = None,
    border_band: int = 0,
    prior_weight: float = 0.0,
) -> tuple[LossBreakdown, Gradient]:
    """Exact gradient of the total loss w.r.t. parameters (and offsets).

    Deterministic for identical inputs; raises naming the offending term if
    any loss value is non-finite.
    """
    leaves = HandParams(
        theta=params.theta.detach().clone().requires_grad_(True),
        beta=params.beta.detach().clone().requires_grad_(True),
        rotation=params.rotation.detach().clone().requires_grad_(True),
        translation=params.translation.detach().clone().requires_grad_(True),
    )
    offset_leaf = None
    if offsets is not None:
        offset_leaf = offsets.detach().clone().requires_grad_(True)

    total, breakdown, _ = evaluate_loss(
        model,
        camera,
        leaves,
        offset_leaf,
        target,
        weights,
        mode=mode,
        gt_joints=gt_joints,
        gt_mesh=gt_mesh,
        sigma=sigma,
        border_band=border_band,
        prior_weight=prior_weight,
    )
    if total.requires_grad:
        total.backward()
    grad = Gradient(
        d_theta=_grad_or_zeros(leaves.theta),
        d_beta=_grad_or_zeros(leaves.beta),
        d_rotation=_grad_or_zeros(leaves.rotation),
        d_translation=_grad_or_zeros(leaves.translation),
        d_offsets=_grad_or_zeros(offset_leaf) if offset_leaf is not None else None,
    )
    return breakdown, grad.validate()


def _param_coordinates(params: HandParams, offsets: torch.Tensor | None, offset_samples: int):
    coords = []
    for name in ("theta", "beta", "rotation", "translation"):
        n = getattr(params, name).numel()
        coords.extend((name, i) for i in range(n))
    if offsets is not None and offset_samples > 0:
        total = offsets.numel()
        step = max(1, total // offset_samples)
        coords.extend(("offsets", i) for i in range(0, total, step)[:offset_samples])
    return coords


@dataclass
class FiniteDiffReport:
    rows: list  # dicts: name, analytic, numeric, rel_err (None when filtered)
    h: float

    @property
    def max_rel_err(self) -> float:
        errs = [r["rel_err"] for r in self.rows if r["rel_err"] is not None]
        return max(errs) if errs else 0.0

    def to_json(self) -> str:
        return json.dumps(
            {"h": self.h, "max_rel_err": self.max_rel_err, "rows": self.rows}, indent=2
        )


def finite_diff_check(
    model: HandModel,
    camera: Camera,
    params: HandParams,
    offsets: torch.Tensor | None,
    target: FitTarget,
    weights: LossWeights,
    *,
    mode: str = "full",
    gt_joints: Joints | None = None,
    gt_mesh: HandMesh | None = None,
    sigma: float | None = None,
    border_band: int = 0,
    prior_weight: float = 0.0,
    h: float = 1e-5,
    min_magnitude: float = 1e-8,
    offset_samples: int = 0,
) -> FiniteDiffReport:
    """Central-difference comparison against the analytic gradient.

    Relative error is reported only where both |analytic| and |numeric|
    exceed `min_magnitude`; rows below that are kept but unfiltered.
    """
    if h <= 0:
        raise ValueError(f"h: must be positive, got {h}")
    kwargs = dict(
        mode=mode,
        gt_joints=gt_joints,
        gt_mesh=gt_mesh,
        sigma=sigma,
        border_band=border_band,
        prior_weight=prior_weight,
    )
    _, grad = loss_gradient(model, camera, params, offsets, target, weights, **kwargs)
    analytic = {
        "theta": grad.d_theta,
        "beta": grad.d_beta,
        "rotation": grad.d_rotation,
        "translation": grad.d_translation,
        "offsets": grad.d_offsets.flatten() if grad.d_offsets is not None else None,
    }

    def loss_at(p: HandParams, off: torch.Tensor | None) -> float:
        with torch.no_grad():
            total, _, _ = evaluate_loss(model, camera, p, off, target, weights, **kwargs)
        return float(total)

    rows = []
    for name, i in _param_coordinates(params, offsets, offset_samples):
        if name == "offsets":
            plus = offsets.detach().clone()
            plus.view(-1)[i] += h
            minus = offsets.detach().clone()
            minus.view(-1)[i] -= h
            f_plus = loss_at(params, plus)
            f_minus = loss_at(params, minus)
            a = float(analytic["offsets"][i])
        else:
            base = getattr(params, name).detach()
            p_plus = params.detached_clone()
            getattr(p_plus, name)[i] = base[i] + h
            p_minus = params.detached_clone()
            getattr(p_minus, name)[i] = base[i] - h
            f_plus = loss_at(p_plus, offsets)
            f_minus = loss_at(p_minus, offsets)
            a = float(analytic[name][i])
        n = (f_plus - f_minus) / (2.0 * h)
        if abs(a) > min_magnitude and abs(n) > min_magnitude:
            rel = abs(a - n) / max(abs(a), abs(n))
        else:
            rel = None
        rows.append({"name": f"{name}[{i}]", "analytic": a, "numeric": n, "rel_err": rel})
    return FiniteDiffReport(rows=rows, h=h)
