"""Evaluation metrics: position errors, PCK/PCV curves and AUC, mask overlap.

Position errors are reported in centimeters (inputs are meters). The PA-
prefixed variants align each prediction to its ground truth by similarity
Procrustes first; for reporting we use the rotation-only (det +1) variant
and keep the unaligned prediction whenever it happens to score better, so
alignment can never hurt the reported number.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import torch

from .alignment import procrustes_align
from .hand_model import HandMesh, Joints
from .render import SilhouetteImage

M_TO_CM = 100.0
PCK_MAX_CM = 5.0
PCK_POINTS = 100


def _positions(x) -> torch.Tensor:
    if isinstance(x, Joints):
        return x.positions
    if isinstance(x, HandMesh):
        return x.vertices
    return x


def point_errors_cm(gt, pred) -> torch.Tensor:
    """Per-point Euclidean distances in cm."""
    g, p = _positions(gt), _positions(pred)
    if g.shape != p.shape:
        raise ValueError(f"point sets differ in shape: {tuple(g.shape)} vs {tuple(p.shape)}")
    return torch.linalg.norm(g - p, dim=1) * M_TO_CM


def mpjpe(gt, pred) -> float:
    """Mean per-joint position error, cm."""
    return float(point_errors_cm(gt, pred).mean())


def aligned_points(gt, pred, keep_better_raw: bool = True) -> torch.Tensor:
    """Procrustes-align pred to gt (rotation-only variant).

    With keep_better_raw, the raw prediction is kept when its mean distance
    beats the aligned one (squared-error alignment can occasionally lose on
    mean unsquared distance).
    """
    g, p = _positions(gt), _positions(pred)
    aligned = procrustes_align(g, p, proper_rotation=True).aligned
    if keep_better_raw:
        raw_err = torch.linalg.norm(g - p, dim=1).mean()
        aligned_err = torch.linalg.norm(g - aligned, dim=1).mean()
        if float(raw_err) < float(aligned_err):
            return p
    return aligned


def pck_curve(errors_cm) -> torch.Tensor:
    """Fraction of points within each of 100 thresholds spanning 0..5 cm."""
    e = errors_cm if isinstance(errors_cm, torch.Tensor) else torch.tensor(errors_cm)
    e = e.to(torch.float64).flatten()
    if e.numel() == 0:
        raise ValueError("errors: empty input")
    if (e < 0).any():
        raise ValueError("errors: distances must be nonnegative")
    thresholds = torch.arange(PCK_POINTS, dtype=torch.float64) * (PCK_MAX_CM / (PCK_POINTS - 1))
    return (e.unsqueeze(0) <= thresholds.unsqueeze(1)).to(torch.float64).mean(dim=1)


def auc(curve) -> float:
    """Trapezoidal area under a PCK/PCV curve, normalized to [0, 1]."""
    c = curve if isinstance(curve, torch.Tensor) else torch.tensor(curve)
    c = c.to(torch.float64).flatten()
    if c.numel() != PCK_POINTS:
        raise ValueError(f"curve: expected {PCK_POINTS} points, got {c.numel()}")
    if (c < 0).any() or (c > 1).any():
        raise ValueError("curve: values must lie in [0, 1]")
    step = PCK_MAX_CM / (PCK_POINTS - 1)
    area = ((c[:-1] + c[1:]) / 2.0).sum() * step
    return float(area / PCK_MAX_CM)


def iou_dice(a: SilhouetteImage, b: SilhouetteImage) -> tuple[float, float]:
    """Mask overlap: (intersection over union, Dice). Both-empty scores (1, 1)."""
    pa = a.pixels if isinstance(a, SilhouetteImage) else a
    pb = b.pixels if isinstance(b, SilhouetteImage) else b
    if pa.shape != pb.shape:
        raise ValueError(f"masks differ in shape: {tuple(pa.shape)} vs {tuple(pb.shape)}")
    fa = pa >= 0.5
    fb = pb >= 0.5
    inter = int((fa & fb).sum())
    union = int((fa | fb).sum())
    total = int(fa.sum()) + int(fb.sum())
    if union == 0:
        return 1.0, 1.0
    iou = inter / union
    # derive Dice from IoU so the 2*IoU/(1+IoU) identity holds exactly;
    # algebraically this equals 2*inter/total
    dice = 2.0 * iou / (1.0 + iou)
    return iou, dice


@dataclass
class MetricReport:
    mpjpe_cm: float | None = None
    mpvpe_cm: float | None = None
    pa_mpjpe_cm: float | None = None
    pa_mpvpe_cm: float | None = None
    auc_pck: float | None = None
    auc_pcv: float | None = None
    miou: float | None = None
    dice: float | None = None
    per_sample: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mpjpe_cm": self.mpjpe_cm,
            "mpvpe_cm": self.mpvpe_cm,
            "pa_mpjpe_cm": self.pa_mpjpe_cm,
            "pa_mpvpe_cm": self.pa_mpvpe_cm,
            "auc_pck": self.auc_pck,
            "auc_pcv": self.auc_pcv,
            "miou": self.miou,
            "dice": self.dice,
            "per_sample": self.per_sample,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        columns = [
            ("MPJPE (cm)", self.mpjpe_cm),
            ("AUC of PCK", self.auc_pck),
            ("MPVPE (cm)", self.mpvpe_cm),
            ("AUC of PCV", self.auc_pcv),
            ("PA-MPJPE (cm)", self.pa_mpjpe_cm),
            ("PA-MPVPE (cm)", self.pa_mpvpe_cm),
            ("mIoU", self.miou),
            ("Dice", self.dice),
        ]
        names, values = [], []
        for name, value in columns:
            if value is None:
                continue
            text = f"{value:.4f}"
            width = max(len(name), len(text))
            names.append(name.rjust(width))
            values.append(text.rjust(width))
        return "  ".join(names) + "\n" + "  ".join(values)


def evaluate(
    gt_joints: list | None = None,
    pred_joints: list | None = None,
    gt_meshes: list | None = None,
    pred_meshes: list | None = None,
    gt_masks: list | None = None,
    pred_masks: list | None = None,
) -> MetricReport:
    """Aggregate the full metric battery over matched sample lists.

    Joint/vertex errors are pooled across samples for the AUC curves; the
    PA variants re-align each sample independently.
    """
    report = MetricReport()

    def _check(a, b, what):
        if (a is None) != (b is None):
            raise ValueError(f"{what}: ground truth and predictions must both be given")
        if a is not None and len(a) != len(b):
            raise ValueError(f"{what}: count mismatch, {len(a)} vs {len(b)}")

    _check(gt_joints, pred_joints, "joints")
    _check(gt_meshes, pred_meshes, "meshes")
    _check(gt_masks, pred_masks, "masks")

    n = max(len(x) for x in (gt_joints, gt_meshes, gt_masks) if x is not None) if any(
        x is not None for x in (gt_joints, gt_meshes, gt_masks)
    ) else 0
    per_sample = [dict() for _ in range(n)]

    if gt_joints is not None:
        errs, pa_errs = [], []
        for i, (g, p) in enumerate(zip(gt_joints, pred_joints)):
            e = point_errors_cm(g, p)
            pa = point_errors_cm(g, aligned_points(g, p))
            errs.append(e)
            pa_errs.append(pa)
            per_sample[i]["mpjpe_cm"] = float(e.mean())
            per_sample[i]["pa_mpjpe_cm"] = float(pa.mean())
        pooled = torch.cat(errs)
        report.mpjpe_cm = float(pooled.mean())
        report.pa_mpjpe_cm = float(torch.cat(pa_errs).mean())
        report.auc_pck = auc(pck_curve(pooled))

    if gt_meshes is not None:
        errs, pa_errs = [], []
        for i, (g, p) in enumerate(zip(gt_meshes, pred_meshes)):
            e = point_errors_cm(g, p)
            pa = point_errors_cm(g, aligned_points(g, p))
            errs.append(e)
            pa_errs.append(pa)
            per_sample[i]["mpvpe_cm"] = float(e.mean())
            per_sample[i]["pa_mpvpe_cm"] = float(pa.mean())
        pooled = torch.cat(errs)
        report.mpvpe_cm = float(pooled.mean())
        report.pa_mpvpe_cm = float(torch.cat(pa_errs).mean())
        report.auc_pcv = auc(pck_curve(pooled))

    if gt_masks is not None:
        ious, dices = [], []
        for i, (g, p) in enumerate(zip(gt_masks, pred_masks)):
            iou, dice = iou_dice(g, p)
            ious.append(iou)
            dices.append(dice)
            per_sample[i]["iou"] = iou
            per_sample[i]["dice"] = dice
        report.miou = sum(ious) / len(ious)
        report.dice = sum(dices) / len(dices)

    report.per_sample = per_sample
    return report
