"""silhoufit: 3D hand pose and shape from a single binary silhouette.

A parametric skinned hand is rendered through a differentiable soft
rasterizer and fit to a target mask by gradient descent under a composite
objective (silhouette BCE + contour chamfer, with optional joint/vertex
supervision), then scored with the standard hand-pose metric suite.
"""

from .alignment import ProcrustesResult, procrustes_align
from .engine import (
    FitTarget,
    Gradient,
    finite_diff_check,
    loss_gradient,
    make_target_from_mask,
)
from .fitting import (
    AdamState,
    FitConfig,
    FitResult,
    GroundTruth,
    HandSilhouetteFitter,
    adam_step,
    fit,
    init_params,
    save_fit_result,
)
from .hand_model import (
    HandMesh,
    HandModel,
    HandParams,
    Joints,
    full_pose,
    load_model,
    make_stylized_hand,
    pose_mesh,
    regress_joints,
    rodrigues,
    save_model,
    validate_model,
)
from .image_ops import (
    DistanceField,
    contour_of_binary,
    distance_transform,
    soft_binarize,
    soft_contour,
)
from .losses import (
    LossBreakdown,
    LossWeights,
    aligned_mesh_loss,
    aligned_pose_loss,
    bce_loss,
    contour_loss,
    mesh_loss,
    pose_loss,
    total_loss,
)
from .metrics import MetricReport, auc, evaluate, iou_dice, mpjpe, pck_curve
from .render import Camera, SilhouetteImage, project, render_hard, render_soft
from .synth import SyntheticSample, generate, sample_params

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "Camera",
    "DistanceField",
    "FitConfig",
    "FitResult",
    "FitTarget",
    "Gradient",
    "GroundTruth",
    "HandMesh",
    "HandModel",
    "HandParams",
    "HandSilhouetteFitter",
    "Joints",
    "LossBreakdown",
    "LossWeights",
    "MetricReport",
    "ProcrustesResult",
    "SilhouetteImage",
    "SyntheticSample",
    "adam_step",
    "aligned_mesh_loss",
    "aligned_pose_loss",
    "auc",
    "bce_loss",
    "contour_loss",
    "contour_of_binary",
    "distance_transform",
    "evaluate",
    "finite_diff_check",
    "fit",
    "full_pose",
    "generate",
    "init_params",
    "iou_dice",
    "load_model",
    "loss_gradient",
    "make_stylized_hand",
    "make_target_from_mask",
    "mesh_loss",
    "metrics",
    "mpjpe",
    "pck_curve",
    "pose_loss",
    "pose_mesh",
    "procrustes_align",
    "project",
    "regress_joints",
    "render_hard",
    "render_soft",
    "rodrigues",
    "sample_params",
    "save_fit_result",
    "save_model",
    "total_loss",
    "validate_model",
]
