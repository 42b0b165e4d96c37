"""Training objectives for silhouette-driven hand fitting.

The total objective combines three groups: pose terms on the regressed
joints (plain and Procrustes-aligned squared L2), silhouette terms on the
rendered soft mask (pixel BCE and a contour chamfer against a precomputed
distance field), and mesh terms on the vertices (plain and aligned L1).
Every term is evaluated for both the preliminary prediction and the
refined one, and each carries its own weight.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dataclass_fields

import torch

from .alignment import procrustes_align
from .hand_model import HandMesh, HandParams, Joints
from .image_ops import DistanceField, soft_binarize, soft_contour
from .render import SilhouetteImage

BCE_CLAMP = 1e-7

MODE_FULL = "full"
MODE_SILHOUETTE = "silhouette_only"


@dataclass(frozen=True)
class LossWeights:
    """Per-term weights; silhouette-only fitting zeroes the supervised ones."""

    pose: float = 2e-3
    aligned_pose: float = 2e-2
    bce: float = 0.0
    contour: float = 1e-4
    mesh: float = 0.1
    aligned_mesh: float = 1.0

    def __post_init__(self):
        for f in dataclass_fields(self):
            v = getattr(self, f.name)
            if not (v >= 0 and v == v and v != float("inf")):
                raise ValueError(f"{f.name}: weight must be finite and >= 0, got {v}")

    def for_mode(self, mode: str) -> "LossWeights":
        if mode == MODE_SILHOUETTE:
            return LossWeights(
                pose=0.0,
                aligned_pose=0.0,
                bce=self.bce,
                contour=self.contour,
                mesh=0.0,
                aligned_mesh=0.0,
            )
        if mode == MODE_FULL:
            return self
        raise ValueError(f"mode: expected 'full' or 'silhouette_only', got {mode!r}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclass_fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "LossWeights":
        known = {f.name for f in dataclass_fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"weights: unknown fields {sorted(unknown)}")
        return cls(**d)


TERM_NAMES = (
    "pose",
    "aligned_pose",
    "bce",
    "contour",
    "mesh",
    "aligned_mesh",
    "prior",
    "offset_smooth",
    "offset_l2",
)


@dataclass
class LossBreakdown:
    """Raw (unweighted) term values plus the weighted total."""

    pose: float = 0.0
    aligned_pose: float = 0.0
    bce: float = 0.0
    contour: float = 0.0
    mesh: float = 0.0
    aligned_mesh: float = 0.0
    prior: float = 0.0
    offset_smooth: float = 0.0
    offset_l2: float = 0.0
    total: float = 0.0

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in TERM_NAMES + ("total",)}


def _positions(x) -> torch.Tensor:
    if isinstance(x, Joints):
        return x.positions
    if isinstance(x, HandMesh):
        return x.vertices
    return x


def pose_loss(gt, prelim, refined) -> torch.Tensor:
    """Mean squared L2 over joints, summed for preliminary and refined."""
    g, p, r = _positions(gt), _positions(prelim), _positions(refined)
    if g.shape != p.shape or g.shape != r.shape:
        raise ValueError("pose_loss: joint sets must have matching shapes")
    return ((g - p) ** 2).sum(dim=1).mean() + ((g - r) ** 2).sum(dim=1).mean()


def aligned_pose_loss(gt, prelim, refined, proper_rotation: bool = False) -> torch.Tensor:
    g = _positions(gt)
    p = procrustes_align(g, _positions(prelim), proper_rotation=proper_rotation).aligned
    r = procrustes_align(g, _positions(refined), proper_rotation=proper_rotation).aligned
    return pose_loss(g, p, r)


def bce_loss(rendered: SilhouetteImage, target: SilhouetteImage) -> torch.Tensor:
    """Mean binary cross-entropy between the soft render and the mask."""
    s = rendered.pixels
    b = target.pixels.to(s.dtype)
    if s.shape != b.shape:
        raise ValueError(
            f"bce_loss: image sizes differ, {tuple(s.shape)} vs {tuple(b.shape)}"
        )
    s = s.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP)
    return -(b * torch.log(s) + (1.0 - b) * torch.log(1.0 - s)).mean()


def contour_loss(
    rendered: SilhouetteImage, dfield: DistanceField, border_band: int = 0
) -> torch.Tensor:
    """Chamfer-style contour penalty.

    The rendered silhouette is sharply binarized, its Laplacian contour
    response extracted, and each response pixel pays the precomputed
    distance to the target contour. `border_band` optionally zeroes the
    response within that many rows/cols of the frame edge (off by default).
    """
    s = rendered.pixels
    d = dfield.values.to(s.dtype)
    if s.shape != d.shape:
        raise ValueError(
            f"contour_loss: image {tuple(s.shape)} does not match "
            f"distance field {tuple(d.shape)}"
        )
    response = soft_contour(soft_binarize(rendered)).pixels
    if border_band > 0:
        keep = torch.zeros_like(response)
        keep[border_band:-border_band, border_band:-border_band] = 1.0
        response = response * keep
    return (response * d).sum()


def mesh_loss(gt, prelim, refined) -> torch.Tensor:
    """Mean per-vertex L1, summed for preliminary and refined meshes."""
    g, p, r = _positions(gt), _positions(prelim), _positions(refined)
    if g.shape != p.shape or g.shape != r.shape:
        raise ValueError("mesh_loss: vertex sets must have matching shapes")
    return (g - p).abs().sum(dim=1).mean() + (g - r).abs().sum(dim=1).mean()


def aligned_mesh_loss(gt, prelim, refined, proper_rotation: bool = False) -> torch.Tensor:
    g = _positions(gt)
    p = procrustes_align(g, _positions(prelim), proper_rotation=proper_rotation).aligned
    r = procrustes_align(g, _positions(refined), proper_rotation=proper_rotation).aligned
    return mesh_loss(g, p, r)


def total_loss_terms(
    weights: LossWeights,
    *,
    rendered: SilhouetteImage | None = None,
    target: SilhouetteImage | None = None,
    dfield: DistanceField | None = None,
    prelim_joints: Joints | None = None,
    refined_joints: Joints | None = None,
    prelim_mesh: HandMesh | None = None,
    refined_mesh: HandMesh | None = None,
    gt_joints: Joints | None = None,
    gt_mesh: HandMesh | None = None,
    mode: str = MODE_FULL,
    border_band: int = 0,
    prior_weight: float = 0.0,
    params: HandParams | None = None,
) -> tuple[torch.Tensor, dict]:
    """Weighted sum of all applicable terms.

    Returns (total tensor, dict of raw term tensors). Terms whose inputs
    are absent are omitted from the dict. In silhouette-only mode the
    supervised weights are forced to zero; full mode requires ground truth.
    """
    w = weights.for_mode(mode)
    if mode == MODE_FULL:
        if gt_joints is None or gt_mesh is None:
            raise ValueError("mode 'full' requires gt_joints and gt_mesh")

    terms: dict[str, torch.Tensor] = {}
    if gt_joints is not None and prelim_joints is not None and refined_joints is not None:
        terms["pose"] = pose_loss(gt_joints, prelim_joints, refined_joints)
        terms["aligned_pose"] = aligned_pose_loss(gt_joints, prelim_joints, refined_joints)
    if gt_mesh is not None and prelim_mesh is not None and refined_mesh is not None:
        terms["mesh"] = mesh_loss(gt_mesh, prelim_mesh, refined_mesh)
        terms["aligned_mesh"] = aligned_mesh_loss(gt_mesh, prelim_mesh, refined_mesh)
    if rendered is not None and target is not None:
        terms["bce"] = bce_loss(rendered, target)
    if rendered is not None and dfield is not None:
        terms["contour"] = contour_loss(rendered, dfield, border_band=border_band)
    if prior_weight > 0.0 and params is not None:
        terms["prior"] = (params.theta**2).sum() + (params.beta**2).sum()

    dtype = next(iter(terms.values())).dtype if terms else torch.float64
    total = torch.zeros((), dtype=dtype)
    weight_map = {
        "pose": w.pose,
        "aligned_pose": w.aligned_pose,
        "bce": w.bce,
        "contour": w.contour,
        "mesh": w.mesh,
        "aligned_mesh": w.aligned_mesh,
        "prior": prior_weight,
    }
    for name, value in terms.items():
        lam = weight_map[name]
        if lam != 0.0:
            total = total + lam * value
    return total, terms


def total_loss(weights: LossWeights, **kwargs) -> LossBreakdown:
    """Like total_loss_terms but detached into a plain breakdown record."""
    total, terms = total_loss_terms(weights, **kwargs)
    breakdown = LossBreakdown(total=float(total.detach()))
    for name, value in terms.items():
        setattr(breakdown, name, float(value.detach()))
    return breakdown
