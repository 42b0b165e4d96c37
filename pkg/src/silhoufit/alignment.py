"""Orthogonal Procrustes alignment of point sets.

Given a reference set J and a prediction P (both K x 3), the alignment
centers both, normalizes both by their Frobenius norms, solves the
orthogonal Procrustes problem on the 3x3 cross-covariance by SVD, and
maps the prediction back into the reference frame:

    aligned = (P_n Q^T * s) * ||J_c||_F + mean(J)

with Q = U V^T and s the sum of singular values. Q is orthogonal but may
be a reflection (det -1); pass proper_rotation=True to restrict to
rotations (the last singular direction is flipped and the scale adjusted
accordingly).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import torch

logger = logging.getLogger(__name__)

DEGENERATE_NORM = 1e-12
SVD_GAP_STOP_GRADIENT = 1e-6


@dataclass
class ProcrustesResult:
    aligned: torch.Tensor  # (K, 3), same frame and units as the reference
    rotation: torch.Tensor  # (3, 3) orthogonal (possibly a reflection)
    scale: torch.Tensor  # scalar > 0 in the normalized problem
    ref_norm: torch.Tensor  # Frobenius norm of the centered reference
    ref_mean: torch.Tensor  # (3,)


def procrustes_align(
    reference: torch.Tensor,
    predicted: torch.Tensor,
    proper_rotation: bool = False,
) -> ProcrustesResult:
    """Align `predicted` to `reference` by similarity transform.

    Differentiable in `predicted` away from repeated singular values; when
    the singular spectrum of the cross-covariance is nearly degenerate
    (gap < 1e-6) the rotation is treated as a constant for that call so
    gradients stay finite.
    """
    if reference.shape != predicted.shape or reference.dim() != 2 or reference.shape[1] != 3:
        raise ValueError(
            f"expected matching Kx3 point sets, got {tuple(reference.shape)} "
            f"and {tuple(predicted.shape)}"
        )
    if reference.shape[0] < 3:
        raise ValueError(f"need at least 3 points, got {reference.shape[0]}")
    if not (torch.isfinite(reference).all() and torch.isfinite(predicted).all()):
        raise ValueError("point sets must be finite")

    ref_mean = reference.mean(dim=0)
    pred_mean = predicted.mean(dim=0)
    ref_c = reference - ref_mean
    pred_c = predicted - pred_mean
    ref_norm = torch.linalg.norm(ref_c)
    pred_norm = torch.linalg.norm(pred_c)
    if float(pred_norm.detach()) < DEGENERATE_NORM:
        raise ValueError(
            f"predicted: degenerate point set (centered norm {float(pred_norm):.3g} < 1e-12)"
        )
    ref_n = ref_c / ref_norm.clamp(min=DEGENERATE_NORM)
    pred_n = pred_c / pred_norm

    cross = ref_n.T @ pred_n
    u, sv, vh = torch.linalg.svd(cross)
    gaps = torch.minimum(sv[0] - sv[1], sv[1] - sv[2]).detach()
    if float(gaps) < SVD_GAP_STOP_GRADIENT and (cross.requires_grad or predicted.requires_grad):
        logger.debug(
            "procrustes: near-degenerate singular spectrum (gap %.3g); "
            "holding the rotation constant for this call",
            float(gaps),
        )
        u, sv_d, vh = torch.linalg.svd(cross.detach())
        scale_sv = sv  # keep the differentiable singular values for the scale
    else:
        scale_sv = sv

    if proper_rotation:
        det = torch.det(u @ vh)
        flip = torch.ones(3, dtype=reference.dtype)
        flip[2] = torch.sign(det)
        q = (u * flip) @ vh
        scale = (scale_sv * flip).sum()
    else:
        q = u @ vh
        scale = scale_sv.sum()

    aligned = (pred_n @ q.T) * scale * ref_norm + ref_mean
    return ProcrustesResult(
        aligned=aligned, rotation=q, scale=scale, ref_norm=ref_norm, ref_mean=ref_mean
    )
