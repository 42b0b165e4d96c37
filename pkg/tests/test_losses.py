import math

import numpy as np
import pytest
import torch

from silhoufit import (
    SilhouetteImage,
    aligned_mesh_loss,
    aligned_pose_loss,
    bce_loss,
    contour_loss,
    contour_of_binary,
    distance_transform,
    mesh_loss,
    pose_loss,
    procrustes_align,
    total_loss,
)
from silhoufit.hand_model import rodrigues
from silhoufit.losses import LossWeights


def joints_like(rng, k=21):
    return torch.from_numpy(rng.normal(size=(k, 3)))


def hard_image(arr):
    return SilhouetteImage(pixels=torch.as_tensor(np.asarray(arr), dtype=torch.float64), kind="hard")


def soft_image(arr):
    return SilhouetteImage(pixels=torch.as_tensor(np.asarray(arr), dtype=torch.float64), kind="soft")


def square_mask(size, top, left, side):
    m = np.zeros((size, size))
    m[top : top + side, left : left + side] = 1.0
    return m


# ---------------------------------------------------------------------------
# pose / mesh losses
# ---------------------------------------------------------------------------

def test_pose_loss_zero_for_exact():
    rng = np.random.default_rng(51)
    gt = joints_like(rng)
    assert float(pose_loss(gt, gt, gt)) == 0.0


def test_pose_loss_unit_offset():
    rng = np.random.default_rng(52)
    gt = joints_like(rng)
    prelim = gt + torch.tensor([1.0, 0.0, 0.0])
    assert abs(float(pose_loss(gt, prelim, gt)) - 1.0) < 1e-12


def test_pose_loss_matches_loop_oracle():
    rng = np.random.default_rng(53)
    gt, prelim, refined = joints_like(rng), joints_like(rng), joints_like(rng)
    want = 0.0
    for i in range(21):
        want += sum((gt[i, c] - prelim[i, c]) ** 2 for c in range(3)) / 21
        want += sum((gt[i, c] - refined[i, c]) ** 2 for c in range(3)) / 21
    assert abs(float(pose_loss(gt, prelim, refined)) - float(want)) < 1e-12


def test_mesh_loss_constant_offset():
    rng = np.random.default_rng(54)
    gt = torch.from_numpy(rng.normal(size=(778, 3)))
    prelim = gt + 0.01
    assert abs(float(mesh_loss(gt, prelim, gt)) - 0.03) < 1e-12


def test_mesh_loss_matches_loop_oracle():
    rng = np.random.default_rng(55)
    gt = torch.from_numpy(rng.normal(size=(50, 3)))
    prelim = torch.from_numpy(rng.normal(size=(50, 3)))
    refined = torch.from_numpy(rng.normal(size=(50, 3)))
    want = 0.0
    for i in range(50):
        want += sum(abs(gt[i, c] - prelim[i, c]) for c in range(3)) / 50
        want += sum(abs(gt[i, c] - refined[i, c]) for c in range(3)) / 50
    assert abs(float(mesh_loss(gt, prelim, refined)) - float(want)) < 1e-12


def test_aligned_pose_loss_rigid_transform_zero():
    rng = np.random.default_rng(56)
    gt = joints_like(rng)
    r = rodrigues(torch.tensor([0.3, -0.2, 0.9]))
    moved = gt @ r.T + torch.tensor([0.5, 0.0, -0.2])
    assert float(aligned_pose_loss(gt, moved, moved)) < 1e-10


def test_aligned_pose_loss_scale_invariant():
    rng = np.random.default_rng(57)
    gt = joints_like(rng)
    assert float(aligned_pose_loss(gt, 2.0 * gt, gt)) < 1e-10


def test_aligned_pose_loss_compositional():
    rng = np.random.default_rng(58)
    gt, prelim, refined = joints_like(rng), joints_like(rng), joints_like(rng)
    direct = float(aligned_pose_loss(gt, prelim, refined))
    composed = float(
        pose_loss(
            gt,
            procrustes_align(gt, prelim).aligned,
            procrustes_align(gt, refined).aligned,
        )
    )
    assert direct == composed


def test_aligned_mesh_loss_similarity_cases():
    rng = np.random.default_rng(59)
    gt = torch.from_numpy(rng.normal(size=(778, 3)))
    r = rodrigues(torch.tensor([0.1, 0.7, -0.4]))
    rigid = gt @ r.T + 0.3
    assert float(aligned_mesh_loss(gt, rigid, rigid)) < 1e-9
    assert float(aligned_mesh_loss(gt, 0.5 * gt, 0.5 * gt)) < 1e-9
    prelim = torch.from_numpy(rng.normal(size=(778, 3)))
    refined = torch.from_numpy(rng.normal(size=(778, 3)))
    direct = float(aligned_mesh_loss(gt, prelim, refined))
    composed = float(
        mesh_loss(
            gt,
            procrustes_align(gt, prelim).aligned,
            procrustes_align(gt, refined).aligned,
        )
    )
    assert direct == composed


# ---------------------------------------------------------------------------
# bce
# ---------------------------------------------------------------------------

def test_bce_perfect_prediction_small():
    rng = np.random.default_rng(60)
    target = (rng.random((16, 16)) < 0.5).astype(float)
    loss = bce_loss(soft_image(target), hard_image(target))
    assert float(loss) <= 1e-6


def test_bce_uniform_half_is_ln2():
    target = (np.random.default_rng(61).random((8, 8)) < 0.5).astype(float)
    loss = bce_loss(soft_image(np.full((8, 8), 0.5)), hard_image(target))
    assert abs(float(loss) - math.log(2.0)) < 1e-12


def test_bce_matches_loop_oracle():
    rng = np.random.default_rng(62)
    s = rng.uniform(0.01, 0.99, size=(6, 7))
    b = (rng.random((6, 7)) < 0.5).astype(float)
    want = 0.0
    for r in range(6):
        for c in range(7):
            want += -(b[r, c] * math.log(s[r, c]) + (1 - b[r, c]) * math.log(1 - s[r, c]))
    want /= 42
    assert abs(float(bce_loss(soft_image(s), hard_image(b))) - want) < 1e-10


def test_bce_dimension_mismatch():
    with pytest.raises(ValueError, match="sizes"):
        bce_loss(soft_image(np.zeros((4, 4))), hard_image(np.zeros((5, 4))))


# ---------------------------------------------------------------------------
# contour loss
# ---------------------------------------------------------------------------

def dfield_of(mask):
    contour = contour_of_binary(hard_image(mask))
    return distance_transform(contour, mask.shape[1], mask.shape[0])


def test_contour_loss_perfect_render_bounded_by_ring():
    m = square_mask(24, 7, 7, 10)
    field = dfield_of(m)
    loss = float(contour_loss(soft_image(m), field))
    # response lives on the outside 4-neighbor ring: 40 pixels at unit
    # distance from the contour, each at most tanh(1)
    ring = 4 * 10
    assert 0.0 < loss <= ring * math.tanh(1.0) * 1.0 + 1e-9


def test_contour_loss_monotone_in_shift():
    m = square_mask(40, 12, 8, 12)
    field = dfield_of(m)
    losses = []
    for shift in range(0, 9):
        shifted = square_mask(40, 12, 8 + shift, 12)
        losses.append(float(contour_loss(soft_image(shifted), field)))
    for a, b in zip(losses[:-1], losses[1:]):
        assert b > a
    assert losses[5] > losses[1]


def test_contour_loss_all_zero_render_is_zero():
    m = square_mask(16, 4, 4, 6)
    field = dfield_of(m)
    # degenerate blind spot: an empty render produces no contour response
    assert float(contour_loss(soft_image(np.zeros((16, 16))), field)) == 0.0


def test_contour_loss_border_band():
    m = square_mask(16, 0, 0, 8)  # touches the frame corner
    field = dfield_of(m)
    shifted = square_mask(16, 1, 1, 8)
    full = float(contour_loss(soft_image(shifted), field, border_band=0))
    banded = float(contour_loss(soft_image(shifted), field, border_band=3))
    assert banded <= full


def test_contour_loss_differentiable():
    m = square_mask(20, 6, 6, 8)
    field = dfield_of(m)
    pix = torch.from_numpy(square_mask(20, 7, 7, 8) * 0.9).requires_grad_(True)
    loss = contour_loss(SilhouetteImage(pixels=pix, kind="soft"), field)
    loss.backward()
    assert torch.isfinite(pix.grad).all()
    assert float(pix.grad.abs().sum()) > 0


# ---------------------------------------------------------------------------
# total loss
# ---------------------------------------------------------------------------

def _scene(rng):
    mask = square_mask(24, 8, 8, 9)
    gt_j = joints_like(rng)
    gt_v = torch.from_numpy(rng.normal(size=(778, 3)))
    return dict(
        rendered=soft_image(np.clip(mask + rng.normal(0, 0.05, mask.shape), 0, 1)),
        target=hard_image(mask),
        dfield=dfield_of(mask),
        gt_joints=gt_j,
        prelim_joints=gt_j + torch.from_numpy(rng.normal(0, 0.02, (21, 3))),
        refined_joints=gt_j + torch.from_numpy(rng.normal(0, 0.01, (21, 3))),
        gt_mesh=gt_v,
        prelim_mesh=gt_v + torch.from_numpy(rng.normal(0, 0.02, (778, 3))),
        refined_mesh=gt_v + torch.from_numpy(rng.normal(0, 0.01, (778, 3))),
    )


def test_total_zero_weights():
    rng = np.random.default_rng(63)
    zero = LossWeights(pose=0, aligned_pose=0, bce=0, contour=0, mesh=0, aligned_mesh=0)
    breakdown = total_loss(zero, **_scene(rng))
    assert breakdown.total == 0.0


def test_total_is_weighted_sum_of_terms():
    rng = np.random.default_rng(64)
    w = LossWeights(pose=0.3, aligned_pose=0.7, bce=1.3, contour=2e-3, mesh=0.11, aligned_mesh=0.9)
    scene = _scene(rng)
    breakdown = total_loss(w, **scene)
    want = (
        w.pose * breakdown.pose
        + w.aligned_pose * breakdown.aligned_pose
        + w.bce * breakdown.bce
        + w.contour * breakdown.contour
        + w.mesh * breakdown.mesh
        + w.aligned_mesh * breakdown.aligned_mesh
    )
    assert abs(breakdown.total - want) < 1e-9


def test_doubling_one_weight_doubles_its_contribution():
    rng = np.random.default_rng(65)
    scene = _scene(rng)
    w1 = LossWeights()
    w2 = LossWeights(
        pose=w1.pose, aligned_pose=w1.aligned_pose, bce=w1.bce,
        contour=2 * w1.contour, mesh=w1.mesh, aligned_mesh=w1.aligned_mesh,
    )
    b1 = total_loss(w1, **scene)
    b2 = total_loss(w2, **scene)
    assert abs((b2.total - b1.total) - w1.contour * b1.contour) < 1e-12
    assert b2.contour == b1.contour


def test_every_term_nonnegative_and_zero_when_perfect():
    rng = np.random.default_rng(66)
    scene = _scene(rng)
    b = total_loss(LossWeights(), **scene)
    for name in ("pose", "aligned_pose", "bce", "contour", "mesh", "aligned_mesh"):
        assert getattr(b, name) >= 0.0
    mask = square_mask(24, 8, 8, 9)
    gt_j = joints_like(rng)
    gt_v = torch.from_numpy(rng.normal(size=(778, 3)))
    perfect = total_loss(
        LossWeights(),
        rendered=soft_image(mask),
        target=hard_image(mask),
        dfield=dfield_of(mask),
        gt_joints=gt_j,
        prelim_joints=gt_j,
        refined_joints=gt_j,
        gt_mesh=gt_v,
        prelim_mesh=gt_v,
        refined_mesh=gt_v,
    )
    assert perfect.pose == 0.0 and perfect.mesh == 0.0
    assert perfect.aligned_pose <= 1e-12 and perfect.aligned_mesh <= 1e-12
    assert perfect.bce <= 1e-6
    # a perfect render still pays the contour ring cost: the Laplacian
    # response sits on the outside 4-neighbor ring, one pixel from the
    # contour, so the weighted floor is contour_w * ring * tanh(1) * 1px
    ring = 4 * 9
    floor = LossWeights().contour * ring * math.tanh(1.0)
    assert perfect.total <= floor + 1e-6


def test_silhouette_only_mode_zeroes_supervised_terms():
    rng = np.random.default_rng(67)
    scene = _scene(rng)
    b = total_loss(LossWeights(bce=0.5), mode="silhouette_only", **scene)
    want = 0.5 * b.bce + LossWeights().contour * b.contour
    assert abs(b.total - want) < 1e-12


def test_full_mode_requires_ground_truth():
    rng = np.random.default_rng(68)
    scene = _scene(rng)
    scene.pop("gt_joints")
    scene.pop("gt_mesh")
    with pytest.raises(ValueError, match="full"):
        total_loss(LossWeights(), mode="full", **scene)


def test_prior_term_reported_separately():
    from silhoufit import HandParams

    rng = np.random.default_rng(69)
    scene = _scene(rng)
    params = HandParams.zeros(6)
    params.theta = torch.tensor([1.0, 0.0, 2.0, 0.0, 0.0, 0.0])
    b = total_loss(LossWeights(), mode="silhouette_only", prior_weight=1e-3,
                   params=params, **scene)
    assert abs(b.prior - 5.0) < 1e-12
    want = LossWeights().contour * b.contour + 1e-3 * b.prior
    assert abs(b.total - want) < 1e-12


def test_weights_reject_negative():
    with pytest.raises(ValueError, match="contour"):
        LossWeights(contour=-1.0)
