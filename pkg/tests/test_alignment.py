import math

import numpy as np
import pytest
import torch

from silhoufit import procrustes_align
from silhoufit.hand_model import rodrigues


def random_rotation(rng):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0, np.pi)
    return rodrigues(torch.from_numpy(axis * angle))


def residual(reference, aligned):
    return float(torch.linalg.norm(reference - aligned))


def best_similarity_residual(reference, predicted, q):
    """For a fixed orthogonal map, the optimal scale/translation in closed
    form (least squares); oracle for the sampling lower bound."""
    ref_c = reference - reference.mean(0)
    pred_c = predicted - predicted.mean(0)
    mapped = pred_c @ q.T
    denom = float((mapped * mapped).sum())
    s = float((ref_c * mapped).sum()) / denom
    return float(torch.linalg.norm(ref_c - s * mapped))


def test_identity_fixed_point():
    rng = np.random.default_rng(41)
    pts = torch.from_numpy(rng.normal(size=(21, 3)))
    out = procrustes_align(pts, pts)
    assert residual(pts, out.aligned) < 1e-10
    # unit-normalized problem: total scale composes back to 1
    assert abs(float(out.scale) - 1.0) < 1e-10


def test_rigid_match_recovered():
    rng = np.random.default_rng(42)
    pts = torch.from_numpy(rng.normal(size=(21, 3)))
    r = rodrigues(torch.tensor([0.0, 0.0, math.pi / 2]))
    moved = pts @ r.T + torch.tensor([0.3, -0.1, 2.0])
    out = procrustes_align(pts, moved)
    assert residual(pts, out.aligned) < 1e-8


def test_similarity_invariance():
    rng = np.random.default_rng(43)
    base = torch.from_numpy(rng.normal(size=(21, 3)))
    for _ in range(100):
        pred = torch.from_numpy(rng.normal(size=(21, 3)))
        r = random_rotation(rng)
        s = float(rng.uniform(0.2, 5.0))
        t = torch.from_numpy(rng.normal(size=3))
        plain = procrustes_align(base, pred).aligned
        transformed = procrustes_align(base, s * (pred @ r.T) + t).aligned
        assert float(torch.abs(plain - transformed).max()) < 1e-7


def test_sampling_oracle_never_beats_alignment():
    # 10k random orthogonal candidates (rotations and reflections), each
    # with its own optimal scale; none may beat the closed-form solution
    # by more than the stated slack
    rng = np.random.default_rng(44)
    reference = torch.from_numpy(rng.normal(size=(21, 3)))
    predicted = torch.from_numpy(rng.normal(size=(21, 3)))
    out = procrustes_align(reference, predicted)
    computed = residual(reference, out.aligned)
    best_sampled = math.inf
    for i in range(10_000):
        q = random_rotation(rng)
        if i % 2:
            q = q @ torch.diag(torch.tensor([1.0, 1.0, -1.0]))
        best_sampled = min(best_sampled, best_similarity_residual(reference, predicted, q))
    assert best_sampled >= computed - 1e-3


def test_perturbing_rotation_never_decreases_residual():
    rng = np.random.default_rng(45)
    reference = torch.from_numpy(rng.normal(size=(21, 3)))
    predicted = torch.from_numpy(rng.normal(size=(21, 3)))
    out = procrustes_align(reference, predicted)
    ref_c = reference - out.ref_mean
    pred_n = (predicted - predicted.mean(0)) / torch.linalg.norm(predicted - predicted.mean(0))
    base = float(torch.linalg.norm(ref_c - (pred_n @ out.rotation.T) * out.scale * out.ref_norm))
    for _ in range(50):
        axis = rng.normal(size=3)
        axis = axis / np.linalg.norm(axis) * 1e-3
        delta = rodrigues(torch.from_numpy(axis))
        q = delta @ out.rotation
        perturbed = float(
            torch.linalg.norm(ref_c - (pred_n @ q.T) * out.scale * out.ref_norm)
        )
        assert perturbed >= base - 1e-12


def test_alignment_idempotent():
    rng = np.random.default_rng(46)
    reference = torch.from_numpy(rng.normal(size=(21, 3)))
    predicted = torch.from_numpy(rng.normal(size=(21, 3)))
    once = procrustes_align(reference, predicted).aligned
    twice = procrustes_align(reference, once).aligned
    assert float(torch.abs(twice - once).max()) < 1e-9


def test_degenerate_prediction_rejected():
    reference = torch.from_numpy(np.random.default_rng(47).normal(size=(21, 3)))
    with pytest.raises(ValueError, match="degenerate"):
        procrustes_align(reference, torch.zeros(21, 3))


def test_reflected_prediction_literal_vs_proper():
    rng = np.random.default_rng(48)
    pts = torch.from_numpy(rng.normal(size=(21, 3)))
    mirrored = pts.clone()
    mirrored[:, 0] = -mirrored[:, 0]
    literal = procrustes_align(pts, mirrored)
    assert float(torch.det(literal.rotation)) < 0  # reflection allowed
    assert residual(pts, literal.aligned) < 1e-8
    proper = procrustes_align(pts, mirrored, proper_rotation=True)
    assert float(torch.det(proper.rotation)) > 0
    assert residual(pts, proper.aligned) > 1e-3  # rotations cannot undo a mirror


def test_gradient_flows_and_stays_finite():
    rng = np.random.default_rng(49)
    reference = torch.from_numpy(rng.normal(size=(21, 3)))
    predicted = torch.from_numpy(rng.normal(size=(21, 3))).requires_grad_(True)
    out = procrustes_align(reference, predicted)
    ((reference - out.aligned) ** 2).sum().backward()
    assert torch.isfinite(predicted.grad).all()


def test_degenerate_spectrum_uses_stop_gradient():
    # symmetric planar points give a repeated singular value; gradients
    # must stay finite thanks to the constant-rotation fallback
    pts = torch.tensor(
        [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]],
        dtype=torch.float64,
    )
    predicted = pts.clone().requires_grad_(True)
    out = procrustes_align(pts, predicted)
    ((pts - out.aligned) ** 2).sum().backward()
    assert torch.isfinite(predicted.grad).all()


def test_shape_validation():
    with pytest.raises(ValueError, match="Kx3"):
        procrustes_align(torch.zeros(5, 2), torch.zeros(5, 2))
    with pytest.raises(ValueError, match="at least 3"):
        procrustes_align(torch.zeros(2, 3), torch.zeros(2, 3))
