"""Differentiable image machinery for the contour matching loss.

The non-differentiable half (binary contour extraction, exact Euclidean
distance transform of the target mask) is precomputed per target; the
differentiable half (steep logistic binarization, Laplacian contour
response) runs inside the optimization loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .render import SilhouetteImage
from .validation import check_mask

BINARIZE_SLOPE = 100.0


@dataclass
class DistanceField:
    """Per-pixel Euclidean distance (in pixels) to the nearest contour pixel."""

    values: torch.Tensor  # (H, W) float64, >= 0


def contour_of_binary(mask: SilhouetteImage) -> torch.Tensor:
    """Foreground pixels with at least one 4-neighbor of background.

    The image border counts as background, so a foreground region touching
    the frame still closes its contour. Returns (N, 2) int64 rows of
    (row, col) in raster order; empty for an all-zero mask.
    """
    if mask.kind != "hard":
        raise ValueError(f"mask: expected a hard silhouette, got kind={mask.kind!r}")
    m = check_mask(mask.pixels, "mask").to(torch.bool)
    padded = torch.zeros(
        (m.shape[0] + 2, m.shape[1] + 2), dtype=torch.bool
    )
    padded[1:-1, 1:-1] = m
    up = padded[:-2, 1:-1]
    down = padded[2:, 1:-1]
    left = padded[1:-1, :-2]
    right = padded[1:-1, 2:]
    boundary = m & ~(up & down & left & right)
    return boundary.nonzero()


def distance_transform(contour: torch.Tensor, width: int, height: int) -> DistanceField:
    """Exact Euclidean distance transform of a pixel set.

    Two 1D passes: per-column distance to the nearest contour row, then a
    per-row lower envelope of parabolas over the squared column offsets.
    Squared distances are sums of squares of integer offsets, computed
    exactly, so the result matches a brute-force minimum bit for bit.
    """
    if contour.numel() == 0:
        raise ValueError("contour: empty; distance transform undefined")
    rows = contour[:, 0].numpy()
    cols = contour[:, 1].numpy()
    if rows.min() < 0 or rows.max() >= height or cols.min() < 0 or cols.max() >= width:
        raise ValueError("contour: pixel outside the grid")

    big = height + width + 1
    g = np.full((height, width), big, dtype=np.int64)
    g[rows, cols] = 0
    for r in range(1, height):
        np.minimum(g[r], g[r - 1] + 1, out=g[r])
    for r in range(height - 2, -1, -1):
        np.minimum(g[r], g[r + 1] + 1, out=g[r])

    gsq = (g.astype(np.float64)) ** 2
    gsq[g >= big] = np.inf
    out = np.empty((height, width), dtype=np.float64)
    v = np.empty(width, dtype=np.int64)  # parabola sites
    z = np.empty(width + 1, dtype=np.float64)  # envelope breakpoints
    for r in range(height):
        f = gsq[r]
        k = 0
        v[0] = -1
        started = False
        for q in range(width):
            if not np.isfinite(f[q]):
                continue
            if not started:
                v[0] = q
                z[0] = -np.inf
                z[1] = np.inf
                started = True
                continue
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2 * q - 2 * v[k])
            while s <= z[k]:
                k -= 1
                s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2 * q - 2 * v[k])
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = np.inf
        k = 0
        for q in range(width):
            while z[k + 1] < q:
                k += 1
            dq = q - v[k]
            out[r, q] = dq * dq + f[v[k]]
    return DistanceField(values=torch.from_numpy(np.sqrt(out)))


def soft_binarize(image: SilhouetteImage) -> SilhouetteImage:
    """Steep pointwise logistic centered at 0.5: 1 / (1 + e^(-100 (x - 0.5)))."""
    x = image.pixels
    return SilhouetteImage(pixels=torch.sigmoid(BINARIZE_SLOPE * (x - 0.5)), kind="soft")


def soft_contour(binarized: SilhouetteImage) -> SilhouetteImage:
    """Contour response: tanh(relu(Laplacian)), zero-padded borders.

    The 5-point Laplacian is positive just outside a bright region, so
    after relu and tanh the response hugs the outside of the boundary and
    lies in [0, 1).
    """
    s = binarized.pixels
    padded = torch.nn.functional.pad(s.unsqueeze(0).unsqueeze(0), (1, 1, 1, 1))[0, 0]
    lap = padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:] - 4.0 * s
    return SilhouetteImage(pixels=torch.tanh(torch.relu(lap)), kind="soft")
