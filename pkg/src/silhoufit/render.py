"""Pinhole projection and silhouette rasterization.

Conventions: camera looks down +z, x right, y down; pixel (row, col)
samples the point (col, row) in pixel units, so pixel centers sit on
integer coordinates and the principal point (cx, cy) lands on pixel
(cy, cx).

The soft rasterizer assigns each pixel a coverage probability

    coverage(p) = 1 - prod_f (1 - logistic(sign(p, f) * d(p, f)^2 / sigma))

with d the exact distance from the pixel to the nearest projected edge of
face f, and sign +1 inside / -1 outside. Silhouettes only: no z-buffer,
union over faces. Per-face influence is truncated beyond `trunc_mult *
sqrt(sigma)` pixels outside the face, which keeps the cost proportional
to covered area; coverage is exactly 0 out there (and for empty meshes),
so values live in [0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .hand_model import HandMesh

DEFAULT_TRUNC_MULT = 3.0


@dataclass(frozen=True)
class Camera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"fx/fy: focal lengths must be positive, got {self.fx}, {self.fy}")
        if self.width < 8 or self.height < 8:
            raise ValueError(f"width/height: must be at least 8, got {self.width}x{self.height}")

    @classmethod
    def from_dict(cls, d: dict) -> "Camera":
        try:
            return cls(
                fx=float(d["fx"]),
                fy=float(d["fy"]),
                cx=float(d["cx"]),
                cy=float(d["cy"]),
                width=int(d["width"]),
                height=int(d["height"]),
            )
        except KeyError as exc:
            raise ValueError(f"camera: missing field {exc.args[0]!r}") from exc

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
        }

    def default_sigma(self) -> float:
        return 1e-4 * min(self.width, self.height) ** 2


@dataclass
class SilhouetteImage:
    pixels: torch.Tensor  # (H, W) values in [0, 1]
    kind: str  # "soft" | "hard"

    def validate(self) -> "SilhouetteImage":
        if self.kind not in ("soft", "hard"):
            raise ValueError(f"kind: must be 'soft' or 'hard', got {self.kind!r}")
        p = self.pixels
        if p.dim() != 2:
            raise ValueError(f"pixels: expected HxW grid, got shape {tuple(p.shape)}")
        if (p < 0).any() or (p > 1).any():
            raise ValueError("pixels: values must lie in [0, 1]")
        if self.kind == "hard" and not torch.logical_or(p == 0, p == 1).all():
            raise ValueError("pixels: hard silhouette must contain only {0, 1}")
        return self


def project(camera: Camera, point) -> torch.Tensor:
    """Project one camera-space point to pixel coordinates (u, v)."""
    p = point if isinstance(point, torch.Tensor) else torch.tensor(point, dtype=torch.float64)
    if p.shape != (3,):
        raise ValueError(f"point: expected 3 components, got shape {tuple(p.shape)}")
    if float(p[2]) <= 0:
        raise ValueError(f"point: nonpositive depth z={float(p[2]):g}")
    return torch.stack([camera.fx * p[0] / p[2] + camera.cx, camera.fy * p[1] / p[2] + camera.cy])


def project_vertices(camera: Camera, vertices: torch.Tensor) -> torch.Tensor:
    """Vectorized projection; raises naming the first bad vertex."""
    z = vertices[:, 2]
    bad = z <= 0
    if bad.any():
        i = int(bad.nonzero()[0, 0])
        raise ValueError(f"vertex {i}: nonpositive depth z={float(z[i]):g}")
    u = camera.fx * vertices[:, 0] / z + camera.cx
    v = camera.fy * vertices[:, 1] / z + camera.cy
    return torch.stack([u, v], dim=1)


def _face_corners(camera: Camera, mesh: HandMesh):
    """Project vertices and gather per-face corner coordinates.

    Faces with any vertex at z <= 0 are dropped (behind the camera), as are
    faces whose projection has exactly zero area.
    """
    verts = mesh.vertices
    z = verts[:, 2]
    safe_z = torch.where(z > 0, z, torch.ones_like(z))
    u = camera.fx * verts[:, 0] / safe_z + camera.cx
    v = camera.fy * verts[:, 1] / safe_z + camera.cy
    pts = torch.stack([u, v], dim=1)
    tri = pts[mesh.faces]  # (F, 3, 2)
    in_front = (z > 0)[mesh.faces].all(dim=1)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    area2 = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    keep = in_front & (area2 != 0)
    return tri[keep]


def _pixel_face_pairs(tri: torch.Tensor, margin: float, width: int, height: int):
    """Enumerate (face, pixel) pairs inside each face's dilated bounding box."""
    x0 = torch.floor(tri[..., 0].min(dim=1).values - margin).clamp(0, width - 1).long()
    x1 = torch.ceil(tri[..., 0].max(dim=1).values + margin).clamp(0, width - 1).long()
    y0 = torch.floor(tri[..., 1].min(dim=1).values - margin).clamp(0, height - 1).long()
    y1 = torch.ceil(tri[..., 1].max(dim=1).values + margin).clamp(0, height - 1).long()
    on_frame = (
        (tri[..., 0].max(dim=1).values >= -margin)
        & (tri[..., 0].min(dim=1).values <= width - 1 + margin)
        & (tri[..., 1].max(dim=1).values >= -margin)
        & (tri[..., 1].min(dim=1).values <= height - 1 + margin)
    )
    w = torch.where(on_frame, x1 - x0 + 1, torch.zeros_like(x0))
    h = torch.where(on_frame, y1 - y0 + 1, torch.zeros_like(y0))
    counts = w * h
    total = int(counts.sum())
    fid = torch.repeat_interleave(torch.arange(tri.shape[0]), counts)
    starts = torch.cumsum(counts, 0) - counts
    offset = torch.arange(total) - starts[fid]
    px = x0[fid] + offset % w[fid].clamp(min=1)
    py = y0[fid] + offset // w[fid].clamp(min=1)
    return fid, px, py


def _segment_d2(p: torch.Tensor, a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    ab = b - a
    denom = (ab * ab).sum(dim=1)
    t = (((p - a) * ab).sum(dim=1) / denom.clamp(min=1e-30)).clamp(0.0, 1.0)
    q = a + t.unsqueeze(1) * ab
    d = p - q
    return (d * d).sum(dim=1)


def _edge_sign(o, u, p):
    return (u[:, 0] - o[:, 0]) * (p[:, 1] - o[:, 1]) - (u[:, 1] - o[:, 1]) * (p[:, 0] - o[:, 0])


def render_soft(
    camera: Camera,
    mesh: HandMesh,
    sigma: float | None = None,
    trunc_mult: float = DEFAULT_TRUNC_MULT,
) -> SilhouetteImage:
    """Differentiable soft silhouette of the mesh."""
    if sigma is None:
        sigma = camera.default_sigma()
    if sigma <= 0:
        raise ValueError(f"sigma: must be positive, got {sigma}")
    h, w = camera.height, camera.width
    dtype = mesh.vertices.dtype
    tri = _face_corners(camera, mesh)
    acc = torch.zeros(h * w, dtype=dtype)
    if tri.shape[0] == 0:
        return SilhouetteImage(pixels=acc.reshape(h, w), kind="soft")

    radius = trunc_mult * sigma**0.5
    fid, px, py = _pixel_face_pairs(tri, radius, w, h)
    p = torch.stack([px.to(dtype), py.to(dtype)], dim=1)
    a, b, c = tri[fid, 0], tri[fid, 1], tri[fid, 2]
    d2 = torch.minimum(
        _segment_d2(p, a, b), torch.minimum(_segment_d2(p, b, c), _segment_d2(p, c, a))
    )
    s1, s2, s3 = _edge_sign(a, b, p), _edge_sign(b, c, p), _edge_sign(c, a, p)
    inside = ((s1 >= 0) & (s2 >= 0) & (s3 >= 0)) | ((s1 <= 0) & (s2 <= 0) & (s3 <= 0))
    sign = torch.where(inside, torch.ones_like(d2), -torch.ones_like(d2))
    # 1 - logistic(x) = exp(-softplus(x)), so the product over faces becomes
    # a scatter-add of softplus terms per pixel. The truncation fades the
    # (already tiny, <= logistic(-(0.8*trunc)^2/sigma)) contribution to an
    # exact zero over the outer fifth of the band instead of cutting it:
    # a hard cut would put value jumps on the truncation ring, which the
    # steep binarization downstream amplifies into gradient noise.
    r2 = radius * radius
    fade_start = (0.8 * radius) ** 2
    fade = ((r2 - d2) / (r2 - fade_start)).clamp(0.0, 1.0)
    window = torch.where(inside, torch.ones_like(d2), fade)
    contrib = torch.nn.functional.softplus(sign * d2 / sigma) * window
    acc = acc.scatter_add(0, py * w + px, contrib)
    coverage = -torch.expm1(-acc)
    return SilhouetteImage(pixels=coverage.reshape(h, w), kind="soft")


def render_hard(camera: Camera, mesh: HandMesh) -> SilhouetteImage:
    """Binary mask: 1 where the pixel center lies inside any projected face
    (edges count as inside)."""
    h, w = camera.height, camera.width
    tri = _face_corners(camera, mesh)
    hits = torch.zeros(h * w, dtype=torch.int64)
    if tri.shape[0] == 0:
        return SilhouetteImage(pixels=hits.to(torch.float64).reshape(h, w), kind="hard")
    fid, px, py = _pixel_face_pairs(tri, 0.0, w, h)
    p = torch.stack([px.to(tri.dtype), py.to(tri.dtype)], dim=1)
    a, b, c = tri[fid, 0], tri[fid, 1], tri[fid, 2]
    s1, s2, s3 = _edge_sign(a, b, p), _edge_sign(b, c, p), _edge_sign(c, a, p)
    inside = ((s1 >= 0) & (s2 >= 0) & (s3 >= 0)) | ((s1 <= 0) & (s2 <= 0) & (s3 <= 0))
    hits = hits.scatter_add(0, py * w + px, inside.long())
    mask = (hits > 0).to(torch.float64)
    return SilhouetteImage(pixels=mask.reshape(h, w), kind="hard")
