"""File formats: mask PNG/PGM, cached distance fields, OBJ meshes.

Masks are 8-bit grayscale; on read, foreground is any pixel >= 128. Soft
silhouettes quantize to round(255 * coverage). Distance fields (and other
float grids) use a raw little-endian layout: u32 width, u32 height, then
float32 values row-major, extension ".dfield".
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .render import SilhouetteImage


def write_mask_png(mask: SilhouetteImage, path) -> None:
    pixels = mask.pixels.detach().cpu().numpy()
    if mask.kind == "hard":
        data = (pixels >= 0.5).astype(np.uint8) * 255
    else:
        data = np.round(255.0 * np.clip(pixels, 0.0, 1.0)).astype(np.uint8)
    Image.fromarray(data, mode="L").save(Path(path), format="PNG")


def read_mask_png(path, kind: str = "hard") -> SilhouetteImage:
    try:
        img = Image.open(Path(path)).convert("L")
    except OSError as exc:
        raise ValueError(f"mask file {path}: cannot read ({exc})") from exc
    data = np.asarray(img, dtype=np.uint8)
    if kind == "hard":
        pixels = torch.from_numpy((data >= 128).astype(np.float64))
    else:
        pixels = torch.from_numpy(data.astype(np.float64) / 255.0)
    return SilhouetteImage(pixels=pixels, kind=kind)


def write_mask_pgm(mask: SilhouetteImage, path) -> None:
    pixels = mask.pixels.detach().cpu().numpy()
    if mask.kind == "hard":
        data = (pixels >= 0.5).astype(np.uint8) * 255
    else:
        data = np.round(255.0 * np.clip(pixels, 0.0, 1.0)).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes())


def read_mask_pgm(path, kind: str = "hard") -> SilhouetteImage:
    raw = Path(path).read_bytes()
    if not raw.startswith(b"P5"):
        raise ValueError(f"mask file {path}: not a binary P5 PGM")
    # header: magic, width, height, maxval, single whitespace, then raster
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(raw[start:pos]))
    pos += 1  # the single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise ValueError(f"mask file {path}: unsupported maxval {maxval}")
    data = np.frombuffer(raw[pos : pos + w * h], dtype=np.uint8).reshape(h, w)
    if kind == "hard":
        pixels = torch.from_numpy((data >= 128).astype(np.float64))
    else:
        pixels = torch.from_numpy(data.astype(np.float64) / 255.0)
    return SilhouetteImage(pixels=pixels, kind=kind)


def write_float_grid(values: torch.Tensor, path) -> None:
    """Raw f32 grid with an 8-byte (u32 width, u32 height) header."""
    arr = values.detach().cpu().numpy().astype("<f4")
    if arr.ndim != 2:
        raise ValueError(f"grid: expected 2 dimensions, got {arr.ndim}")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(struct.pack("<II", w, h))
        f.write(arr.tobytes())


def read_float_grid(path) -> torch.Tensor:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ValueError(f"grid file {path}: truncated header")
    w, h = struct.unpack("<II", raw[:8])
    expected = 8 + 4 * w * h
    if len(raw) != expected:
        raise ValueError(f"grid file {path}: expected {expected} bytes, got {len(raw)}")
    arr = np.frombuffer(raw[8:], dtype="<f4").reshape(h, w)
    return torch.from_numpy(arr.astype(np.float64))


def write_obj(vertices: torch.Tensor, faces: torch.Tensor, path) -> None:
    lines = []
    for v in vertices.detach().cpu().numpy():
        lines.append(f"v {v[0]!r} {v[1]!r} {v[2]!r}")
    for f in faces.detach().cpu().numpy():
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    Path(path).write_text("\n".join(lines) + "\n")
