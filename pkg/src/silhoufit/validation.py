"""Input validation helpers shared across the package.

All checks raise ValueError with the offending field named, so callers
(and the CLI) can surface actionable messages instead of stack traces.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch


def as_tensor(value, *, dtype=torch.float64, field: str = "value") -> torch.Tensor:
    """Convert array-likes (lists, numpy, tensors) to a torch tensor."""
    try:
        if isinstance(value, torch.Tensor):
            return value.to(dtype)
        return torch.as_tensor(np.asarray(value), dtype=dtype)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{field}: cannot convert to tensor ({exc})") from exc


def check_shape(t: torch.Tensor, shape: Sequence[int | None], field: str) -> torch.Tensor:
    actual = tuple(t.shape)
    if len(actual) != len(shape) or any(
        want is not None and have != want for have, want in zip(actual, shape)
    ):
        want_str = "x".join("?" if s is None else str(s) for s in shape)
        have_str = "x".join(str(s) for s in actual)
        raise ValueError(f"{field}: expected shape {want_str}, got {have_str}")
    return t


def check_finite(t: torch.Tensor, field: str) -> torch.Tensor:
    if not torch.isfinite(t).all():
        raise ValueError(f"{field}: contains non-finite values")
    return t


def check_rows_sum_to_one(t: torch.Tensor, field: str, tol: float = 1e-6) -> torch.Tensor:
    sums = t.sum(dim=-1)
    bad = (sums - 1.0).abs() > tol
    if bad.any():
        i = int(bad.nonzero()[0, 0])
        raise ValueError(
            f"{field}: row {i} sums to {float(sums[i]):.9g}, expected 1 within {tol:g}"
        )
    return t


def check_nonnegative(t: torch.Tensor, field: str) -> torch.Tensor:
    if (t < 0).any():
        raise ValueError(f"{field}: contains negative entries")
    return t


def check_parent_tree(parents: Sequence[int], field: str = "kinematic_parents") -> None:
    """Parents must encode a tree rooted at index 0 (parent -1), acyclic."""
    n = len(parents)
    if n == 0 or parents[0] != -1:
        raise ValueError(f"{field}: entry 0 must be the root (parent -1)")
    for i, p in enumerate(parents[1:], start=1):
        if not (0 <= p < n):
            raise ValueError(f"{field}: entry {i} has parent {p} outside [0, {n})")
        # walk to the root; a cycle would never terminate within n hops
        seen = 0
        j = i
        while j != 0:
            j = parents[j]
            seen += 1
            if seen > n:
                raise ValueError(f"{field}: cycle detected involving joint {i}")


def check_mask(pixels: torch.Tensor, field: str = "mask") -> torch.Tensor:
    """A hard mask holds only {0, 1}."""
    if not torch.logical_or(pixels == 0, pixels == 1).all():
        raise ValueError(f"{field}: hard mask must contain only 0 and 1")
    return pixels
