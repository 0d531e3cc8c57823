"""Tri-plane feature grids with bilinear world-coordinate sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..errors import ValidationError
from ..scenekit import Box

# Axis pairs each plane spans, in fixed concatenation order.
PLANE_AXES = (("xy", 0, 1), ("xz", 0, 2), ("yz", 1, 2))


@dataclass(frozen=True)
class TriPlane:
    """Three R x R x C grids covering the scene box's axis-aligned planes.

    Grid index [i, j] of plane ab is the node at coordinate a_i, b_j with
    align-corners spacing: node 0 sits on the box's low face, node R-1 on the
    high face.
    """

    xy: torch.Tensor
    xz: torch.Tensor
    yz: torch.Tensor
    bounds: Box

    def __post_init__(self):
        shapes = {tuple(self.xy.shape), tuple(self.xz.shape), tuple(self.yz.shape)}
        if len(shapes) != 1:
            raise ValidationError(f"planes must share one R x R x C shape, got {shapes}")
        shape = shapes.pop()
        if len(shape) != 3 or shape[0] != shape[1] or shape[0] < 2:
            raise ValidationError(f"each plane must be R x R x C with R >= 2, got {shape}")

    @property
    def resolution(self) -> int:
        return self.xy.shape[0]

    @property
    def channels(self) -> int:
        return self.xy.shape[2]

    @property
    def feature_dim(self) -> int:
        return 3 * self.channels


def _plane_sample_t(grid: torch.Tensor, a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Bilinear lookup of an (R, R, C) grid at fractional coords in [0, 1]."""
    r = grid.shape[0]
    ga = a.clamp(0.0, 1.0) * (r - 1)
    gb = b.clamp(0.0, 1.0) * (r - 1)
    i0 = ga.floor().long().clamp(max=r - 2)
    j0 = gb.floor().long().clamp(max=r - 2)
    ta = (ga - i0).unsqueeze(-1)
    tb = (gb - j0).unsqueeze(-1)
    g00 = grid[i0, j0]
    g10 = grid[i0 + 1, j0]
    g01 = grid[i0, j0 + 1]
    g11 = grid[i0 + 1, j0 + 1]
    top = g00 * (1 - tb) + g01 * tb
    bot = g10 * (1 - tb) + g11 * tb
    return top * (1 - ta) + bot * ta


def triplane_sample_t(planes: TriPlane, points: torch.Tensor) -> torch.Tensor:
    """(N, 3) world points -> (N, 3C) features; coordinates clamp to the box."""
    lo = torch.tensor(planes.bounds.lo, dtype=points.dtype)
    hi = torch.tensor(planes.bounds.hi, dtype=points.dtype)
    frac = (points - lo) / (hi - lo)
    parts = []
    for name, ax_a, ax_b in PLANE_AXES:
        grid = getattr(planes, name)
        parts.append(_plane_sample_t(grid, frac[:, ax_a], frac[:, ax_b]))
    return torch.cat(parts, dim=-1)


def triplane_sample(planes: TriPlane, x) -> np.ndarray:
    """Numpy-facing sampler; accepts one point (3,) or a batch (N, 3)."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    pts = torch.from_numpy(np.atleast_2d(arr))
    with torch.no_grad():
        feats = triplane_sample_t(planes, pts.to(planes.xy.dtype)).numpy()
    return feats[0] if single else feats
