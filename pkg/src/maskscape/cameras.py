"""Camera pose generation for training views and rendered orbits."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .scenekit import Box, Camera, default_camera


def sample_cameras(
    box: Box,
    lookat,
    n: int,
    seed: int,
    resolution: tuple[int, int] = (64, 64),
    focal_scale: float = 0.9,
) -> list[Camera]:
    """n cameras with positions uniform in `box`, all aimed at `lookat`, world up."""
    if n < 1:
        raise ValidationError("need at least one camera")
    target = np.asarray(lookat, dtype=np.float64).reshape(3)
    if box.contains(target[None])[0]:
        raise ValidationError("pose box contains the look-at target; orientations are degenerate")
    rng = np.random.default_rng(seed)
    positions = box.sample(rng, n)
    return [default_camera(resolution, pos, target, focal_scale) for pos in positions]


def orbit_cameras(
    lookat,
    radius: float,
    height: float,
    n: int,
    resolution: tuple[int, int] = (64, 64),
    focal_scale: float = 0.9,
    start_angle: float = -0.5 * np.pi,
    sweep: float = 2.0 * np.pi,
) -> list[Camera]:
    """Evenly spaced arc of cameras circling `lookat`, for frame rendering."""
    if n < 1:
        raise ValidationError("need at least one frame")
    if radius <= 0:
        raise ValidationError("radius must be positive")
    target = np.asarray(lookat, dtype=np.float64).reshape(3)
    cams = []
    for k in range(n):
        ang = start_angle + sweep * k / n
        pos = target + np.array([radius * np.cos(ang), radius * np.sin(ang), 0.0])
        pos[2] = height
        cams.append(default_camera(resolution, pos, target, focal_scale))
    return cams
