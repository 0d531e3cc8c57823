"""Core value types: label masks, depth maps, color images, cameras, boxes.

Conventions used throughout the package:

* Images are indexed [row, col]; pixel (i, j) has its center at projected
  coordinates (u, v) = (j, i).
* Cameras map world points to camera space via x_cam = R @ x_world + t and
  look along +z in camera space; v grows downward in the image.
* Depth is the camera-space z coordinate of the surface point, not the
  length of the ray to it.

All types are frozen after construction; array fields are copied and made
read-only so instances can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HOLE_FMT = "hole sentinel is num_classes itself; labels above it are invalid"


def _frozen(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=dtype)
    if out is arr:
        out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SemanticMask:
    """H x W integer label image. Labels < num_classes are real classes,
    label == num_classes marks a hole left by warping."""

    labels: np.ndarray  # HxW int32
    num_classes: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or labels.size == 0:
            raise ValueError(f"labels must be a non-empty HxW array, got shape {labels.shape}")
        if self.num_classes < 2:
            raise ValueError("need at least one foreground class plus sky")
        if labels.min() < 0 or labels.max() > self.num_classes:
            raise ValueError(f"labels outside [0, {self.num_classes}]; {HOLE_FMT}")
        object.__setattr__(self, "labels", _frozen(labels, np.int32))

    @property
    def hole_label(self) -> int:
        return self.num_classes

    @property
    def holes(self) -> np.ndarray:
        """Boolean HxW map of hole pixels."""
        return self.labels == self.num_classes

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def is_hole_free(self) -> bool:
        return not bool(self.holes.any())

    def one_hot(self) -> np.ndarray:
        """HxWxK float32 one-hot over real classes; hole pixels are all-zero."""
        h, w = self.labels.shape
        out = np.zeros((h, w, self.num_classes), dtype=np.float32)
        ii, jj = np.nonzero(self.labels < self.num_classes)
        out[ii, jj, self.labels[ii, jj]] = 1.0
        return out


@dataclass(frozen=True)
class DepthMap:
    """H x W metric depth with a validity map. Valid entries are finite and
    strictly positive; invalid entries carry no meaning (stored as 0 on disk)."""

    values: np.ndarray  # HxW float32
    validity: np.ndarray  # HxW bool

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        validity = np.asarray(self.validity, dtype=bool)
        if values.ndim != 2 or values.size == 0:
            raise ValueError(f"values must be a non-empty HxW array, got shape {values.shape}")
        if validity.shape != values.shape:
            raise ValueError("validity shape must match values")
        picked = values[validity]
        if picked.size and (not np.isfinite(picked).all() or (picked <= 0).any()):
            raise ValueError("valid depth entries must be finite and > 0")
        # Normalize the stored array so invalid entries cannot leak NaN/inf.
        cleaned = np.where(validity, values, 0.0).astype(np.float32)
        object.__setattr__(self, "values", _frozen(cleaned, np.float32))
        object.__setattr__(self, "validity", _frozen(validity, bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def all_valid(self) -> bool:
        return bool(self.validity.all())


@dataclass(frozen=True)
class ColorImage:
    """H x W x 3 float image with channels in [0, 1]."""

    rgb: np.ndarray  # HxWx3 float32

    def __post_init__(self):
        rgb = np.asarray(self.rgb, dtype=np.float32)
        if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.shape[0] == 0 or rgb.shape[1] == 0:
            raise ValueError(f"rgb must be HxWx3, got shape {rgb.shape}")
        if not np.isfinite(rgb).all() or rgb.min() < 0 or rgb.max() > 1:
            raise ValueError("rgb channels must be finite and within [0, 1]")
        object.__setattr__(self, "rgb", _frozen(rgb, np.float32))

    @property
    def shape(self) -> tuple[int, int]:
        return self.rgb.shape[:2]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, lo <= hi componentwise."""

    lo: np.ndarray  # 3
    hi: np.ndarray  # 3

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64).reshape(3)
        hi = np.asarray(self.hi, dtype=np.float64).reshape(3)
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("box corners must be finite")
        if (lo > hi).any():
            raise ValueError("box has lo > hi on some axis")
        object.__setattr__(self, "lo", _frozen(lo, np.float64))
        object.__setattr__(self, "hi", _frozen(hi, np.float64))

    @property
    def size(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(points)
        return ((p >= self.lo) & (p <= self.hi)).all(axis=1)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.lo + rng.random((n, 3)) * self.size


_ROT_TOL = 1e-6


@dataclass(frozen=True)
class Camera:
    """Pinhole camera. x_cam = rotation @ x_world + translation; the camera
    looks along +z_cam, u = fx * x/z + cx, v = fy * y/z + cy."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray  # 3x3, world-to-camera
    translation: np.ndarray  # 3
    resolution: tuple[int, int]  # (H, W)

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if r.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if not np.allclose(r @ r.T, np.eye(3), atol=_ROT_TOL):
            raise ValueError("rotation must be orthonormal")
        if np.linalg.det(r) < 0:
            raise ValueError("rotation must be right-handed (det +1)")
        h, w = self.resolution
        if h < 2 or w < 2:
            raise ValueError("resolution must be at least 2x2")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        object.__setattr__(self, "rotation", _frozen(r, np.float64))
        object.__setattr__(self, "translation", _frozen(t, np.float64))
        object.__setattr__(self, "resolution", (int(h), int(w)))

    @property
    def center(self) -> np.ndarray:
        """Camera position in world coordinates."""
        return -self.rotation.T @ self.translation

    @property
    def forward(self) -> np.ndarray:
        """Unit optical axis in world coordinates."""
        return self.rotation[2].copy()

    def world_to_cam(self, points: np.ndarray) -> np.ndarray:
        return points @ self.rotation.T + self.translation

    def cam_to_world(self, points: np.ndarray) -> np.ndarray:
        return (points - self.translation) @ self.rotation

    def project(self, points_world: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Project Nx3 world points; returns (Nx2 pixel coords (u, v), N depth z).

        Points at or behind the camera plane get z <= 0; callers must cull.
        """
        pc = self.world_to_cam(np.atleast_2d(points_world))
        z = pc[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.fx * pc[:, 0] / z + self.cx
            v = self.fy * pc[:, 1] / z + self.cy
        return np.stack([u, v], axis=1), z

    def unproject(self, rows: np.ndarray, cols: np.ndarray, depth: np.ndarray) -> np.ndarray:
        """Lift pixels (row, col) at camera-space depth z to world points."""
        z = np.asarray(depth, dtype=np.float64)
        x = (np.asarray(cols, dtype=np.float64) - self.cx) / self.fx * z
        y = (np.asarray(rows, dtype=np.float64) - self.cy) / self.fy * z
        return self.cam_to_world(np.stack([x, y, z], axis=-1))

    def pixel_rays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Rays through every pixel center.

        Returns (origins HWx3, unit directions HWx3, cos HW) where cos is the
        angle factor between each ray and the optical axis: camera-space depth
        of a point at ray parameter t is t * cos.
        """
        h, w = self.resolution
        jj, ii = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
        d_cam = np.stack(
            [(jj - self.cx) / self.fx, (ii - self.cy) / self.fy, np.ones_like(jj)], axis=-1
        ).reshape(-1, 3)
        norms = np.linalg.norm(d_cam, axis=1)
        d_world = (d_cam / norms[:, None]) @ self.rotation
        origins = np.broadcast_to(self.center, d_world.shape).copy()
        return origins, d_world, 1.0 / norms

    def with_pose(self, rotation: np.ndarray, translation: np.ndarray) -> "Camera":
        return Camera(self.fx, self.fy, self.cx, self.cy, rotation, translation, self.resolution)


def look_at(
    position: np.ndarray,
    target: np.ndarray,
    up: np.ndarray = (0.0, 0.0, 1.0),
) -> tuple[np.ndarray, np.ndarray]:
    """World-to-camera (rotation, translation) for a camera at `position`
    looking at `target`. Falls back to a +y up hint when the view direction
    is parallel to `up`."""
    position = np.asarray(position, dtype=np.float64).reshape(3)
    target = np.asarray(target, dtype=np.float64).reshape(3)
    fwd = target - position
    n = np.linalg.norm(fwd)
    if n < 1e-12:
        raise ValueError("camera position coincides with the look-at target")
    fwd = fwd / n
    up = np.asarray(up, dtype=np.float64).reshape(3)
    right = np.cross(fwd, up)
    if np.linalg.norm(right) < 1e-8:
        right = np.cross(fwd, np.array([0.0, 1.0, 0.0]))
        if np.linalg.norm(right) < 1e-8:
            right = np.cross(fwd, np.array([1.0, 0.0, 0.0]))
    right = right / np.linalg.norm(right)
    down = np.cross(fwd, right)
    rotation = np.stack([right, down, fwd], axis=0)
    translation = -rotation @ position
    return rotation, translation


def default_camera(resolution: tuple[int, int], position, target, focal_scale: float = 0.9) -> Camera:
    """Camera with square pixels, principal point at the image center and
    focal length focal_scale * W."""
    h, w = resolution
    rot, trans = look_at(position, target)
    f = focal_scale * w
    return Camera(f, f, (w - 1) / 2.0, (h - 1) / 2.0, rot, trans, (h, w))
