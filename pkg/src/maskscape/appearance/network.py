"""Appearance model: tri-plane features, color MLP, learnable sky image."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .. import checkpoint
from ..errors import FormatError
from ..scenekit import Box, Camera
from .triplane import TriPlane, _plane_sample_t, triplane_sample_t

_PLANE_INIT = 0.02
_SKY_INIT = 0.1


class AppearanceNet(nn.Module):
    """Trainable grids plus a small position-only color head (no view direction)."""

    def __init__(self, plane_res: int = 64, channels: int = 16,
                 sky_res: int = 64, hidden: int = 64):
        super().__init__()
        self.plane_res = int(plane_res)
        self.channels = int(channels)
        self.sky_res = int(sky_res)
        self.hidden = int(hidden)
        shape = (self.plane_res, self.plane_res, self.channels)
        self.plane_xy = nn.Parameter(_PLANE_INIT * torch.randn(shape))
        self.plane_xz = nn.Parameter(_PLANE_INIT * torch.randn(shape))
        self.plane_yz = nn.Parameter(_PLANE_INIT * torch.randn(shape))
        self.sky_raw = nn.Parameter(_SKY_INIT * torch.randn(self.sky_res, self.sky_res, 3))
        self.color_mlp = nn.Sequential(
            nn.Linear(3 * self.channels, self.hidden),
            nn.ReLU(),
            nn.Linear(self.hidden, self.hidden),
            nn.ReLU(),
            nn.Linear(self.hidden, 3),
        )

    def sky_image(self) -> torch.Tensor:
        return torch.sigmoid(self.sky_raw)


@dataclass(frozen=True)
class AppearanceParams:
    net: AppearanceNet
    bounds: Box
    far: float
    style_seed: int = 0
    loss_log: tuple = ()

    @property
    def triplane(self) -> TriPlane:
        return TriPlane(self.net.plane_xy, self.net.plane_xz, self.net.plane_yz, self.bounds)


def surface_colors_t(params: AppearanceParams, points: torch.Tensor) -> torch.Tensor:
    """(N, 3) world points -> (N, 3) RGB in [0, 1]; differentiable."""
    feats = triplane_sample_t(params.triplane, points)
    return torch.sigmoid(params.net.color_mlp(feats))


def surface_colors(params: AppearanceParams, points) -> np.ndarray:
    pts = torch.as_tensor(np.asarray(points, dtype=np.float64), dtype=torch.float32)
    with torch.no_grad():
        return surface_colors_t(params, pts.reshape(-1, 3)).numpy().astype(np.float64)


def _reflect01(x: torch.Tensor) -> torch.Tensor:
    r = torch.remainder(x, 2.0)
    return torch.where(r > 1.0, 2.0 - r, r)


def sky_colors_t(params: AppearanceParams, u: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
    """Bilinear sky-plane lookup at normalized (u, v); out-of-range reflects."""
    return _plane_sample_t(params.net.sky_image(), _reflect01(v), _reflect01(u))


def sky_uv(cam: Camera, dirs_world: np.ndarray, far: float) -> tuple[np.ndarray, np.ndarray]:
    """Normalized coordinates where rays pierce the sky plane.

    The plane sits at camera depth `far`, spanning the view frustum: (u, v)
    run over [0, 1] across the image, so an all-sky frame is exactly a
    resample of the sky image. `far` cancels for rays from the camera center
    but fixes the plane for any other query point.
    """
    d_cam = np.asarray(dirs_world, dtype=np.float64).reshape(-1, 3) @ cam.rotation.T
    z = np.maximum(d_cam[:, 2], 1e-9)
    h, w = cam.resolution
    u = (cam.fx * d_cam[:, 0] / z + cam.cx) / (w - 1)
    v = (cam.fy * d_cam[:, 1] / z + cam.cy) / (h - 1)
    return u, v


def save_appearance(path, params: AppearanceParams) -> None:
    net = params.net
    arrays = {f"net/{k}": v.detach().numpy() for k, v in net.state_dict().items()}
    checkpoint.save_scalar_meta(
        arrays,
        plane_res=net.plane_res,
        channels=net.channels,
        sky_res=net.sky_res,
        hidden=net.hidden,
        far=params.far,
        style_seed=params.style_seed,
    )
    arrays["meta/bounds"] = np.concatenate([params.bounds.lo, params.bounds.hi]).astype(np.float64)
    if params.loss_log:
        arrays["meta/loss_log"] = np.asarray(params.loss_log, dtype=np.float32)
    checkpoint.save_arrays(path, arrays)


def load_appearance(path) -> AppearanceParams:
    arrays = checkpoint.load_arrays(path)
    read = lambda k: checkpoint.read_scalar_meta(arrays, k)
    net = AppearanceNet(
        plane_res=int(read("plane_res")),
        channels=int(read("channels")),
        sky_res=int(read("sky_res")),
        hidden=int(read("hidden")),
    )
    state = {k[4:]: torch.from_numpy(np.ascontiguousarray(v))
             for k, v in arrays.items() if k.startswith("net/")}
    try:
        net.load_state_dict(state)
    except RuntimeError as exc:
        raise FormatError(f"checkpoint does not match appearance architecture: {exc}") from exc
    b = arrays["meta/bounds"].astype(np.float64)
    log = arrays.get("meta/loss_log")
    return AppearanceParams(
        net=net,
        bounds=Box(b[:3], b[3:]),
        far=float(read("far")),
        style_seed=int(read("style_seed")),
        loss_log=tuple(map(tuple, log.tolist())) if log is not None else (),
    )
