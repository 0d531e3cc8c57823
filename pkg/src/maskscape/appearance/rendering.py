"""Surface-guided image synthesis: one color query per pixel, sky from the plane."""

from __future__ import annotations

import numpy as np
import torch

from ..scenekit import Camera, ColorImage
from ..semfield import SurfaceMesh
from .geometry import SurfaceHits, camera_surface_hits
from .network import AppearanceParams, sky_colors_t, sky_uv, surface_colors


def render_appearance(
    params: AppearanceParams,
    mesh: SurfaceMesh,
    cam: Camera,
    hits: SurfaceHits | None = None,
) -> ColorImage:
    """Shade a camera view of the fixed geometry; pass `hits` to reuse intersections."""
    if hits is None:
        hits = camera_surface_hits(mesh, cam)
    h, w = cam.resolution
    out = np.zeros((h * w, 3))
    if hits.hit.any():
        out[hits.hit] = surface_colors(params, hits.points[hits.hit])
    if hits.sky.any():
        _, dirs, _ = cam.pixel_rays()
        u, v = sky_uv(cam, dirs[hits.sky], params.far)
        with torch.no_grad():
            sky = sky_colors_t(
                params, torch.as_tensor(u, dtype=torch.float32),
                torch.as_tensor(v, dtype=torch.float32),
            ).numpy()
        out[hits.sky] = sky
    return ColorImage(np.clip(out, 0.0, 1.0).reshape(h, w, 3).astype(np.float32))
