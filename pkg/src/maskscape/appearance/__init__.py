"""Tri-plane appearance field, surface-guided rendering, sky plane, training."""

from .adversarial import PixelDisc, adversarial_step
from .geometry import SurfaceHits, camera_surface_hits, surface_intersect
from .network import (
    AppearanceNet,
    AppearanceParams,
    load_appearance,
    save_appearance,
    sky_colors_t,
    sky_uv,
    surface_colors,
    surface_colors_t,
)
from .perceptual import default_extractor, perceptual_loss, perceptual_loss_t
from .rendering import render_appearance
from .training import AppearanceConfig, train_appearance
from .triplane import TriPlane, triplane_sample, triplane_sample_t

__all__ = [
    "AppearanceConfig",
    "AppearanceNet",
    "AppearanceParams",
    "PixelDisc",
    "SurfaceHits",
    "TriPlane",
    "adversarial_step",
    "camera_surface_hits",
    "default_extractor",
    "load_appearance",
    "perceptual_loss",
    "perceptual_loss_t",
    "render_appearance",
    "save_appearance",
    "sky_colors_t",
    "sky_uv",
    "surface_colors",
    "surface_colors_t",
    "surface_intersect",
    "train_appearance",
    "triplane_sample",
    "triplane_sample_t",
]
