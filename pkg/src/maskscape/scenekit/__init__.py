from .types import Box, Camera, ColorImage, DepthMap, SemanticMask, default_camera, look_at
from .oracle import OracleScene, make_oracle_scene, render_oracle
from .io import (
    load_camera, load_cameras, load_depth, load_image, load_mask,
    save_camera, save_cameras, save_depth, save_image, save_mask,
)

__all__ = [
    "Box", "Camera", "ColorImage", "DepthMap", "SemanticMask",
    "default_camera", "look_at",
    "OracleScene", "make_oracle_scene", "render_oracle",
    "load_camera", "load_cameras", "load_depth", "load_image", "load_mask",
    "save_camera", "save_cameras", "save_depth", "save_image", "save_mask",
]
