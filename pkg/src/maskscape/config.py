"""Flat `key = value` pipeline configuration with typed, defaulted keys.

The file format is one assignment per line, `#` comments allowed. Every key
has a default below, so an empty file is a valid config; keys outside the
schema are rejected rather than ignored, both in files and in --set overrides.
Vector-valued keys take whitespace-separated floats.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError
from .scenekit import Box


def _floats(value):
    if isinstance(value, (tuple, list, np.ndarray)):
        return tuple(float(v) for v in value)
    return tuple(float(p) for p in str(value).split())


# key -> (parser, default). Parser also normalizes programmatic values.
SCHEMA: dict[str, tuple] = {
    "scene.seed": (int, 7),
    "scene.num_classes": (int, 4),
    "scene.far": (float, 4.0),
    "scene.bounds": (_floats, (-0.5, -0.5, 0.0, 0.5, 0.5, 0.4)),
    "camera.resolution": (int, 64),
    "camera.views": (int, 8),
    "camera.focal_scale": (float, 0.9),
    "camera.source_position": (_floats, (0.0, -0.45, 0.42)),
    "camera.target": (_floats, (0.0, 0.25, 0.10)),
    "camera.pose_box": (_floats, (-0.12, -0.5, 0.34, 0.12, -0.38, 0.5)),
    "adapters.synthesizer": (str, "stub"),
    "adapters.depth": (str, "stub"),
    "adapters.segmenter": (str, "stub"),
    "adapters.depth_noise": (float, 0.05),
    "adapters.segmenter_jitter": (int, 0),
    # Shell command templates for name "external"; {input}/{output}/{seed}
    # placeholders, empty means not configured.
    "adapters.synthesizer_command": (str, ""),
    "adapters.depth_command": (str, ""),
    "adapters.segmenter_command": (str, ""),
    "warp.edge_threshold": (float, 0.1),
    "warpback.pairs": (int, 200),
    "warpback.poses_per_source": (int, 25),
    "inpaint.batch_size": (int, 8),
    "inpaint.iterations": (int, 2000),
    "inpaint.lr": (float, 5e-4),
    "semfield.iterations": (int, 1500),
    "semfield.rays_per_iter": (int, 512),
    "semfield.n_stratified": (int, 24),
    "semfield.n_importance": (int, 12),
    "semfield.hidden_width": (int, 64),
    "semfield.hidden_layers": (int, 4),
    "semfield.feature_dim": (int, 16),
    "semfield.sem_width": (int, 64),
    "semfield.eikonal_points": (int, 128),
    "semfield.rank_pairs": (int, 96),
    "semfield.lr": (float, 5e-4),
    "semfield.mesh_resolution": (int, 56),
    "appearance.iterations": (int, 1200),
    "appearance.lr": (float, 2e-3),
    "appearance.disc_lr": (float, 4e-4),
    "appearance.adv_weight": (float, 1.0),
    "appearance.l2_weight": (float, 10.0),
    "appearance.perc_weight": (float, 10.0),
    "appearance.style_seed": (int, 5),
    "appearance.plane_res": (int, 64),
    "appearance.channels": (int, 16),
    "appearance.sky_res": (int, 64),
    "appearance.hidden": (int, 64),
    "render.frames": (int, 12),
    "render.orbit_height": (float, 0.42),
    "render.sweep": (float, 0.6),  # radians of orbit arc, centered on the source azimuth
    "pipeline.seed": (int, 0),
}


def default_config() -> dict:
    return {key: default for key, (_, default) in SCHEMA.items()}


def normalized(cfg: dict) -> dict:
    """Defaults overlaid with `cfg`, every value run through its key's parser."""
    full = default_config()
    for key, raw in cfg.items():
        full[key] = _parse_one(key, raw)
    return full


def _parse_one(key: str, raw) -> object:
    if key not in SCHEMA:
        raise ValidationError(f"unknown config key {key!r}")
    parser, _ = SCHEMA[key]
    try:
        return parser(raw)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad value for {key}: {raw!r} ({exc})") from exc


def load_config(path) -> dict:
    """Parse a config file on top of the defaults."""
    cfg = default_config()
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise FormatError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        cfg[key.strip()] = _parse_one(key.strip(), raw.strip())
    return cfg


def apply_overrides(cfg: dict, assignments) -> dict:
    """Apply --set style 'key=value' strings; returns the same dict."""
    for item in assignments:
        if "=" not in item:
            raise ValidationError(f"override must look like key=value, got {item!r}")
        key, _, raw = item.partition("=")
        cfg[key.strip()] = _parse_one(key.strip(), raw.strip())
    return cfg


def save_config(path, cfg: dict) -> None:
    lines = []
    for key in sorted(cfg):
        if key not in SCHEMA:
            raise ValidationError(f"unknown config key {key!r}")
        value = cfg[key]
        if isinstance(value, tuple):
            value = " ".join(repr(float(v)) for v in value)
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def scene_box(cfg: dict) -> Box:
    b = np.asarray(cfg["scene.bounds"], dtype=np.float64)
    if b.shape != (6,):
        raise ValidationError("scene.bounds needs six floats: lo_x lo_y lo_z hi_x hi_y hi_z")
    return Box(b[:3], b[3:])


def pose_box(cfg: dict) -> Box:
    b = np.asarray(cfg["camera.pose_box"], dtype=np.float64)
    if b.shape != (6,):
        raise ValidationError("camera.pose_box needs six floats")
    return Box(b[:3], b[3:])
