"""Deterministic toy adapters backed by the synthetic oracle scene.

These stand in for the pretrained synthesis / depth / segmentation networks
so the whole pipeline runs and is testable on a laptop. They are deliberately
imperfect in the same ways the real models are: the synthesizer re-textures
locally when a mask changes, the depth stub carries a global scale/shift
ambiguity, and the segmenter wobbles at class boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import ValidationError
from ..scenekit import Camera, ColorImage, DepthMap, OracleScene, SemanticMask, render_oracle

# Value-noise fields repeat with this period (in pixels) so a pixel's texture
# depends only on its absolute coordinates, never on the image size.
_NOISE_PERIOD = 512

_TEXTURE_CELL = 8
_TEXTURE_AMP = 0.22

_DEPTH_NOISE_CELL = 16
_DEPTH_FILL_FRAC = 0.75
_AFFINE_SCALE = (0.8, 1.25)
_AFFINE_SHIFT = (-0.1, 0.1)
_DEPTH_MIN = 1e-3

_PALETTE = np.array([
    [0.34, 0.55, 0.23],
    [0.53, 0.44, 0.30],
    [0.26, 0.42, 0.62],
    [0.61, 0.60, 0.57],
    [0.73, 0.68, 0.40],
    [0.38, 0.28, 0.45],
    [0.65, 0.36, 0.25],
    [0.22, 0.58, 0.52],
    [0.70, 0.48, 0.58],
    [0.45, 0.62, 0.68],
    [0.56, 0.53, 0.22],
    [0.30, 0.33, 0.28],
    [0.76, 0.62, 0.55],
    [0.25, 0.25, 0.55],
    [0.48, 0.70, 0.35],
    [0.60, 0.30, 0.42],
])


class OracleHandle:
    """Pairs the oracle scene with the camera that produced an image.

    `tag` distinguishes views so per-view randomness (the depth affine, the
    segmenter jitter) stays deterministic but does not repeat across views.
    The oracle render is computed lazily and cached, letting the depth and
    segmentation stubs share one render per view.
    """

    def __init__(self, scene: OracleScene, camera: Camera, tag: int = 0):
        self.scene = scene
        self.camera = camera
        self.tag = int(tag)

    @cached_property
    def rendered(self) -> tuple[SemanticMask, DepthMap]:
        return render_oracle(self.scene, self.camera)


def _value_noise(height: int, width: int, cell: int, entropy) -> np.ndarray:
    """Smooth per-pixel noise in [-1, 1], keyed by absolute pixel coordinates."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    n = _NOISE_PERIOD // cell
    lattice = rng.uniform(-1.0, 1.0, size=(n, n))
    fi = (np.arange(height)[:, None] % _NOISE_PERIOD) / cell
    fj = (np.arange(width)[None, :] % _NOISE_PERIOD) / cell
    i0 = fi.astype(np.int64)
    j0 = fj.astype(np.int64)
    ti = fi - i0
    tj = fj - j0
    i1 = (i0 + 1) % n
    j1 = (j0 + 1) % n
    i0 %= n
    j0 %= n
    top = lattice[i0, j0] * (1.0 - tj) + lattice[i0, j1] * tj
    bot = lattice[i1, j0] * (1.0 - tj) + lattice[i1, j1] * tj
    return top * (1.0 - ti) + bot * ti


def _require_handle(handle, what: str) -> OracleHandle:
    if handle is None:
        raise NotImplementedError(
            f"image-only {what} is not supported; pass an OracleHandle for the view"
        )
    return handle


def _check_resolution(handle: OracleHandle, shape: tuple[int, int]) -> None:
    if tuple(handle.camera.resolution) != tuple(shape):
        raise ValidationError(
            f"oracle handle renders {handle.camera.resolution}, image is {shape}"
        )


def stub_synthesizer(mask: SemanticMask, seed: int) -> ColorImage:
    """Paint each class with a seed-permuted palette color plus value-noise shading.

    Purely per-pixel: a pixel's color depends only on its label, its absolute
    coordinates, and the seed, so editing one mask pixel recolors exactly that
    pixel. That locality is what makes downstream view-consistency measurable.
    """
    if not mask.is_hole_free():
        raise ValidationError("synthesizer requires a hole-free mask")
    if mask.num_classes > len(_PALETTE):
        raise ValidationError(
            f"palette supports up to {len(_PALETTE)} classes, mask has {mask.num_classes}"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(_PALETTE))
    h, w = mask.shape
    out = np.zeros((h, w, 3))
    for cls in np.unique(mask.labels):
        sel = mask.labels == cls
        base = _PALETTE[perm[int(cls)]]
        shade = 1.0 + _TEXTURE_AMP * _value_noise(h, w, _TEXTURE_CELL, (int(seed), int(cls)))
        out[sel] = np.clip(base[None, :] * shade[sel, None], 0.0, 1.0)
    return ColorImage(out.astype(np.float32))


def stub_depth(
    image: ColorImage,
    handle: OracleHandle | None = None,
    noise_level: float = 0.0,
    seed: int = 0,
    affine: tuple[float, float] | None = None,
) -> DepthMap:
    """Oracle depth corrupted like a monocular estimate: global affine, smooth noise.

    Sky pixels are filled with a constant fraction of the scene's far bound
    before corruption, the way a real estimator reports some large finite
    depth there. Pass `affine=(a, b)` to pin the corruption; by default it is
    drawn per (seed, view tag).
    """
    handle = _require_handle(handle, "depth estimation")
    _check_resolution(handle, image.shape)
    _, depth = handle.rendered
    fill = _DEPTH_FILL_FRAC * handle.scene.far
    d = np.where(depth.validity, depth.values.astype(np.float64), fill)
    if affine is None:
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), handle.tag)))
        a = rng.uniform(*_AFFINE_SCALE)
        b = rng.uniform(*_AFFINE_SHIFT)
    else:
        a, b = float(affine[0]), float(affine[1])
    d = a * d + b
    if noise_level > 0.0:
        h, w = image.shape
        field = _value_noise(h, w, _DEPTH_NOISE_CELL, (int(seed), handle.tag, 1))
        d = d * (1.0 + float(noise_level) * field)
    d = np.maximum(d, _DEPTH_MIN)
    return DepthMap(d.astype(np.float32), np.ones(d.shape, dtype=bool))


def stub_segmenter(
    image: ColorImage,
    handle: OracleHandle | None = None,
    jitter: int = 0,
    seed: int = 0,
) -> SemanticMask:
    """Oracle labels, optionally nudged by 1 px of boundary jitter.

    Jitter dilates a random subset of classes by one pixel, restricted to the
    original boundary band, so every disagreement with the oracle sits within
    one pixel of a true class edge.
    """
    handle = _require_handle(handle, "segmentation")
    _check_resolution(handle, image.shape)
    mask, _ = handle.rendered
    if jitter == 0:
        return mask
    if jitter != 1:
        raise ValidationError("segmenter jitter must be 0 or 1 px")
    labels = mask.labels.copy()
    orig = mask.labels
    band = np.zeros(labels.shape, dtype=bool)
    band[:-1, :] |= orig[:-1, :] != orig[1:, :]
    band[1:, :] |= orig[1:, :] != orig[:-1, :]
    band[:, :-1] |= orig[:, :-1] != orig[:, 1:]
    band[:, 1:] |= orig[:, 1:] != orig[:, :-1]
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), handle.tag, 2)))
    order = rng.permutation(mask.num_classes)
    grow = rng.random(mask.num_classes) < 0.5
    for cls in order:
        if not grow[cls]:
            continue
        region = orig == cls
        dil = np.zeros_like(region)
        dil[:-1, :] |= region[1:, :]
        dil[1:, :] |= region[:-1, :]
        dil[:, :-1] |= region[:, 1:]
        dil[:, 1:] |= region[:, :-1]
        labels[dil & band & (labels != cls)] = cls
    return SemanticMask(labels, mask.num_classes)


@dataclass(frozen=True)
class StubSynthesizer:
    def __call__(self, mask: SemanticMask, seed: int) -> ColorImage:
        return stub_synthesizer(mask, seed)


@dataclass(frozen=True)
class StubDepth:
    noise_level: float = 0.0
    seed: int = 0

    def __call__(self, image: ColorImage, handle=None) -> DepthMap:
        return stub_depth(image, handle, noise_level=self.noise_level, seed=self.seed)


@dataclass(frozen=True)
class StubSegmenter:
    jitter: int = 0
    seed: int = 0

    def __call__(self, image: ColorImage, handle=None) -> SemanticMask:
        return stub_segmenter(image, handle, jitter=self.jitter, seed=self.seed)
