"""Adapter interfaces for the pretrained 2D models the pipeline leans on.

Every heavyweight model (semantic image synthesis, monocular depth,
segmentation) sits behind one of these call signatures so the rest of the
pipeline never knows whether it is talking to a toy stub or a real network.
"""

from __future__ import annotations

from typing import Callable, Protocol

from ..errors import ValidationError
from ..scenekit import ColorImage, DepthMap, SemanticMask


class SynthesizerAdapter(Protocol):
    """Turns a hole-free semantic mask into a color image, deterministically per seed."""

    def __call__(self, mask: SemanticMask, seed: int) -> ColorImage: ...


class DepthAdapter(Protocol):
    """Estimates per-pixel depth for an image; `handle` is optional scene context."""

    def __call__(self, image: ColorImage, handle=None) -> DepthMap: ...


class SegmenterAdapter(Protocol):
    """Labels every pixel of an image; never emits holes."""

    def __call__(self, image: ColorImage, handle=None) -> SemanticMask: ...


ADAPTER_KINDS = ("synthesizer", "depth", "segmenter")

_REGISTRY: dict[tuple[str, str], Callable] = {}


def register_adapter(kind: str, name: str, factory: Callable) -> None:
    if kind not in ADAPTER_KINDS:
        raise ValidationError(f"unknown adapter kind {kind!r}; expected one of {ADAPTER_KINDS}")
    _REGISTRY[(kind, name)] = factory


def make_adapter(kind: str, name: str, **options):
    """Instantiate a registered adapter; `options` go to its factory."""
    if kind not in ADAPTER_KINDS:
        raise ValidationError(f"unknown adapter kind {kind!r}; expected one of {ADAPTER_KINDS}")
    try:
        factory = _REGISTRY[(kind, name)]
    except KeyError:
        known = ", ".join(sorted(n for k, n in _REGISTRY if k == kind))
        raise ValidationError(f"no {kind} adapter named {name!r} (have: {known})") from None
    return factory(**options)


def available_adapters(kind: str) -> tuple[str, ...]:
    return tuple(sorted(n for k, n in _REGISTRY if k == kind))
