"""Pluggable 2D-model adapters: protocols, toy stubs, external-process shims."""

from .base import (
    ADAPTER_KINDS,
    DepthAdapter,
    SegmenterAdapter,
    SynthesizerAdapter,
    available_adapters,
    make_adapter,
    register_adapter,
)
from .external import ExternalDepth, ExternalSegmenter, ExternalSynthesizer
from .stubs import (
    OracleHandle,
    StubDepth,
    StubSegmenter,
    StubSynthesizer,
    stub_depth,
    stub_segmenter,
    stub_synthesizer,
)

register_adapter("synthesizer", "stub", StubSynthesizer)
register_adapter("depth", "stub", StubDepth)
register_adapter("segmenter", "stub", StubSegmenter)
register_adapter("synthesizer", "external", ExternalSynthesizer)
register_adapter("depth", "external", ExternalDepth)
register_adapter("segmenter", "external", ExternalSegmenter)

__all__ = [
    "ADAPTER_KINDS",
    "DepthAdapter",
    "SegmenterAdapter",
    "SynthesizerAdapter",
    "available_adapters",
    "make_adapter",
    "register_adapter",
    "ExternalDepth",
    "ExternalSegmenter",
    "ExternalSynthesizer",
    "OracleHandle",
    "StubDepth",
    "StubSegmenter",
    "StubSynthesizer",
    "stub_depth",
    "stub_segmenter",
    "stub_synthesizer",
]
