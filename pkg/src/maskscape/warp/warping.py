"""Depth-based warping of semantic masks between viewpoints."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scenekit import Box, Camera, DepthMap, SemanticMask, look_at
from .mesh import depth_to_mesh, prune_spurious_edges
from .raster import WarpResult, rasterize_labels

DEFAULT_EDGE_THRESHOLD = 0.1  # relative depth jump that separates surfaces


def warp_mask(
    mask: SemanticMask,
    depth: DepthMap,
    src: Camera,
    dst: Camera,
    rel_threshold: float = DEFAULT_EDGE_THRESHOLD,
) -> WarpResult:
    """Reproject a labeled depth image from `src` into `dst`.

    The image is lifted to a triangle mesh, spurious triangles across depth
    discontinuities are pruned, and the mesh is rasterized into the target
    view. Disocclusions come out as holes, honestly: no inpainting here.
    """
    mesh = prune_spurious_edges(depth_to_mesh(mask, depth, src), rel_threshold)
    return rasterize_labels(mesh, dst)


@dataclass(frozen=True)
class PoseSampler:
    """Uniform camera positions in a box, aimed at a fixed target point."""

    box: Box
    target: np.ndarray  # 3
    up: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        target = np.asarray(self.target, dtype=np.float64).reshape(3)
        object.__setattr__(self, "target", target)
        if self.box.contains(target[None])[0]:
            # A position drawn on top of the target has no view direction.
            raise ValueError("look-at target must lie outside the sampling box")

    def sample(self, rng: np.random.Generator, like: Camera) -> Camera:
        """Draw one camera with the intrinsics and resolution of `like`."""
        position = self.box.sample(rng, 1)[0]
        rot, trans = look_at(position, self.target, self.up)
        return like.with_pose(rot, trans)


def warpback_pair(
    mask: SemanticMask,
    depth: DepthMap,
    src: Camera,
    pose_sampler: PoseSampler,
    seed: int,
    rel_threshold: float = DEFAULT_EDGE_THRESHOLD,
) -> tuple[SemanticMask, SemanticMask]:
    """Build one self-supervised inpainting pair (corrupted, target).

    The mask is warped to a sampled viewpoint and back; whatever got
    disoccluded on the round trip is a hole in the corrupted copy, while
    the original mask is the training target.
    """
    rng = np.random.default_rng(seed)
    via = pose_sampler.sample(rng, src)
    there = warp_mask(mask, depth, src, via, rel_threshold)
    back = warp_mask(there.mask, there.depth, via, src, rel_threshold)
    return back.mask, mask
