"""Lifting a labeled depth image to a triangle mesh.

Every pixel becomes a vertex at its unprojected 3D position; each 2x2 pixel
quad contributes two triangles. Triangles that straddle a depth
discontinuity are spurious connections between foreground and background
and are pruned by a relative depth-ratio test on their edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scenekit import Camera, DepthMap, SemanticMask
from ..scenekit.types import _frozen


@dataclass(frozen=True)
class LabeledMesh:
    """Triangle mesh with one semantic label and one source-view depth per vertex."""

    vertices: np.ndarray  # Nx3 world coordinates
    triangles: np.ndarray  # Tx3 vertex indices
    vertex_labels: np.ndarray  # N
    vertex_depths: np.ndarray  # N, source camera depth of each vertex
    num_classes: int

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        t = np.asarray(self.triangles, dtype=np.int32)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must be Nx3")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValueError("triangles must be Tx3")
        if t.size and (t.min() < 0 or t.max() >= v.shape[0]):
            raise ValueError("triangle indices out of range")
        labels = np.asarray(self.vertex_labels, dtype=np.int32)
        depths = np.asarray(self.vertex_depths, dtype=np.float64)
        if labels.shape != (v.shape[0],) or depths.shape != (v.shape[0],):
            raise ValueError("per-vertex arrays must have one entry per vertex")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise ValueError("vertex labels must be real classes (no hole sentinel)")
        object.__setattr__(self, "vertices", _frozen(v, np.float64))
        object.__setattr__(self, "triangles", _frozen(t, np.int32))
        object.__setattr__(self, "vertex_labels", _frozen(labels, np.int32))
        object.__setattr__(self, "vertex_depths", _frozen(depths, np.float64))

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]


def depth_to_mesh(mask: SemanticMask, depth: DepthMap, cam: Camera) -> LabeledMesh:
    """Lift a labeled depth image into a world-space triangle mesh.

    Pixels that are holes or carry invalid depth produce no geometry: any
    triangle touching one is dropped. With a hole-free mask and fully valid
    depth the result has exactly 2*(H-1)*(W-1) triangles.
    """
    if mask.shape != depth.shape:
        raise ValueError("mask and depth shapes differ")
    if (mask.shape[0], mask.shape[1]) != cam.resolution:
        raise ValueError("camera resolution does not match the images")
    h, w = mask.shape
    ok = depth.validity & ~mask.holes

    ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    z = np.where(ok, depth.values, 1.0).astype(np.float64)  # placeholder depth on dead pixels
    vertices = cam.unproject(ii.ravel(), jj.ravel(), z.ravel())

    idx = np.arange(h * w).reshape(h, w)
    v00 = idx[:-1, :-1].ravel()
    v10 = idx[1:, :-1].ravel()
    v01 = idx[:-1, 1:].ravel()
    v11 = idx[1:, 1:].ravel()
    tris = np.concatenate(
        [np.stack([v00, v10, v01], axis=1), np.stack([v10, v11, v01], axis=1)], axis=0
    )
    alive = ok.ravel()[tris].all(axis=1)
    tris = tris[alive]

    labels = np.where(ok, mask.labels, 0).ravel()  # dead vertices keep a placeholder label
    return LabeledMesh(
        vertices=vertices,
        triangles=tris,
        vertex_labels=labels,
        vertex_depths=z.ravel(),
        num_classes=mask.num_classes,
    )


def prune_spurious_edges(mesh: LabeledMesh, rel_threshold: float) -> LabeledMesh:
    """Drop triangles with an edge whose endpoint depth ratio exceeds
    1 + rel_threshold. Vertices are kept so indices stay stable."""
    if rel_threshold < 0:
        raise ValueError("rel_threshold must be non-negative")
    tris = mesh.triangles
    if tris.size == 0:
        return mesh
    d = mesh.vertex_depths[tris]  # Tx3
    limit = 1.0 + rel_threshold
    keep = np.ones(tris.shape[0], dtype=bool)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        hi = np.maximum(d[:, a], d[:, b])
        lo = np.minimum(d[:, a], d[:, b])
        keep &= hi <= limit * lo
    return LabeledMesh(
        vertices=mesh.vertices,
        triangles=tris[keep],
        vertex_labels=mesh.vertex_labels,
        vertex_depths=mesh.vertex_depths,
        num_classes=mesh.num_classes,
    )
