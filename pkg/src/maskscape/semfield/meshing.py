"""Surface extraction from the trained field via marching cubes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from skimage import measure

from .. import checkpoint
from ..errors import EmptyMeshError, FormatError
from ..scenekit import Box
from ..scenekit.types import _frozen
from .network import SemanticFieldParams
from .rendering import _net_as_dtype

_CHUNK = 65536


@dataclass(frozen=True)
class SurfaceMesh:
    """Zero-level-set triangle mesh with per-vertex semantic labels."""

    vertices: np.ndarray  # Nx3 world coordinates
    triangles: np.ndarray  # Tx3 indices
    vertex_labels: np.ndarray  # N
    num_classes: int

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        t = np.asarray(self.triangles, dtype=np.int32)
        lab = np.asarray(self.vertex_labels, dtype=np.int32)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] == 0:
            raise ValueError("vertices must be a non-empty Nx3 array")
        if t.ndim != 2 or t.shape[1] != 3 or t.shape[0] == 0:
            raise ValueError("triangles must be a non-empty Tx3 array")
        if t.min() < 0 or t.max() >= v.shape[0]:
            raise ValueError("triangle indices out of range")
        if lab.shape != (v.shape[0],):
            raise ValueError("one label per vertex required")
        object.__setattr__(self, "vertices", _frozen(v, np.float64))
        object.__setattr__(self, "triangles", _frozen(t, np.int32))
        object.__setattr__(self, "vertex_labels", _frozen(lab, np.int32))

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]


def extract_sdf_mesh(sdf_fn, label_fn, resolution: int, bounds: Box) -> SurfaceMesh:
    """March the zero level set of `sdf_fn` sampled on a resolution^3 grid.

    `sdf_fn` maps Nx3 points to N signed distances, `label_fn` maps Nx3
    points to N integer labels (evaluated at the extracted vertices).
    Raises EmptyMeshError when the level set does not cross the grid.
    """
    if resolution < 2:
        raise ValueError("grid resolution must be at least 2")
    axes = [np.linspace(bounds.lo[a], bounds.hi[a], resolution) for a in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    vals = np.empty(pts.shape[0])
    for s in range(0, pts.shape[0], _CHUNK):
        vals[s : s + _CHUNK] = np.asarray(sdf_fn(pts[s : s + _CHUNK]), dtype=np.float64)
    volume = vals.reshape(resolution, resolution, resolution)
    if volume.min() > 0 or volume.max() < 0:
        raise EmptyMeshError("no zero crossing of the SDF inside the bounds")
    spacing = tuple((bounds.hi[a] - bounds.lo[a]) / (resolution - 1) for a in range(3))
    verts, faces, _normals, _values = measure.marching_cubes(volume, level=0.0, spacing=spacing)
    verts = verts + bounds.lo[None, :]
    labels = np.asarray(label_fn(verts), dtype=np.int32)
    num_classes = int(labels.max()) + 2 if labels.size else 2
    return SurfaceMesh(verts, faces.astype(np.int32), labels, num_classes)


def extract_mesh(params: SemanticFieldParams, resolution: int = 64) -> SurfaceMesh:
    """Mesh of the trained field's surface, labeled by the semantic head."""
    net = _net_as_dtype(params.net, torch.float32)

    def sdf_fn(pts):
        with torch.no_grad():
            return net.sdf(torch.from_numpy(pts.astype(np.float32))).numpy()

    def label_fn(pts):
        labels = np.empty(pts.shape[0], dtype=np.int32)
        with torch.no_grad():
            for s in range(0, pts.shape[0], _CHUNK):
                logits = net.class_logits(torch.from_numpy(pts[s : s + _CHUNK].astype(np.float32)))
                labels[s : s + _CHUNK] = logits.argmax(dim=1).numpy()
        return labels

    mesh = extract_sdf_mesh(sdf_fn, label_fn, resolution, params.bounds)
    return SurfaceMesh(mesh.vertices, mesh.triangles, mesh.vertex_labels, params.num_classes)


def save_mesh(path, mesh: SurfaceMesh) -> None:
    checkpoint.save_arrays(path, {
        "vertices": mesh.vertices.astype(np.float32),
        "triangles": mesh.triangles,
        "vertex_labels": mesh.vertex_labels,
        "num_classes": np.asarray([mesh.num_classes], dtype=np.int32),
    })


def load_mesh(path) -> SurfaceMesh:
    arrays = checkpoint.load_arrays(path)
    try:
        return SurfaceMesh(
            vertices=arrays["vertices"].astype(np.float64),
            triangles=arrays["triangles"],
            vertex_labels=arrays["vertex_labels"],
            num_classes=int(arrays["num_classes"][0]),
        )
    except KeyError as exc:
        raise FormatError(f"{path}: missing mesh entry {exc}") from exc
