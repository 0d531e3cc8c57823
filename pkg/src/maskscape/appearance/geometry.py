"""Ray-mesh surface queries guiding appearance rendering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scenekit import Camera
from ..semfield import SurfaceMesh
from ..warp.mesh import LabeledMesh
from ..warp.raster import rasterize

_T_MIN = 1e-6
_PARALLEL_EPS = 1e-12
_RAY_CHUNK = 256
_TRI_CHUNK = 2048


@dataclass(frozen=True)
class SurfaceHits:
    """Nearest surface intersection per ray; rays that miss are sky."""

    hit: np.ndarray  # N bool
    points: np.ndarray  # Nx3 world, zeros where sky
    depth: np.ndarray  # N ray parameter t, inf where sky

    def __post_init__(self):
        object.__setattr__(self, "hit", np.asarray(self.hit, dtype=bool))
        object.__setattr__(self, "points", np.asarray(self.points, dtype=np.float64))
        object.__setattr__(self, "depth", np.asarray(self.depth, dtype=np.float64))

    @property
    def sky(self) -> np.ndarray:
        return ~self.hit


def surface_intersect(mesh: SurfaceMesh, origins: np.ndarray, dirs: np.ndarray) -> SurfaceHits:
    """Nearest ray-triangle intersections, Moller-Trumbore over all triangles.

    Exhaustive but chunked, so memory stays flat; fine for the mesh sizes the
    field produces. Intersections behind the origin (t <= tiny) are ignored.
    """
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    n = origins.shape[0]
    best_t = np.full(n, np.inf)

    verts = mesh.vertices
    tris = mesh.triangles
    v0_all = verts[tris[:, 0]]
    e1_all = verts[tris[:, 1]] - v0_all
    e2_all = verts[tris[:, 2]] - v0_all

    for r0 in range(0, n, _RAY_CHUNK):
        o = origins[r0:r0 + _RAY_CHUNK, None, :]
        d = dirs[r0:r0 + _RAY_CHUNK, None, :]
        t_slice = best_t[r0:r0 + _RAY_CHUNK]
        for c0 in range(0, tris.shape[0], _TRI_CHUNK):
            v0 = v0_all[None, c0:c0 + _TRI_CHUNK]
            e1 = e1_all[None, c0:c0 + _TRI_CHUNK]
            e2 = e2_all[None, c0:c0 + _TRI_CHUNK]
            h = np.cross(d, e2)
            a = np.einsum("rtk,rtk->rt", e1, h)
            ok = np.abs(a) > _PARALLEL_EPS
            f = np.where(ok, 1.0 / np.where(ok, a, 1.0), 0.0)
            s = o - v0
            u = f * np.einsum("rtk,rtk->rt", s, h)
            q = np.cross(s, e1)
            v = f * np.einsum("rtk,rtk->rt", d, q)
            t = f * np.einsum("rtk,rtk->rt", e2, q)
            ok &= (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > _T_MIN)
            t = np.where(ok, t, np.inf)
            np.minimum(t_slice, t.min(axis=1), out=t_slice)

    hit = np.isfinite(best_t)
    t_safe = np.where(hit, best_t, 0.0)
    points = np.where(hit[:, None], origins + t_safe[:, None] * dirs, 0.0)
    return SurfaceHits(hit=hit, points=points, depth=best_t)


def camera_surface_hits(mesh: SurfaceMesh, cam: Camera) -> SurfaceHits:
    """Per-pixel nearest surface points for a camera, via the z-buffer rasterizer.

    Same nearest-hit semantics as surface_intersect but organized per pixel,
    which is far cheaper for full frames.
    """
    labeled = LabeledMesh(
        vertices=mesh.vertices,
        triangles=mesh.triangles,
        vertex_labels=mesh.vertex_labels,
        vertex_depths=np.ones(mesh.vertices.shape[0]),
        num_classes=mesh.num_classes,
    )
    buffers = rasterize(labeled, cam)
    covered = buffers.triangle.reshape(-1) >= 0
    points = buffers.point.reshape(-1, 3)
    _, dirs, cos = cam.pixel_rays()
    # rasterizer depth is camera z; convert to ray parameter for uniformity
    t = np.where(covered, buffers.depth.reshape(-1) / cos, np.inf)
    return SurfaceHits(hit=covered, points=np.where(covered[:, None], points, 0.0), depth=t)
