"""Deterministic z-buffered rasterization of a labeled mesh.

The rasterizer tests pixel centers against screen-space edge functions,
interpolates depth perspective-correctly (1/z is linear in screen space)
and resolves overlaps by smallest depth, breaking exact ties by the lower
triangle index. Ordering never depends on chunking, so the output is
bit-stable for a given mesh and camera.

Triangles with a vertex at or behind the camera plane are dropped rather
than clipped; meshes here come from depth images seen from nearby views,
where such triangles do not survive depth-ratio pruning anyway.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scenekit import Camera, DepthMap, SemanticMask
from .mesh import LabeledMesh

_Z_EPS = 1e-6
_EDGE_TOL = -1e-9  # inclusive inside test, slack for float cancellation
_CHUNK_CANDIDATES = 2_000_000


@dataclass(frozen=True)
class WarpResult:
    """A mask/depth pair as seen from the target camera. Pixels no triangle
    covered are holes in the mask and invalid in the depth map."""

    mask: SemanticMask
    depth: DepthMap


@dataclass
class RasterBuffers:
    """Raw per-pixel rasterization output, row-major HxW."""

    triangle: np.ndarray  # int32, -1 where uncovered
    depth: np.ndarray  # float64 camera-space z, 0 where uncovered
    label: np.ndarray  # int32, hole sentinel where uncovered
    point: np.ndarray  # HxWx3 world-space hit point, 0 where uncovered


def rasterize(mesh: LabeledMesh, cam: Camera) -> RasterBuffers:
    h, w = cam.resolution
    n_pix = h * w
    best_z = np.full(n_pix, np.inf)
    best_tri = np.full(n_pix, np.iinfo(np.int32).max, dtype=np.int64)
    best_label = np.full(n_pix, mesh.num_classes, dtype=np.int32)
    best_point = np.zeros((n_pix, 3))

    if mesh.num_triangles:
        _rasterize_into(mesh, cam, best_z, best_tri, best_label, best_point)

    covered = np.isfinite(best_z)
    return RasterBuffers(
        triangle=np.where(covered, best_tri, -1).astype(np.int32).reshape(h, w),
        depth=np.where(covered, best_z, 0.0).reshape(h, w),
        label=best_label.reshape(h, w),
        point=best_point.reshape(h, w, 3),
    )


def _rasterize_into(mesh, cam, best_z, best_tri, best_label, best_point):
    h, w = cam.resolution
    pc = cam.world_to_cam(mesh.vertices)
    z_all = pc[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u_all = cam.fx * pc[:, 0] / z_all + cam.cx
        v_all = cam.fy * pc[:, 1] / z_all + cam.cy

    tris = mesh.triangles.astype(np.int64)
    tz = z_all[tris]  # Tx3
    front = (tz > _Z_EPS).all(axis=1)
    tu = u_all[tris]
    tv = v_all[tris]

    x0 = np.maximum(np.ceil(tu.min(axis=1)), 0).astype(np.int64)
    x1 = np.minimum(np.floor(tu.max(axis=1)), w - 1).astype(np.int64)
    y0 = np.maximum(np.ceil(tv.min(axis=1)), 0).astype(np.int64)
    y1 = np.minimum(np.floor(tv.max(axis=1)), h - 1).astype(np.int64)
    counts = np.where(front, np.maximum(x1 - x0 + 1, 0) * np.maximum(y1 - y0 + 1, 0), 0)

    live = np.nonzero(counts > 0)[0]
    if live.size == 0:
        return
    csum = np.concatenate([[0], np.cumsum(counts[live])])
    marks = np.arange(1, int(csum[-1] // _CHUNK_CANDIDATES) + 1) * _CHUNK_CANDIDATES
    splits = np.unique(np.concatenate([[0], np.searchsorted(csum, marks), [live.size]]))

    for s0, s1 in zip(splits[:-1], splits[1:]):
        t_ids = live[s0:s1]
        c = counts[t_ids]
        offsets = np.concatenate([[0], np.cumsum(c)])
        total = int(offsets[-1])
        if total == 0:
            continue
        owner = np.repeat(np.arange(t_ids.shape[0]), c)
        local = np.arange(total) - offsets[owner]
        bw = (x1 - x0 + 1)[t_ids]
        px = x0[t_ids][owner] + local % bw[owner]
        py = y0[t_ids][owner] + local // bw[owner]

        tri_global = t_ids[owner]
        pu = tu[tri_global]
        pv = tv[tri_global]
        qx, qy = px.astype(np.float64), py.astype(np.float64)
        area = (pu[:, 1] - pu[:, 0]) * (pv[:, 2] - pv[:, 0]) \
            - (pv[:, 1] - pv[:, 0]) * (pu[:, 2] - pu[:, 0])
        e0 = (pu[:, 1] - qx) * (pv[:, 2] - qy) - (pv[:, 1] - qy) * (pu[:, 2] - qx)
        e1 = (pu[:, 2] - qx) * (pv[:, 0] - qy) - (pv[:, 2] - qy) * (pu[:, 0] - qx)
        e2 = (pu[:, 0] - qx) * (pv[:, 1] - qy) - (pv[:, 0] - qy) * (pu[:, 1] - qx)
        nz = np.abs(area) > 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = np.stack([e0, e1, e2], axis=1) / area[:, None]
        inside = nz & (lam >= _EDGE_TOL).all(axis=1)
        if not inside.any():
            continue

        tri_global = tri_global[inside]
        px, py = px[inside], py[inside]
        lam = lam[inside]
        zt = tz[tri_global]
        ratio = lam / zt
        z_pix = 1.0 / ratio.sum(axis=1)
        omega = ratio * z_pix[:, None]  # perspective-correct barycentrics

        pix = py * w + px
        order = np.lexsort((tri_global, z_pix, pix))
        keep = np.ones(order.shape[0], dtype=bool)
        keep[1:] = pix[order][1:] != pix[order][:-1]
        sel = order[keep]

        pix_s = pix[sel]
        z_s = z_pix[sel]
        tri_s = tri_global[sel]
        better = (z_s < best_z[pix_s]) | ((z_s == best_z[pix_s]) & (tri_s < best_tri[pix_s]))
        pix_s, z_s, tri_s, sel = pix_s[better], z_s[better], tri_s[better], sel[better]
        if pix_s.size == 0:
            continue

        om = omega[sel]
        verts = mesh.vertices[tris[tri_s]]  # Kx3x3
        pts = (om[:, :, None] * verts).sum(axis=1)
        # Label transport: nearest vertex in corrected barycentric weight.
        nearest = np.argmax(om, axis=1)
        labels = mesh.vertex_labels[tris[tri_s, nearest]]

        best_z[pix_s] = z_s
        best_tri[pix_s] = tri_s
        best_label[pix_s] = labels
        best_point[pix_s] = pts


def rasterize_labels(mesh: LabeledMesh, cam: Camera) -> WarpResult:
    """Render the mesh into `cam`: per-pixel nearest-surface label and depth.

    Each covered pixel takes the label of the winning triangle's nearest
    vertex, measured in perspective-corrected barycentric weight, which
    reduces to exact nearest-neighbor label transport when source and
    target views coincide.
    """
    buf = rasterize(mesh, cam)
    covered = buf.triangle >= 0
    mask = SemanticMask(buf.label, mesh.num_classes)
    depth = DepthMap(buf.depth.astype(np.float32), covered)
    return WarpResult(mask=mask, depth=depth)
