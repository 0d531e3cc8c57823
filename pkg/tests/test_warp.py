"""Depth-image lifting, spurious-edge pruning and the z-buffer rasterizer.

The rasterizer is checked against a per-pixel brute-force reimplementation
of its documented rule (edge-function inside test, perspective-correct
depth, min-z with lowest-index tie break, nearest-corrected-barycentric
label transport). The pruning rule is re-derived per triangle from the
edge depth-ratio definition.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maskscape.scenekit import Box, Camera, DepthMap, OracleScene, SemanticMask, default_camera, render_oracle
from maskscape.warp import (
    LabeledMesh,
    PoseSampler,
    depth_to_mesh,
    prune_spurious_edges,
    rasterize,
    rasterize_labels,
    warp_mask,
    warpback_pair,
)


# Steep enough that adjacent-pixel depth ratios stay inside the default
# pruning threshold, close enough that the frustum lands inside the bounds
# (so the whole image sees ground and the depth map is fully valid).
_FLAT_TARGET = (0.0, 0.05, 0.15)


def _flat_view(resolution=(8, 8), position=(0.0, -0.15, 0.75)):
    scene = OracleScene.flat(0.15, num_classes=2)
    cam = default_camera(resolution, position, _FLAT_TARGET)
    mask, depth = render_oracle(scene, cam)
    return scene, cam, mask, depth


# --- lifting ------------------------------------------------------------------

def test_depth_to_mesh_hand_geometry():
    cam = Camera(10.0, 10.0, 0.5, 0.5, np.eye(3), np.zeros(3), (2, 2))
    depth = DepthMap(np.array([[1.0, 2.0], [3.0, 4.0]]), np.ones((2, 2), bool))
    mask = SemanticMask(np.array([[0, 1], [2, 3]], dtype=np.int32), 4)
    mesh = depth_to_mesh(mask, depth, cam)
    assert mesh.num_triangles == 2
    expected = cam.unproject(
        np.array([0.0, 0.0, 1.0, 1.0]), np.array([0.0, 1.0, 0.0, 1.0]),
        np.array([1.0, 2.0, 3.0, 4.0]))
    assert np.allclose(mesh.vertices, expected, atol=1e-12)
    assert mesh.vertex_labels.tolist() == [0, 1, 2, 3]
    assert mesh.vertex_depths.tolist() == [1.0, 2.0, 3.0, 4.0]


def test_depth_to_mesh_drops_triangles_touching_dead_pixels():
    cam = Camera(10.0, 10.0, 1.0, 1.0, np.eye(3), np.zeros(3), (3, 3))
    depth = DepthMap(np.ones((3, 3)), np.ones((3, 3), bool))
    labels = np.zeros((3, 3), dtype=np.int32)
    full = depth_to_mesh(SemanticMask(labels, 2), depth, cam)
    assert full.num_triangles == 2 * 2 * 2

    holed = labels.copy()
    holed[1, 1] = 2  # hole sentinel kills all six incident triangles
    partial = depth_to_mesh(SemanticMask(holed, 2), depth, cam)
    assert partial.num_triangles == 2
    assert not np.isin(4, partial.triangles)  # vertex index of the hole pixel


@given(st.integers(0, 2**31 - 1), st.floats(0.05, 0.5))
def test_prune_matches_per_edge_rule(seed, rel_threshold):
    rng = np.random.default_rng(seed)
    n_verts = 12
    vertices = rng.normal(size=(n_verts, 3))
    triangles = rng.integers(0, n_verts, size=(20, 3)).astype(np.int32)
    depths = rng.uniform(0.5, 3.0, size=n_verts)
    mesh = LabeledMesh(vertices, triangles, np.zeros(n_verts, np.int32), depths, 2)
    pruned = prune_spurious_edges(mesh, rel_threshold)
    keep = []
    for tri in triangles:
        ok = True
        for a, b in ((0, 1), (1, 2), (2, 0)):
            hi, lo = max(depths[tri[a]], depths[tri[b]]), min(depths[tri[a]], depths[tri[b]])
            ok = ok and hi <= (1.0 + rel_threshold) * lo
        keep.append(ok)
    assert np.array_equal(pruned.triangles, triangles[np.array(keep)])


# --- rasterizer vs brute force -------------------------------------------------

def _brute_raster(mesh: LabeledMesh, cam: Camera):
    h, w = cam.resolution
    pc = cam.world_to_cam(mesh.vertices)
    z = pc[:, 2]
    u = cam.fx * pc[:, 0] / z + cam.cx
    v = cam.fy * pc[:, 1] / z + cam.cy
    tri_best = -np.ones((h, w), dtype=np.int64)
    z_best = np.full((h, w), np.inf)
    label = np.full((h, w), mesh.num_classes, dtype=np.int32)
    for t, tri in enumerate(mesh.triangles):
        if not (z[tri] > 1e-6).all():
            continue
        pu, pv, pz = u[tri], v[tri], z[tri]
        area = (pu[1] - pu[0]) * (pv[2] - pv[0]) - (pv[1] - pv[0]) * (pu[2] - pu[0])
        if abs(area) <= 1e-12:
            continue
        for py in range(h):
            for px in range(w):
                e0 = (pu[1] - px) * (pv[2] - py) - (pv[1] - py) * (pu[2] - px)
                e1 = (pu[2] - px) * (pv[0] - py) - (pv[2] - py) * (pu[0] - px)
                e2 = (pu[0] - px) * (pv[1] - py) - (pv[0] - py) * (pu[1] - px)
                lam = np.array([e0, e1, e2]) / area
                if (lam < -1e-9).any():
                    continue
                z_pix = 1.0 / (lam / pz).sum()
                if z_pix < z_best[py, px] or (z_pix == z_best[py, px] and t < tri_best[py, px]):
                    z_best[py, px] = z_pix
                    tri_best[py, px] = t
                    omega = (lam / pz) * z_pix
                    label[py, px] = mesh.vertex_labels[tri[int(np.argmax(omega))]]
    return tri_best, np.where(np.isfinite(z_best), z_best, 0.0), label


def test_rasterize_matches_brute_force():
    _, src_cam, mask, depth = _flat_view((6, 6))
    assert depth.all_valid()
    rng = np.random.default_rng(3)
    labels = SemanticMask(rng.integers(0, 3, size=(6, 6)).astype(np.int32), 3)
    noisy = DepthMap(depth.values * rng.uniform(0.9, 1.1, size=(6, 6)).astype(np.float32),
                     np.ones((6, 6), bool))
    mesh = depth_to_mesh(labels, noisy, src_cam)
    dst = default_camera((7, 5), (0.12, -0.05, 0.7), _FLAT_TARGET)
    got = rasterize(mesh, dst)
    tri_ref, z_ref, label_ref = _brute_raster(mesh, dst)
    assert np.array_equal(got.triangle, tri_ref)
    assert np.allclose(got.depth, z_ref, atol=1e-9)
    assert np.array_equal(got.label, label_ref)


def test_rasterize_labels_marks_uncovered_as_holes():
    _, cam, mask, depth = _flat_view((8, 8))
    mesh = depth_to_mesh(mask, depth, cam)
    away = default_camera(
        (8, 8), (0.0, -0.15, 0.75), (0.0, -5.0, 0.75))  # looking away from the scene
    result = rasterize_labels(mesh, away)
    assert not result.mask.is_hole_free()
    assert np.array_equal(result.mask.holes, ~result.depth.validity)


# --- whole-image warping -------------------------------------------------------

def test_identity_warp_reproduces_the_view():
    _, cam, mask, depth = _flat_view((12, 12))
    result = warp_mask(mask, depth, cam, cam)
    covered = ~result.mask.holes
    assert covered.mean() >= 0.995
    assert np.array_equal(result.mask.labels[covered], mask.labels[covered])
    assert np.allclose(result.depth.values[covered], depth.values[covered], atol=1e-6)


def test_warp_depth_is_exact_on_a_plane():
    # Perspective-correct interpolation is exact for planar geometry, so the
    # warped depth must match the target view's own ray-plane render.
    scene, src, mask, depth = _flat_view((16, 16))
    dst = default_camera((16, 16), (0.08, -0.1, 0.7), _FLAT_TARGET)
    _, expected = render_oracle(scene, dst)
    result = warp_mask(mask, depth, src, dst)
    both = result.depth.validity & expected.validity
    assert both.mean() > 0.5
    assert np.allclose(result.depth.values[both], expected.values[both], atol=1e-5)


def test_warpback_pair_corrupts_but_keeps_target(scene, source_cam, source_view):
    mask, depth = source_view
    full = DepthMap(np.where(depth.validity, depth.values, 3.0), np.ones(depth.shape, bool))
    sampler = PoseSampler(Box((-0.12, -0.5, 0.34), (0.12, -0.38, 0.5)), (0.0, 0.25, 0.10))
    corrupted, target = warpback_pair(mask, full, source_cam, sampler, seed=5)
    assert np.array_equal(target.labels, mask.labels)
    assert corrupted.holes.any()
    agree = ~corrupted.holes
    assert (corrupted.labels[agree] == mask.labels[agree]).mean() > 0.9


def test_warpback_pair_is_seeded():
    _, cam, mask, depth = _flat_view((10, 10))
    sampler = PoseSampler(Box((-0.1, -0.25, 0.65), (0.1, -0.05, 0.85)), _FLAT_TARGET)
    a1, _ = warpback_pair(mask, depth, cam, sampler, seed=9)
    a2, _ = warpback_pair(mask, depth, cam, sampler, seed=9)
    b, _ = warpback_pair(mask, depth, cam, sampler, seed=10)
    assert np.array_equal(a1.labels, a2.labels)
    assert not np.array_equal(a1.labels, b.labels)


def test_pose_sampler_rejects_target_inside_box():
    with pytest.raises(ValueError):
        PoseSampler(Box((-1, -1, -1), (1, 1, 1)), (0.0, 0.0, 0.0))


def test_warp_validates_shapes():
    _, cam, mask, depth = _flat_view((8, 8))
    bad = DepthMap(np.ones((4, 4)), np.ones((4, 4), bool))
    with pytest.raises(ValueError):
        warp_mask(mask, bad, cam, cam)
