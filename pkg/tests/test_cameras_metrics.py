"""Pose sampling helpers and the evaluation metrics."""

from __future__ import annotations

import numpy as np
import pytest

from maskscape.cameras import orbit_cameras, sample_cameras
from maskscape.errors import UndefinedMetricError, ValidationError
from maskscape.metrics import (
    color_consistency,
    depth_abs_rel,
    label_accuracy,
    nll_score,
    psnr,
    vsc_score,
)
from maskscape.scenekit import (
    Box,
    ColorImage,
    DepthMap,
    OracleScene,
    SemanticMask,
    default_camera,
    make_oracle_scene,
    render_oracle,
)
from maskscape.semfield import SurfaceMesh


def _square_mesh(z=0.5, half=1.0):
    v = np.array([[-half, -half, z], [half, -half, z], [half, half, z], [-half, half, z]])
    t = np.array([[0, 1, 2], [0, 2, 3]], np.int32)
    return SurfaceMesh(v, t, np.zeros(4, np.int32), 2)


# --- camera generators ------------------------------------------------------------

def test_sampled_cameras_sit_in_the_box_and_aim_at_the_target():
    box = Box((0.2, 0.2, 0.3), (0.6, 0.4, 0.5))
    lookat = np.array([0.0, 0.0, 0.0])
    cams = sample_cameras(box, lookat, 400, seed=11, resolution=(9, 7))
    positions = np.stack([c.center for c in cams])
    assert box.contains(positions).all()
    # Uniform sampling: empirical mean near the box center.
    assert np.abs(positions.mean(axis=0) - box.center).max() <= 0.05 * box.size.max()
    for cam in cams[:20]:
        uv, z = cam.project(lookat[None])
        assert z[0] > 0
        assert np.allclose(uv[0], [(7 - 1) / 2, (9 - 1) / 2], atol=1e-9)


def test_sampled_cameras_are_seeded():
    box = Box((0.2, 0.2, 0.3), (0.6, 0.4, 0.5))
    a = sample_cameras(box, (0.0, 0.0, 0.0), 5, seed=3)
    b = sample_cameras(box, (0.0, 0.0, 0.0), 5, seed=3)
    c = sample_cameras(box, (0.0, 0.0, 0.0), 5, seed=4)
    assert all(np.array_equal(x.center, y.center) for x, y in zip(a, b))
    assert not np.array_equal(a[0].center, c[0].center)


def test_sample_cameras_validation():
    box = Box((-0.1, -0.1, 0.3), (0.1, 0.1, 0.5))
    with pytest.raises(ValidationError):
        sample_cameras(box, (0.0, 0.0, 0.4), 3, seed=0)  # target inside the box
    with pytest.raises(ValidationError):
        sample_cameras(box, (0.0, 0.0, 0.0), 0, seed=0)


def test_orbit_cameras_trace_a_circle():
    target = np.array([0.1, -0.2, 0.3])
    cams = orbit_cameras(target, radius=0.8, height=0.5, n=12)
    assert len(cams) == 12
    for cam in cams:
        pos = cam.center
        assert abs(np.linalg.norm(pos[:2] - target[:2]) - 0.8) <= 1e-9
        assert abs(pos[2] - 0.5) <= 1e-12
        uv, z = cam.project(target[None])
        assert z[0] > 0
    # Even angular spacing around the target.
    angles = np.array([np.arctan2(c.center[1] - target[1], c.center[0] - target[0])
                       for c in cams])
    gaps = np.diff(np.unwrap(angles))
    assert np.allclose(gaps, gaps[0], atol=1e-9)
    with pytest.raises(ValidationError):
        orbit_cameras(target, radius=0.0, height=0.5, n=4)
    with pytest.raises(ValidationError):
        orbit_cameras(target, radius=0.8, height=0.5, n=0)


# --- label metrics ----------------------------------------------------------------

def test_label_accuracy_counts_matches():
    a = SemanticMask(np.array([[0, 1], [2, 3]]), 4)
    b = SemanticMask(np.array([[0, 1], [2, 0]]), 4)
    assert label_accuracy(a, a) == 1.0
    assert label_accuracy(a, b) == 0.75
    with pytest.raises(ValidationError):
        label_accuracy(a, SemanticMask(np.zeros((3, 3), np.int32), 4))


def test_vsc_is_zero_for_identical_views():
    scene = OracleScene.flat(0.15, num_classes=2)
    cam = default_camera((16, 16), (0.0, -0.15, 0.75), (0.0, 0.05, 0.15))
    mask, depth = render_oracle(scene, cam)
    assert vsc_score([mask, mask], [depth, depth], [cam, cam]) == 0.0


def test_vsc_is_small_for_oracle_views():
    scene = make_oracle_scene(7, 4, Box((-0.5, -0.5, 0.0), (0.5, 0.5, 0.4)), far=4.0)
    cams = [default_camera((32, 32), p, (0.0, 0.25, 0.10))
            for p in [(0.0, -0.45, 0.42), (0.1, -0.42, 0.45)]]
    views = [render_oracle(scene, c) for c in cams]
    score = vsc_score([v[0] for v in views], [v[1] for v in views], cams)
    assert 0.0 <= score <= 0.02


def test_vsc_validation_and_undefined_case():
    scene = OracleScene.flat(0.15, num_classes=2)
    cam = default_camera((12, 12), (0.0, -0.15, 0.75), (0.0, 0.05, 0.15))
    mask, depth = render_oracle(scene, cam)
    with pytest.raises(ValidationError):
        vsc_score([mask], [depth], [cam])
    with pytest.raises(ValidationError):
        vsc_score([mask, mask], [depth], [cam, cam])
    # A second view with no valid depth anywhere cannot be warped either way.
    away = default_camera((12, 12), (0.0, -0.15, 0.75), (0.0, -5.0, 0.75))
    sky_mask, sky_depth = render_oracle(scene, away)
    assert not sky_depth.validity.any()
    with pytest.raises(UndefinedMetricError):
        vsc_score([sky_mask, sky_mask], [sky_depth, sky_depth], [away, away])


def test_nll_hand_values():
    ref = SemanticMask(np.array([[0, 1], [2, 3]]), 4)
    hit = SemanticMask(np.array([[0, 1], [2, 3]]), 4)
    one_off = SemanticMask(np.array([[0, 1], [2, 0]]), 4)
    assert abs(nll_score([hit], [ref]) - (-np.log(0.95))) <= 1e-12
    expected = (3 * -np.log(0.95) + -np.log(0.05 / 3)) / 4
    assert abs(nll_score([one_off], [ref]) - expected) <= 1e-12
    # All wrong at uniform smoothing: every pixel costs -log(s / (K - 1)).
    wrong = SemanticMask(np.array([[1, 0], [3, 2]]), 4)
    assert abs(nll_score([wrong], [ref], smoothing=0.75)
               - (-np.log(0.25))) <= 1e-12


def test_nll_validation():
    ref = SemanticMask(np.array([[0, 1], [2, 3]]), 4)
    with pytest.raises(ValidationError):
        nll_score([], [])
    with pytest.raises(ValidationError):
        nll_score([ref], [ref, ref])
    with pytest.raises(ValidationError):
        nll_score([ref], [SemanticMask(np.zeros((2, 2), np.int32), 3)])
    with pytest.raises(ValidationError):
        nll_score([ref], [ref], smoothing=0.0)


# --- depth and color metrics ------------------------------------------------------

def test_depth_abs_rel_alignment():
    rng = np.random.default_rng(7)
    ref_vals = rng.uniform(0.5, 3.0, size=(10, 10)).astype(np.float32)
    ref = DepthMap(ref_vals, np.ones((10, 10), bool))
    warped = DepthMap(1.7 * ref_vals + 0.4, np.ones((10, 10), bool))
    assert depth_abs_rel(warped, ref) <= 1e-6  # affine error vanishes after alignment
    scaled = DepthMap(1.1 * ref_vals, np.ones((10, 10), bool))
    assert abs(depth_abs_rel(scaled, ref, align=False) - 0.1) <= 1e-6
    with pytest.raises(ValidationError):
        depth_abs_rel(ref, DepthMap(np.ones((3, 3)), np.ones((3, 3), bool)))
    none_valid = DepthMap(np.zeros((10, 10)), np.zeros((10, 10), bool))
    with pytest.raises(UndefinedMetricError):
        depth_abs_rel(none_valid, ref)


def test_psnr_hand_values():
    a = ColorImage(np.full((4, 4, 3), 0.5, np.float32))
    assert psnr(a, a) == float("inf")
    b = ColorImage(np.full((4, 4, 3), 0.6, np.float32))
    # Constant offset 0.1 gives MSE 0.01 up to float32 rounding.
    mse = float(((a.rgb.astype(np.float64) - b.rgb.astype(np.float64)) ** 2).mean())
    assert abs(psnr(a, b) - (-10 * np.log10(mse))) <= 1e-9
    assert abs(psnr(a, b) - 20.0) <= 1e-5
    with pytest.raises(ValidationError):
        psnr(a, ColorImage(np.zeros((3, 3, 3), np.float32)))


def test_color_consistency_on_shared_surface():
    mesh = _square_mesh(z=0.5, half=1.0)
    cams = [default_camera((16, 16), p, (0.0, 0.0, 0.5))
            for p in [(0.0, -0.3, 1.4), (0.25, 0.1, 1.3)]]
    same = [ColorImage(np.full((16, 16, 3), 0.4, np.float32)) for _ in cams]
    assert color_consistency(same, mesh, cams) == 0.0
    shifted = [ColorImage(np.full((16, 16, 3), v, np.float32)) for v in (0.4, 0.65)]
    got = color_consistency(shifted, mesh, cams)
    assert abs(got - 0.25) <= 1e-6


def test_color_consistency_validation_and_undefined():
    mesh = _square_mesh(z=0.5)
    cams = [default_camera((8, 8), p, (0.0, 0.0, 0.5))
            for p in [(0.0, -0.3, 1.4), (0.25, 0.1, 1.3)]]
    imgs = [ColorImage(np.full((8, 8, 3), 0.5, np.float32)) for _ in cams]
    with pytest.raises(ValidationError):
        color_consistency(imgs[:1], mesh, cams[:1])
    with pytest.raises(ValidationError):
        color_consistency(imgs[:1], mesh, cams)
    away = [default_camera((8, 8), p, (0.0, 0.0, 50.0))
            for p in [(0.0, -0.3, 1.4), (0.25, 0.1, 1.3)]]
    with pytest.raises(UndefinedMetricError):
        color_consistency(imgs, mesh, away)
