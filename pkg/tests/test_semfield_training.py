"""Field optimization: input validation, loss trend, determinism, save/load."""

from __future__ import annotations

import numpy as np
import pytest
import torch

from maskscape.scenekit import (
    Box,
    DepthMap,
    OracleScene,
    SemanticMask,
    default_camera,
    render_oracle,
)
from maskscape.semfield import (
    FusionView,
    FusionViewSet,
    SemanticFieldConfig,
    load_field,
    render_semantic_views,
    save_field,
    train_semantic_field,
)

_BACKDROP = 3.0  # stands in for an adapter's sky-fill depth


def _fusion_view(scene, cam):
    mask, depth = render_oracle(scene, cam)
    filled = DepthMap(np.where(depth.validity, depth.values, _BACKDROP),
                      np.ones(depth.shape, bool))
    return FusionView(camera=cam, mask=mask, depth_pred=filled, src_depth=depth)


def _flat_view_set(resolution=(12, 12)):
    scene = OracleScene.flat(0.15, num_classes=2)
    target = (0.0, 0.05, 0.15)
    cams = [default_camera(resolution, p, target) for p in
            [(0.0, -0.15, 0.75), (0.18, -0.05, 0.7), (-0.18, -0.05, 0.7)]]
    views = tuple(_fusion_view(scene, c) for c in cams)
    return scene, cams, FusionViewSet(views, scene.bounds)


def _tiny_config(iterations):
    return SemanticFieldConfig(
        iterations=iterations, rays_per_iter=128, n_stratified=24, n_importance=8,
        hidden_width=32, hidden_layers=2, feature_dim=8, sem_width=16, pe_bands=4,
        eikonal_points=64, rank_pairs=32, log_every=10, seed=3)


def test_fusion_view_validation(scene, source_cam, source_view):
    mask, depth = source_view
    filled = DepthMap(np.where(depth.validity, depth.values, _BACKDROP),
                      np.ones(depth.shape, bool))
    with pytest.raises(ValueError):  # depth_pred must cover every pixel
        FusionView(source_cam, mask, depth, depth)
    holed = SemanticMask(np.full(mask.shape, mask.num_classes, np.int32), mask.num_classes)
    with pytest.raises(ValueError):
        FusionView(source_cam, holed, filled, depth)
    small = DepthMap(np.ones((4, 4)), np.ones((4, 4), bool))
    with pytest.raises(ValueError):
        FusionView(source_cam, mask, small, depth)


def test_fusion_view_set_validation(scene, source_cam, source_view):
    with pytest.raises(ValueError):
        FusionViewSet((), scene.bounds)
    mask, depth = source_view
    filled = DepthMap(np.where(depth.validity, depth.values, _BACKDROP),
                      np.ones(depth.shape, bool))
    ok = FusionView(source_cam, mask, filled, depth)
    other = SemanticMask(mask.labels.copy(), mask.num_classes + 1)
    clash = FusionView(source_cam, other, filled, depth)
    with pytest.raises(ValueError):
        FusionViewSet((ok, clash), scene.bounds)
    assert FusionViewSet((ok,), scene.bounds).sky_label == mask.num_classes - 1


def test_training_reduces_the_loss_and_logs_it():
    _, _, view_set = _flat_view_set()
    params = train_semantic_field(view_set, _tiny_config(80))
    log = np.asarray(params.loss_log)
    assert log.shape == (8, 8)  # every 10 iters; [iter, total, six terms]
    assert np.array_equal(log[:, 0], np.arange(10, 81, 10))
    assert log[-1, 1] < log[0, 1]
    assert params.num_classes == 2
    assert params.sky_label == 1


def test_training_is_deterministic():
    _, _, view_set = _flat_view_set((8, 8))
    cfg = _tiny_config(12)
    a = train_semantic_field(view_set, cfg)
    b = train_semantic_field(view_set, cfg)
    for ka, kb in zip(a.net.state_dict().values(), b.net.state_dict().values()):
        assert torch.equal(ka, kb)
    assert a.loss_log == b.loss_log


def test_short_fit_reproduces_the_source_view():
    _, cams, view_set = _flat_view_set()
    params = train_semantic_field(view_set, _tiny_config(150))
    (mask, depth), = render_semantic_views(params, [cams[0]], n_stratified=24,
                                           n_importance=8)
    reference = view_set.views[0].mask
    assert (mask.labels == reference.labels).mean() >= 0.8


def test_field_save_load_roundtrip(tmp_path):
    _, cams, view_set = _flat_view_set((8, 8))
    params = train_semantic_field(view_set, _tiny_config(10))
    path = tmp_path / "field.bin"
    save_field(path, params)
    loaded = load_field(path)
    assert loaded.num_classes == params.num_classes
    assert loaded.near == params.near and loaded.far == params.far
    assert np.allclose(loaded.bounds.lo, params.bounds.lo)
    before = render_semantic_views(params, [cams[0]], n_stratified=16, n_importance=0)
    after = render_semantic_views(loaded, [cams[0]], n_stratified=16, n_importance=0)
    assert np.array_equal(before[0][0].labels, after[0][0].labels)
    assert np.array_equal(before[0][1].values, after[0][1].values)


def test_training_rejects_zero_iterations():
    _, _, view_set = _flat_view_set((8, 8))
    with pytest.raises(ValueError):
        train_semantic_field(view_set, _tiny_config(0))
