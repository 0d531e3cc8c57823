"""Level-set extraction checked against analytic surfaces."""

from __future__ import annotations

import numpy as np
import pytest
import torch

from maskscape.errors import EmptyMeshError, FormatError
from maskscape.scenekit import Box
from maskscape.semfield import (
    SemanticFieldParams,
    SurfaceMesh,
    extract_mesh,
    extract_sdf_mesh,
    load_mesh,
    save_mesh,
)
from maskscape.semfield.network import FieldNet

BOUNDS = Box((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5))


def _sphere_sdf(radius):
    return lambda p: np.linalg.norm(p, axis=1) - radius


def test_sphere_vertices_sit_on_the_radius():
    res = 40
    cell = 1.0 / (res - 1)
    mesh = extract_sdf_mesh(_sphere_sdf(0.3), lambda p: np.zeros(len(p), np.int32),
                            resolution=res, bounds=BOUNDS)
    radial_err = np.abs(np.linalg.norm(mesh.vertices, axis=1) - 0.3)
    assert radial_err.mean() <= 0.5 * cell
    assert radial_err.max() <= 2.0 * cell
    # The surface area of the triangle soup should approximate 4 pi r^2.
    a = mesh.vertices[mesh.triangles[:, 0]]
    b = mesh.vertices[mesh.triangles[:, 1]]
    c = mesh.vertices[mesh.triangles[:, 2]]
    area = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1).sum()
    assert abs(area - 4 * np.pi * 0.3**2) <= 0.05 * 4 * np.pi * 0.3**2


def test_vertices_stay_inside_bounds_and_labels_follow_the_rule():
    def side(p):
        return (p[:, 0] > 0).astype(np.int32)

    mesh = extract_sdf_mesh(_sphere_sdf(0.35), side, resolution=24, bounds=BOUNDS)
    assert (mesh.vertices >= BOUNDS.lo - 1e-9).all()
    assert (mesh.vertices <= BOUNDS.hi + 1e-9).all()
    assert np.array_equal(mesh.vertex_labels, side(mesh.vertices))


def test_plane_mesh_is_flat():
    mesh = extract_sdf_mesh(lambda p: p[:, 2] - 0.1,
                            lambda p: np.zeros(len(p), np.int32),
                            resolution=16, bounds=BOUNDS)
    assert np.abs(mesh.vertices[:, 2] - 0.1).max() <= 1e-9


def test_no_crossing_raises_empty_mesh():
    with pytest.raises(EmptyMeshError):
        extract_sdf_mesh(lambda p: np.linalg.norm(p, axis=1) + 1.0,
                         lambda p: np.zeros(len(p), np.int32),
                         resolution=12, bounds=BOUNDS)
    with pytest.raises(ValueError):
        extract_sdf_mesh(_sphere_sdf(0.3), lambda p: np.zeros(len(p), np.int32),
                         resolution=1, bounds=BOUNDS)


def test_extract_mesh_uses_field_classes():
    torch.manual_seed(0)
    net = FieldNet(4, hidden_width=16, hidden_layers=2, feature_dim=4,
                   sem_width=8, pe_bands=2)
    params = SemanticFieldParams(net=net, num_classes=4, bounds=BOUNDS)
    mesh = extract_mesh(params, resolution=20)
    assert mesh.num_classes == 4
    assert mesh.num_triangles > 0
    assert mesh.vertex_labels.min() >= 0
    assert mesh.vertex_labels.max() < 4


def test_mesh_roundtrip(tmp_path):
    mesh = extract_sdf_mesh(_sphere_sdf(0.3), lambda p: (p[:, 1] > 0).astype(np.int32),
                            resolution=12, bounds=BOUNDS)
    path = tmp_path / "mesh.bin"
    save_mesh(path, mesh)
    loaded = load_mesh(path)
    assert np.allclose(loaded.vertices, mesh.vertices, atol=1e-7)  # float32 storage
    assert np.array_equal(loaded.triangles, mesh.triangles)
    assert np.array_equal(loaded.vertex_labels, mesh.vertex_labels)
    assert loaded.num_classes == mesh.num_classes


def test_load_mesh_rejects_wrong_container(tmp_path):
    from maskscape import checkpoint

    path = tmp_path / "notmesh.bin"
    checkpoint.save_arrays(path, {"vertices": np.zeros((3, 3), np.float32)})
    with pytest.raises(FormatError):
        load_mesh(path)


def test_surface_mesh_validation():
    v = np.zeros((3, 3))
    t = np.array([[0, 1, 2]], np.int32)
    lab = np.zeros(3, np.int32)
    with pytest.raises(ValueError):
        SurfaceMesh(np.zeros((0, 3)), t, lab, 2)
    with pytest.raises(ValueError):
        SurfaceMesh(v, np.array([[0, 1, 5]], np.int32), lab, 2)
    with pytest.raises(ValueError):
        SurfaceMesh(v, t, lab[:2], 2)
