"""Suite-wide setup: single-threaded torch (the determinism contract) and a
small shared oracle scene so the expensive exact renders happen once."""

import numpy as np
import pytest
import torch
from hypothesis import settings

from maskscape.scenekit import Box, default_camera, make_oracle_scene, render_oracle

torch.set_num_threads(1)

settings.register_profile("suite", deadline=None, max_examples=30)
settings.load_profile("suite")

BOUNDS = Box((-0.5, -0.5, 0.0), (0.5, 0.5, 0.4))
FAR = 4.0
NUM_CLASSES = 4
SOURCE_POSITION = (0.0, -0.45, 0.42)
TARGET = (0.0, 0.25, 0.10)


@pytest.fixture(scope="session")
def scene():
    return make_oracle_scene(7, NUM_CLASSES, BOUNDS, far=FAR)


@pytest.fixture(scope="session")
def source_cam():
    return default_camera((32, 32), SOURCE_POSITION, TARGET)


@pytest.fixture(scope="session")
def source_view(scene, source_cam):
    """Exact oracle (mask, depth) for the shared 32x32 source camera."""
    return render_oracle(scene, source_cam)
