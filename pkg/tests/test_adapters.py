"""Adapter stubs, the registry, external-process shims, and plugging a
custom adapter into the pipeline."""

from __future__ import annotations

import numpy as np
import pytest

from maskscape.adapters import (
    OracleHandle,
    available_adapters,
    make_adapter,
    register_adapter,
    stub_depth,
    stub_segmenter,
    stub_synthesizer,
)
from maskscape.errors import ValidationError
from maskscape.scenekit import ColorImage, SemanticMask
from maskscape.semfield.losses import align_scale_shift


@pytest.fixture()
def handle(scene, source_cam):
    return OracleHandle(scene, source_cam, tag=0)


@pytest.fixture()
def source_image(source_view):
    mask, _ = source_view
    return stub_synthesizer(mask, seed=0)


# --- synthesizer ----------------------------------------------------------------

def test_synthesizer_is_deterministic_per_seed(source_view):
    mask, _ = source_view
    a = stub_synthesizer(mask, seed=4)
    b = stub_synthesizer(mask, seed=4)
    c = stub_synthesizer(mask, seed=5)
    assert np.array_equal(a.rgb, b.rgb)
    assert not np.array_equal(a.rgb, c.rgb)


def test_synthesizer_edit_is_pixel_local(source_view):
    # The pipeline's consistency metrics assume recoloring follows the mask
    # exactly: flipping one label may change that pixel and no other.
    mask, _ = source_view
    edited = mask.labels.copy()
    edited[20, 30] = (edited[20, 30] + 1) % mask.num_classes
    before = stub_synthesizer(mask, seed=4)
    after = stub_synthesizer(SemanticMask(edited, mask.num_classes), seed=4)
    changed = np.argwhere((before.rgb != after.rgb).any(axis=2))
    assert changed.tolist() == [[20, 30]]


def test_synthesizer_rejects_holes_and_overflow(source_view):
    mask, _ = source_view
    holed = mask.labels.copy()
    holed[0, 0] = mask.num_classes
    with pytest.raises(ValidationError):
        stub_synthesizer(SemanticMask(holed, mask.num_classes), seed=0)
    wide = SemanticMask(np.zeros((4, 4), np.int32), 17)
    with pytest.raises(ValidationError):
        stub_synthesizer(wide, seed=0)


def test_synthesizer_texture_keyed_to_absolute_coordinates(source_view):
    # Cropping the mask must reproduce the same colors in the overlap.
    mask, _ = source_view
    full = stub_synthesizer(mask, seed=2)
    crop = SemanticMask(mask.labels[:16, :16], mask.num_classes)
    small = stub_synthesizer(crop, seed=2)
    assert np.array_equal(full.rgb[:16, :16], small.rgb)


# --- depth ----------------------------------------------------------------------

def test_depth_pinned_affine_reproduces_oracle(handle, source_image, scene):
    got = stub_depth(source_image, handle, affine=(1.0, 0.0))
    _, oracle = handle.rendered
    assert got.all_valid()
    assert np.allclose(got.values[oracle.validity], oracle.values[oracle.validity],
                       atol=1e-6)
    sky_fill = 0.75 * scene.far
    assert np.allclose(got.values[~oracle.validity], sky_fill, atol=1e-6)


def test_depth_affine_ambiguity_vanishes_after_alignment(handle, source_image):
    _, oracle = handle.rendered
    fill = 0.75 * handle.scene.far
    reference = np.where(oracle.validity, oracle.values, fill).astype(np.float64)
    got = stub_depth(source_image, handle, affine=(1.18, 0.05))
    w, q = align_scale_shift(got.values.astype(np.float64).ravel(), reference.ravel())
    aligned = w * got.values.astype(np.float64) + q
    rel = np.abs(aligned - reference) / reference
    assert rel.max() <= 1e-6


def test_depth_noise_survives_alignment(handle, source_image):
    _, oracle = handle.rendered
    fill = 0.75 * handle.scene.far
    reference = np.where(oracle.validity, oracle.values, fill).astype(np.float64)
    got = stub_depth(source_image, handle, noise_level=0.05, seed=1)
    w, q = align_scale_shift(got.values.astype(np.float64).ravel(), reference.ravel())
    rel = np.abs(w * got.values + q - reference) / reference
    assert 0.01 <= rel.max() <= 0.10


def test_depth_default_affine_varies_with_view_tag(scene, source_cam, source_image):
    a = stub_depth(source_image, OracleHandle(scene, source_cam, tag=0), seed=3)
    a2 = stub_depth(source_image, OracleHandle(scene, source_cam, tag=0), seed=3)
    b = stub_depth(source_image, OracleHandle(scene, source_cam, tag=1), seed=3)
    assert np.array_equal(a.values, a2.values)
    assert not np.array_equal(a.values, b.values)


def test_depth_requires_handle_and_matching_resolution(handle, source_image):
    with pytest.raises(NotImplementedError):
        stub_depth(source_image, None)
    small = ColorImage(np.zeros((8, 8, 3), np.float32))
    with pytest.raises(ValidationError):
        stub_depth(small, handle)


# --- segmenter ------------------------------------------------------------------

def test_segmenter_without_jitter_is_the_oracle(handle, source_image, source_view):
    mask, _ = source_view
    got = stub_segmenter(source_image, handle, jitter=0)
    assert np.array_equal(got.labels, mask.labels)


def test_segmenter_jitter_stays_on_class_boundaries(handle, source_image, source_view):
    mask, _ = source_view
    got = stub_segmenter(source_image, handle, jitter=1, seed=2)
    changed = got.labels != mask.labels
    assert 0 < changed.mean() <= 0.05
    # Every flipped pixel must touch a pixel that had a different label.
    orig = mask.labels
    band = np.zeros(orig.shape, dtype=bool)
    band[:-1, :] |= orig[:-1, :] != orig[1:, :]
    band[1:, :] |= orig[1:, :] != orig[:-1, :]
    band[:, :-1] |= orig[:, :-1] != orig[:, 1:]
    band[:, 1:] |= orig[:, 1:] != orig[:, :-1]
    assert (band[changed]).all()
    assert got.num_classes == mask.num_classes
    assert got.is_hole_free()
    with pytest.raises(ValidationError):
        stub_segmenter(source_image, handle, jitter=2)


def test_oracle_handle_caches_its_render(handle):
    assert handle.rendered is handle.rendered


# --- registry -------------------------------------------------------------------

def test_registry_lists_and_instantiates():
    assert "stub" in available_adapters("depth")
    assert "external" in available_adapters("synthesizer")
    adapter = make_adapter("depth", "stub", noise_level=0.1, seed=4)
    assert adapter.noise_level == 0.1
    with pytest.raises(ValidationError):
        make_adapter("depth", "no-such-model")
    with pytest.raises(ValidationError):
        make_adapter("upscaler", "stub")
    with pytest.raises(ValidationError):
        register_adapter("upscaler", "stub", lambda: None)


# --- external process adapters ---------------------------------------------------

_ECHO_DEPTH = """
import sys
import numpy as np
from maskscape.scenekit import DepthMap, load_image, save_depth
image = load_image(sys.argv[1])
h, w = image.shape
save_depth(sys.argv[2], DepthMap(np.full((h, w), 2.0, np.float32), np.ones((h, w), bool)))
"""


def test_external_depth_round_trips_through_files(tmp_path, source_image):
    script = tmp_path / "fake_depth.py"
    script.write_text(_ECHO_DEPTH)
    adapter = make_adapter("depth", "external",
                           command=f"python3 {script} {{input}} {{output}}")
    depth = adapter(source_image)
    assert depth.shape == source_image.shape
    assert np.allclose(depth.values, 2.0)


def test_external_synthesizer_sees_the_seed(tmp_path, source_view):
    mask, _ = source_view
    script = tmp_path / "fake_synth.py"
    script.write_text(
        "import sys\n"
        "import numpy as np\n"
        "from maskscape.scenekit import ColorImage, load_mask, save_image\n"
        f"mask = load_mask(sys.argv[1], {mask.num_classes})\n"
        "h, w = mask.shape\n"
        "level = int(sys.argv[3]) / 255.0\n"
        "save_image(sys.argv[2], ColorImage(np.full((h, w, 3), level, np.float32)))\n"
    )
    adapter = make_adapter("synthesizer", "external",
                           command=f"python3 {script} {{input}} {{output}} {{seed}}")
    image = adapter(mask, seed=51)
    assert np.allclose(image.rgb, 51 / 255.0, atol=1e-3)


def test_external_adapter_failure_surfaces_stderr(tmp_path, source_image):
    script = tmp_path / "broken.py"
    script.write_text("import sys; sys.stderr.write('model exploded\\n'); sys.exit(3)")
    adapter = make_adapter("depth", "external",
                           command=f"python3 {script} {{input}} {{output}}")
    with pytest.raises(RuntimeError, match="model exploded"):
        adapter(source_image)
    silent = tmp_path / "silent.py"
    silent.write_text("pass")
    adapter = make_adapter("depth", "external",
                           command=f"python3 {silent} {{input}} {{output}}")
    with pytest.raises(RuntimeError, match="no output"):
        adapter(source_image)
