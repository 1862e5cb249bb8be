import numpy as np
import pytest

from histmark import geometry
from histmark.pipeline import estimate_rotation, normalize_geometry


def test_resize_dimensions_and_identity(textured):
    assert geometry.resize(textured, (100, 150)).shape == (100, 150)
    assert np.array_equal(geometry.resize(textured, textured.shape), textured)


def test_resize_constant_stays_constant():
    out = geometry.resize(np.full((10, 10), 77, np.uint8), (23, 7))
    assert np.all(out == 77)


def test_rotate_zero_is_identity(textured):
    assert np.array_equal(geometry.rotate(textured, 0), textured)


def test_rotate_keeps_canvas_and_fills(textured):
    out = geometry.rotate(np.full((64, 64), 200, np.uint8), 30, fill=0)
    assert out.shape == (64, 64)
    assert out[0, 0] == 0 and out[32, 32] == 200


def test_warp_zero_field_is_identity(textured):
    z = np.zeros(textured.shape)
    assert np.array_equal(geometry.warp(textured, z, z), textured)


def test_fill_region_only_border_connected():
    img = np.full((50, 50), 100, np.uint8)
    img[:5] = 0
    img[20:25, 20:25] = 0  # interior dark patch is not padding
    mask = geometry.fill_region(img)
    assert mask[:5].all() and not mask[20:25, 20:25].any()


def test_inpaint_replaces_masked():
    img = np.array([[0, 0, 9], [5, 5, 9]], np.uint8)
    mask = img == 0
    out = geometry.inpaint_nearest(img, mask)
    assert not (out == 0).any()


def test_unrotated_estimate_is_zero(camera):
    assert abs(estimate_rotation(camera)) <= 0.2


@pytest.mark.parametrize("angle", [2, 5, 10, -7, 25])
def test_rotation_estimate_within_half_degree(camera, angle):
    assert estimate_rotation(geometry.rotate(camera, angle)) == pytest.approx(angle, abs=0.5)


def test_estimate_needs_foreground():
    with pytest.raises(ValueError, match="foreground"):
        geometry.rotation_angle_from_edge(np.zeros((10, 10), np.uint8))


def test_normalize_geometry(textured):
    assert normalize_geometry(textured, None) is not None
    assert np.array_equal(normalize_geometry(textured, textured.shape), textured)
    small = geometry.resize(textured, (102, 102))
    assert normalize_geometry(small, (128, 128)).shape == (128, 128)
