import math

import numpy as np
import pytest

from histmark import daisy
from histmark.daisy import DaisyParams


def _score_from_descriptor(desc, p: DaisyParams):
    """Per-pixel score read straight off a full descriptor: best ray of summed ring mass."""
    ring = desc[1:].sum(axis=1).reshape(p.layers, p.directions)
    return ring.sum(axis=0).max()


def test_fast_scores_equal_descriptor_scores(textured):
    p = DaisyParams(radius=6.0)
    field = daisy.descriptor_field(daisy.orientation_maps(textured, p), p)
    fast = daisy.score_plane(textured, p)
    for r, c in [(0, 0), (5, 17), (64, 64), (127, 3), (90, 120)]:
        assert fast[r, c] == pytest.approx(_score_from_descriptor(field.descriptor(r, c), p), rel=1e-9)
    full = daisy.directional_scores(field)
    quick = daisy.feature_points(textured, p)
    assert np.array_equal(full.rows, quick.rows) and np.array_equal(full.cols, quick.cols)


def test_descriptor_shape():
    p = DaisyParams()
    field = daisy.descriptor_field(daisy.orientation_maps(np.zeros((20, 20)), p), p)
    assert field.descriptor(3, 3).shape == (1 + 3 * 8, 8)


def test_orientation_maps_are_rectified_projections():
    # a horizontal ramp has gradient (gx=1, gy=0)
    img = np.tile(np.arange(10, dtype=float), (10, 1))
    maps = daisy.orientation_maps(img)
    inner = maps[:, 5, 5]
    expected = [max(math.cos(2 * math.pi * o / 8), 0.0) for o in range(8)]
    assert np.allclose(inner, expected)


def test_flat_image_scores_zero():
    assert np.all(daisy.score_plane(np.full((32, 32), 7.0)) == 0)


def test_points_sorted_with_raster_ties():
    plane = np.zeros((4, 4))
    plane[2, 1] = plane[1, 3] = 5
    pts = daisy._sorted_points(plane)
    assert (pts.rows[0], pts.cols[0]) == (1, 3)
    assert (pts.rows[1], pts.cols[1]) == (2, 1)
    assert np.all(np.diff(pts.scores) <= 0)


def test_select_points_keeps_ceil_fraction(textured):
    pts = daisy.feature_points(textured)
    kept = daisy.select_points(pts, 0.02)
    assert len(kept) == math.ceil(0.02 * textured.size)
    with pytest.raises(ValueError):
        daisy.select_points(pts, 0)


def test_edge_attracts_points():
    img = np.zeros((64, 64))
    img[:, 32:] = 200
    pts = daisy.select_points(daisy.feature_points(img), 0.02)
    assert np.all(np.abs(pts.cols - 32) <= 16)


def test_points_csv(tmp_path, textured):
    pts = daisy.select_points(daisy.feature_points(textured), 0.01)
    path = tmp_path / "p.csv"
    pts.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "row,col,score" and len(lines) == len(pts) + 1


@pytest.mark.parametrize("kw", [dict(layers=0), dict(directions=1), dict(radius=0)])
def test_bad_params(kw):
    with pytest.raises(ValueError):
        DaisyParams(**kw)


def test_too_small_image():
    with pytest.raises(ValueError):
        daisy.orientation_maps(np.zeros((2, 5)))
