"""Single-image robustness targets this implementation does not reach yet.

They stay in the suite as expected failures so the gap shows in every run.
Resampling and filtering smear the few-level bin shifts the payload lives in.
A target that starts passing shows up as XPASS.
"""

from dataclasses import replace

import pytest

from histmark import attacks, metrics
from histmark import pipeline as pl

BITS = pl.random_bits(45, 0)
SHORTFALL = "interpolating and filtering attacks scramble per-pixel histogram shifts"


@pytest.fixture(scope="module")
def marked(camera):
    cfg = replace(pl.PipelineConfig(), reference_dims=camera.shape)
    return cfg, pl.embed(camera, BITS, cfg).image


@pytest.mark.xfail(reason=SHORTFALL, strict=False)
@pytest.mark.parametrize(
    "text, target",
    [
        ("rotate:degrees=5", 0.063),
        ("rotate:degrees=10", 0.060),
        ("scale:factor=1.5", 0.05),
        ("median:k=3", 0.054),
        ("jpeg:q=70", 0.054),
    ],
)
def test_reference_target(marked, text, target):
    cfg, img = marked
    got = pl.extract(attacks.parse(text).apply(img), cfg).bits
    assert metrics.ber(BITS, got) <= target
