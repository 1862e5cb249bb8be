"""Attack sweeps: per-trial BER/PSNR/SSIM rows and their aggregate table."""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from histmark import attacks, metrics
from histmark import pipeline as pl
from histmark.areas import InsufficientAreasError

ROW_COLUMNS = ("image", "attack", "param", "S", "ber", "psnr", "ssim", "trial", "failed")
AGGREGATE_COLUMNS = ("attack", "param", "S", "n", "ber", "psnr", "ssim", "failed")

# BER the decoder is credited with when it finds nothing to read
CHANCE_BER = 0.5

# (label, attack, reference BER) for the reference robustness table
TABLE1 = (
    ("Gaussian noise", "noise:sigma=2", 0.0),
    ("Median filtering", "median:k=3", 0.004),
    ("Salt & pepper noise", "saltpepper:density=0.01", 0.022),
    ("Gaussian filtering", "gaussblur:sigma=0.5,k=3", 0.011),
    ("Cropping 10%", "crop:fraction=0.1", 0.0),
    ("Cropping 20%", "crop:fraction=0.2", 0.0),
    ("Scaling 80%", "scale:factor=0.8", 0.052),
    ("Scaling 120%", "scale:factor=1.2", 0.033),
    ("Scaling 150%", "scale:factor=1.5", 0.004),
    ("Rotation 2", "rotate:degrees=2", 0.060),
    ("Rotation 5", "rotate:degrees=5", 0.063),
    ("Rotation 10", "rotate:degrees=10", 0.060),
    ("Rotation 25", "rotate:degrees=25", 0.055),
    ("Rotation 30", "rotate:degrees=30", 0.052),
    ("Rotation 45", "rotate:degrees=45", 0.055),
    ("JPEG 90%", "jpeg:q=90", 0.003),
    ("JPEG 70%", "jpeg:q=70", 0.004),
    ("JPEG 50%", "jpeg:q=50", 0.026),
    ("JPEG 30%", "jpeg:q=30", 0.103),
    ("Wave bending", "wave:amplitude=3,period=64", 0.026),
    ("Global random bending", "randbend:sigma=1.5,smoothing=8", 0.046),
    ("Jittering", "jitter:count=8", 0.009),
)


@dataclass
class SweepSpec:
    """A grid of attacks x strengths x images x trials."""

    attacks: list
    strengths: list = field(default_factory=lambda: [6.0])
    images: list = field(default_factory=list)  # [(name, array), ...]
    trials: int = 1
    seed: int = 0
    config: pl.PipelineConfig = field(default_factory=pl.PipelineConfig)

    def __post_init__(self):
        self.attacks = [attacks.parse(a) if isinstance(a, str) else a for a in self.attacks]
        if not self.attacks:
            raise ValueError("sweep needs at least one attack")
        if not self.strengths:
            raise ValueError("sweep needs at least one strength")
        if not self.images:
            raise ValueError("sweep needs a non-empty corpus")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    @classmethod
    def grid(cls, family: str, params, **kw) -> "SweepSpec":
        """One attack family over a list of headline-parameter values."""
        base = attacks.parse(family)
        specs = [replace(base, **{base.param_name: type(base.param)(p)}) for p in params]
        return cls(attacks=specs, **kw)


@dataclass(frozen=True)
class Row:
    image: str
    attack: str
    param: float
    S: float
    ber: float | None
    psnr: float | None
    ssim: float | None
    trial: int
    failed: bool

    def key(self):
        return (self.image, self.attack, self.param, self.S, self.trial)


def _with_seed(spec: attacks.Attack, seed: int) -> attacks.Attack:
    return replace(spec, seed=seed) if hasattr(spec, "seed") else spec


def _cell(args):
    """Embed once for (image, S, trial) and run every attack on the result."""
    name, img, S, trial, specs, cfg, seed = args
    cfg = replace(cfg, S=float(S), reference_dims=tuple(img.shape))
    bits = pl.random_bits(cfg.payload_bits, seed + trial)
    try:
        marked = pl.embed(img, bits, cfg)
    except InsufficientAreasError:
        return [Row(name, a.family, float(a.param), float(S), None, None, None, trial, True) for a in specs]
    rows = []
    for a in specs:
        attacked = _with_seed(a, seed + trial).apply(marked.image)
        try:
            ber, failed = metrics.ber(bits, pl.extract(attacked, cfg).bits), False
        except (InsufficientAreasError, ValueError):
            ber, failed = CHANCE_BER, True
        rows.append(
            Row(name, a.family, float(a.param), float(S), ber, marked.psnr, marked.ssim, trial, failed)
        )
    return rows


def run_sweep(spec: SweepSpec, workers: int = 1):
    """All rows, sorted by (image, attack, param, S, trial) whatever the completion order."""
    jobs = [
        (name, img, S, t, spec.attacks, spec.config, spec.seed)
        for name, img in spec.images
        for S in spec.strengths
        for t in range(spec.trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            chunks = list(ex.map(_cell, jobs))
    else:
        chunks = [_cell(j) for j in jobs]
    return sorted((r for c in chunks for r in c), key=Row.key)


def aggregate(rows):
    """Mean BER/PSNR/SSIM per (attack, param, S) over rows whose embedding succeeded."""
    cells = defaultdict(list)
    for r in rows:
        cells[(r.attack, r.param, r.S)].append(r)
    out = []
    for (attack, param, S), rs in sorted(cells.items()):
        ok = [r for r in rs if r.ber is not None]
        mean = lambda xs: float(np.mean(xs)) if xs else math.nan  # noqa: E731
        out.append(
            {
                "attack": attack,
                "param": param,
                "S": S,
                "n": len(ok),
                "ber": mean([r.ber for r in ok]),
                "psnr": mean([r.psnr for r in ok]),
                "ssim": mean([r.ssim for r in ok]),
                "failed": sum(r.failed for r in rs),
            }
        )
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.6g}"
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in ROW_COLUMNS])
    return buf.getvalue()


def aggregate_to_csv(agg) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGGREGATE_COLUMNS)
    for a in agg:
        w.writerow([_fmt(a[c]) for c in AGGREGATE_COLUMNS])
    return buf.getvalue()
