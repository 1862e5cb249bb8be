"""Seeded, deterministic image distortions for robustness testing.

Every attack is a small frozen dataclass with an ``apply(img)`` method. Specs
round-trip through JSON (``to_dict``/``from_dict``) and through the compact
string form used on the command line, e.g. ``jpeg:q=70`` or
``noise:sigma=2,seed=7``.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy import ndimage

from histmark import geometry
from histmark.image import as_gray


class AttackError(ValueError):
    pass


def _odd_kernel(k: int) -> None:
    if k < 3 or k % 2 == 0:
        raise AttackError(f"kernel size must be odd and >= 3, got {k}")


def _unit_fraction(name: str, v: float) -> None:
    if not 0 < v < 1:
        raise AttackError(f"{name} must be in (0, 1), got {v}")


@dataclass(frozen=True)
class Attack:
    family = ""
    param_name = ""

    @property
    def param(self) -> float:
        """The attack's headline parameter, used as the sweep axis."""
        return getattr(self, self.param_name)

    def apply(self, img) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"family": self.family, **asdict(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def __str__(self) -> str:
        args = ",".join(f"{f.name}={getattr(self, f.name)}" for f in fields(self))
        return f"{self.family}:{args}"


@dataclass(frozen=True)
class GaussianNoise(Attack):
    sigma: float = 2.0
    seed: int = 0
    family = "noise"
    param_name = "sigma"

    def __post_init__(self):
        if self.sigma < 0:
            raise AttackError("sigma must be >= 0")

    def apply(self, img):
        img = as_gray(img)
        if self.sigma == 0:
            return img.copy()
        rng = np.random.default_rng(self.seed)
        return geometry.to_uint8(img + rng.normal(0.0, self.sigma, img.shape))


@dataclass(frozen=True)
class SaltPepper(Attack):
    density: float = 0.01
    seed: int = 0
    family = "saltpepper"
    param_name = "density"

    def __post_init__(self):
        _unit_fraction("density", self.density)

    def apply(self, img):
        img = as_gray(img)
        rng = np.random.default_rng(self.seed)
        n = int(round(self.density * img.size))
        idx = rng.choice(img.size, size=n, replace=False)
        out = img.copy().reshape(-1)
        out[idx] = np.where(rng.random(n) < 0.5, 0, 255)
        return out.reshape(img.shape)


@dataclass(frozen=True)
class MedianFilter(Attack):
    k: int = 3
    family = "median"
    param_name = "k"

    def __post_init__(self):
        _odd_kernel(self.k)

    def apply(self, img):
        return ndimage.median_filter(as_gray(img), size=self.k, mode="nearest")


@dataclass(frozen=True)
class GaussianFilter(Attack):
    sigma: float = 0.5
    k: int = 3
    family = "gaussblur"
    param_name = "sigma"

    def __post_init__(self):
        _odd_kernel(self.k)
        if not self.sigma > 0:
            raise AttackError("sigma must be positive")

    def apply(self, img):
        x = as_gray(img).astype(np.float64)
        out = ndimage.gaussian_filter(x, self.sigma, mode="nearest", radius=self.k // 2)
        return geometry.to_uint8(out)


@dataclass(frozen=True)
class Crop(Attack):
    """Zero a strip of ``ceil(fraction * rows)`` rows at the top of the image."""

    fraction: float = 0.1
    family = "crop"
    param_name = "fraction"

    def __post_init__(self):
        _unit_fraction("fraction", self.fraction)

    def apply(self, img):
        out = as_gray(img).copy()
        # tolerate float noise such as 0.1 * 300 = 30.000000000000004
        out[: math.ceil(round(self.fraction * out.shape[0], 9))] = 0
        return out


@dataclass(frozen=True)
class Scale(Attack):
    factor: float = 1.2
    family = "scale"
    param_name = "factor"

    def __post_init__(self):
        if not self.factor > 0:
            raise AttackError("factor must be positive")

    def apply(self, img):
        img = as_gray(img)
        shape = tuple(max(1, int(round(n * self.factor))) for n in img.shape)
        return geometry.resize(img, shape)


@dataclass(frozen=True)
class Rotate(Attack):
    degrees: float = 10.0
    fill: int = 0
    family = "rotate"
    param_name = "degrees"

    def __post_init__(self):
        if not 0 <= self.fill <= 255:
            raise AttackError("fill must be a gray level")

    def apply(self, img):
        return geometry.rotate(as_gray(img), self.degrees, self.fill)


@dataclass(frozen=True)
class Jpeg(Attack):
    q: int = 70
    family = "jpeg"
    param_name = "q"

    def __post_init__(self):
        if not 1 <= self.q <= 100:
            raise AttackError(f"quality must be in 1..100, got {self.q}")

    def apply(self, img):
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(as_gray(img)).save(buf, format="JPEG", quality=int(self.q))
        buf.seek(0)
        return np.asarray(Image.open(buf).convert("L"))


@dataclass(frozen=True)
class WaveBend(Attack):
    """Shift column ``c`` vertically by ``amplitude * sin(2*pi*c / period)``."""

    amplitude: float = 3.0
    period: float = 64.0
    family = "wave"
    param_name = "amplitude"

    def __post_init__(self):
        if not self.period > 0:
            raise AttackError("period must be positive")

    def apply(self, img):
        img = as_gray(img)
        cols = np.arange(img.shape[1])
        drow = self.amplitude * np.sin(2 * math.pi * cols / self.period)
        return geometry.warp(img, np.broadcast_to(drow, img.shape), np.zeros(img.shape))


@dataclass(frozen=True)
class RandomBend(Attack):
    """Warp by smoothed Gaussian noise rescaled to a ``sigma``-pixel standard deviation."""

    sigma: float = 1.5
    smoothing: float = 8.0
    seed: int = 0
    family = "randbend"
    param_name = "sigma"

    def __post_init__(self):
        if self.sigma < 0 or not self.smoothing > 0:
            raise AttackError("need sigma >= 0 and smoothing > 0")

    def apply(self, img):
        img = as_gray(img)
        rng = np.random.default_rng(self.seed)
        field = []
        for _ in range(2):
            f = ndimage.gaussian_filter(rng.standard_normal(img.shape), self.smoothing, mode="wrap")
            sd = f.std()
            field.append(f * (self.sigma / sd) if sd > 0 else f)
        return geometry.warp(img, field[0], field[1])


@dataclass(frozen=True)
class Jitter(Attack):
    """Delete ``count`` random columns and pad by replicating the last column."""

    count: int = 8
    seed: int = 0
    family = "jitter"
    param_name = "count"

    def apply(self, img):
        img = as_gray(img)
        if not 0 <= self.count < img.shape[1]:
            raise AttackError(f"cannot remove {self.count} of {img.shape[1]} columns")
        rng = np.random.default_rng(self.seed)
        drop = rng.choice(img.shape[1], size=self.count, replace=False)
        kept = np.delete(img, drop, axis=1)
        pad = np.repeat(kept[:, -1:], self.count, axis=1)
        return np.ascontiguousarray(np.concatenate([kept, pad], axis=1))


FAMILIES = {
    cls.family: cls
    for cls in (
        GaussianNoise,
        SaltPepper,
        MedianFilter,
        GaussianFilter,
        Crop,
        Scale,
        Rotate,
        Jpeg,
        WaveBend,
        RandomBend,
        Jitter,
    )
}

# short spellings accepted in the string form
ALIASES = {"deg": "degrees", "f": "fraction", "amp": "amplitude", "quality": "q", "smooth": "smoothing"}


def _build(family: str, kwargs: dict) -> Attack:
    cls = FAMILIES.get(family)
    if cls is None:
        raise AttackError(f"unknown attack family {family!r}; known: {', '.join(sorted(FAMILIES))}")
    types = {f.name: f.type for f in fields(cls)}
    args = {}
    for k, v in kwargs.items():
        k = ALIASES.get(k, k)
        if k not in types:
            raise AttackError(f"{family} has no parameter {k!r}")
        try:
            args[k] = int(v) if types[k] in (int, "int") else float(v)
        except (TypeError, ValueError):
            raise AttackError(f"bad value for {family}.{k}: {v!r}") from None
    return cls(**args)


def parse(text: str) -> Attack:
    """Parse ``family:key=value,...`` (parameters optional)."""
    family, _, rest = text.strip().partition(":")
    kwargs = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        k, eq, v = item.partition("=")
        if not eq:
            raise AttackError(f"expected key=value, got {item!r}")
        kwargs[k.strip()] = v.strip()
    return _build(family.strip().lower(), kwargs)


def from_dict(d: dict) -> Attack:
    d = dict(d)
    family = d.pop("family", None)
    if family is None:
        raise AttackError("attack spec needs a 'family'")
    return _build(family, d)


def from_json(text: str) -> Attack:
    return from_dict(json.loads(text))


def apply(img, spec: Attack) -> np.ndarray:
    return spec.apply(img)
