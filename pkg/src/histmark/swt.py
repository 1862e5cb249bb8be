"""Single-level undecimated Haar wavelet transform and diagonal-band denoising.

Analysis uses the orthonormal Haar pair with periodic extension, so every band
keeps the input's shape. The transform is redundant (4x), which leaves a choice
of synthesis operator. The default reconstructs from the even/even polyphase
component only: it inverts the analysis exactly, and because it coincides with
an orthogonal decimated Haar synthesis, zeroing the diagonal band and
resynthesising is a projection. ``denoise`` is therefore idempotent, which is
what lets the decoder recover the same smooth plane the embedder worked on.

``phase_average=True`` gives the textbook shift-invariant inverse (mean over
all four polyphase reconstructions). It also inverts exactly, but its
diagonal-zeroing operator has frequency response ``1 - sin^2(wx/2) sin^2(wy/2)``
and is not idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_R2 = np.sqrt(2.0)


@dataclass(frozen=True)
class SwtBands:
    app: np.ndarray
    hor: np.ndarray
    ver: np.ndarray
    dia: np.ndarray

    @property
    def shape(self):
        return self.app.shape


@dataclass(frozen=True)
class DenoisedArea:
    smooth: np.ndarray
    residual: np.ndarray


def _check_plane(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D plane, got shape {x.shape}")
    if x.shape[0] % 2 or x.shape[1] % 2:
        raise ValueError(f"plane sides must be even, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("plane contains non-finite values")
    return x


def _analyze(x, axis):
    nxt = np.roll(x, -1, axis)
    return (x + nxt) / _R2, (x - nxt) / _R2


def _synthesize(lo, hi, axis, phase_average):
    even = (lo + hi) / _R2
    odd = (lo - hi) / _R2
    if phase_average:
        return 0.5 * (even + np.roll(odd, 1, axis))
    # even-phase samples carry a full decimated Haar pair per 2-sample block
    out = np.empty_like(lo)
    sl = [slice(None)] * lo.ndim
    sl_even = list(sl)
    sl_odd = list(sl)
    sl_even[axis] = slice(0, None, 2)
    sl_odd[axis] = slice(1, None, 2)
    out[tuple(sl_even)] = even[tuple(sl_even)]
    out[tuple(sl_odd)] = odd[tuple(sl_even)]
    return out


def swt_forward(area) -> SwtBands:
    """One analysis level; ``hor`` is high-pass down columns, ``ver`` across rows."""
    x = _check_plane(area)
    lo, hi = _analyze(x, 1)
    app, hor = _analyze(lo, 0)
    ver, dia = _analyze(hi, 0)
    return SwtBands(app, hor, ver, dia)


def iswt_inverse(bands: SwtBands, phase_average: bool = False) -> np.ndarray:
    shapes = {b.shape for b in (bands.app, bands.hor, bands.ver, bands.dia)}
    if len(shapes) != 1:
        raise ValueError(f"band dimension mismatch: {sorted(shapes)}")
    (shape,) = shapes
    if len(shape) != 2 or shape[0] % 2 or shape[1] % 2:
        raise ValueError(f"bands must be 2-D with even sides, got {shape}")
    lo = _synthesize(bands.app, bands.hor, 0, phase_average)
    hi = _synthesize(bands.ver, bands.dia, 0, phase_average)
    return _synthesize(lo, hi, 1, phase_average)


def denoise(area, phase_average: bool = False) -> DenoisedArea:
    """Split *area* into a smooth plane (diagonal band zeroed) and its residual."""
    x = _check_plane(area)
    b = swt_forward(x)
    smooth = iswt_inverse(
        SwtBands(b.app, b.hor, b.ver, np.zeros_like(b.dia)), phase_average
    )
    return DenoisedArea(smooth, x - smooth)
