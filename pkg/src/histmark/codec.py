"""Gray-level grouping and the histogram-shifting bit codec.

Levels ``0..255`` are cut into bins of ``g_l`` consecutive levels and pairs of
bins form groups; group ``d`` (0-based) covers levels
``[2*d*g_l, 2*(d+1)*g_l - 1]``, its first half is Bin 1 and its second half
Bin 2. One bit lives in each keyed group and is carried by the population
ratio ``Bin1 / Bin2``: at least ``S`` for a 1, at most ``1/S`` for a 0.

Planes are real valued. A value's level is ``floor(v + 0.5)`` clipped to
``[0, 255]``; moving a pixel to another level preserves its offset from the
level centre so later rounding lands exactly on the target.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from histmark import kernels


@dataclass(frozen=True)
class GroupingParams:
    g_l: int = 6
    levels: int = 256

    def __post_init__(self):
        if self.g_l < 2:
            raise ValueError(f"g_l must be >= 2, got {self.g_l}")
        if self.levels < 2 * self.g_l:
            raise ValueError("fewer gray levels than one group needs")

    @property
    def n_bins(self) -> int:
        return self.levels // self.g_l

    @property
    def n_groups(self) -> int:
        return self.n_bins // 2

    def group_levels(self, d: int) -> range:
        lo = 2 * d * self.g_l
        return range(lo, lo + 2 * self.g_l)


@dataclass
class ShiftReport:
    group: int
    bit: int
    requested: int
    achieved: int
    ratio: float
    area: int = -1

    @property
    def complete(self) -> bool:
        return self.achieved >= self.requested


def grouping(params: GroupingParams):
    """Return ``(group, bin)`` lookup arrays indexed by gray level.

    ``group`` is 0-based, ``bin`` is 0 for Bin 1 and 1 for Bin 2; levels past
    the last full group map to -1 in both.
    """
    lv = np.arange(params.levels)
    span = 2 * params.g_l
    group = lv // span
    bin_ = (lv % span) // params.g_l
    outside = group >= params.n_groups
    group[outside] = -1
    bin_[outside] = -1
    return group, bin_


def quantize(plane) -> np.ndarray:
    return np.clip(np.floor(np.asarray(plane, dtype=np.float64) + 0.5), 0, 255).astype(
        np.int64
    )


def level_histogram(plane) -> np.ndarray:
    return np.bincount(quantize(plane).ravel(), minlength=256)


def bin_counts(plane, params: GroupingParams = GroupingParams()) -> np.ndarray:
    """Per-group ``(Bin 1, Bin 2)`` populations, shape ``(n_groups, 2)``."""
    hist = level_histogram(plane)[: params.n_groups * 2 * params.g_l]
    return hist.reshape(params.n_groups, 2, params.g_l).sum(axis=2)


def key_order(master_seed: bytes, area_index: int, n_groups: int) -> np.ndarray:
    """Seeded permutation of group indices for one area.

    The generator is seeded with SHA-256(master_seed || area index).
    """
    digest = hashlib.sha256(bytes(master_seed) + b"/area/%d" % area_index).digest()
    return np.random.default_rng(int.from_bytes(digest, "big")).permutation(n_groups)


def derive_keys(master_seed: bytes, area_count: int, n_groups: int, bits_per_area: int):
    """One boolean group-selection key per area: the first groups of its permutation."""
    if bits_per_area > n_groups:
        raise ValueError(f"bits per area ({bits_per_area}) exceeds groups ({n_groups})")
    if bits_per_area < 0 or area_count < 0:
        raise ValueError("counts must be non-negative")
    keys = []
    for i in range(area_count):
        key = np.zeros(n_groups, dtype=bool)
        key[key_order(master_seed, i, n_groups)[:bits_per_area]] = True
        keys.append(key)
    return keys


def populated_key(order, totals, bits_per_area: int, min_pixels: int):
    """Key marking the first *bits_per_area* groups of *order* holding >= *min_pixels*.

    Returns ``None`` when too few groups qualify. Group totals are unchanged
    by embedding (pixels only move inside their group), so a decoder can
    rebuild the key from the marked area.
    """
    key = np.zeros(len(totals), dtype=bool)
    n = 0
    for d in order:
        if totals[d] >= min_pixels:
            key[d] = True
            n += 1
            if n == bits_per_area:
                return key
    return None


def required_shift(count1: int, count2: int, S: float, bit: int) -> int:
    """Fewest pixels to move toward the favoured bin so the bit's ratio holds.

    For bit 1 the favoured bin is Bin 1 and ``(c1 + n) / (c2 - n) >= S`` is
    required, for bit 0 the mirror. Capped at the donor bin's population.
    """
    if S < 1:
        raise ValueError(f"strength must be >= 1, got {S}")
    if count1 < 0 or count2 < 0:
        raise ValueError("counts must be non-negative")
    fav, dis = (count1, count2) if bit else (count2, count1)
    s = Fraction(S)
    n = math.ceil((s * dis - fav) / (s + 1))
    return int(min(max(n, 0), dis))


def extract_bit(count1: int, count2: int) -> int:
    return 1 if count1 >= count2 else 0


def _ratio(c1: int, c2: int) -> float:
    if c2:
        return c1 / c2
    return math.inf if c1 else 1.0


def cascade_moves(g_l: int, bit: int):
    """Level-offset moves inside one group, in execution order.

    Yields ``(src, dst, kind)`` offsets relative to the group's first level;
    ``kind`` is ``"pre"`` for the in-bin spreading step and ``"donor"`` for a
    cross-bin transfer. Written for bit 0 and mirrored for bit 1.
    """
    top = 2 * g_l - 1
    recv = max(2 * g_l - 3, g_l)
    moves = [(recv, min(recv + 1, top), "pre")]
    for src in range(g_l - 1, -1, -1):
        moves.append((src, min(max(src + g_l - 1, g_l), recv), "donor"))
    if bit:
        moves = [(top - s, top - d, k) for s, d, k in moves]
    return moves


def embed_bit(plane, group: int, bit: int, S: float, params: GroupingParams = GroupingParams()):
    """Shift pixels between the two bins of *group* so it encodes *bit*.

    Returns ``(new_plane, ShiftReport)``. Within a level pixels are taken in
    raster order. Falls short (and says so in the report) when the donor bin
    runs dry.
    """
    if not 0 <= group < params.n_groups:
        raise ValueError(f"group {group} outside 0..{params.n_groups - 1}")
    out = np.array(plane, dtype=np.float64, copy=True)
    flat = out.reshape(-1)
    lv = quantize(flat)
    # values beyond the representable range would land off-target; pin them
    lv[(flat < -0.5) | (flat >= 255.5)] = -1
    c1, c2 = bin_counts(out, params)[group]
    need = required_shift(int(c1), int(c2), S, bit)
    base = 2 * group * params.g_l
    moved = 0
    if need:
        for src, dst, kind in cascade_moves(params.g_l, bit):
            if kind == "pre":
                kernels.transfer(flat, lv, base + src, base + dst, need)
            else:
                moved += kernels.transfer(flat, lv, base + src, base + dst, need - moved)
                if moved >= need:
                    break
    n1, n2 = (c1 + moved, c2 - moved) if bit else (c1 - moved, c2 + moved)
    return out, ShiftReport(group, int(bit), need, moved, _ratio(int(n1), int(n2)))


def embed_area(plane, key, bits, S: float, params: GroupingParams = GroupingParams()):
    """Embed *bits* into the key-selected groups of *plane*, ascending group order."""
    key = np.asarray(key, dtype=bool)
    if key.size != params.n_groups:
        raise ValueError(f"key length {key.size} != group count {params.n_groups}")
    bits = [int(b) for b in bits]
    groups = np.flatnonzero(key)
    if len(bits) != groups.size:
        raise ValueError(f"{len(bits)} bits for a key selecting {groups.size} groups")
    out = np.array(plane, dtype=np.float64, copy=True)
    reports = []
    for d, b in zip(groups, bits):
        out, rep = embed_bit(out, int(d), b, S, params)
        reports.append(rep)
    return out, reports


def extract_area(plane, key, params: GroupingParams = GroupingParams()):
    counts = bin_counts(plane, params)[np.asarray(key, dtype=bool)]
    return [extract_bit(int(a), int(b)) for a, b in counts]


def group_margins(plane, key, params: GroupingParams = GroupingParams()) -> np.ndarray:
    """Normalised ``|c1 - c2| / (c1 + c2)`` for each key-selected group."""
    counts = bin_counts(plane, params)[np.asarray(key, dtype=bool)].astype(np.float64)
    tot = counts.sum(axis=1)
    return np.where(tot > 0, np.abs(counts[:, 0] - counts[:, 1]) / np.maximum(tot, 1), 0.0)


REPORT_COLUMNS = ("area", "group", "bit", "requested", "achieved", "ratio")


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        w.writerow([r.area, r.group, r.bit, r.requested, r.achieved, f"{r.ratio:.6g}"])
    return buf.getvalue()
