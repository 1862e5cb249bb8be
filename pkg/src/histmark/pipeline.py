"""End-to-end embedding and blind extraction."""

from __future__ import annotations

import functools
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from histmark import codec, geometry, metrics
from histmark.areas import (
    AreaParams,
    FeatureArea,
    InsufficientAreasError,
    candidate_areas,
    cluster_points,
    select_areas,
    split_oversized,
)
from histmark.codec import GroupingParams, ShiftReport
from histmark.daisy import DaisyParams, _sorted_points, score_plane, select_points
from histmark.image import as_gray
from histmark.swt import denoise

# rotation estimates below this are treated as interpolation noise
ROTATION_THRESHOLD = 0.25


@dataclass(frozen=True)
class PipelineConfig:
    daisy: DaisyParams = field(default_factory=DaisyParams)
    area: AreaParams = field(default_factory=AreaParams)
    grouping: GroupingParams = field(default_factory=GroupingParams)
    S: float = 6.0
    N_L: int = 9
    master_seed: bytes = b"histmark"
    reference_dims: tuple[int, int] | None = None
    min_group_pixels: int = 32

    def __post_init__(self):
        if self.S < 1:
            raise ValueError(f"strength S must be >= 1, got {self.S}")
        cap = self.grouping.n_groups // 2
        if not 1 <= self.N_L < cap:
            raise ValueError(
                f"N_L={self.N_L} outside 1..{cap - 1} (must stay below floor(groups/2)={cap})"
            )
        if self.min_group_pixels < 1:
            raise ValueError("min_group_pixels must be >= 1")

    @property
    def count(self) -> int:
        return self.area.count

    @property
    def payload_bits(self) -> int:
        return self.area.count * self.N_L

    def orders(self, seed: bytes | None = None):
        """Per-area seeded group permutations."""
        seed = self.master_seed if seed is None else bytes(seed)
        return [codec.key_order(seed, i, self.grouping.n_groups) for i in range(self.count)]

    def with_seed(self, seed: bytes) -> "PipelineConfig":
        return replace(self, master_seed=bytes(seed))

    def to_dict(self) -> dict:
        return {
            "daisy": asdict(self.daisy),
            "area": asdict(self.area),
            "grouping": {"g_l": self.grouping.g_l},
            "S": self.S,
            "N_L": self.N_L,
            "master_seed": self.master_seed.hex(),
            "reference_dims": list(self.reference_dims) if self.reference_dims else None,
            "min_group_pixels": self.min_group_pixels,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        dims = d.get("reference_dims")
        return cls(
            daisy=DaisyParams(**d.get("daisy", {})),
            area=AreaParams(**d.get("area", {})),
            grouping=GroupingParams(**d.get("grouping", {})),
            S=float(d.get("S", 6.0)),
            N_L=int(d.get("N_L", 9)),
            master_seed=bytes.fromhex(d["master_seed"]) if "master_seed" in d else b"histmark",
            reference_dims=tuple(dims) if dims else None,
            min_group_pixels=int(d.get("min_group_pixels", 32)),
        )

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class EmbedOutcome:
    image: np.ndarray
    areas: list
    reports: list
    psnr: float
    ssim: float


@dataclass
class Extraction:
    bits: list
    areas: list
    margins: list
    rotation: float = 0.0

    @property
    def confidence(self) -> float:
        return float(np.mean(self.margins)) if self.margins else 0.0


# keep-fraction multipliers tried in turn when the configured fraction leaves
# too few usable areas; decoding always searches all of them
ESCALATION = (1, 2, 4)


def _ranked_points(img, cfg: PipelineConfig):
    """Every pixel by descending score, padding excluded.

    Padding of value 0 touching the border (cropping, rotation corners) is
    inpainted before scoring and its pixels cannot become feature points.
    """
    pad = geometry.fill_region(img)
    scores = score_plane(geometry.inpaint_nearest(img, pad) if pad.any() else img, cfg.daisy)
    if pad.any():
        scores[pad] = 0.0
    return _sorted_points(scores)


def _candidates(img, cfg: PipelineConfig, ranked, fraction: float):
    """Border-clear candidate squares from the top *fraction* of points, best entropy first."""
    points = select_points(ranked, min(fraction, 1.0))
    groups = split_oversized(cluster_points(points, cfg.area.radius), points, cfg.area.side)
    cands = candidate_areas(img, groups, points, cfg.area.side)
    m = cfg.area.margin
    rows, cols = img.shape
    inside = [
        a
        for a in cands
        if a.row >= m and a.col >= m and a.row + a.side <= rows - m and a.col + a.side <= cols - m
    ]
    return sorted(inside, key=lambda a: (-a.entropy, a.row, a.col))


def _candidate_pool(img, cfg: PipelineConfig):
    """Union of candidates over every escalation step."""
    ranked = _ranked_points(img, cfg)
    pool = {}
    for k in ESCALATION:
        for a in _candidates(img, cfg, ranked, cfg.area.keep_fraction * k):
            pool.setdefault((a.row, a.col), a)
    return sorted(pool.values(), key=lambda a: (-a.entropy, a.row, a.col))


def _totals(smooth, cfg: PipelineConfig) -> np.ndarray:
    return codec.bin_counts(smooth, cfg.grouping).sum(axis=1)


# populated groups an area needs beyond N_L, so that different area slots
# select visibly different groups and a decoder can tell the slots apart
CAPACITY_SLACK = 1


def _has_capacity(smooth, cfg: PipelineConfig) -> bool:
    populated = int((_totals(smooth, cfg) >= cfg.min_group_pixels).sum())
    return populated >= cfg.N_L + CAPACITY_SLACK


def detect(img, cfg: PipelineConfig, exclude=()):
    """The embedding areas for *img*: ``cfg.count`` disjoint squares.

    Highest entropy first; a candidate is skipped when fewer than ``N_L`` of
    its groups hold ``min_group_pixels`` pixels after denoising, or when its
    origin is in *exclude*. If the configured keep fraction leaves too few
    areas, larger fractions from ``ESCALATION`` are tried.
    """
    img = as_gray(img)
    skip = set(exclude)
    ranked = _ranked_points(img, cfg)
    capacity = {}
    found = 0
    for k in ESCALATION:
        usable = []
        for a in _candidates(img, cfg, ranked, cfg.area.keep_fraction * k):
            origin = (a.row, a.col)
            if origin in skip:
                continue
            if origin not in capacity:
                smooth = denoise(img[a.slices].astype(np.float64)).smooth
                capacity[origin] = _has_capacity(smooth, cfg)
            if capacity[origin]:
                usable.append(a)
        try:
            return select_areas(usable, cfg.count, img.shape, cfg.area.margin)
        except InsufficientAreasError as e:
            found = max(found, e.found)
    raise InsufficientAreasError(found, cfg.count)


# embed attempts when verification finds areas the decoder cannot read back
VERIFY_ATTEMPTS = 6


# decoder-view refinement: passes per stage and how much of a pixel's own
# change survives the decoder's diagonal-band projection. A stage is
# (depth at which a favoured pixel counts, depth a nudged pixel is sent to).
# The robust profile settles deep for margin against noise and then repairs
# shallowly; the plain profile is the fallback when deeper marking disturbs
# the feature areas.
SETTLE_PASSES = 8
SHALLOW = (0.0, 0.75)
SETTLE_PROFILES = (((2.5, 2.5), SHALLOW), (SHALLOW,))
PROJECTED_GAIN = 0.75


def embed(img, bits, cfg: PipelineConfig = PipelineConfig(), verify: bool = True) -> EmbedOutcome:
    """Embed *bits* (``cfg.payload_bits`` of them) and return the marked image.

    With *verify* the marked image is run through the blind extractor. Areas
    whose slice does not read back (typically because the marking moved the
    feature points enough to shift the snapped square) are first retried with
    the gentler settle profile, then excluded, and the embedding is redone
    from the original image; the attempt with the fewest bit errors is kept.
    """
    img = as_gray(img)
    bits = [int(b) for b in bits]
    if len(bits) != cfg.payload_bits:
        raise ValueError(f"expected {cfg.payload_bits} bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be 0 or 1")
    excluded: set = set()
    best, best_errors = None, None
    for _ in range(VERIFY_ATTEMPTS if verify else 1):
        try:
            areas = detect(img, cfg, excluded)
        except InsufficientAreasError:
            if best is None:
                raise
            break
        areas = in_slot_order(areas)
        wrong = set()
        for stages in SETTLE_PROFILES if verify else SETTLE_PROFILES[:1]:
            out, reports = _embed_areas(img, areas, bits, cfg, stages)
            if not verify:
                return _outcome(img, out, areas, reports)
            got = extract(out, cfg).bits
            wrong = {
                j
                for j in range(cfg.count)
                if got[j * cfg.N_L : (j + 1) * cfg.N_L] != bits[j * cfg.N_L : (j + 1) * cfg.N_L]
            }
            errors = sum(a != b for a, b in zip(got, bits))
            if best is None or errors < best_errors:
                best, best_errors = (out, areas, reports), errors
            if not wrong:
                return _outcome(img, out, areas, reports)
        excluded |= {(areas[j].row, areas[j].col) for j in wrong}
    return _outcome(img, *best)


def _outcome(img, out, areas, reports) -> EmbedOutcome:
    return EmbedOutcome(out, areas, reports, metrics.psnr(img, out), metrics.ssim(img, out))


def _embed_areas(img, areas, bits, cfg: PipelineConfig, stages=SETTLE_PROFILES[0]):
    out = img.copy()
    reports: list[ShiftReport] = []
    for i, (area, order) in enumerate(zip(areas, cfg.orders())):
        parts = denoise(img[area.slices].astype(np.float64))
        key = codec.populated_key(order, _totals(parts.smooth, cfg), cfg.N_L, cfg.min_group_pixels)
        chunk = bits[i * cfg.N_L : (i + 1) * cfg.N_L]
        marked, reps = codec.embed_area(parts.smooth, key, chunk, cfg.S, cfg.grouping)
        for counted, target in stages:
            marked = _settle(marked, parts.residual, parts.smooth, key, chunk, counted, target, cfg)
        _decoded_ratios(marked, parts.residual, key, reps, cfg)
        for r in reps:
            r.area = i
        reports.extend(reps)
        out[area.slices] = geometry.to_uint8(marked + parts.residual)
    return out, reports




def _decoder_view(marked, residual) -> np.ndarray:
    return denoise(geometry.to_uint8(marked + residual).astype(np.float64)).smooth


def _as_counts(favoured: int, other: int, bit: int):
    """``(Bin 1, Bin 2)`` counts from favoured/other populations for *bit*."""
    return (favoured, other) if bit else (other, favoured)


def _settle(marked, residual, original, key, bits, counted: float, target: float, cfg: PipelineConfig):
    """Top up shifts until the decoder's own view meets the strength.

    Rounding to integers and dropping the diagonal band at decode time spread
    part of every move onto its neighbours, so decoded ratios come out weaker
    than embedded ones and pixels parked on the first level of the favoured
    bin slide back. A favoured pixel only counts once it decodes at least
    *counted* levels inside its bin; a positive value buys margin against
    later noise. Each pass recomputes the decoder's view and nudges the
    cheapest of the remaining pixels to *target* levels inside, never letting a pixel stray more than
    ``g_l`` from its original smooth value.
    """
    g = cfg.grouping.g_l
    groups = np.flatnonzero(key)
    marked = marked.copy()
    flat = marked.reshape(-1)
    orig = original.reshape(-1)
    for _ in range(SETTLE_PASSES):
        view = _decoder_view(marked, residual)
        dec = view.reshape(-1)
        lv = codec.quantize(dec)
        moved_any = False
        for d, b in zip(groups, bits):
            lo = 2 * int(d) * g
            inner = lo + g - 0.5  # values at or above decode into Bin 2
            sign = 1.0 if b == 0 else -1.0  # direction toward the favoured bin
            member = (lv >= lo) & (lv < lo + 2 * g)
            depth = (dec - inner) * sign  # > 0 inside the favoured bin
            safe = member & (depth >= counted)
            need = codec.required_shift(*_as_counts(int(safe.sum()), int((member & ~safe).sum()), b), cfg.S, b)
            if not need:
                continue
            donors = np.flatnonzero(member & ~safe)
            into = inner + sign * target
            outer = (lo - 0.5 if b == 0 else lo + 2 * g - 0.5) - sign * target
            step = (into - dec[donors]) / PROJECTED_GAIN
            # pixels that drifted in from a neighbouring group may go back instead
            home = codec.quantize(orig[donors])
            stray = ((home < lo) | (home >= lo + 2 * g)) & (depth[donors] < 0)
            back = (outer - dec[donors]) / PROJECTED_GAIN
            step = np.where(stray & (np.abs(back) < np.abs(step)), back, step)
            ok = np.abs(flat[donors] + step - orig[donors]) <= g
            donors, step = donors[ok], step[ok]
            pick = np.lexsort((donors, np.abs(step)))[:need]
            if pick.size:
                flat[donors[pick]] += step[pick]
                moved_any = True
        if not moved_any:
            break
    return marked


def _decoded_ratios(marked, residual, key, reports, cfg: PipelineConfig) -> None:
    """Reports keep the cascade's request and achievement; their ratio becomes the one a decoder sees."""
    counts = codec.bin_counts(_decoder_view(marked, residual), cfg.grouping)
    for d, rep in zip(np.flatnonzero(key), reports):
        c1, c2 = int(counts[d, 0]), int(counts[d, 1])
        rep.ratio = codec._ratio(c1, c2) if rep.bit else codec._ratio(c2, c1)


def in_slot_order(areas):
    """Areas in payload-slot order: raster order of their origins.

    Slot ``j`` carries bits ``j*N_L .. (j+1)*N_L - 1`` under key ``j``. Raster
    order is used rather than entropy rank because marking shifts entropies
    while positions survive any attack that keeps the geometry.
    """
    return sorted(areas, key=lambda a: (a.row, a.col))


# decode-side group totals within this many pixels of the threshold are ambiguous
AMBIGUITY = 0.25
MAX_BRANCHES = 64


def _contrast(sel, totals, margins, floor) -> float:
    """Mean margin of the selected groups minus that of the other populated ones.

    Embedding pushes keyed groups to large margins while the rest keep their
    natural, mostly balanced split, so the contrast singles out the key that
    was really used.
    """
    inside = np.zeros(len(totals), dtype=bool)
    inside[list(sel)] = True
    rest = (~inside) & (totals >= floor)
    other = float(np.mean(margins[rest])) if rest.any() else 0.0
    sel_m = np.sort(margins[inside])
    return float(np.mean(sel_m[: max(1, (len(sel_m) + 1) // 2)])) - other


def _resolve_key(order, totals, margins, cfg: PipelineConfig):
    """Best key for one area and its mean margin.

    Groups whose total is near ``min_group_pixels`` may have crossed it since
    embedding; both readings are tried and the one whose selected groups are
    most decisively split, relative to the unselected groups, wins.
    """
    t = cfg.min_group_pixels
    band = max(2.0, AMBIGUITY * t)
    best_sel, best_score = None, -np.inf
    stack = [(0, ())]
    tried = 0
    while stack and tried < MAX_BRANCHES:
        pos, sel = stack.pop()
        while len(sel) < cfg.N_L and pos < len(order):
            d = int(order[pos])
            pos += 1
            if totals[d] >= t + band:
                sel += (d,)
            elif totals[d] >= t - band:
                stack.append((pos, sel))
                sel += (d,)
        tried += 1
        if len(sel) < cfg.N_L:
            continue
        score = _contrast(sel, totals, margins, t - band)
        if score > best_score:
            best_sel, best_score = sel, score
    return (best_sel, best_score) if best_sel is not None else (None, -1.0)


# public permutations giving each candidate's chance-level score
BASELINE_ORDERS = 32


@functools.lru_cache(maxsize=8)
def _baseline_orders(n_groups: int):
    return tuple(codec.key_order(b"baseline", k, n_groups) for k in range(BASELINE_ORDERS))


def _decode(img, cfg: PipelineConfig, candidates, orders):
    """Pair candidates with payload slots and read the bits.

    A pairing is scored by how much the slot's key beats the candidate's
    chance level (its mean score under unrelated public permutations), so
    areas whose histograms look decisive under any key carry no weight. The
    pairing maximises the total score subject to slots following raster
    order over non-overlapping candidates; a slot may stay empty.
    """
    if not candidates:
        raise InsufficientAreasError(0, cfg.count)
    candidates = in_slot_order(candidates)
    counts = [
        codec.bin_counts(denoise(img[a.slices].astype(np.float64)).smooth, cfg.grouping)
        for a in candidates
    ]
    base = _baseline_orders(cfg.grouping.n_groups)
    n, k = len(candidates), len(orders)
    score = np.full((n, k), -np.inf)
    chosen = {}
    for i, c in enumerate(counts):
        tot = c.sum(axis=1)
        m = np.where(tot > 0, np.abs(c[:, 0] - c[:, 1]) / np.maximum(tot, 1), 0.0)
        chance = np.mean([_resolve_key(o, tot, m, cfg)[1] for o in base])
        for j, order in enumerate(orders):
            sel, sc = _resolve_key(order, tot, m, cfg)
            if sel is not None:
                chosen[i, j] = tuple(sorted(sel))
                score[i, j] = sc - chance
    pairs = _monotone_pairs(candidates, score)
    bits = [0] * (k * cfg.N_L)
    areas: list[FeatureArea | None] = [None] * k
    margins = [0.0] * k
    for i, j in pairs:
        bits[j * cfg.N_L : (j + 1) * cfg.N_L] = [
            codec.extract_bit(int(counts[i][d, 0]), int(counts[i][d, 1])) for d in chosen[i, j]
        ]
        areas[j] = candidates[i]
        margins[j] = float(score[i, j])
    return bits, areas, margins


def _monotone_pairs(candidates, score):
    """Best-scoring ``(candidate, slot)`` pairs, increasing in both, neighbours disjoint.

    Dynamic programme over states "last slot filled, last candidate used";
    skipping a slot costs nothing, so only positive evidence is ever taken.
    """
    n, k = score.shape
    # best[j][i]: best total with slot j filled by candidate i (i is the last used)
    best = np.full((k, n), -np.inf)
    back: dict = {}
    for j in range(k):
        for i in range(n):
            if not score[i, j] > 0:
                continue
            prev_total, prev = 0.0, None
            for jj in range(j):
                for p in range(i):
                    t = best[jj, p]
                    if t > prev_total and not candidates[p].overlaps(candidates[i]):
                        prev_total, prev = t, (jj, p)
            best[j, i] = prev_total + score[i, j]
            back[j, i] = prev
    if not np.isfinite(best).any():
        return []
    state = np.unravel_index(int(np.argmax(best)), best.shape)
    state = (int(state[0]), int(state[1]))
    pairs = []
    while state is not None:
        j, i = state
        pairs.append((i, j))
        state = back[j, i]
    return sorted(pairs)


def normalize_geometry(img, reference_dims) -> np.ndarray:
    img = as_gray(img)
    if reference_dims is None or tuple(img.shape) == tuple(reference_dims):
        return img
    return geometry.resize(img, reference_dims)


def estimate_rotation(img) -> float:
    return geometry.rotation_angle_from_edge(as_gray(img), fill=0)


def _hypotheses(img, angle):
    if abs(angle) < ROTATION_THRESHOLD:
        return [(0.0, img)]
    base = geometry.rotate(img, -angle)
    return [(angle + 90.0 * k, np.rot90(base, -k) if k else base) for k in range(4)]


def extract(img, cfg: PipelineConfig = PipelineConfig(), seeds=None):
    """Blind extraction.

    Undoes scaling (when ``cfg.reference_dims`` is set) and rotation, lists
    candidate areas, and pairs them with the per-area keys so that each key
    gets the candidate whose keyed groups are most decisively split. Returns
    an :class:`Extraction`, or a list of them when *seeds* is given (candidate
    detection is shared across seeds).
    """
    img = normalize_geometry(img, cfg.reference_dims)
    angle = estimate_rotation(img)
    seed_list = [cfg.master_seed] if seeds is None else [bytes(s) for s in seeds]
    keysets = [cfg.orders(s) for s in seed_list]
    best = [None] * len(seed_list)
    for rot, view in _hypotheses(img, angle):
        try:
            cands = _candidate_pool(view, cfg)
        except ValueError:
            continue
        if not cands:
            continue
        for n, keys in enumerate(keysets):
            bits, areas, margins = _decode(view, cfg, cands, keys)
            ex = Extraction(bits, areas, margins, rot)
            if best[n] is None or ex.confidence > best[n].confidence:
                best[n] = ex
    if any(b is None for b in best):
        raise InsufficientAreasError(0, cfg.count)
    return best[0] if seeds is None else best


def extract_bits(img, cfg: PipelineConfig = PipelineConfig()):
    return extract(img, cfg).bits


def random_bits(n: int, seed: int = 0):
    return [int(b) for b in np.random.default_rng(seed).integers(0, 2, n)]


__all__ = [
    "PipelineConfig",
    "EmbedOutcome",
    "Extraction",
    "detect",
    "embed",
    "extract",
    "extract_bits",
    "estimate_rotation",
    "normalize_geometry",
    "random_bits",
]
