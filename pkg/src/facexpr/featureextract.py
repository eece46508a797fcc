"""From the SUSAN edge mask to six feature boxes and the 15-value vector.

Steps: label 8-connected edge segments, drop small ones, split the crop into
upper-left / upper-right / lower regions about its centre, combine segments
until each region holds two, then name them (eyebrow above eye, nose above
mouth) and measure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from itertools import combinations

import numpy as np
from scipy import ndimage

from .imgcore import BBox, BinaryMask, GrayImage
from .morphology import EIGHT
from .susan import SusanParams, edge_mask, susan_edge_strength

REGIONS = ("upper_left", "upper_right", "lower")


class FeatureCountError(ValueError):
    kind = "feature count"

    def __init__(self, region: str, found: int):
        super().__init__(f"region {region} yielded {found} segments, need 2")
        self.region = region
        self.found = found


@dataclass(frozen=True)
class Segment:
    box: BBox
    area: int
    region: str | None = None

    @property
    def center(self) -> tuple[float, float]:
        return self.box.center


Rect = tuple[float, float, float, float]  # x0, x1, y0, y1 in crop-normalized units


@dataclass(frozen=True)
class ExtractParams:
    min_area_P: int | None = None        # absolute P; None -> min_area_fraction of the crop
    min_area_fraction: float = 0.0005
    upper_left_margins: Rect = (0.05, 0.45, 0.15, 0.55)
    upper_right_margins: Rect = (0.55, 0.95, 0.15, 0.55)
    lower_margins: Rect = (0.25, 0.75, 0.50, 0.95)
    edge_threshold: float = 0.0
    despeckle: bool = True
    overlap_axis: str = "y"
    normalize: bool = True

    def __post_init__(self):
        if self.min_area_P is not None and self.min_area_P < 1:
            raise ValueError("min_area_P must be >= 1")
        for name in ("upper_left_margins", "upper_right_margins", "lower_margins"):
            x0, x1, y0, y1 = getattr(self, name)
            if not (0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1):
                raise ValueError(f"{name} must be a rectangle inside [0,1]^2")
        if self.overlap_axis not in ("x", "y"):
            raise ValueError("overlap_axis must be 'x' or 'y'")

    def min_area(self, crop_w: int, crop_h: int) -> int:
        if self.min_area_P is not None:
            return self.min_area_P
        return max(1, round(self.min_area_fraction * crop_w * crop_h))

    def margins(self, region: str) -> Rect:
        return getattr(self, f"{region}_margins")


@dataclass(frozen=True)
class FacialFeatures:
    left_eyebrow: BBox
    left_eye: BBox
    right_eyebrow: BBox
    right_eye: BBox
    nose: BBox
    mouth: BBox

    def boxes(self) -> dict[str, BBox]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


FEATURE_NAMES = ("h1", "w1", "h2", "w2", "h3", "w3", "h4", "w4",
                 "hn", "wn", "hm", "wm", "d1", "d2", "d3")


@dataclass(frozen=True)
class FeatureVector:
    h1: float
    w1: float
    h2: float
    w2: float
    h3: float
    w3: float
    h4: float
    w4: float
    hn: float
    wn: float
    hm: float
    wm: float
    d1: float
    d2: float
    d3: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES], dtype=float)

    @classmethod
    def from_values(cls, values) -> "FeatureVector":
        values = [float(v) for v in values]
        if len(values) != len(FEATURE_NAMES):
            raise ValueError(f"expected 15 values, got {len(values)}")
        return cls(*values)


# -- segments ---------------------------------------------------------------

def label_components(mask: BinaryMask) -> list[Segment]:
    """8-connected components in raster order of their first pixel."""
    labels, count = ndimage.label(mask.bits, structure=EIGHT)
    if count == 0:
        return []
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    segments = []
    for i, sl in enumerate(ndimage.find_objects(labels), start=1):
        ys, xs = sl
        box = BBox(xs.start, ys.start, xs.stop - xs.start, ys.stop - ys.start)
        segments.append(Segment(box, int(areas[i])))
    return segments


def remove_small(segments: list[Segment], P: int) -> list[Segment]:
    if P < 1:
        raise ValueError("P must be >= 1")
    return [s for s in segments if s.area >= P]


def _inside(box: BBox, rect: Rect, crop_w: int, crop_h: int) -> bool:
    x0, x1, y0, y1 = rect
    return (box.x >= x0 * crop_w and box.x + box.w <= x1 * crop_w
            and box.y >= y0 * crop_h and box.y + box.h <= y1 * crop_h)


def partition_regions(segments: list[Segment], crop_w: int, crop_h: int,
                      params: ExtractParams = ExtractParams()):
    """Split segments into (upper_left, upper_right, lower) lists.

    A segment is placed by its box centre (``y < centy`` is upper, then
    ``x < centx`` is left).  It survives only if its whole box lies inside
    that region's margin rectangle.
    """
    centx, centy = crop_w / 2, crop_h / 2
    out = {r: [] for r in REGIONS}
    for seg in segments:
        cx, cy = seg.center
        if cy < centy:
            region = "upper_left" if cx < centx else "upper_right"
        else:
            region = "lower"
        if _inside(seg.box, params.margins(region), crop_w, crop_h):
            out[region].append(replace(seg, region=region))
    return out["upper_left"], out["upper_right"], out["lower"]


def _overlaps(a: BBox, b: BBox, axis: str) -> bool:
    if axis == "x":
        return a.x < b.x + b.w and b.x < a.x + a.w
    return a.y < b.y + b.h and b.y < a.y + a.h


def _combine(group: list[Segment]) -> Segment:
    box = group[0].box
    for s in group[1:]:
        box = box.union(s.box)
    return Segment(box, sum(s.area for s in group), group[0].region)


def _ordered(segments):
    return sorted(segments, key=lambda s: (s.box.y, s.box.x, s.box.h, s.box.w, s.area))


def _merge_overlapping(segments: list[Segment], axis: str) -> list[Segment]:
    """One closure pass: every chain of overlapping segments becomes one."""
    n = len(segments)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in combinations(range(n), 2):
        if _overlaps(segments[i].box, segments[j].box, axis):
            parent[find(i)] = find(j)
    groups: dict[int, list[Segment]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(segments[i])
    return [_combine(g) for g in groups.values()]


def _pair_key(a: Segment, b: Segment):
    (ax, ay), (bx, by) = a.center, b.center
    first = min((ax, ay), (bx, by))
    return (math.hypot(ax - bx, ay - by), a.area + b.area, first)


def merge_to_two(segments: list[Segment], axis: str = "y") -> list[Segment]:
    """Combine segments until at most two remain.

    Overlapping segments (projections on ``axis`` intersect) are merged first,
    as a transitive closure; if more than two are still left, the closest pair
    of centres is merged and the cycle repeats.  Ties go to the pair with the
    smaller combined area, then to the leftmost-topmost centre.
    """
    segs = _ordered(segments)
    while len(segs) > 2:
        segs = _ordered(_merge_overlapping(segs, axis))
        if len(segs) <= 2:
            break
        i, j = min(combinations(range(len(segs)), 2),
                   key=lambda p: _pair_key(segs[p[0]], segs[p[1]]))
        merged = _combine([segs[i], segs[j]])
        segs = _ordered([s for k, s in enumerate(segs) if k not in (i, j)] + [merged])
    return segs


def _upper_then_lower(pair: list[Segment]) -> tuple[Segment, Segment]:
    # smaller centre-y first; equal heights of centre -> flatter box first
    a, b = sorted(pair, key=lambda s: (s.center[1], s.box.h))
    return a, b


def assign_features(upper_left: list[Segment], upper_right: list[Segment],
                    lower: list[Segment]) -> FacialFeatures:
    for name, segs in zip(REGIONS, (upper_left, upper_right, lower)):
        if len(segs) != 2:
            raise FeatureCountError(name, len(segs))
    lb, le = _upper_then_lower(upper_left)
    rb, re_ = _upper_then_lower(upper_right)
    nose, mouth = _upper_then_lower(lower)
    return FacialFeatures(lb.box, le.box, rb.box, re_.box, nose.box, mouth.box)


def _dist(a: BBox, b: BBox) -> float:
    (ax, ay), (bx, by) = a.center, b.center
    return math.hypot(ax - bx, ay - by)


def feature_vector(features: FacialFeatures, crop_w: int | None = None,
                   crop_h: int | None = None, normalize: bool = True) -> FeatureVector:
    """Heights, widths and centre distances in the fixed 15-value order.

    With ``normalize`` every entry is divided by the crop diagonal, which
    must then be given.
    """
    f = features
    raw = [f.left_eyebrow.h, f.left_eyebrow.w, f.left_eye.h, f.left_eye.w,
           f.right_eyebrow.h, f.right_eyebrow.w, f.right_eye.h, f.right_eye.w,
           f.nose.h, f.nose.w, f.mouth.h, f.mouth.w,
           _dist(f.left_eyebrow, f.left_eye), _dist(f.right_eyebrow, f.right_eye),
           _dist(f.nose, f.mouth)]
    if normalize:
        if crop_w is None or crop_h is None:
            raise ValueError("crop size is needed to normalize")
        diag = math.hypot(crop_w, crop_h)
        raw = [v / diag for v in raw]
    return FeatureVector.from_values(raw)


@dataclass(frozen=True)
class Extraction:
    features: FacialFeatures
    vector: FeatureVector
    edges: BinaryMask
    candidates: tuple[list[Segment], list[Segment], list[Segment]]


def extract_detailed(face_crop: GrayImage, susan_params: SusanParams = SusanParams(),
                     extract_params: ExtractParams = ExtractParams()) -> Extraction:
    p = extract_params
    w, h = face_crop.width, face_crop.height
    edges = edge_mask(susan_edge_strength(face_crop, susan_params), p.edge_threshold, p.despeckle)
    segments = remove_small(label_components(edges), p.min_area(w, h))
    regions = partition_regions(segments, w, h, p)
    merged = [merge_to_two(r, p.overlap_axis) for r in regions]
    features = assign_features(*merged)
    vector = feature_vector(features, w, h, normalize=p.normalize)
    return Extraction(features, vector, edges, regions)


def extract(face_crop: GrayImage, susan_params: SusanParams = SusanParams(),
            extract_params: ExtractParams = ExtractParams()) -> tuple[FacialFeatures, FeatureVector]:
    result = extract_detailed(face_crop, susan_params, extract_params)
    return result.features, result.vector
