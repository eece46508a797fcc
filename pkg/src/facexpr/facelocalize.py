"""Segment the face region and produce the enlarged face crop."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .imgcore import BBox, BinaryMask, GrayImage, crop, resize_bilinear
from .morphology import (EIGHT, clear_border, dilate, disk_se, erode,
                         reconstruct, regional_maxima)
from .preprocess import ClaheParams, clahe


class NoFaceError(ValueError):
    kind = "no face found"


@dataclass(frozen=True)
class LocalizeParams:
    threshold: str | int = "otsu"   # "otsu" or a fixed level 0-255
    se_radius: int = 3
    resize_scale: float = 2.0
    polarity: str = "dark"          # which side of the threshold is the face
    marker: str = "opening"         # or "regional-max"
    clahe: ClaheParams | None = field(default_factory=ClaheParams)

    def __post_init__(self):
        if self.se_radius < 1:
            raise ValueError("se_radius must be >= 1")
        if not self.resize_scale >= 1:
            raise ValueError("resize_scale must be >= 1")
        if self.polarity not in ("dark", "light"):
            raise ValueError(f"unknown polarity {self.polarity!r}")
        if self.marker not in ("opening", "regional-max"):
            raise ValueError(f"unknown marker source {self.marker!r}")
        if self.threshold != "otsu" and not 0 <= int(self.threshold) <= 255:
            raise ValueError(f"threshold must be 'otsu' or 0..255, got {self.threshold!r}")


def otsu_threshold(image: GrayImage) -> int:
    """Level k maximizing between-class variance of {v <= k} vs {v > k}.

    Only levels that actually split the pixels are considered; ties go to the
    lowest level.  A single-valued image returns that value.
    """
    hist = np.bincount(image.pixels.ravel(), minlength=256).tolist()
    present = [v for v in range(256) if hist[v]]
    lo, hi = present[0], present[-1]
    if lo == hi:
        return lo
    total = sum(hist)
    total_sum = sum(v * c for v, c in enumerate(hist))
    best_k, best_num, best_den = lo, -1, 1
    n0 = s0 = 0
    # exact integer arithmetic: sigma_b ~ (N*S0 - n0*S)^2 / (n0*n1)
    for k in range(hi):
        n0 += hist[k]
        s0 += k * hist[k]
        if k < lo:
            continue
        num = (total * s0 - n0 * total_sum) ** 2
        den = n0 * (total - n0)
        if num * best_den > best_num * den:
            best_k, best_num, best_den = k, num, den
    return best_k


def binarize(image: GrayImage, threshold: str | int = "otsu", polarity: str = "dark") -> BinaryMask:
    level = otsu_threshold(image) if threshold == "otsu" else int(threshold)
    if polarity == "dark":
        return BinaryMask(image.pixels <= level)
    return BinaryMask(image.pixels > level)


def largest_component_box(mask: BinaryMask) -> BBox | None:
    labels, count = ndimage.label(mask.bits, structure=EIGHT)
    if count == 0:
        return None
    areas = np.bincount(labels.ravel())[1:]
    best = int(np.argmax(areas))  # first (raster-order) label wins ties
    sl = ndimage.find_objects(labels)[best]
    return BBox(sl[1].start, sl[0].start, sl[1].stop - sl[1].start, sl[0].stop - sl[0].start)


def localize_enhanced(enhanced: GrayImage, params: LocalizeParams = LocalizeParams()) -> BBox:
    """Face box of an already contrast-enhanced image."""
    diameter = 2 * params.se_radius + 1
    if enhanced.width <= 2 * diameter or enhanced.height <= 2 * diameter:
        raise ValueError(
            f"{enhanced.width}x{enhanced.height} image is too small for se_radius {params.se_radius}")
    fg = binarize(enhanced, params.threshold, params.polarity)
    n_fg = fg.count()
    if n_fg == 0 or n_fg == fg.bits.size:
        raise NoFaceError("no foreground/background split in the image")

    if params.marker == "regional-max":
        marker = BinaryMask(regional_maxima(enhanced).bits & fg.bits)
    else:
        se = disk_se(params.se_radius)
        marker = dilate(erode(fg, se), se)
    if marker.count() == 0:
        marker = fg
    cleaned = reconstruct(marker, fg)
    interior = clear_border(cleaned)
    if interior.count() == 0:
        interior = cleaned
    box = largest_component_box(interior)
    if box is None:
        raise NoFaceError("foreground vanished during clean-up")
    return box


def localize_face(image: GrayImage, params: LocalizeParams = LocalizeParams()) -> BBox:
    enhanced = clahe(image, params.clahe) if params.clahe is not None else image
    return localize_enhanced(enhanced, params)


def enlarged_size(box: BBox, scale: float) -> tuple[int, int]:
    return (max(1, int(np.floor(box.w * scale + 0.5))),
            max(1, int(np.floor(box.h * scale + 0.5))))


def crop_and_enlarge(image: GrayImage, box: BBox, scale: float) -> GrayImage:
    if not scale >= 1:
        raise ValueError("scale must be >= 1")
    face = crop(image, box)
    w, h = enlarged_size(box, scale)
    return resize_bilinear(face, w, h)
