"""SUSAN edge strength over a circular mask.

For every nucleus pixel the USAN area is the (soft) count of mask pixels
whose brightness is similar to the nucleus.  Pixels whose USAN falls below
the geometric threshold ``g`` respond with ``g - usan``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imgcore import BinaryMask, GrayImage
from .morphology import disk_offsets, shift


@dataclass(frozen=True)
class SusanParams:
    brightness_t: float = 27.0
    geometric_fraction: float = 0.75
    mask_radius: float = 3.4     # 37-pixel mask
    hard: bool = False           # |dI| <= t comparator instead of exp(-(dI/t)^6)

    def __post_init__(self):
        if self.brightness_t < 1:
            raise ValueError("brightness_t must be >= 1")
        if not 0 < self.geometric_fraction < 1:
            raise ValueError("geometric_fraction must lie in (0, 1)")
        if self.mask_radius < 1:
            raise ValueError("mask_radius must be >= 1")

    def neighbours(self) -> list[tuple[int, int]]:
        return [o for o in disk_offsets(self.mask_radius) if o != (0, 0)]

    @property
    def g(self) -> float:
        """Geometric threshold for a full (unclipped) mask."""
        return self.geometric_fraction * len(self.neighbours())


@dataclass(frozen=True, eq=False)
class EdgeStrengthImage:
    strength: np.ndarray  # (height, width) float, each value in [0, g]
    g: float

    @property
    def width(self) -> int:
        return self.strength.shape[1]

    @property
    def height(self) -> int:
        return self.strength.shape[0]


def similarity(diff, params: SusanParams):
    diff = np.asarray(diff, dtype=float)
    if params.hard:
        return (np.abs(diff) <= params.brightness_t).astype(float)
    return np.exp(-(diff / params.brightness_t) ** 6)


def usan_area(image: GrayImage, center: tuple[int, int], params: SusanParams = SusanParams()) -> float:
    x0, y0 = center
    if not (0 <= x0 < image.width and 0 <= y0 < image.height):
        raise ValueError(f"center {center} outside the image")
    px = image.pixels.astype(float)
    nucleus = px[y0, x0]
    total = 0.0
    for dx, dy in params.neighbours():
        x, y = x0 + dx, y0 + dy
        if 0 <= x < image.width and 0 <= y < image.height:
            total += float(similarity(px[y, x] - nucleus, params))
    return total


def usan_map(image: GrayImage, params: SusanParams = SusanParams()) -> tuple[np.ndarray, np.ndarray]:
    """USAN area and in-bounds neighbour count for every pixel."""
    h, w = image.height, image.width
    offsets = params.neighbours()
    r = max(max(abs(dx), abs(dy)) for dx, dy in offsets)
    px = image.pixels.astype(np.intp)
    # intensity differences are integers in [-255, 255], so the similarity is tabulated;
    # outside pixels read 511, which always lands in the table's zero tail
    table = np.concatenate([similarity(np.arange(-255, 256), params), np.zeros(256)])
    padded = np.pad(px, r, constant_values=511)
    usan = np.zeros((h, w))
    base = 255 - px
    for dx, dy in offsets:
        usan += table[padded[r + dy:r + dy + h, r + dx:r + dx + w] + base]
    # the in-bounds part of the mask, i.e. the clipped n_max
    fp = np.zeros((2 * r + 1, 2 * r + 1))
    for dx, dy in offsets:
        fp[dy + r, dx + r] = 1
    count = ndimage.correlate(np.ones((h, w)), fp, mode="constant")
    return usan, count


def susan_edge_strength(image: GrayImage, params: SusanParams = SusanParams()) -> EdgeStrengthImage:
    usan, count = usan_map(image, params)
    g = params.geometric_fraction * count
    strength = np.where(usan < g, g - usan, 0.0)
    strength.setflags(write=False)
    return EdgeStrengthImage(strength, params.g)


def median3(bits: np.ndarray) -> np.ndarray:
    """3x3 binary median (majority of 9); outside pixels count as false."""
    votes = np.zeros(bits.shape, np.int8)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            votes += shift(bits, dx, dy)
    return votes >= 5


def edge_mask(strength: EdgeStrengthImage, threshold: float = 0.0, despeckle: bool = True) -> BinaryMask:
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    bits = strength.strength > threshold
    if despeckle:
        bits = median3(bits)
    return BinaryMask(bits)
