"""Binary and grayscale morphology with disk structuring elements.

Everything uses 8-connectivity.  Pixels outside the raster read as
background (false) for both dilation and erosion.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imgcore import BinaryMask, GrayImage

EIGHT = np.ones((3, 3), bool)


@dataclass(frozen=True)
class StructuringElement:
    offsets: frozenset  # of (dx, dy)

    def __post_init__(self):
        object.__setattr__(self, "offsets", frozenset((int(dx), int(dy)) for dx, dy in self.offsets))

    def __len__(self):
        return len(self.offsets)

    def reflected(self) -> "StructuringElement":
        return StructuringElement((-dx, -dy) for dx, dy in self.offsets)


def disk_offsets(radius: float) -> list[tuple[int, int]]:
    """Integer offsets with dx^2 + dy^2 <= radius^2, in raster order."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    r = int(np.floor(radius))
    r2 = radius * radius
    return [(dx, dy) for dy in range(-r, r + 1) for dx in range(-r, r + 1)
            if dx * dx + dy * dy <= r2]


def disk_se(radius: float) -> StructuringElement:
    return StructuringElement(disk_offsets(radius))


SQUARE_3 = StructuringElement((dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1))


def shift(bits: np.ndarray, dx: int, dy: int, fill=False) -> np.ndarray:
    """out[y, x] = bits[y - dy, x - dx], with ``fill`` outside the raster."""
    h, w = bits.shape
    out = np.full_like(bits, fill)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    ys, yd = (slice(0, h - dy), slice(dy, h)) if dy >= 0 else (slice(-dy, h), slice(0, h + dy))
    xs, xd = (slice(0, w - dx), slice(dx, w)) if dx >= 0 else (slice(-dx, w), slice(0, w + dx))
    out[yd, xd] = bits[ys, xs]
    return out


def dilate(mask: BinaryMask, se: StructuringElement) -> BinaryMask:
    out = np.zeros_like(mask.bits)
    for dx, dy in se.offsets:
        out |= shift(mask.bits, dx, dy)
    return BinaryMask(out)


def erode(mask: BinaryMask, se: StructuringElement) -> BinaryMask:
    out = np.ones_like(mask.bits)
    for dx, dy in se.offsets:
        out &= shift(mask.bits, -dx, -dy)
    return BinaryMask(out)


def complement(mask: BinaryMask) -> BinaryMask:
    return BinaryMask(~mask.bits)


def reconstruct(marker: BinaryMask, mask: BinaryMask) -> BinaryMask:
    """Reconstruction by dilation: the components of ``mask`` that ``marker`` touches.

    This is the fixpoint of ``r <- dilate(r, 3x3) & mask``, obtained in one
    pass by labelling the 8-connected components of the mask.
    """
    seed = marker.bits & mask.bits
    labels, _ = ndimage.label(mask.bits, structure=EIGHT)
    hit = np.unique(labels[seed])
    return BinaryMask(np.isin(labels, hit[hit > 0]))


def _dilate_gray(values: np.ndarray, floor) -> np.ndarray:
    out = values.copy()
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx or dy:
                np.maximum(out, shift(values, dx, dy, fill=floor), out=out)
    return out


def reconstruct_gray(marker: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Grayscale reconstruction by dilation, iterated to the exact fixpoint."""
    mask = np.asarray(mask)
    floor = min(int(marker.min()), int(mask.min()))
    current = np.minimum(marker, mask)
    while True:
        nxt = np.minimum(_dilate_gray(current, floor), mask)
        if np.array_equal(nxt, current):
            return current
        current = nxt


def regional_maxima(image: GrayImage) -> BinaryMask:
    values = image.pixels.astype(np.int16)
    recon = reconstruct_gray(values - 1, values)
    return BinaryMask(values - recon > 0)


def border_pixels(width: int, height: int) -> np.ndarray:
    edge = np.zeros((height, width), bool)
    edge[0, :] = edge[-1, :] = True
    edge[:, 0] = edge[:, -1] = True
    return edge


def clear_border(mask: BinaryMask) -> BinaryMask:
    touching = reconstruct(BinaryMask(border_pixels(mask.width, mask.height)), mask)
    return BinaryMask(mask.bits & ~touching.bits)
