"""Contrast-limited adaptive histogram equalization."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imgcore import GrayImage, round_half_up


@dataclass(frozen=True)
class ClaheParams:
    tiles_x: int = 8
    tiles_y: int = 8
    clip_limit: float = 2.0  # multiple of the mean bin height; math.inf disables clipping

    def __post_init__(self):
        if self.tiles_x < 1 or self.tiles_y < 1:
            raise ValueError("tile grid must be at least 1x1")
        if not self.clip_limit >= 1.0:
            raise ValueError("clip_limit must be >= 1.0")


def tile_edges(n: int, tiles: int) -> np.ndarray:
    """Integer tile boundaries splitting ``n`` pixels into ``tiles`` parts."""
    return (np.arange(tiles + 1) * n) // tiles


def clip_histogram(hist: np.ndarray, clip_limit: float) -> tuple[np.ndarray, np.ndarray]:
    """Clip a 256-bin histogram and spread the excess in one uniform pass.

    Returns ``(clipped, redistributed)``.  Bins are clipped at
    ``ceil(clip_limit * total / 256)``.  The excess is shared evenly, the
    remainder handed out one count at a time on an evenly strided set of bins,
    so no bin gains more than ``excess // 256 + 1``.
    """
    hist = np.asarray(hist, dtype=np.int64)
    if math.isinf(clip_limit):
        return hist.copy(), hist.copy()
    limit = max(1, math.ceil(clip_limit * hist.sum() / 256))
    clipped = np.minimum(hist, limit)
    excess = int(hist.sum() - clipped.sum())
    out = clipped + excess // 256
    residual = excess % 256
    if residual:
        out[(np.arange(residual) * 256) // residual] += 1
    return clipped, out


def tile_mapping(values: np.ndarray, clip_limit: float) -> np.ndarray:
    """256-entry float transfer function ``255 * cdf / N`` for one tile.

    The CDF is taken over the clipped, redistributed histogram, so the slope
    of the mapping is bounded by the clip limit.  A single-valued tile maps
    every level to itself.
    """
    hist = np.bincount(values.ravel(), minlength=256)
    present = np.flatnonzero(hist)
    if present[0] == present[-1]:
        return np.arange(256, dtype=float)
    _, redistributed = clip_histogram(hist, clip_limit)
    cdf = np.cumsum(redistributed)
    return 255.0 * cdf / cdf[-1]


def _interp_axis(n: int, edges: np.ndarray):
    """Neighbouring tile indices and weight of the second one, per pixel."""
    centers = (edges[:-1] + edges[1:] - 1) / 2.0
    tiles = len(centers)
    pos = np.arange(n, dtype=float)
    i0 = np.clip(np.searchsorted(centers, pos, side="right") - 1, 0, tiles - 1)
    i1 = np.minimum(i0 + 1, tiles - 1)
    w = np.zeros(n)
    inner = i1 > i0
    w[inner] = (pos[inner] - centers[i0[inner]]) / (centers[i1[inner]] - centers[i0[inner]])
    return i0, i1, np.clip(w, 0.0, 1.0)


def clahe(image: GrayImage, params: ClaheParams = ClaheParams()) -> GrayImage:
    h, w = image.height, image.width
    if params.tiles_x > w or params.tiles_y > h:
        raise ValueError(
            f"{params.tiles_x}x{params.tiles_y} tile grid does not fit a {w}x{h} image")
    px = image.pixels
    ye = tile_edges(h, params.tiles_y)
    xe = tile_edges(w, params.tiles_x)
    luts = np.empty((params.tiles_y, params.tiles_x, 256))
    for ty in range(params.tiles_y):
        for tx in range(params.tiles_x):
            tile = px[ye[ty]:ye[ty + 1], xe[tx]:xe[tx + 1]]
            luts[ty, tx] = tile_mapping(tile, params.clip_limit)

    r0, r1, wy = _interp_axis(h, ye)
    c0, c1, wx = _interp_axis(w, xe)
    R0, C0 = np.meshgrid(r0, c0, indexing="ij")
    R1, C1 = np.meshgrid(r1, c1, indexing="ij")
    WY, WX = np.meshgrid(wy, wx, indexing="ij")
    v = px.astype(np.intp)
    out = ((1 - WY) * ((1 - WX) * luts[R0, C0, v] + WX * luts[R0, C1, v])
           + WY * ((1 - WX) * luts[R1, C0, v] + WX * luts[R1, C1, v]))
    return GrayImage(np.clip(round_half_up(out), 0, 255))
