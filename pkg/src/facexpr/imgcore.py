"""Raster types and PGM I/O shared by every pipeline stage.

Images are stored as numpy arrays indexed ``[row, column]`` (``[y, x]``);
``width``/``height`` follow the usual image convention.  Arrays held by
:class:`GrayImage` and :class:`BinaryMask` are read-only copies, so values
can be shared freely.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PgmDecodeError(ValueError):
    """Malformed PGM stream; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class PgmHeaderError(PgmDecodeError):
    pass


class PgmTruncatedError(PgmDecodeError):
    pass


class PgmMaxvalError(PgmDecodeError):
    pass


class BoxOutOfBoundsError(ValueError):
    def __init__(self, box: "BBox", width: int, height: int):
        super().__init__(f"box {box} does not fit in a {width}x{height} image")
        self.box = box


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster; ``pixels`` has shape ``(height, width)``."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D raster, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("pixel values must lie in [0, 255]")
        object.__setattr__(self, "pixels", _frozen(arr, np.uint8))

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "GrayImage":
        values = np.asarray(values)
        if values.size != width * height:
            raise ValueError(f"{values.size} samples for a {width}x{height} image")
        return cls(values.reshape(height, width))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean raster; ``bits`` has shape ``(height, width)``."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D mask, got shape {arr.shape}")
        object.__setattr__(self, "bits", _frozen(arr, bool))

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __repr__(self):
        return f"BinaryMask({self.width}x{self.height}, {self.count()} set)"


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: top-left corner ``(x, y)``, extent ``w`` x ``h``."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box extent must be positive, got {self.w}x{self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2, self.y + self.h / 2)

    @property
    def area(self) -> int:
        return self.w * self.h

    def fits(self, width: int, height: int) -> bool:
        return (self.x >= 0 and self.y >= 0
                and self.x + self.w <= width and self.y + self.h <= height)

    def union(self, other: "BBox") -> "BBox":
        x0, y0 = min(self.x, other.x), min(self.y, other.y)
        x1 = max(self.x + self.w, other.x + other.w)
        y1 = max(self.y + self.h, other.y + other.h)
        return BBox(x0, y0, x1 - x0, y1 - y0)

    def translated(self, dx: int, dy: int) -> "BBox":
        return BBox(self.x + dx, self.y + dy, self.w, self.h)


# -- PGM ------------------------------------------------------------------

_WS = b" \t\n\r\x0b\x0c"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    """Return (token, token_start, position after token), skipping comments."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c in _WS:
            pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos:pos + 1] not in _WS and data[pos:pos + 1] != b"#":
        pos += 1
    return data[start:pos], start, pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int, int]:
    tok, start, pos = _next_token(data, pos)
    if not tok:
        raise PgmTruncatedError(f"missing {what}", start)
    if not tok.isdigit():
        raise PgmHeaderError(f"bad {what} {tok!r}", start)
    return int(tok), start, pos


def decode_pgm(data: bytes) -> GrayImage:
    """Parse a binary (P5) or ASCII (P2) PGM stream with maxval <= 255."""
    magic, start, pos = _next_token(data, 0)
    if magic not in (b"P5", b"P2"):
        raise PgmHeaderError(f"unsupported magic {magic!r}", start)
    width, width_at, pos = _header_int(data, pos, "width")
    height, _, pos = _header_int(data, pos, "height")
    maxval, maxval_at, pos = _header_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PgmHeaderError(f"empty raster {width}x{height}", width_at)
    if maxval < 1 or maxval > 255:
        raise PgmMaxvalError(f"maxval {maxval} outside 1..255", maxval_at)
    count = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the payload
        if pos >= len(data):
            raise PgmTruncatedError("missing payload", pos)
        pos += 1
        payload = data[pos:pos + count]
        if len(payload) < count:
            raise PgmTruncatedError(
                f"payload has {len(payload)} of {count} samples", pos + len(payload))
        values = np.frombuffer(payload, dtype=np.uint8)
        bad = np.flatnonzero(values > maxval)
        if bad.size:
            raise PgmHeaderError("sample exceeds maxval", pos + int(bad[0]))
    else:
        values = np.empty(count, dtype=np.uint8)
        for i in range(count):
            tok, start, pos = _next_token(data, pos)
            if not tok:
                raise PgmTruncatedError(f"payload has {i} of {count} samples", start)
            if not tok.isdigit() or int(tok) > maxval:
                raise PgmHeaderError(f"bad sample {tok!r}", start)
            values[i] = int(tok)
    return GrayImage(values.reshape(height, width))


def encode_pgm(image: GrayImage) -> bytes:
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def read_pgm(path) -> GrayImage:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def write_pgm(path, image: GrayImage) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(image))


# -- geometry ---------------------------------------------------------------

def crop(image: GrayImage, box: BBox) -> GrayImage:
    if not box.fits(image.width, image.height):
        raise BoxOutOfBoundsError(box, image.width, image.height)
    return GrayImage(image.pixels[box.y:box.y + box.h, box.x:box.x + box.w])


def round_half_up(values):
    return np.floor(np.asarray(values, dtype=float) + 0.5)


def _axis_coords(n_out: int, n_in: int):
    # corner-aligned: first and last output samples hit first and last inputs
    if n_out == 1 or n_in == 1:
        pos = np.zeros(n_out)
    else:
        pos = np.arange(n_out) * ((n_in - 1) / (n_out - 1))
    lo = np.minimum(np.floor(pos).astype(int), n_in - 1)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, pos - lo


def resize_bilinear(image: GrayImage, new_w: int, new_h: int) -> GrayImage:
    if new_w < 1 or new_h < 1:
        raise ValueError(f"target size must be positive, got {new_w}x{new_h}")
    src = image.pixels.astype(float)
    x0, x1, fx = _axis_coords(new_w, image.width)
    y0, y1, fy = _axis_coords(new_h, image.height)
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    out = top * (1 - fy[:, None]) + bottom * fy[:, None]
    return GrayImage(np.clip(round_half_up(out), 0, 255))
