"""Schematic synthetic faces for testing without external data.

A face is a mid-gray oval on a light background carrying six dark elliptical
blobs (eyebrows, eyes, nose, mouth).  Each expression archetype moves or
resizes some blobs, e.g. ``surprise`` raises the eyebrows and opens the
mouth, ``happy`` widens the mouth.  Ground-truth boxes are the exact pixel
bounds of each rendered blob.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgcore import BBox, GrayImage
from .mlp import LABELS

FEATURES = ("left_eyebrow", "left_eye", "right_eyebrow", "right_eye", "nose", "mouth")

# (centre_x, centre_y, width, height) as fractions of the face box
_NEUTRAL = {
    "brow": (0.30, 0.29, 0.22, 0.055),
    "eye": (0.30, 0.40, 0.18, 0.075),
    "nose": (0.50, 0.60, 0.10, 0.10),
    "mouth": (0.50, 0.78, 0.34, 0.075),
}

ARCHETYPES = {
    "neutral": {},
    "surprise": {"brow": (0.30, 0.235, 0.22, 0.055), "eye": (0.30, 0.40, 0.18, 0.10),
                 "mouth": (0.50, 0.79, 0.22, 0.13)},
    "happy": {"eye": (0.30, 0.40, 0.19, 0.06), "mouth": (0.50, 0.78, 0.42, 0.10)},
    "sad": {"brow": (0.30, 0.30, 0.19, 0.055), "eye": (0.30, 0.405, 0.17, 0.065),
            "mouth": (0.50, 0.79, 0.26, 0.06)},
    "angry": {"brow": (0.30, 0.32, 0.24, 0.065), "eye": (0.30, 0.425, 0.18, 0.06),
              "mouth": (0.50, 0.78, 0.27, 0.055)},
    "disgust": {"brow": (0.30, 0.31, 0.22, 0.06), "eye": (0.30, 0.415, 0.18, 0.065),
                "nose": (0.50, 0.595, 0.14, 0.12), "mouth": (0.50, 0.785, 0.30, 0.08)},
    "fear": {"brow": (0.30, 0.26, 0.20, 0.055), "eye": (0.30, 0.40, 0.19, 0.095),
             "mouth": (0.50, 0.78, 0.38, 0.10)},
}
assert set(ARCHETYPES) == set(LABELS)

MIN_GAP = 5.0  # pixels between an eyebrow and the eye below it


@dataclass(frozen=True)
class SyntheticFace:
    image: GrayImage
    label: str
    face_box: BBox
    truth: dict  # feature name -> BBox


def _ellipse(shape, cx, cy, rx, ry) -> np.ndarray:
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]]
    return ((xx + 0.5 - cx) / rx) ** 2 + ((yy + 0.5 - cy) / ry) ** 2 <= 1.0


def _bounds(mask: np.ndarray) -> BBox:
    ys, xs = np.nonzero(mask)
    return BBox(int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1),
                int(ys.max() - ys.min() + 1))


def render_face(label: str, seed: int = 0, offset: tuple[int, int] = (0, 0),
                size: tuple[int, int] = (256, 256), jitter: float = 1.0,
                noise: float = 2.0, face_scale: float = 1.0) -> SyntheticFace:
    """Draw one face of the given archetype.

    ``jitter`` scales the per-face random variation of geometry and
    intensities; ``jitter=0`` draws the archetype exactly (noise aside).
    ``face_scale`` enlarges the whole face (pair it with a bigger ``size``).
    """
    if label not in ARCHETYPES:
        raise ValueError(f"unknown archetype {label!r}")
    rng = np.random.default_rng(seed)
    width, height = size
    shape = (height, width)
    j = jitter

    scale = face_scale * (1.0 + j * rng.uniform(-0.08, 0.08))
    fw, fh = 150 * scale, 195 * scale
    cx = width / 2 + offset[0] + j * face_scale * rng.uniform(-4, 4)
    cy = height / 2 + offset[1] + j * face_scale * rng.uniform(-4, 4)
    bg = 235 + j * rng.uniform(-8, 8)
    skin = 150 + j * rng.uniform(-10, 10)
    dark = 50 + j * rng.uniform(-10, 10)

    img = np.full(shape, bg)
    oval = _ellipse(shape, cx, cy, fw / 2, fh / 2)
    img[oval] = skin
    fx0, fy0 = cx - fw / 2, cy - fh / 2

    layout = dict(_NEUTRAL, **ARCHETYPES[label])
    truth = {}
    placed = {}
    for name in FEATURES:
        part = name.split("_")[-1].replace("eyebrow", "brow")
        u, v, du, dv = layout[part]
        if name.startswith("right"):
            u = 1.0 - u
        du *= 1 + j * rng.normal(0, 0.03)
        dv *= 1 + j * rng.normal(0, 0.03)
        u += j * rng.normal(0, 0.004)
        v += j * rng.normal(0, 0.004)
        placed[name] = [fx0 + u * fw, fy0 + v * fh, du * fw / 2, dv * fh / 2]
    for side in ("left", "right"):
        brow, eye = placed[f"{side}_eyebrow"], placed[f"{side}_eye"]
        gap = (eye[1] - eye[3]) - (brow[1] + brow[3])
        if gap < face_scale * MIN_GAP:
            brow[1] -= face_scale * MIN_GAP - gap
    for name in FEATURES:
        blob = _ellipse(shape, *placed[name])
        img[blob] = dark + j * rng.uniform(-5, 5)
        truth[name] = _bounds(blob)

    if noise > 0:
        img = img + rng.normal(0, noise, shape)
    pixels = np.clip(np.floor(img + 0.5), 0, 255)
    return SyntheticFace(GrayImage(pixels), label, _bounds(oval), truth)


def make_dataset(count: int, seed: int = 0, **kwargs) -> list[SyntheticFace]:
    """``count`` faces cycling through the archetypes in label order."""
    return [render_face(LABELS[i % len(LABELS)], seed=seed * 1_000_003 + i, **kwargs)
            for i in range(count)]


def jaffe_name(face_index: int, label: str, subject: str = "SY") -> str:
    """File name in the ``SUBJ.CCn.NN.pgm`` style used by the JAFFE corpus."""
    code = {"surprise": "SU", "neutral": "NE", "sad": "SA", "disgust": "DI",
            "fear": "FE", "happy": "HA", "angry": "AN"}[label]
    return f"{subject}.{code}{face_index % 9 + 1}.{face_index:03d}.pgm"
