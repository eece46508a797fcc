"""Binary morphology on a toy mask, then finding the face in a full image."""
import numpy as np

from facexpr.facelocalize import (LocalizeParams, binarize, crop_and_enlarge, localize_face,
                                  otsu_threshold)
from facexpr.imgcore import BinaryMask
from facexpr.morphology import clear_border, dilate, disk_se, erode, reconstruct
from facexpr.preprocess import clahe
from facexpr.synthetic import render_face


def show(mask):
    for row in mask.bits:
        print("".join("#" if b else "." for b in row))
    print()


bits = np.zeros((9, 12), dtype=bool)
bits[2:7, 2:6] = True
bits[4, 6:10] = True        # a thin bridge
bits[0:2, 10:12] = True     # touches the border
mask = BinaryMask(bits)
se = disk_se(1)
print(len(se), "offsets in the radius-1 disk")

show(mask)
show(erode(mask, se))               # the bridge disappears
show(dilate(erode(mask, se), se))   # opening: the bridge stays gone, the block loses its corners
show(clear_border(mask))

# reconstruction keeps every component touched by the marker
marker = np.zeros_like(bits)
marker[3, 3] = True
show(reconstruct(BinaryMask(marker), mask))

# face localization: enhance, threshold, keep the largest blob
sample = render_face("surprise", seed=5, offset=(10, -6))
enhanced = clahe(sample.image)
print("otsu threshold:", otsu_threshold(enhanced))
print("dark pixels:", binarize(enhanced).count())

box = localize_face(sample.image)
print("found:", box)
print("drawn:", sample.face_box)

crop = crop_and_enlarge(enhanced, box, LocalizeParams().resize_scale)
print("crop size:", crop.width, "x", crop.height)
