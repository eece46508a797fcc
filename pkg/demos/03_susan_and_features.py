"""Edge strength, candidate segments and the 15 geometric features."""
import numpy as np

from facexpr.featureextract import FEATURE_NAMES
from facexpr.imgcore import GrayImage
from facexpr.pipeline import process_image
from facexpr.susan import SusanParams, edge_mask, susan_edge_strength, usan_area
from facexpr.synthetic import render_face

# a vertical step: the response sits on the two columns either side of it
step = np.zeros((12, 16), dtype=np.uint8)
step[:, 8:] = 200
s = susan_edge_strength(GrayImage(step))
print("g =", s.g)
print(np.round(s.strength[6], 1))

# the USAN of a pixel on a flat patch is the whole mask minus the nucleus
print(usan_area(GrayImage(np.full((9, 9), 50)), (4, 4)))
print(len(SusanParams().neighbours()), "neighbours")

print(edge_mask(s, 0.0).count(), "edge pixels")

face = render_face("angry", seed=2)
result = process_image(face.image)
ex = result.extraction
print("edge pixels in crop:", ex.edges.count())
for region, segs in zip(("upper left", "upper right", "lower"), ex.candidates):
    print(region, len(segs), "candidates")

for name, box in result.features.boxes().items():
    x, y, w, h = result.to_image_box(box)
    t = face.truth[name]
    print(f"{name:14s} found ({x:5.1f},{y:5.1f},{w:4.1f},{h:4.1f})  drawn ({t.x},{t.y},{t.w},{t.h})")

for name, value in zip(FEATURE_NAMES, result.vector.to_array()):
    print(f"{name:3s} {value:.4f}")
