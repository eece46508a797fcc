"""Reading and writing PGM files, then local contrast enhancement.

Run from anywhere; outputs land in ./demo_out.
"""
from pathlib import Path

import numpy as np

from facexpr.imgcore import GrayImage, decode_pgm, encode_pgm, read_pgm, write_pgm
from facexpr.preprocess import ClaheParams, clahe
from facexpr.synthetic import render_face

out = Path("demo_out")
out.mkdir(exist_ok=True)

# a tiny image survives an encode/decode round trip byte for byte
tiny = GrayImage(np.arange(12).reshape(3, 4) * 20)
blob = encode_pgm(tiny)
print(blob[:15])
print(decode_pgm(blob) == tiny)

# a synthetic face, darkened and squashed into a narrow band of grey levels
sample = render_face("happy", seed=3)
dull = GrayImage(40 + sample.image.pixels // 4)
write_pgm(out / "dull.pgm", dull)
b = sample.face_box


def spread(img):
    inner = img.pixels[b.y:b.y + b.h, b.x:b.x + b.w]
    return f"range {np.ptp(inner)}, std {inner.std():.1f}"


print("dull:", spread(dull))
enhanced = clahe(dull)                      # 8x8 tiles, clip 2.0
write_pgm(out / "enhanced.pgm", enhanced)
print("clip 2:", spread(enhanced))
# a higher clip limit lets the local histograms stretch further
print("clip 4:", spread(clahe(dull, ClaheParams(8, 8, 4.0))))

# one tile and no clip is ordinary histogram equalisation
flat = clahe(dull, ClaheParams(1, 1, float("inf")))
print("global HE levels used:", len(np.unique(flat.pixels)))

# constant images are left alone
print(clahe(GrayImage(np.full((32, 32), 90))).pixels.max())

print(read_pgm(out / "enhanced.pgm") == enhanced)
