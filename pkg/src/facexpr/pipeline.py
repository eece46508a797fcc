"""End-to-end processing of one image: enhance, localize, crop, extract."""
from __future__ import annotations

from dataclasses import dataclass

from .featureextract import ExtractParams, Extraction, FacialFeatures, extract_detailed
from .facelocalize import LocalizeParams, crop_and_enlarge, localize_enhanced
from .imgcore import BBox, GrayImage
from .preprocess import clahe
from .susan import SusanParams


@dataclass(frozen=True)
class PipelineConfig:
    localize: LocalizeParams = LocalizeParams()
    susan: SusanParams = SusanParams()
    extract: ExtractParams = ExtractParams()


@dataclass(frozen=True)
class FaceResult:
    face_box: BBox
    crop: GrayImage
    extraction: Extraction

    @property
    def features(self) -> FacialFeatures:
        return self.extraction.features

    @property
    def vector(self):
        return self.extraction.vector

    def to_image_box(self, box: BBox) -> tuple[float, float, float, float]:
        """Map a crop-frame box back to (x, y, w, h) in source-image pixels."""
        sx = self.face_box.w / self.crop.width
        sy = self.face_box.h / self.crop.height
        return (self.face_box.x + box.x * sx, self.face_box.y + box.y * sy, box.w * sx, box.h * sy)


def process_image(image: GrayImage, config: PipelineConfig = PipelineConfig()) -> FaceResult:
    # contrast enhancement runs once; the face crop is taken from the enhanced image
    loc = config.localize
    enhanced = clahe(image, loc.clahe) if loc.clahe is not None else image
    box = localize_enhanced(enhanced, loc)
    face = crop_and_enlarge(enhanced, box, loc.resize_scale)
    return FaceResult(box, face, extract_detailed(face, config.susan, config.extract))
