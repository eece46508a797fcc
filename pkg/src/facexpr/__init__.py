"""Facial feature extraction and expression recognition for grayscale images."""
from .facelocalize import LocalizeParams, NoFaceError, crop_and_enlarge, localize_face, otsu_threshold
from .featureextract import (ExtractParams, FacialFeatures, FeatureCountError, FeatureVector,
                             extract)
from .imgcore import BBox, BinaryMask, GrayImage, decode_pgm, encode_pgm, read_pgm, write_pgm
from .mlp import LABELS, MlpModel, TrainConfig, init_model, load_model, predict, save_model, train
from .pipeline import PipelineConfig, process_image
from .preprocess import ClaheParams, clahe
from .susan import SusanParams, susan_edge_strength

__all__ = [
    "BBox", "BinaryMask", "ClaheParams", "ExtractParams", "FacialFeatures", "FeatureCountError",
    "FeatureVector", "GrayImage", "LABELS", "LocalizeParams", "MlpModel", "NoFaceError",
    "PipelineConfig", "SusanParams", "TrainConfig", "clahe", "crop_and_enlarge", "decode_pgm",
    "encode_pgm", "extract", "init_model", "load_model", "localize_face", "otsu_threshold",
    "predict", "process_image", "read_pgm", "save_model", "susan_edge_strength", "train",
    "write_pgm",
]
