"""Dataset manifests, label resolution and feature files."""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .featureextract import FEATURE_NAMES, FeatureVector
from .mlp import LABELS

JAFFE_CODES = {"AN": "angry", "DI": "disgust", "FE": "fear", "HA": "happy",
               "NE": "neutral", "SA": "sad", "SU": "surprise"}
_JAFFE_NAME = re.compile(r"^[^.]+\.([A-Z]{2})\d+\.\d+(\..*)?$")

FEATURE_HEADER = list(FEATURE_NAMES) + ["label"]
MANIFEST_HEADER = ["path", "label"]


class DataFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class DuplicatePathError(DataFormatError):
    pass


class UnknownLabelError(DataFormatError):
    pass


class MalformedRowError(DataFormatError):
    pass


def label_from_filename(name: str) -> str | None:
    """Expression encoded in a JAFFE-style name such as ``KA.AN1.39.tiff``."""
    m = _JAFFE_NAME.match(Path(name).name)
    return JAFFE_CODES.get(m.group(1)) if m else None


def parse_label(token: str, line: int | None = None) -> str | None:
    token = token.strip()
    if token in ("", "unknown"):
        return None
    if token not in LABELS:
        raise UnknownLabelError(f"unknown label {token!r}", line)
    return token


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple  # of (Path, label or None)
    source: str     # "filename-convention" or "manifest-file"

    def __len__(self):
        return len(self.entries)


def manifest_from_paths(paths) -> DatasetManifest:
    entries, seen = [], set()
    for p in paths:
        p = Path(p)
        if p in seen:
            raise DuplicatePathError(f"duplicate path {str(p)!r}")
        seen.add(p)
        entries.append((p, label_from_filename(p.name)))
    return DatasetManifest(tuple(entries), "filename-convention")


def load_manifest(path) -> DatasetManifest:
    """Read a ``path,label`` file; relative paths resolve against its folder.

    A blank label falls back to the file-name convention; ``unknown`` keeps
    the image unlabeled.
    """
    path = Path(path)
    base = path.parent
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != MANIFEST_HEADER:
        raise MalformedRowError(f"expected header {','.join(MANIFEST_HEADER)!r}", 1)
    entries, seen = [], set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2 or not row[0].strip():
            raise MalformedRowError(f"expected 'path,label', got {row!r}", lineno)
        image = Path(row[0].strip())
        if not image.is_absolute():
            image = base / image
        if image in seen:
            raise DuplicatePathError(f"duplicate path {row[0].strip()!r}", lineno)
        seen.add(image)
        token = row[1].strip()
        label = parse_label(token, lineno) if token else label_from_filename(image.name)
        entries.append((image, label))
    return DatasetManifest(tuple(entries), "manifest-file")


def write_manifest(path, entries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for image, label in entries:
            w.writerow([str(image), label or ""])


@dataclass(frozen=True)
class FeatureRow:
    vector: FeatureVector
    label: str | None = None


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def format_features(rows, with_labels: bool | None = None) -> str:
    rows = list(rows)
    if with_labels is None:
        with_labels = any(r.label is not None for r in rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FEATURE_HEADER if with_labels else list(FEATURE_NAMES))
    for r in rows:
        cells = [_fmt(v) for v in r.vector.to_array()]
        if with_labels:
            cells.append(r.label or "")
        w.writerow(cells)
    return buf.getvalue()


def write_features(path, rows, with_labels: bool | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(format_features(rows, with_labels))


def parse_features(text: str) -> tuple[list[FeatureRow], bool]:
    """Rows of a feature file and whether it carries a label column."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise MalformedRowError("empty feature file", 1)
    header = [c.strip() for c in rows[0]]
    if header == FEATURE_HEADER:
        has_labels = True
    elif header == list(FEATURE_NAMES):
        has_labels = False
    else:
        raise MalformedRowError("header must be " + ",".join(FEATURE_HEADER), 1)
    out = []
    width = len(header)
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise MalformedRowError(f"expected {width} fields, got {len(row)}", lineno)
        try:
            values = [float(c) for c in row[:15]]
        except ValueError as exc:
            raise MalformedRowError(str(exc), lineno) from None
        if not all(np.isfinite(values)):
            raise MalformedRowError("non-finite feature value", lineno)
        label = parse_label(row[15], lineno) if has_labels else None
        out.append(FeatureRow(FeatureVector.from_values(values), label))
    return out, has_labels


def read_features(path) -> tuple[list[FeatureRow], bool]:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_features(fh.read())
