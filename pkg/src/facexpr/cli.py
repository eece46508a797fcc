"""Command-line front end.

Exit status: 0 on success, 1 on a domain error (bad data, failed
extraction), 2 on a usage error.  Every option can also come from a
``key=value`` config file passed with ``--config``; command-line flags win.
"""
from __future__ import annotations

import functools
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import dataio
from .facelocalize import LocalizeParams, NoFaceError
from .featureextract import ExtractParams, FeatureCountError, FeatureVector
from .imgcore import BBox, GrayImage, PgmDecodeError, read_pgm, write_pgm
from .mlp import (LabeledSample, ModelFormatError, TrainConfig, confusion_matrix,
                  init_model, load_model, predict, save_model, train)
from .pipeline import PipelineConfig, process_image
from .preprocess import ClaheParams
from .susan import SusanParams

log = logging.getLogger(__name__)


def read_config(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise click.UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            values[key] = value.split() if key == "clahe_tiles" else value
    return values


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              help="key=value file supplying option defaults.")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def cli(ctx, config, verbose):
    """Facial feature extraction and expression recognition on PGM images."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if config:
        values = read_config(config)
        ctx.default_map = {name: dict(values) for name in cli.commands}


def pipeline_options(f):
    options = [
        click.option("--clahe-tiles", nargs=2, type=int, default=(8, 8), show_default=True,
                     help="CLAHE tile grid X Y."),
        click.option("--clahe-clip", type=float, default=2.0, show_default=True),
        click.option("--no-clahe", is_flag=True, help="Skip contrast enhancement."),
        click.option("--threshold", default="otsu", show_default=True,
                     help="'otsu' or a fixed level 0-255."),
        click.option("--polarity", type=click.Choice(["dark", "light"]), default="dark",
                     show_default=True),
        click.option("--marker", type=click.Choice(["opening", "regional-max"]),
                     default="opening", show_default=True),
        click.option("--se-radius", type=int, default=3, show_default=True),
        click.option("--resize-scale", type=float, default=2.0, show_default=True),
        click.option("--susan-t", type=float, default=27.0, show_default=True),
        click.option("--susan-g-frac", type=float, default=0.75, show_default=True),
        click.option("--susan-radius", type=float, default=3.4, show_default=True),
        click.option("--hard-susan", is_flag=True, help="Use the |dI| <= t comparator."),
        click.option("--edge-thresh", type=float, default=0.0, show_default=True),
        click.option("--no-despeckle", is_flag=True),
        click.option("--min-area", type=int, default=None,
                     help="Absolute P; default is 0.05% of the crop area."),
        click.option("--overlap-axis", type=click.Choice(["x", "y"]), default="y",
                     show_default=True),
        click.option("--no-normalize", is_flag=True, help="Raw pixel features."),
    ]
    return functools.reduce(lambda acc, opt: opt(acc), reversed(options), f)


def build_pipeline(kw) -> PipelineConfig:
    threshold = kw.pop("threshold")
    if threshold != "otsu":
        try:
            threshold = int(threshold)
        except ValueError:
            raise click.BadParameter(f"{threshold!r} is not 'otsu' or an integer",
                                     param_hint="--threshold") from None
    tiles = tuple(int(t) for t in kw.pop("clahe_tiles"))
    clip = kw.pop("clahe_clip")
    try:
        localize = LocalizeParams(
            threshold=threshold, se_radius=kw.pop("se_radius"),
            resize_scale=kw.pop("resize_scale"), polarity=kw.pop("polarity"),
            marker=kw.pop("marker"),
            clahe=None if kw.pop("no_clahe") else ClaheParams(tiles[0], tiles[1], clip))
        susan = SusanParams(kw.pop("susan_t"), kw.pop("susan_g_frac"),
                            kw.pop("susan_radius"), kw.pop("hard_susan"))
        extract = ExtractParams(min_area_P=kw.pop("min_area"), edge_threshold=kw.pop("edge_thresh"),
                                despeckle=not kw.pop("no_despeckle"),
                                overlap_axis=kw.pop("overlap_axis"),
                                normalize=not kw.pop("no_normalize"))
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    return PipelineConfig(localize, susan, extract)


def _failure_kind(exc: Exception) -> str:
    if isinstance(exc, PgmDecodeError):
        return "decode"
    if isinstance(exc, OSError):
        return "unreadable"
    return getattr(exc, "kind", type(exc).__name__)


EXTRACTION_ERRORS = (NoFaceError, FeatureCountError, PgmDecodeError, OSError, ValueError)


def _extract_one(path, config: PipelineConfig):
    try:
        result = process_image(read_pgm(path), config)
    except EXTRACTION_ERRORS as exc:
        return None, (_failure_kind(exc), str(exc))
    return result.vector, None


def _load_model(path):
    try:
        return load_model(Path(path).read_bytes())
    except OSError as exc:
        raise click.ClickException(f"cannot read model: {exc}") from None
    except ModelFormatError as exc:
        raise click.ClickException(f"{path}: {exc}") from None


def _read_feature_file(path, need_labels: bool):
    try:
        rows, has_labels = dataio.read_features(path)
    except dataio.DataFormatError as exc:
        raise click.ClickException(f"{path}: {exc}") from None
    if not rows:
        raise click.ClickException(f"{path}: no feature rows")
    if need_labels:
        if not has_labels:
            raise click.ClickException(f"{path}: feature file has no label column")
        missing = [i for i, r in enumerate(rows, start=2) if r.label is None]
        if missing:
            raise click.ClickException(f"{path}: line {missing[0]} has no label")
    return rows


@cli.command()
@click.argument("images", nargs=-1, type=click.Path(dir_okay=False))
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False),
              help="path,label file listing the images.")
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False),
              help="Feature file to write.")
@click.option("--skip-log", type=click.Path(dir_okay=False),
              help="Where to record images that failed (default: OUTPUT.skip).")
@click.option("-j", "--jobs", type=int, default=1, show_default=True)
@pipeline_options
def extract(images, manifest, output, skip_log, jobs, **kw):
    """Compute the 15-value feature vector of every image."""
    config = build_pipeline(kw)
    if manifest and images:
        raise click.UsageError("give either --manifest or image paths, not both")
    try:
        if manifest:
            ds = dataio.load_manifest(manifest)
        elif images:
            ds = dataio.manifest_from_paths(images)
        else:
            raise click.UsageError("no input images")
    except dataio.DataFormatError as exc:
        raise click.ClickException(str(exc)) from None

    paths = [p for p, _ in ds.entries]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_extract_one, paths, [config] * len(paths)))
    else:
        results = [_extract_one(p, config) for p in paths]

    rows, skipped = [], []
    for (path, label), (vector, failure) in zip(ds.entries, results):
        if failure:
            skipped.append((path, *failure))
            log.info("skipped %s: %s", path, failure[1])
        else:
            rows.append(dataio.FeatureRow(vector, label))
    skip_path = skip_log or f"{output}.skip"
    with open(skip_path, "w", encoding="utf-8") as fh:
        fh.write("path,error,message\n")
        for path, kind, msg in skipped:
            fh.write(f"{path},{kind},{msg.replace(',', ';')}\n")
    if not rows:
        raise click.ClickException(f"no image produced features ({len(skipped)} skipped)")
    dataio.write_features(output, rows, with_labels=True)
    click.echo(f"{len(rows)} rows written to {output}, {len(skipped)} skipped")


@cli.command("train")
@click.argument("features", type=click.Path(exists=True, dir_okay=False))
@click.option("-m", "--model-out", required=True, type=click.Path(dir_okay=False))
@click.option("--history-out", type=click.Path(dir_okay=False),
              help="epoch,mse file (default: MODEL_OUT.history.csv).")
@click.option("--lr", type=float, default=0.5, show_default=True)
@click.option("--epochs", type=int, default=10000, show_default=True)
@click.option("--goal-mse", type=float, default=0.001, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--no-shuffle", is_flag=True)
@click.option("--momentum", type=float, default=0.0, show_default=True)
@click.option("--target-smoothing", type=float, default=0.0, show_default=True)
@click.option("--no-standardize", is_flag=True, help="Feed features to the network unscaled.")
def train_cmd(features, model_out, history_out, lr, epochs, goal_mse, seed, no_shuffle,
              momentum, target_smoothing, no_standardize):
    """Train the expression classifier on a labeled feature file."""
    rows = _read_feature_file(features, need_labels=True)
    try:
        config = TrainConfig(lr, epochs, goal_mse, seed, not no_shuffle, momentum,
                             target_smoothing, not no_standardize)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    data = [LabeledSample(r.vector, r.label) for r in rows]
    model, history = train(init_model(seed), data, config)
    Path(model_out).write_bytes(save_model(model))
    with open(history_out or f"{model_out}.history.csv", "w", encoding="utf-8") as fh:
        fh.write("epoch,mse\n")
        for epoch, mse in enumerate(history, start=1):
            fh.write(f"{epoch},{mse:.17g}\n")
    click.echo(f"trained {len(history)} epochs, final mse {history[-1]:.6g}")


def format_prediction(label: str, scores) -> str:
    return label + " " + " ".join(f"{s:.6f}" for s in scores)


@cli.command("predict")
@click.argument("model", type=click.Path(dir_okay=False))
@click.option("--image", type=click.Path(exists=True, dir_okay=False))
@click.option("--row", help="15 comma-separated feature values.")
@pipeline_options
def predict_cmd(model, image, row, **kw):
    """Print the predicted label followed by the seven class scores."""
    config = build_pipeline(kw)
    if (image is None) == (row is None):
        raise click.UsageError("give exactly one of --image or --row")
    mdl = _load_model(model)
    if row is not None:
        try:
            vector = FeatureVector.from_values(row.split(","))
        except ValueError as exc:
            raise click.UsageError(f"bad --row: {exc}") from None
    else:
        vector, failure = _extract_one(image, config)
        if failure:
            raise click.ClickException(f"{failure[0]}: {failure[1]}")
    try:
        label, scores = predict(mdl, vector)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(format_prediction(label, scores))


def accuracy_report(labels, cm: np.ndarray) -> str:
    total = int(cm.sum())
    hits = int(np.trace(cm))
    lines = [f"images tested: {total}",
             f"correct: {hits}",
             f"% accuracy: {100.0 * hits / total:.2f}",
             "",
             "confusion matrix (rows = true, columns = predicted)"]
    width = max(len(l) for l in labels) + 1
    lines.append(" " * width + " ".join(f"{l[:8]:>8}" for l in labels))
    for name, counts in zip(labels, cm):
        lines.append(f"{name:<{width}}" + " ".join(f"{c:>8d}" for c in counts))
    return "\n".join(lines)


@cli.command("evaluate")
@click.argument("model", type=click.Path(dir_okay=False))
@click.argument("features", type=click.Path(exists=True, dir_okay=False))
def evaluate_cmd(model, features):
    """Accuracy and confusion matrix of a model on a labeled feature file."""
    mdl = _load_model(model)
    rows = _read_feature_file(features, need_labels=True)
    cm = confusion_matrix(mdl, [LabeledSample(r.vector, r.label) for r in rows])
    click.echo(accuracy_report(mdl.labels, cm))


def draw_box(pixels: np.ndarray, box: BBox) -> None:
    """Burn a 1-px outline; dark ink where the outline crosses bright pixels."""
    x0, y0 = box.x, box.y
    x1, y1 = box.x + box.w - 1, box.y + box.h - 1
    outline = np.zeros(pixels.shape, bool)
    outline[y0, x0:x1 + 1] = outline[y1, x0:x1 + 1] = True
    outline[y0:y1 + 1, x0] = outline[y0:y1 + 1, x1] = True
    pixels[outline] = 0 if pixels[outline].mean() > 127 else 255


def annotate_image(crop: GrayImage, features) -> GrayImage:
    pixels = crop.pixels.copy()
    for box in features.boxes().values():
        draw_box(pixels, box)
    return GrayImage(pixels)


@cli.command("annotate")
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
@pipeline_options
def annotate_cmd(image, output, **kw):
    """Write the enlarged face crop with the six feature boxes drawn in."""
    config = build_pipeline(kw)
    try:
        result = process_image(read_pgm(image), config)
    except EXTRACTION_ERRORS as exc:
        raise click.ClickException(f"{_failure_kind(exc)}: {exc}") from None
    write_pgm(output, annotate_image(result.crop, result.features))
    for name, box in result.features.boxes().items():
        click.echo(f"{name} {box.x} {box.y} {box.w} {box.h}")


@cli.command("gen-synthetic")
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("-n", "--count", type=int, default=140, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jitter", type=float, default=1.0, show_default=True)
@click.option("--noise", type=float, default=2.0, show_default=True)
def gen_synthetic(out_dir, count, seed, jitter, noise):
    """Write schematic faces, a manifest and ground-truth boxes."""
    from .synthetic import FEATURES, make_dataset, jaffe_name

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    faces = make_dataset(count, seed=seed, jitter=jitter, noise=noise)
    entries = []
    with open(out / "truth.csv", "w", encoding="utf-8") as fh:
        fh.write("file,part,x,y,w,h\n")
        for i, face in enumerate(faces):
            name = jaffe_name(i, face.label)
            write_pgm(out / name, face.image)
            entries.append((name, face.label))
            for part, box in [("face", face.face_box)] + [(p, face.truth[p]) for p in FEATURES]:
                fh.write(f"{name},{part},{box.x},{box.y},{box.w},{box.h}\n")
    dataio.write_manifest(out / "manifest.csv", entries)
    click.echo(f"{count} faces written to {out}")


def main(argv=None):
    return cli.main(args=argv, prog_name="facexpr")


if __name__ == "__main__":
    sys.exit(main())
