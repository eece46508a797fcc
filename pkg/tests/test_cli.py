import csv

import numpy as np
import pytest
from click.testing import CliRunner

import oracles
from facexpr.cli import cli, main
from facexpr.dataio import read_features
from facexpr.imgcore import BBox, GrayImage, read_pgm, write_pgm
from facexpr.mlp import LABELS, decide, forward, load_model
from facexpr.pipeline import process_image


def run(*args, code=0):
    result = CliRunner().invoke(cli, [str(a) for a in args])
    assert result.exit_code == code, result.output + repr(result.exception)
    return result.output


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("faces")
    run("gen-synthetic", d, "-n", 28, "--seed", 4)
    run("extract", "--manifest", d / "manifest.csv", "-o", d / "feat.csv")
    run("train", d / "feat.csv", "-m", d / "model.txt", "--seed", 1)
    return d


def truth_boxes(d):
    out = {}
    with open(d / "truth.csv") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["file"], {})[row["part"]] = tuple(int(row[k]) for k in "xywh")
    return out


def test_gen_synthetic_outputs(corpus):
    names = sorted(p.name for p in corpus.glob("*.pgm"))
    assert len(names) == 28
    with open(corpus / "manifest.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["label"] for r in rows[:7]] == list(LABELS)
    assert set(truth_boxes(corpus)[rows[0]["path"]]) == {
        "face", "left_eyebrow", "left_eye", "right_eyebrow", "right_eye", "nose", "mouth"}


def test_extract_writes_all_rows(corpus):
    rows, has_labels = read_features(corpus / "feat.csv")
    assert has_labels and len(rows) == 28
    assert (corpus / "feat.csv.skip").read_text() == "path,error,message\n"


def test_extract_three_faces_without_manifest(corpus, tmp_path):
    paths = sorted(corpus.glob("*.pgm"))[:3]
    out = run("extract", *paths, "-o", tmp_path / "f.csv")
    assert out.startswith("3 rows")
    rows, _ = read_features(tmp_path / "f.csv")
    assert len(rows) == 3 and all(r.label is not None for r in rows)


def test_extract_skips_blank_image(corpus, tmp_path):
    blank = tmp_path / "blank.pgm"
    write_pgm(blank, GrayImage(np.full((128, 128), 200)))
    good = sorted(corpus.glob("*.pgm"))[0]
    run("extract", good, blank, "-o", tmp_path / "f.csv")
    rows, _ = read_features(tmp_path / "f.csv")
    assert len(rows) == 1
    skip = list(csv.DictReader(open(tmp_path / "f.csv.skip")))
    assert len(skip) == 1 and skip[0]["path"].endswith("blank.pgm")
    # a featureless frame fails at localization, before feature counting
    assert skip[0]["error"] == "no face found"


def test_extract_only_failures_is_domain_error(tmp_path):
    blank = tmp_path / "blank.pgm"
    write_pgm(blank, GrayImage(np.full((64, 64), 10)))
    run("extract", blank, "-o", tmp_path / "f.csv", code=1)


def test_extract_usage_errors(tmp_path):
    run("extract", "-o", tmp_path / "f.csv", code=2)
    run("extract", "-o", tmp_path / "f.csv", "--threshold", "abc", "x.pgm", code=2)
    run("extract", "-o", tmp_path / "f.csv", "--susan-g-frac", "1.5", "x.pgm", code=2)


def test_extract_unreadable_and_undecodable(tmp_path):
    (tmp_path / "bad.pgm").write_bytes(b"P5 3 3 255\n\x00")
    run("extract", tmp_path / "missing.pgm", tmp_path / "bad.pgm", "-o", tmp_path / "f.csv", code=1)
    kinds = [r["error"] for r in csv.DictReader(open(tmp_path / "f.csv.skip"))]
    assert kinds == ["unreadable", "decode"]


def test_extract_parallel_keeps_order(corpus, tmp_path):
    run("extract", "--manifest", corpus / "manifest.csv", "-o", tmp_path / "p.csv", "-j", 3)
    assert (tmp_path / "p.csv").read_bytes() == (corpus / "feat.csv").read_bytes()


def test_train_outputs(corpus):
    history = (corpus / "model.txt.history.csv").read_text().splitlines()
    assert history[0] == "epoch,mse"
    assert float(history[-1].split(",")[1]) <= 0.001
    model = load_model((corpus / "model.txt").read_bytes())
    assert model.layer_dims == (15, 15, 7, 7)


def test_train_deterministic(corpus, tmp_path):
    run("train", corpus / "feat.csv", "-m", tmp_path / "again.txt", "--seed", 1)
    assert (tmp_path / "again.txt").read_bytes() == (corpus / "model.txt").read_bytes()


def test_train_needs_labels(corpus, tmp_path):
    text = (corpus / "feat.csv").read_text().splitlines()
    unlabeled = [",".join(line.split(",")[:15]) for line in text]
    (tmp_path / "u.csv").write_text("\n".join(unlabeled) + "\n")
    run("train", tmp_path / "u.csv", "-m", tmp_path / "m.txt", code=1)
    bad = text[:2] + [text[2].rsplit(",", 1)[0] + ",joy"]
    (tmp_path / "b.csv").write_text("\n".join(bad) + "\n")
    run("train", tmp_path / "b.csv", "-m", tmp_path / "m.txt", code=1)


def test_config_file_and_flag_precedence(corpus, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# short run\nepochs = 2\ngoal-mse=0\n")
    run("--config", cfg, "train", corpus / "feat.csv", "-m", tmp_path / "m.txt")
    assert len((tmp_path / "m.txt.history.csv").read_text().splitlines()) == 3
    run("--config", cfg, "train", corpus / "feat.csv", "-m", tmp_path / "m.txt", "--epochs", 5)
    assert len((tmp_path / "m.txt.history.csv").read_text().splitlines()) == 6


def test_predict_image_matches_row(corpus):
    image = sorted(corpus.glob("*.HA*.pgm"))[0]
    by_image = run("predict", corpus / "model.txt", "--image", image)
    label, *scores = by_image.split()
    assert label == "happy" and len(scores) == 7
    assert all(len(s.split(".")[1]) == 6 for s in scores)
    vector = process_image(read_pgm(image)).vector.to_array()
    row = ",".join(format(v, ".17g") for v in vector)
    assert run("predict", corpus / "model.txt", "--row", row) == by_image
    model = load_model((corpus / "model.txt").read_bytes())
    assert decide(forward(model, vector)[1]) == label


def test_predict_errors(corpus, tmp_path):
    run("predict", tmp_path / "nope.txt", "--row", ",".join(["0.1"] * 15), code=1)
    run("predict", corpus / "model.txt", code=2)
    run("predict", corpus / "model.txt", "--row", "1,2,3", code=2)
    blank = tmp_path / "blank.pgm"
    write_pgm(blank, GrayImage(np.full((64, 64), 90)))
    run("predict", corpus / "model.txt", "--image", blank, code=1)


def test_evaluate_report(corpus):
    out = run("evaluate", corpus / "model.txt", corpus / "feat.csv")
    assert "images tested: 28" in out and "% accuracy: 100.00" in out
    matrix = [line.split()[1:] for line in out.splitlines()[-7:]]
    assert [line.split()[0] for line in out.splitlines()[-7:]] == list(LABELS)
    counts = np.array(matrix, dtype=int)
    assert np.array_equal(counts, np.diag(np.diag(counts))) and counts.sum() == 28


def test_evaluate_constant_predictor(corpus, tmp_path):
    # every output bias pushes toward "sad", weights into the output layer are zero
    text = (corpus / "model.txt").read_text().splitlines()
    out = []
    for line in text:
        tag = line.split(" ", 1)[0]
        if tag == "W3":
            line = "W3 " + " ".join(["0"] * 7)
        elif tag == "b3":
            line = "b3 " + " ".join("5" if lab == "sad" else "-5" for lab in LABELS)
        out.append(line)
    (tmp_path / "sad.txt").write_text("\n".join(out) + "\n")
    report = run("evaluate", tmp_path / "sad.txt", corpus / "feat.csv")
    assert "correct: 4" in report and f"% accuracy: {100 / 7:.2f}" in report


def test_evaluate_empty_file(corpus, tmp_path):
    header = (corpus / "feat.csv").read_text().splitlines()[0]
    (tmp_path / "e.csv").write_text(header + "\n")
    run("evaluate", corpus / "model.txt", tmp_path / "e.csv", code=1)


def test_annotate(corpus, tmp_path):
    name = sorted(corpus.glob("*.pgm"))[3]
    out = run("annotate", name, "-o", tmp_path / "a.pgm")
    annotated = read_pgm(tmp_path / "a.pgm")
    result = process_image(read_pgm(name))
    assert annotated.pixels.shape == result.crop.pixels.shape
    truth = truth_boxes(corpus)[name.name]
    outline = np.zeros(annotated.pixels.shape, bool)
    for line in out.splitlines():
        part, *xywh = line.split()
        x, y, w, h = map(int, xywh)
        outline[y, x:x + w] = outline[y + h - 1, x:x + w] = True
        outline[y:y + h, x] = outline[y:y + h, x + w - 1] = True
        assert oracles.iou(result.to_image_box(BBox(x, y, w, h)), truth[part]) >= 0.7, part
        assert set(np.unique(annotated.pixels[y, x:x + w])) <= {0, 255}
    changed = annotated.pixels != result.crop.pixels
    assert not (changed & ~outline).any()


def test_annotate_failure(tmp_path):
    blank = tmp_path / "blank.pgm"
    write_pgm(blank, GrayImage(np.full((64, 64), 90)))
    run("annotate", blank, "-o", tmp_path / "a.pgm", code=1)


def test_main_entry_point(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0
    assert "gen-synthetic" in capsys.readouterr().out
