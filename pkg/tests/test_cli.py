import json
import logging
import subprocess
import sys

import numpy as np
import pytest

from sketchrec.cli import main
from sketchrec.featfile import read_features
from sketchrec.net import init_state, preset_lenet_modified, save_state
from sketchrec.sketch_io import decode_pnm
from sketchrec.svm import load_model
from sketchrec.synthetic import write_corpus


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    return write_corpus(tmp_path_factory.mktemp("glyphs"), 3, 10, size=32)


@pytest.fixture(scope="module")
def weights(tmp_path_factory):
    spec = preset_lenet_modified(3)
    path = tmp_path_factory.mktemp("net") / "lenet.sknw"
    save_state(spec, init_state(spec, 0), path)
    return path


def test_no_arguments_prints_usage_and_fails(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err


def test_module_entry_point_exit_code():
    proc = subprocess.run([sys.executable, "-m", "sketchrec"], capture_output=True, text=True)
    assert proc.returncode == 1 and "usage" in proc.stderr


@pytest.mark.parametrize("argv", [["augment", "--input", "x", "--output", "y", "--bogus"], ["frobnicate"],
                                  ["train-svm", "--input", "x"], ["heatmap", "--input", "a", "--output", "b",
                                                                  "--weights", "w", "--mode", "sepia"]])
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_missing_input_exits_2(tmp_path, caplog):
    assert main(["augment", "--input", str(tmp_path / "nowhere"), "--output", str(tmp_path / "o")]) == 2


def test_augment_56_files_gives_1680(tmp_path):
    src = write_corpus(tmp_path / "in", 1, 56, size=32)
    out = tmp_path / "out"
    assert main(["augment", "--input", str(src), "--output", str(out), "--plan", "paper30",
                 "--working-resolution", "32"]) == 0
    files = sorted(out.rglob("*.pgm"))
    assert len(files) == 1680
    assert files[0].name == "0000_aug00.pgm"
    samples, _ = decode_pnm(files[0].read_bytes())
    assert samples.shape == (32, 32) and set(np.unique(samples)) <= {0, 255}


def test_logs_configuration_and_seed(tmp_path, corpus, caplog):
    caplog.set_level(logging.INFO, logger="sketchrec")
    main(["augment", "--input", str(corpus), "--output", str(tmp_path / "o"), "--seed", "17",
          "--working-resolution", "32"])
    text = caplog.text
    assert "resolved configuration" in text and '"plan": "paper30"' in text
    assert "master seed: 17" in text


def test_extract_train_evaluate_chain(tmp_path, corpus, weights):
    feats = tmp_path / "f.skfv"
    assert main(["extract", "--input", str(corpus), "--output", str(feats), "--weights", str(weights),
                 "--layer", "ip1", "--working-resolution", "32"]) == 0
    table = read_features(feats)
    assert table.dim == 500 and len(table) == 3 * 10 * 31

    model_path = tmp_path / "m.sklm"
    assert main(["train-svm", "--input", str(feats), "--output", str(model_path), "--c", "1.0", "--tol", "1e-3"]) == 0
    assert load_model(model_path).classes == ["glyph000", "glyph001", "glyph002"]

    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"per_category": 10, "ladder": [3, 6], "shuffles": 2}))
    report = tmp_path / "report.csv"
    assert main(["evaluate", "--config", str(cfg), "--report", str(report), "--input", str(feats)]) == 0
    lines = report.read_text().splitlines()
    assert lines[0] == "ladder,shuffle,precision,train_count,test_count" and len(lines) == 5
    assert json.loads(report.with_suffix(".json").read_text())["config"]["ladder"] == [3, 6]


def test_extract_with_subset_and_no_plan(tmp_path, corpus, weights):
    feats = tmp_path / "f.skfv"
    assert main(["extract", "--input", str(corpus), "--output", str(feats), "--weights", str(weights),
                 "--plan", "none", "--per-category", "4", "--working-resolution", "32"]) == 0
    assert len(read_features(feats)) == 12


def test_bad_layer_and_bad_weights_exit_2(tmp_path, corpus, weights):
    assert main(["extract", "--input", str(corpus), "--output", str(tmp_path / "f"), "--weights", str(weights),
                 "--layer", "fc7"]) == 2
    bad = tmp_path / "bad.sknw"
    bad.write_bytes(b"SKNW\x01\x00")
    assert main(["extract", "--input", str(corpus), "--output", str(tmp_path / "f"), "--weights", str(bad)]) == 2
    assert not (tmp_path / "f").exists()


def test_bad_config_exits_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"ladder": [60]}))
    assert main(["evaluate", "--config", str(cfg), "--report", str(tmp_path / "r.csv")]) == 2


def test_train_cnn_on_corpus(tmp_path, corpus):
    out = tmp_path / "w.sknw"
    assert main(["train-cnn", "--input", str(corpus), "--output", str(out), "--iters", "3", "--batch", "4",
                 "--working-resolution", "32"]) == 0
    assert out.read_bytes()[:4] == b"SKNW"


def test_heatmap_outputs(tmp_path, corpus, weights):
    sketch = next(corpus.rglob("*.pgm"))
    for mode, channels in (("gray", 2), ("color", 3)):
        out = tmp_path / f"h.{mode}"
        assert main(["heatmap", "--input", str(sketch), "--output", str(out), "--weights", str(weights),
                     "--layer", "conv2", "--mode", mode, "--working-resolution", "32"]) == 0
        samples, _ = decode_pnm(out.read_bytes())
        assert samples.ndim == channels and samples.shape[:2] == (32, 32)
    assert main(["heatmap", "--input", str(sketch), "--output", str(tmp_path / "x"), "--weights", str(weights),
                 "--layer", "ip1"]) == 2
