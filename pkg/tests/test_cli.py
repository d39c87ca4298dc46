import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import tone
from disguised_sid.audio_io import load_manifest, read_wav, split_partitions, write_wav
from disguised_sid.cli import main
from disguised_sid.disguise import estimate_f0
from disguised_sid.features import read_feature_csv

pytestmark = pytest.mark.filterwarnings("ignore:sample covariance is singular:RuntimeWarning")


def test_synth_manifest_only(tmp_path, capsys):
    assert main(["synth", "--speakers", "3", "--out", str(tmp_path), "--no-audio"]) == 0
    manifest = capsys.readouterr().out.strip()
    train, test = split_partitions(load_manifest(manifest))
    assert (len(train), len(test)) == (108, 648)


def test_disguise_file(tmp_path, capsys):
    src, dst = tmp_path / "in.wav", tmp_path / "out.wav"
    write_wav(tone(200, 0.5), src)
    assert main(["disguise", str(src), str(dst), "--effect", "low", "--semitones", "12"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["effect"] == "low_pitched" and info["semitones"] == -12.0
    assert estimate_f0(read_wav(dst)) == pytest.approx(100, rel=0.03)


def test_extract_frames_and_embeddings(tiny_corpus, tmp_path):
    wav = load_manifest(tiny_corpus)[0].path
    frames = tmp_path / "f.csv"
    assert main(["extract", "--method", "lpc", "--lpc-order", "8", "--wav", wav,
                 "--frames", "--out", str(frames)]) == 0
    assert read_feature_csv(frames).dim == 8
    emb = tmp_path / "e.npz"
    assert main(["extract", "--method", "dct", "--manifest", str(tiny_corpus),
                 "--partition", "train", "--effect", "evc", "--out", str(emb)]) == 0
    with np.load(emb) as data:
        assert data["X"].shape == (36, 26)
        assert json.loads(str(data["config"]))["effect"] == "evc"


@pytest.mark.parametrize("method", ["mfcc_dd", "plda"])
def test_train_then_identify(tiny_corpus, tmp_path, capsys, method):
    model = tmp_path / "model"
    assert main(["train", "--manifest", str(tiny_corpus), "--method", method, "--out", str(model)]) == 0
    capsys.readouterr()
    assert main(["identify", "--model", str(model), "--manifest", str(tiny_corpus)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 73
    acc = float(lines[-1].split("\t")[1])
    assert acc >= 0.9


def test_evaluate_config_file_and_report(tiny_corpus, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"manifest": str(tiny_corpus), "methods": ["dct"], "effects": ["none"],
                               "features": {"n_dct": 10}}))
    md, js = tmp_path / "r.md", tmp_path / "r.json"
    assert main(["evaluate", "--config", str(cfg), "--effects", "none", "evc",
                 "--out", str(md), "--json-out", str(js)]) == 0
    text = md.read_text()
    assert text.count("## Table") == 2
    resolved = json.loads(js.read_text())["config"]
    assert resolved["effects"] == ["none", "evc"] and resolved["features"]["n_dct"] == 10
    csv_out = tmp_path / "r.csv"
    assert main(["report", str(js), "--format", "csv", "--out", str(csv_out)]) == 0
    assert csv_out.read_text().count("\n") == 3
    assert main(["report", str(js)]) == 0


def test_failure_exit_code_and_diagnostics(tmp_path, capsys):
    assert main(["evaluate", "--manifest", str(tmp_path / "nope.csv")]) != 0
    assert "disguised-sid evaluate" in capsys.readouterr().err
    bad = tmp_path / "m.csv"
    bad.write_text("path,speaker_id,sentence_id,emotion,repetition\nx.wav,s1,5,neutral,1\n"
                   "y.wav,s1,1,neutral,1\n")
    assert main(["evaluate", "--manifest", str(bad), "--methods", "lpc"]) != 0
    err = capsys.readouterr().err
    assert "ExperimentError" in err and "y.wav" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "disguised_sid.cli", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "0.1.0"
