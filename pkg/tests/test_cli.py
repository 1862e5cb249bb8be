import csv
import json

import numpy as np
import pytest

from histmark import pipeline as pl
from histmark.cli import main
from histmark.image import load_image, save_image


@pytest.fixture(scope="module")
def workdir(tmp_path_factory, camera):
    d = tmp_path_factory.mktemp("cli")
    save_image(d / "cam.png", camera)
    return d


@pytest.fixture(scope="module")
def embedded(workdir):
    rc = main(
        [
            "embed", str(workdir / "cam.png"), str(workdir / "marked.png"),
            "--seed", "c0ffee", "--payload-seed", "3",
            "--report", str(workdir / "shifts.csv"), "--debug-dir", str(workdir / "dbg"),
        ]
    )  # fmt: skip
    assert rc == 0
    return workdir


def test_embed_writes_sidecar(embedded):
    side = json.loads((embedded / "marked.png.json").read_text())
    assert side["psnr"] >= 45.5
    assert side["config"]["master_seed"] == "c0ffee"
    assert side["config"]["reference_dims"] == [512, 512]
    assert len(side["bits"]) == 45 and len(side["areas"]) == 5 and len(side["reports"]) == 45
    assert side["max_abs_diff"] <= 7


def test_report_and_debug_csvs(embedded):
    with open(embedded / "shifts.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["area", "group", "bit", "requested", "achieved", "ratio"] and len(rows) == 46
    assert (embedded / "dbg" / "points.csv").read_text().startswith("row,col,score\n")
    assert (embedded / "dbg" / "areas.csv").read_text().startswith("row,col,side,entropy\n")


def test_extract_with_sidecar_reports_zero_ber(embedded, capsys):
    assert main(["extract", str(embedded / "marked.png"), "--sidecar", str(embedded / "marked.png.json")]) == 0
    out = capsys.readouterr().out.split()
    side = json.loads((embedded / "marked.png.json").read_text())
    assert out[0] == side["bits"] and out[1:] == ["ber", "0"]


def test_extract_with_config_and_seed(embedded, capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(pl.PipelineConfig().to_json())
    expected = json.loads((embedded / "marked.png.json").read_text())["bits"]
    rc = main(["extract", str(embedded / "marked.png"), "--config", str(cfg), "--seed", "c0ffee", "--expected", expected])
    assert rc == 0 and capsys.readouterr().out.split()[-1] == "0"


def test_extract_pristine_reads_near_chance(embedded, capsys):
    side = str(embedded / "marked.png.json")
    assert main(["extract", str(embedded / "cam.png"), "--sidecar", side]) == 0
    ber = float(capsys.readouterr().out.split()[-1])
    assert 0.2 <= ber <= 0.8


def test_attack_command(embedded, tmp_path):
    out = tmp_path / "jpeg.png"
    assert main(["attack", str(embedded / "marked.png"), str(out), "--attack", "jpeg:q=90"]) == 0
    spec = tmp_path / "spec.json"
    spec.write_text('{"family": "jpeg", "q": 90}')
    out2 = tmp_path / "jpeg2.png"
    assert main(["attack", str(embedded / "marked.png"), str(out2), "--attack-json", str(spec)]) == 0
    assert np.array_equal(load_image(out), load_image(out2))


def test_missing_input_names_path(tmp_path, capsys):
    missing = tmp_path / "nowhere.png"
    assert main(["embed", str(missing), str(tmp_path / "o.png")]) != 0
    assert str(missing) in capsys.readouterr().err


def test_wrong_length_bits(workdir, tmp_path, capsys):
    assert main(["embed", str(workdir / "cam.png"), str(tmp_path / "o.png"), "--bits", "0101"]) != 0
    assert "45" in capsys.readouterr().err


def test_wrong_config_path(workdir, tmp_path, capsys):
    cfg = tmp_path / "nope.json"
    assert main(["extract", str(workdir / "cam.png"), "--config", str(cfg)]) != 0
    assert str(cfg) in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["--seed", "xyz"], ["--attack", "warp:k=1"]])
def test_bad_flags(workdir, tmp_path, argv):
    if argv[0] == "--seed":
        args = ["extract", str(workdir / "cam.png"), *argv]
    else:
        args = ["attack", str(workdir / "cam.png"), str(tmp_path / "x.png"), *argv]
    assert main(args) != 0


def test_detection_failure_exits_nonzero(tmp_path, capsys):
    save_image(tmp_path / "flat.png", np.full((128, 128), 9, np.uint8))
    assert main(["extract", str(tmp_path / "flat.png")]) != 0
    assert "insufficient" in capsys.readouterr().err


def test_sweep_uses_corpus_env(workdir, tmp_path, monkeypatch):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "cam.png").write_bytes((workdir / "cam.png").read_bytes())
    monkeypatch.setenv("HISTMARK_CORPUS", str(corpus))
    out, agg = tmp_path / "rows.csv", tmp_path / "agg.csv"
    rc = main(["sweep", "--attack", "crop", "--params", "0.1,0.2", "--out", str(out), "--aggregate", str(agg)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("image,attack,param,S,ber,psnr,ssim")
    assert [ln.split(",")[:4] for ln in lines[1:]] == [["cam", "crop", "0.1", "6"], ["cam", "crop", "0.2", "6"]]
    assert len(agg.read_text().splitlines()) == 3


def test_sweep_empty_corpus(tmp_path, monkeypatch, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    monkeypatch.setenv("HISTMARK_CORPUS", str(empty))
    assert main(["sweep", "--attack", "jpeg", "--out", str(tmp_path / "r.csv")]) != 0
    assert "empty corpus" in capsys.readouterr().err
    assert not (tmp_path / "r.csv").exists()
