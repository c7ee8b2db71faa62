import csv
import io
import json
import subprocess
import sys

import pytest

from colorscreen.cli import build_parser, main


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--out", str(d), "--actives", "6", "--decoys", "30", "--atoms", "6", "--seed", "7"]) == 0
    return d


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_synth_outputs(synth_dir):
    for f in ("actives.sdf", "decoys.sdf", "queries.sdf", "manifest.json"):
        assert (synth_dir / f).exists()


def test_synth_seed(tmp_path, synth_dir):
    args = ["synth", "--actives", "6", "--decoys", "30", "--atoms", "6"]
    assert main(args + ["--out", str(tmp_path / "a"), "--seed", "7"]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--seed", "8"]) == 0
    same = (tmp_path / "a" / "actives.sdf").read_text()
    assert same == (synth_dir / "actives.sdf").read_text()
    assert same != (tmp_path / "b" / "actives.sdf").read_text()


def test_synth_zero_actives(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path), "--actives", "0"]) == 1
    assert "active" in capsys.readouterr().err


def test_overlay_self(synth_dir, capsys):
    q = str(synth_dir / "queries.sdf")
    assert main(["overlay", "--query", q, "--library", q]) == 0
    (row,) = _csv(capsys.readouterr().out)
    assert float(row["ST"]) == pytest.approx(1.0, abs=1e-5)
    assert float(row["CT"]) == pytest.approx(1.0, abs=1e-5)
    assert float(row["TanimotoCombo"]) == pytest.approx(2.0, abs=1e-5)
    cols = list(row)
    assert cols[:7] == ["name", "ST", "CT", "TanimotoCombo", "STv", "CTv", "TverskyCombo"]
    assert len([c for c in cols if c.startswith("CCT_")]) == 6
    assert len([c for c in cols if c.startswith("CAO_")]) == 5


def test_overlay_empty_library(synth_dir, tmp_path, capsys):
    empty = tmp_path / "empty.sdf"
    empty.write_text("")
    assert main(["overlay", "--query", str(synth_dir / "queries.sdf"), "--library", str(empty)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("name,ST,CT")


def test_overlay_malformed(synth_dir, tmp_path):
    bad = tmp_path / "bad.sdf"
    bad.write_text("x\n\n\n  1  0  0  0  0  0  0  0  0  0999 V2000\n   abc\nM  END\n$$$$\n")
    assert main(["overlay", "--query", str(synth_dir / "queries.sdf"), "--library", str(bad), "--strict"]) == 2


def test_overlay_to_file(synth_dir, tmp_path):
    out = tmp_path / "o.csv"
    assert main(["overlay", "--query", str(synth_dir / "queries.sdf"), "--library", str(synth_dir / "actives.sdf"),
                 "--out", str(out)]) == 0
    assert len(_csv(out.read_text())) == 6


def test_featurize(synth_dir, tmp_path):
    out = tmp_path / "f.csv"
    assert main(["featurize", "--manifest", str(synth_dir / "manifest.json"), "--layouts", "ST-CT,ST-CAO",
                 "--out", str(out)]) == 0
    rows = _csv((tmp_path / "f.ST-CAO.csv").read_text())
    assert len(rows) == 36 and {r["label"] for r in rows} == {"0", "1"}
    side = json.loads((tmp_path / "f.ST-CAO.csv.json").read_text())
    assert side["columns"][0] == "ST" and len(side["columns"]) == 6


def test_featurize_needs_inputs(tmp_path):
    assert main(["featurize", "--out", str(tmp_path / "x.csv")]) == 1


BENCH = ["--layouts", "ST-CT,ST-CAO", "--seed", "7", "--jobs", "1"]


def test_benchmark_deterministic(synth_dir, tmp_path, capsys):
    m = str(synth_dir / "manifest.json")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["benchmark", "--manifest", m, "--out", str(a)] + BENCH) == 0
    out = capsys.readouterr().out
    assert "TanimotoCombo" in out and "ST-CAO" in out
    assert main(["benchmark", "--manifest", m, "--out", str(b)] + BENCH) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert rep["methods"] == ["TanimotoCombo", "ST-CT", "ST-CAO"]
    assert set(rep["summary"]) == {"TanimotoCombo", "ST-CT", "ST-CAO"}
    assert rep["config"]["seed"] == 7
    assert main(["report", str(a)]) == 0
    assert "ST-CAO" in capsys.readouterr().out


def test_benchmark_tversky_baseline(synth_dir, tmp_path):
    out = tmp_path / "t.json"
    assert main(["benchmark", "--manifest", str(synth_dir / "manifest.json"), "--metric", "tversky", "--alpha", "0.95",
                 "--layouts", "STv-CAO", "--scaler", "maxabs", "--jobs", "1", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["baseline"] == "TverskyCombo"
    assert rep["config"]["scaler"] == "max_abs"


def test_benchmark_bad_manifest(tmp_path):
    assert main(["benchmark", "--manifest", str(tmp_path / "nope.json"), "--out", str(tmp_path / "r.json")]) == 2


def test_benchmark_zero_successes(tmp_path):
    d = tmp_path / "tiny"
    assert main(["synth", "--out", str(d), "--actives", "2", "--decoys", "10", "--atoms", "5"]) == 0
    assert main(["benchmark", "--manifest", str(d / "manifest.json"), "--jobs", "1", "--out", str(tmp_path / "r.json"),
                 "--layouts", "ST-CT"]) != 0


def test_report_bad_file(tmp_path):
    (tmp_path / "r.json").write_text("{\"schema_version\": 9}")
    assert main(["report", str(tmp_path / "r.json")]) == 2


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["overlay", "--bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["benchmark", "--manifest", "m.json", "--layouts", "ST-NOPE"])
    assert exc.value.code == 1


FLAGS = {
    "overlay": ["--query", "--library", "--out", "--w-color", "--alpha", "--strict", "--seed"],
    "featurize": ["--query", "--library", "--manifest", "--layouts", "--out", "--w-color", "--alpha", "--strict", "--seed"],
    "benchmark": ["--manifest", "--layouts", "--metric", "--alpha", "--scaler", "--folds", "--seed", "--jobs", "--out",
                  "--w-color", "--strict"],
    "synth": ["--out", "--seed", "--actives", "--decoys", "--queries"],
    "report": [],
}


@pytest.mark.parametrize("sub", sorted(FLAGS))
def test_help(sub, capsys):
    with pytest.raises(SystemExit) as exc:
        main([sub, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for flag in FLAGS[sub]:
        assert flag in text


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "colorscreen", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "benchmark" in r.stdout
