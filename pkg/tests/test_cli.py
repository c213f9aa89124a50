import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from fractions import Fraction

import pytest

from memrates import cli
from memrates.acceptance import CriterionResult
from memrates.limits import table1_theta, table2_theta
from memrates.plotting import Figure, render


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_tables(tmp_path):
    assert cli.main(["tables", "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "tables.csv")
    assert list(rows[0]) == cli.TABLE_COLUMNS
    # two tables times two memory types, for each of four omegas
    assert len(rows) == 16
    for r in rows:
        fn = table1_theta if r["table"] == "1" else table2_theta
        want = fn(r["memory"], Fraction(r["omega"]), Fraction(3, 4), Fraction(2))
        assert r["theta"] == str(want)
    doc = json.loads((tmp_path / "tables.json").read_text())
    assert doc["provenance"]["seed"] == 0
    assert doc["provenance"]["config"]["experiment"]["tables"]["alpha"] == 0.75


def test_rate(tmp_path):
    assert cli.main(["rate", "--out-dir", str(tmp_path), "--format", "json"]) == 0
    assert not (tmp_path / "rate.csv").exists()
    doc = json.loads((tmp_path / "rate.json").read_text())
    assert doc["segment_rate"]["lower"] == pytest.approx(0.5)
    assert doc["ruin_exponent"]["lower"] == pytest.approx(-1.0)
    meta = json.loads((tmp_path / "run_meta.json").read_text())
    assert meta["exit_code"] == 0 and meta["files"] == ["rate.json"]


def test_reruns_are_byte_identical(tmp_path):
    args = ["--set", "experiment.ruin.n_paths=2000", "--set", "experiment.ruin.u=[2, 3, 4, 5]", "--seed", "3"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["ruin", "--out-dir", str(a), *args]) == 0
    assert cli.main(["ruin", "--out-dir", str(b), "--threads", "1", *args]) == 0
    for name in ("ruin.csv", "ruin.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = read_csv(a / "ruin.csv")
    assert list(rows[0]) == cli.RUIN_COLUMNS
    assert {r["method"] for r in rows} == {"tilted"} and {r["seed"] for r in rows} == {"3"}


def test_segments_with_figure(tmp_path):
    code = cli.main([
        "segments", "--out-dir", str(tmp_path), "--svg",
        "--set", "experiment.segments.m=2000", "--set", "experiment.segments.n_paths=3",
        "--set", "experiment.segments.m_grid=[100, 2000]",
    ])
    assert code == 0
    rows = read_csv(tmp_path / "segments.csv")
    assert list(rows[0]) == cli.SEGMENT_COLUMNS
    assert len(rows) == 6
    doc = json.loads((tmp_path / "segments.json").read_text())
    assert doc["limit_bracket"] == [pytest.approx(2.0), pytest.approx(2.0)]
    ET.parse(tmp_path / "segments.svg")


def test_configuration_errors_exit_1(tmp_path, capsys):
    assert cli.main(["rate", "--out-dir", str(tmp_path), "--set", "experiment.nope=1"]) == 1
    assert "experiment.nope" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        cli.main(["rate", "--format", "xml"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 1


def test_certification_failure_exits_2(tmp_path, capsys):
    code = cli.main(["ruin", "--out-dir", str(tmp_path), "--set", "experiment.mu=-0.5",
                     "--set", "experiment.ruin.n_paths=100"])
    assert code == 2
    assert "certification failure" in capsys.readouterr().err


def test_verify_subset(tmp_path, capsys):
    assert cli.main(["verify", "--out-dir", str(tmp_path), "--criteria", "4", "7"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] criterion 4" in out and "[PASS] criterion 7" in out
    rows = read_csv(tmp_path / "verify.csv")
    assert [r["criterion"] for r in rows] == ["4", "7"]


def test_failed_acceptance_exits_3(tmp_path, monkeypatch):
    def fake(which=None, *, threads=1, echo=print):
        return [CriterionResult("1", "stand-in", False, "forced failure", 0.0)]

    monkeypatch.setattr(cli, "run_suite", fake)
    assert cli.main(["verify", "--out-dir", str(tmp_path)]) == 3


def test_plain_serialisation():
    import numpy as np

    doc = cli.plain({"a": np.float64(1.5), "b": float("inf"), "c": Fraction(1, 3), "d": np.arange(2), "e": (1, None)})
    assert doc == {"a": 1.5, "b": "inf", "c": "1/3", "d": [0, 1], "e": [1, None]}
    json.dumps(doc, allow_nan=False)


def test_svg_renders_every_element():
    fig = Figure("t", "x", "y", logx=True).add([1, 10, 100], [0.0, 1.0, float("nan")], "s")
    fig.hlines.append((0.5, "ref"))
    fig.band = ([1, 100], [0, 0], [1, 1], "band")
    root = ET.fromstring(render(fig))
    assert root.tag.endswith("svg")
    assert "ref" in render(fig) and "band" in render(fig)


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "memrates.cli", "tables", "--out-dir", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "tables.csv").exists()
