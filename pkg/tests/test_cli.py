from __future__ import annotations

import csv
import json
import math
import subprocess
import sys

import pytest

from isodiam import profiles as pr
from isodiam.cli import main


def test_deficit_command(tmp_path, capsys):
    f = tmp_path / "ball.json"
    f.write_text(pr.ball_profile(3).to_json())
    assert main(["deficit", str(f), "--no-r-in"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["delta"] == pytest.approx(0.0, abs=1e-14)
    assert doc["diameter"] == pytest.approx(2.0, abs=1e-12)


def test_deficit_dimension_mismatch(tmp_path, capsys):
    f = tmp_path / "ball.json"
    f.write_text(pr.ball_profile(3).to_json())
    assert main(["--n", "2", "deficit", str(f)]) == 2
    assert "error:" in capsys.readouterr().err


def test_construct_round_trip(tmp_path):
    out = tmp_path / "e.json"
    assert main(["construct", "n2", "--eps", "0.03125", "--out", str(out)]) == 0
    P = pr.RadialProfile.from_json(out.read_text())
    assert P.n == 2 and P.r_max == pytest.approx(1 + 0.03125)
    assert main(["construct", "ballminus:r=0.3,x=0.2", "--out", str(out)]) == 0
    assert pr.isodiametric_deficit(pr.RadialProfile.from_json(out.read_text())) == pytest.approx(0.09 / 0.91, abs=1e-6)


def test_construct_errors(capsys):
    assert main(["construct", "n2"]) == 2
    assert main(["construct", "dodecahedron", "--eps", "0.1"]) == 2
    assert main(["construct", "n2", "--eps", "0.3"]) == 2
    err = capsys.readouterr().err
    assert err.count("error:") == 3


def test_reuleaux_command(capsys):
    assert main(["reuleaux", "--k", "7", "--d", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["perimeter"] == pytest.approx(2 * math.pi, abs=1e-12)
    assert doc["polygon_perimeter"] <= doc["perimeter"]
    assert main(["construct", "reuleaux:k=5"]) == 0
    assert main(["reuleaux", "--k", "4"]) == 2


def test_decay_command(tmp_path, capsys):
    out = tmp_path / "decay.csv"
    rc = main(["decay", "n2", "--eps-min", str(2 ** -9), "--eps-max", str(2 ** -5), "--steps", "5",
               "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 5
    summary = json.loads(capsys.readouterr().err)
    assert 1.9 <= summary["slope"] <= 2.1


def test_decay_exit_code_follows_tol(tmp_path):
    args = ["decay", "n2", "--eps-min", str(2 ** -9), "--eps-max", str(2 ** -5), "--steps", "5",
            "--out", str(tmp_path / "d.csv")]
    assert main(["--tol", "1e-9"] + args) == 1


def test_rearrange_command(tmp_path, capsys):
    f = tmp_path / "balls.json"
    f.write_text(json.dumps([{"center": [0.2, 0.0], "radius": 0.5}]))
    assert main(["rearrange", str(f), "--grid", "64", "--samples", "2000"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["known_volume"] == pytest.approx(math.pi * 0.25)
    assert abs(doc["volume"] - doc["known_volume"]) <= 3 * doc["volume_se"] + 0.02
    f.write_text("[{]")
    assert main(["rearrange", str(f)]) == 2


def test_verify_command(tmp_path, capsys):
    out = tmp_path / "report.json"
    corpus = json.dumps({"random_profiles": 3, "random_hulls": 3, "profile_hulls": 1, "cauchy_polytopes": 1,
                         "cauchy_directions": 2000, "rearrange_sets": 1, "rearrange_grid": 64,
                         "rearrange_samples": 1000})
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2}')
    assert main(["verify", "--corpus", corpus, "--out", str(out)]) == 0
    assert json.loads(out.read_text())["passed"]
    assert "PASS closed_forms" in capsys.readouterr().err
    assert main(["verify", "--corpus", corpus, "--profile", str(bad), "--out", str(out)]) == 1
    assert "FAIL profile[0]" in capsys.readouterr().err


def test_missing_file_and_threads(capsys):
    assert main(["deficit", "/nonexistent/profile.json"]) == 2
    assert main(["--threads", "0", "reuleaux"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "isodiam", "reuleaux", "--k", "3"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["k"] == 3
