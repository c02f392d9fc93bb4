import csv
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from hexatile.cli import EXIT_FLAGS, EXIT_RANGE, EXIT_TOLERANCE, run
from hexatile.lattice import PathSystem, read_tiling, write_tiling


def rows(path):
    with open(path) as f:
        return list(csv.reader(f))


def test_sample_outputs(tmp_path):
    out = tmp_path / "s"
    assert run(["sample", "--n", "3", "--alpha", "1/4", "--count", "4", "--seed", "9", "--out", str(out)]) == 0
    files = sorted(out.glob("tiling_*.json"))
    assert len(files) == 4
    p, a = read_tiling(files[0])
    assert p.n == 3 and a == Fraction(1, 4)
    obj = json.loads(files[0].read_text())
    assert obj["alpha"] == "1/4"
    r = rows(out / "densities.csv")
    assert r[0] == ["x", "y", "parity", "p_I", "p_II", "p_III", "se_I", "se_II", "se_III", "samples"]
    assert len(r) == 1 + 3 * 9
    for line in r[1:]:
        assert sum(Fraction(v) for v in line[3:6]) == 1


def test_sample_is_deterministic(tmp_path):
    args = ["sample", "--n", "4", "--alpha", "1/3", "--count", "3", "--seed", "2"]
    assert run(args + ["--out", str(tmp_path / "a")]) == 0
    assert run(args + ["--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_sample_float_and_mcmc(tmp_path):
    assert run(["sample", "--n", "14", "--alpha", "0.5", "--mode", "float", "--out", str(tmp_path / "f")]) == 0
    assert run(["sample", "--n", "3", "--alpha", "1/2", "--method", "mcmc", "--count", "2", "--out", str(tmp_path / "m"), "--output", "aggregate"]) == 0
    assert not list((tmp_path / "m").glob("*.json"))
    assert run(["sample", "--n", "20", "--alpha", "1/2", "--method", "mcmc", "--sweeps", "2", "--out", str(tmp_path / "big")]) == 0
    assert run(["sample", "--n", "14", "--alpha", "1/2", "--out", str(tmp_path / "x")]) == EXIT_RANGE


def test_densities_exact(capsys):
    assert run(["densities", "--n", "2", "--alpha", "1/4", "--exact", "--faces", "1,0"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "x,y,parity,p_I,p_II,p_III,source"
    assert out[1] == "1,0,1,125/689,132/689,432/689,exact"


def test_densities_float(tmp_path):
    f = tmp_path / "d.csv"
    assert run(["densities", "--n", "3", "--alpha", "1/2", "--out", str(f)]) == 0
    r = rows(f)
    assert len(r) == 1 + 3 * 9 - 3
    assert {line[-1] for line in r[1:]} <= {"float", "exact"}
    assert all(float(v) == float(repr(float(v))) for line in r[1:] for v in line[3:6])


def test_densities_range():
    assert run(["densities", "--n", "2", "--alpha", "1/4", "--faces", "0,0"]) == EXIT_RANGE
    assert run(["densities", "--n", "2", "--alpha", "1/4", "--faces", "1"]) == EXIT_FLAGS


def test_densities_tolerance(capsys):
    code = run(["densities", "--n", "3", "--alpha", "1/2", "--faces", "2,2", "--tol", "1e-30", "--no-fallback"])
    assert code == EXIT_TOLERANCE


def test_kernel(capsys):
    assert run(["kernel", "--n", "1", "--alpha", "1/3", "--query", "1,0,1,0"]) == 0
    out = capsys.readouterr().out
    assert "exact=1/4" in out
    assert abs(float(out.split("float=")[1]) - 0.25) < 1e-12
    assert run(["kernel", "--n", "2", "--alpha", "1/3", "--query", "0,0,1,1"]) == EXIT_RANGE
    assert run(["kernel", "--n", "2", "--alpha", "2", "--query", "1,0,1,1"]) == EXIT_RANGE
    assert run(["kernel", "--n", "2", "--alpha", "one", "--query", "1,0,1,1"]) == EXIT_FLAGS
    assert run(["kernel", "--n", "2", "--alpha", "1/3", "--query", "1,0,1"]) == EXIT_FLAGS
    assert run(["kernel", "--n", "2", "--alpha", "1/3", "--query", "1,1,1,1", "--tol", "0"]) == EXIT_TOLERANCE


def test_flag_errors():
    assert run([]) == EXIT_FLAGS
    assert run(["bogus"]) == EXIT_FLAGS
    assert run(["sample", "--n", "2"]) == EXIT_FLAGS
    assert run(["sample", "--n", "0", "--alpha", "1/2", "--out", "x"]) == EXIT_FLAGS


def test_region(tmp_path):
    assert run(["region", "--alpha", "1", "--resolution", "400", "--out", str(tmp_path), "--heatmap", "6"]) == 0
    obj = json.loads((tmp_path / "region.json").read_text())
    assert obj["alpha"] == "1/1" and obj["regime"] == "high"
    assert set(obj["tangency"]) == {f"{k}{i}" for k in "ABCD" for i in (1, 2)}
    for line in obj["boundary"]:
        for xi, eta in line:
            assert abs((4 * xi * xi - 4 * xi * eta + 4 * eta * eta) ** 0.5 / 3**0.5 - 1) < 1e-3
    assert (tmp_path / "region.svg").read_text().startswith("<?xml")
    r = rows(tmp_path / "heatmap.csv")
    assert r[0] == ["xi", "eta", "parity", "p_I", "p_II", "p_III", "classification"]


def test_region_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run(["region", "--alpha", "1/16", "--resolution", "80", "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "region.json").read_bytes() == (tmp_path / "b" / "region.json").read_bytes()


def test_verify(capsys):
    assert run(["verify", "--max-n", "2"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "32/32 checks passed" in out
    assert run(["verify", "--max-n", "5"]) == EXIT_RANGE
    assert run(["verify", "--alphas", "0.25"]) == 0
    assert "alpha=1/4" in capsys.readouterr().out
    assert run(["verify", "--alphas", "3"]) == EXIT_RANGE


def test_render(tmp_path):
    t = tmp_path / "t.json"
    write_tiling(t, PathSystem.staircase(4), Fraction(1, 100))
    assert run(["region", "--alpha", "1/20", "--resolution", "60", "--out", str(tmp_path)]) == 0
    svg = tmp_path / "t.svg"
    assert run(["render", str(t), "--out", str(svg), "--overlay", str(tmp_path / "region.json")]) == 0
    text = svg.read_text()
    assert text.count("<polygon") == 3 * 16 and "<polyline" in text
    assert run(["render", str(tmp_path / "missing.json"), "--out", str(svg)]) == EXIT_FLAGS
    (tmp_path / "bad.json").write_text("{}")
    assert run(["render", str(tmp_path / "bad.json"), "--out", str(svg)]) == EXIT_RANGE


def test_render_accepts_sample_output(tmp_path):
    assert run(["sample", "--n", "5", "--alpha", "1/2", "--count", "2", "--out", str(tmp_path)]) == 0
    for f in tmp_path.glob("tiling_*.json"):
        assert run(["render", str(f), "--out", str(f.with_suffix(".svg"))]) == 0


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "hexatile.cli", "kernel", "--n", "1", "--alpha", "1", "--query", "1,1,1,1"], capture_output=True, text=True)
    assert r.returncode == 0 and "exact=1/2" in r.stdout
