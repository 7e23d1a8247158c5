import json
import math

import numpy as np
import pytest

from levelcurv import NonConvexSlice
from levelcurv import cli
from levelcurv.io import (load_config, load_slice_csv, parse_boundary, read_csv,
                          save_slice_csv, write_csv, write_json)
from levelcurv.support_geometry import SupportSlice, build_grid, ellipsoid_support


# --------------------------------------------------------------------------
# CSV and JSON
# --------------------------------------------------------------------------

def test_csv_is_rfc4180_with_full_precision(tmp_path):
    path = write_csv(tmp_path / "a.csv", ["x", "flag", "k"], [(1 / 3, True, 2)])
    raw = path.read_bytes()
    assert raw == b"x,flag,k\r\n0.33333333333333331,true,2\r\n"
    assert not list(tmp_path.glob(".*tmp"))


@pytest.mark.parametrize("n,res", [(2, 16), (2, 33), (3, 8)])
def test_slice_roundtrip_is_exact(tmp_path, n, res):
    g = build_grid(n, res)
    h = (1.5 + 0.2 * np.cos(g.coords[0]) if n == 2 else ellipsoid_support(g.Y, (2, 1.5, 1)))
    slc = SupportSlice(g, h)
    back = load_slice_csv(save_slice_csv(tmp_path / "s.csv", slc))
    assert back.grid.dim_n == n
    np.testing.assert_array_equal(back.h, slc.h)


def test_slice_reader_rejects_bad_files(tmp_path):
    (tmp_path / "bad.csv").write_text("a,b\r\n1,2\r\n")
    with pytest.raises(ValueError):
        load_slice_csv(tmp_path / "bad.csv")
    (tmp_path / "gap.csv").write_text("theta,h\r\n0,1\r\n1,1\r\n2,1\r\n")
    with pytest.raises(ValueError):
        load_slice_csv(tmp_path / "gap.csv")
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(ValueError):
        read_csv(tmp_path / "empty.csv")


def test_json_is_sorted_and_nan_free(tmp_path):
    path = write_json(tmp_path / "d.json", {"b": np.float64(np.nan), "a": np.arange(2)})
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [0, 1], "b": None}


# --------------------------------------------------------------------------
# boundaries and configs
# --------------------------------------------------------------------------

def test_parse_boundary_forms(tmp_path):
    th = build_grid(2, 16).coords[0]
    np.testing.assert_allclose(parse_boundary("circle 0.5 0 2", 16), 2 + 0.5 * np.cos(th))
    np.testing.assert_allclose(parse_boundary("ellipse 2 2", 16), 2.0)
    g = build_grid(2, 8)
    save_slice_csv(tmp_path / "c.csv", SupportSlice(g, 1 + 0.1 * np.cos(g.coords[0])))
    h = parse_boundary("c.csv", 16, base_dir=tmp_path)
    np.testing.assert_allclose(h, 1 + 0.1 * np.cos(th), atol=1e-14)


@pytest.mark.parametrize("text", ["", "circle 1 2", "circle 0 0 -1", "ellipse 1",
                                  "ellipse 1 -2", "circle a b c", "missing.csv"])
def test_parse_boundary_rejects(text):
    with pytest.raises((ValueError, FileNotFoundError)):
        parse_boundary(text, 16)


def test_config_without_section_and_overrides(tmp_path):
    (tmp_path / "run.ini").write_text("n = 3   # dimension\nr_max = 12\n")
    vals = load_config(tmp_path / "run.ini", ["r_max=20", "n_t = 64"])
    assert vals == {"n": "3", "r_max": "20", "n_t": "64"}
    with pytest.raises(ValueError):
        load_config(None, ["novalue"])


# --------------------------------------------------------------------------
# command line
# --------------------------------------------------------------------------

def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_catenoid_command_writes_artifacts(tmp_path, capsys):
    code, out, _ = run(capsys, "catenoid", "--set", "n=3", "--set", "r_max=10",
                       "--out", str(tmp_path))
    assert code == 0 and "PASS" in out
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["exit_code"] == 0 and manifest["passed"]
    assert manifest["config"]["n"] == 3 and manifest["config"]["r_max"] == 10.0
    assert set(manifest["artifacts"]) == {p.name for p in tmp_path.iterdir()}
    assert "wall_clock_seconds" not in manifest
    header, data = read_csv(tmp_path / "catenoid_profile.csv")
    assert header[0] == "t" and data.shape[1] == len(header)


def test_failing_check_gives_exit_two(tmp_path, capsys):
    code, out, _ = run(capsys, "catenoid", "--set", "n=4", "--set", "r_max=20",
                       "--out", str(tmp_path))
    assert code == 2 and "FAIL  asymptotic_bounded_verbatim" in out
    assert json.loads((tmp_path / "manifest.json").read_text())["exit_code"] == 2


def test_magnitude_convention_passes_for_n4(tmp_path, capsys):
    code, _, _ = run(capsys, "catenoid", "--set", "n=4", "--set", "r_max=20",
                     "--set", "convention=magnitude", "--out", str(tmp_path))
    assert code == 0


@pytest.mark.parametrize("argv,needle", [
    (["catenoid", "--set", "n=1"], "n must be"),
    (["catenoid", "--set", "r_max=1.5"], "r_max"),
    (["catenoid", "--set", "bogus=1"], "unknown configuration keys"),
    (["catenoid", "--set", "n=three"], "invalid value"),
    (["radial", "--set", "height=50"], "not attainable"),
    (["ring2d", "--set", "inner=circle 0 0 9"], "inside"),
    (["convergence", "--set", "study=nope"], "unknown study"),
    (["lemma32", "--set", "dims=2,x"], "invalid dims"),
])
def test_errors_give_exit_one(tmp_path, capsys, argv, needle):
    code, _, err = run(capsys, *argv, "--out", str(tmp_path))
    assert code == 1 and needle in err


def test_non_convex_boundary_file(tmp_path, capsys):
    g = build_grid(2, 64)
    th = g.coords[0]
    save_slice_csv(tmp_path / "bad.csv", SupportSlice(g, 1 + 0.9 * np.cos(2 * th)))
    (tmp_path / "run.ini").write_text("inner = bad.csv\n")
    code, _, err = run(capsys, "ring2d", "--config", str(tmp_path / "run.ini"),
                       "--out", str(tmp_path / "o"))
    assert code == 1 and NonConvexSlice.__name__ in err


def test_unknown_command_and_help(capsys):
    assert cli.main(["explode"]) == 1
    assert cli.main(["--help"]) == 0


def test_lemma32_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "lemma32", "--set", "trials=300", "--out", str(a))[0] == 0
    assert run(capsys, "lemma32", "--set", "trials=300", "--out", str(b))[0] == 0
    for f in a.iterdir():
        assert f.read_bytes() == (b / f.name).read_bytes()
    assert json.loads((a / "manifest.json").read_text())["seed"] == 0


def test_timing_flag(tmp_path, capsys):
    run(capsys, "lemma32", "--set", "trials=50", "--timing", "--out", str(tmp_path))
    assert json.loads((tmp_path / "manifest.json").read_text())["wall_clock_seconds"] > 0


def test_output_directory_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path))
    assert run(capsys, "lemma32", "--set", "trials=50")[0] == 0
    assert (tmp_path / "lemma32-seed0" / "manifest.json").exists()


def test_concentric_ring_uses_radial_oracle(tmp_path, capsys):
    R = math.cosh(math.acosh(1.2) + 1.0)
    code, out, _ = run(capsys, "ring2d", "--set", "inner=circle 0 0 1.2",
                       "--set", f"outer=circle 0 0 {R!r}", "--out", str(tmp_path))
    assert code == 0
    names = [c["name"] for c in json.loads((tmp_path / "manifest.json").read_text())["checks"]]
    assert any("oracle" in n for n in names)


def test_unreachable_output_directory(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "lemma32", "--set", "trials=20", "--out", str(blocker / "sub"))
    assert code == 1 and "cannot write" in err
