import subprocess
import sys

import numpy as np
import pytest

from nvdiamond import cli
from nvdiamond.config import DEFAULTS, ConfigError, format_config, parse_config
from nvdiamond.odmr_synth import read_map_csv, read_pgm
from nvdiamond.spectra import read_lines_csv

SMALL = "sweep.n_points = 200\nmap.f_points = 120\nmap.B_points = 40\n"


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# small run\n" + SMALL)
    return str(path)


def run(*args):
    return cli.main([str(a) for a in args])


def test_parse_config_basics():
    values = parse_config("# header\n\nnv.D_ghz = 2.9  # trailing\n")
    assert values["nv.D_ghz"] == 2.9 and values["nv.E_mhz"] == 10.0
    assert parse_config("fit.free_DE = TRUE\n")["fit.free_DE"] is True
    assert parse_config("sweep.n_points = 10\n")["sweep.n_points"] == 10


@pytest.mark.parametrize("text,needle", [
    ("nv.bogus = 1\n", "nv.bogus"),
    ("\n\nnv.D_ghz = abc\n", "line 3"),
    ("nv.D_ghz\n", "line 1"),
    ("nv.D_ghz = 1\nnv.D_ghz = 2\n", "duplicate"),
    ("rates.T_I_NV_inv_hz = -1\n", "non-negative"),
    ("orientation.frame = polar\n", "frame"),
    ("fit.free_DE = maybe\n", "fit.free_DE"),
    ("sweep.n_points = 1.5\n", "sweep.n_points"),
])
def test_parse_config_errors(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(text)


def test_format_config_round_trip():
    assert parse_config(format_config(DEFAULTS)) == DEFAULTS


def test_spectrum_counts(tmp_path, cfg):
    out = tmp_path / "nv.csv"
    assert run("--config", cfg, "--out", out, "spectrum") == 0
    assert len(read_lines_csv(out)) == 12
    assert run("--config", cfg, "spectrum", "--system", "P1", "--out", tmp_path / "p1.csv") == 0
    assert len(read_lines_csv(tmp_path / "p1.csv")) == 36
    assert run("--config", cfg, "spectrum", "--unidentified-ghz", "2.169", "--out", tmp_path / "u.csv") == 0
    assert any(ln.family == "UNIDENTIFIED" for ln in read_lines_csv(tmp_path / "u.csv"))


def test_threads_do_not_change_output(tmp_path, cfg):
    run("--config", cfg, "--out", tmp_path / "a.csv", "spectrum")
    run("--config", cfg, "--out", tmp_path / "b.csv", "--threads", "4", "spectrum")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_bad_config_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nv.bogus = 1\n")
    assert run("--config", bad, "--out", tmp_path / "x.csv", "spectrum") == 2
    assert "nv.bogus" in capsys.readouterr().err
    assert run("--config", tmp_path / "missing.cfg", "--out", tmp_path / "x.csv", "spectrum") == 2
    assert run("spectrum") == 2  # no --out


def test_map_outputs(tmp_path, cfg):
    lines = tmp_path / "lines.csv"
    run("--config", cfg, "--out", lines, "spectrum")
    assert run("--config", cfg, "map", "--lines", lines, "--out", tmp_path / "m.csv") == 0
    assert run("--config", cfg, "map", "--lines", lines, "--format", "pgm", "--out", tmp_path / "m.pgm") == 0
    m = read_map_csv(tmp_path / "m.csv")
    assert (tmp_path / "m.pgm").read_bytes()[:2] == b"P5"
    assert np.array_equal(read_pgm(tmp_path / "m.pgm"), np.round(255 * m.signal).astype(np.uint8))


def test_map_empty_lines(tmp_path, cfg):
    empty = tmp_path / "empty.csv"
    empty.write_text("family,axis,B_tesla,f_hz,strength\n")
    assert run("--config", cfg, "map", "--lines", empty, "--out", tmp_path / "m.csv") == 0
    assert not read_map_csv(tmp_path / "m.csv").signal.any()
    assert run("--config", cfg, "map", "--lines", tmp_path / "nope.csv", "--out", tmp_path / "m.csv") == 2


def test_fit_orientation_cli(tmp_path):
    from nvdiamond.fitting import synthetic_points, write_points_csv

    pts = tmp_path / "pts.csv"
    write_points_csv(synthetic_points((-4.0, 95.0), np.linspace(0, 0.15, 31)), pts)
    out = tmp_path / "fit.csv"
    assert run("fit-orientation", "--points", pts, "--out", out) == 0
    row = out.read_text().splitlines()[1].split(",")
    assert abs(float(row[0]) + 4.0) < 0.05 and abs(float(row[1]) - 95.0) < 0.05 and row[5] == "true"
    short = tmp_path / "short.cfg"
    short.write_text("fit.max_iter = 2\n")
    assert run("--config", short, "fit-orientation", "--points", pts, "--out", out) == 0
    assert out.read_text().splitlines()[1].endswith(",false")
    assert run("fit-orientation", "--points", tmp_path / "missing.csv", "--out", out) == 2


def test_steady_state_cli(tmp_path, cfg):
    out = tmp_path / "ss.csv"
    assert run("--config", cfg, "steady-state", "--out", out) == 0
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert out.read_text().startswith("T1O_inv_hz,Pz_NV,Pz_P1\n")
    assert rows[0, 1] == pytest.approx(-9.758e-3, rel=1e-3)
    assert np.all(np.diff(rows[:, 1]) < 0)
    assert run("--config", cfg, "steady-state", "--sweep", "B", "--out", tmp_path / "b.csv") == 0
    rows = np.loadtxt(tmp_path / "b.csv", delimiter=",", skiprows=1)
    assert rows.shape == (200, 3) and np.all(np.abs(rows[:, 1:]) <= 1)
    neg = tmp_path / "neg.cfg"
    neg.write_text("rates.T_1T_NV_inv_hz = -25\n")
    assert run("--config", neg, "steady-state", "--out", out) == 2


def test_cavity_cli(tmp_path):
    model = tmp_path / "r.csv"
    assert run("cavity", "model", "--out", model) == 0
    mid = model.read_text().splitlines()[1 + 200].split(",")
    assert float(mid[3]) == pytest.approx(0.2994, abs=1e-3)
    fit = tmp_path / "fit.csv"
    assert run("cavity", "fit", "--data", model, "--out", fit) == 0
    vals = [float(x) for x in fit.read_text().splitlines()[1].split(",")]
    assert vals[1] == pytest.approx(1.15e6, rel=1e-3) and vals[2] == pytest.approx(0.62e6, rel=1e-3)
    v = tmp_path / "v.csv"
    v.write_text("T1O_inv_hz,vartheta\n0,0.1\n")
    assert run("cavity", "extract", "--data", v, "--out", tmp_path / "e.csv") == 3
    v.write_text("T1O_inv_hz,vartheta\n25,0.1\n")
    assert run("cavity", "extract", "--data", v, "--out", tmp_path / "e.csv") == 0
    assert run("cavity", "fit", "--out", fit) == 2


def test_seed_controls_noise(tmp_path):
    noisy = tmp_path / "n.cfg"
    noisy.write_text("cavity.noise = 0.01\n")
    outs = []
    for seed in ("1", "1", "2"):
        p = tmp_path / f"r{len(outs)}.csv"
        run("--config", noisy, "--seed", seed, "cavity", "model", "--out", p)
        outs.append(p.read_bytes())
    assert outs[0] == outs[1] != outs[2]


def test_help_exits_zero():
    for args in ([], ["spectrum"], ["map"], ["fit-orientation"], ["steady-state"], ["cavity"]):
        with pytest.raises(SystemExit) as info:
            cli.main(args + ["--help"])
        assert info.value.code == 0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "nvdiamond.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "steady-state" in res.stdout
