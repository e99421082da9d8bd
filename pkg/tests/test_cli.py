import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from liouville_dmd.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def osc_dir(tmp_path):
    d = tmp_path / "data"
    assert main(["synth", "oscillator", "--count", "10", "--T", "1", "--dt", "0.005", "-o", str(d)]) == EXIT_OK
    return d


@pytest.fixture
def fitted(osc_dir, tmp_path):
    out = tmp_path / "fit"
    argv = ["decompose", str(osc_dir), "--mu", "5", "--segment-len", "40", "--segment-stride", "40", "-o", str(out)]
    assert main(argv) == EXIT_OK
    return out


class TestSynth:
    def test_deterministic(self, tmp_path):
        for d in ("a", "b"):
            assert main(["synth", "vanderpol", "--count", "3", "--seed", "9", "-o", str(tmp_path / d)]) == 0
        names = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert len(names) == 3
        for n in names:
            assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()

    def test_count_zero(self, tmp_path):
        assert main(["synth", "oscillator", "--count", "0", "-o", str(tmp_path / "z")]) == EXIT_OK
        assert list((tmp_path / "z").iterdir()) == []

    def test_round_trip(self, osc_dir):
        from liouville_dmd import load_trajectories
        trajs = load_trajectories(osc_dir)
        assert len(trajs) == 10 and all(len(t) == 201 and t.dim == 2 for t in trajs)
        # initial conditions lie in the unit box
        assert np.abs(np.array([t.start for t in trajs])).max() <= 1

    def test_unknown_system(self, tmp_path, capsys):
        assert main(["synth", "lorenz", "-o", str(tmp_path)]) == EXIT_USAGE
        assert "unknown system" in capsys.readouterr().err


class TestDecompose:
    def test_defaults_give_one_row_per_file(self, osc_dir, tmp_path):
        out = tmp_path / "o"
        assert main(["decompose", str(osc_dir), "-o", str(out)]) == EXIT_OK
        assert len(rows(out / "eigenvalues.csv")) == 1 + 10
        assert {p.name for p in out.iterdir()} == {"model.json", "eigenvalues.csv", "modes.csv", "run_meta.json"}

    def test_artifact_schemas(self, fitted):
        eig = rows(fitted / "eigenvalues.csv")
        assert eig[0] == ["index", "re", "im"] and eig[1][0] == "1" and len(eig) == 51
        modes = rows(fitted / "modes.csv")
        assert modes[0][:4] == ["xi1_re", "xi1_im", "xi2_re", "xi2_im"]
        assert len(modes) == 1 + 2 and all(len(r) == 100 for r in modes)
        meta = json.loads((fitted / "run_meta.json").read_text())
        assert len(meta["quadrature_rules"]) == 50 and meta["eps_hat"] > 0
        assert len(meta["files"]) == 10 and all(len(f["sha256"]) == 64 for f in meta["files"])
        assert set(meta["timings_s"]) == {"load", "fit", "total"}

    def test_byte_identical_across_runs_and_jobs(self, osc_dir, fitted, tmp_path):
        out = tmp_path / "again"
        argv = ["decompose", str(osc_dir), "--mu", "5", "--segment-len", "40", "--segment-stride", "40",
                "--jobs", "3", "-o", str(out)]
        assert main(argv) == EXIT_OK
        for name in ("eigenvalues.csv", "modes.csv", "model.json"):
            assert (out / name).read_bytes() == (fitted / name).read_bytes()

    def test_empty_directory(self, tmp_path, capsys):
        (tmp_path / "empty").mkdir()
        assert main(["decompose", str(tmp_path / "empty"), "-o", str(tmp_path / "o")]) == EXIT_DATA
        assert "no trajectories found" in capsys.readouterr().err
        assert not (tmp_path / "o").exists()

    def test_corrupt_row(self, osc_dir, tmp_path, capsys):
        path = osc_dir / "oscillator_0004.csv"
        lines = path.read_text().splitlines()
        lines[6] = "0.025,1.0,oops"
        path.write_text("\n".join(lines) + "\n")
        assert main(["decompose", str(osc_dir), "-o", str(tmp_path / "o")]) == EXIT_DATA
        assert "oscillator_0004.csv:7" in capsys.readouterr().err

    def test_numeric_failure_leaves_nothing(self, osc_dir, tmp_path, capsys):
        out = tmp_path / "o"
        assert main(["decompose", str(osc_dir), "--eps", "0", "--segment-len", "2", "--segment-stride", "1",
                     "--mu", "1000", "-o", str(out)]) == EXIT_NUMERIC
        assert "numeric error" in capsys.readouterr().err
        assert not out.exists() or not any(out.iterdir())

    @pytest.mark.parametrize("argv", [
        ["--kernel", "laplace"], ["--scale-a", "1.5"], ["--order", "energy"], ["--quadrature", "gauss"],
        ["--jobs", "0"], ["--x0", "a,b"],
    ])
    def test_usage_errors(self, osc_dir, tmp_path, argv, capsys):
        code = main(["decompose", str(osc_dir), "-o", str(tmp_path / "o"), *argv])
        assert code in (EXIT_USAGE, EXIT_DATA)
        assert code == (EXIT_DATA if argv[0] == "--scale-a" else EXIT_USAGE)

    def test_energy_order(self, osc_dir, tmp_path):
        out = tmp_path / "o"
        assert main(["decompose", str(osc_dir), "--mu", "5", "--segment-len", "40", "--order", "energy",
                     "--x0", "1,0", "-o", str(out)]) == EXIT_OK
        first = rows(out / "eigenvalues.csv")[1]
        assert abs(float(first[1])) < 1e-3 and abs(float(first[2]) - 1) < 1e-3

    def test_config_file_and_flag_precedence(self, osc_dir, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text('kernel = "gaussian"\nmu = 2.0\nsegment-len = 40\nsegment_stride = 40\nscale_a = 0.9\n')
        out = tmp_path / "o"
        assert main(["decompose", str(osc_dir), "--config", str(cfg), "--mu", "5", "-o", str(out)]) == EXIT_OK
        meta = json.loads((out / "run_meta.json").read_text())["config"]
        assert (meta["mu"], meta["segment_len"], meta["scale_a"]) == (5.0, 40, 0.9)

    @pytest.mark.parametrize("text", ["bogus = 1\n", "mu = \n", 'kernel = "laplace"\n'])
    def test_bad_config(self, osc_dir, tmp_path, text):
        cfg = tmp_path / "run.toml"
        cfg.write_text(text)
        assert main(["decompose", str(osc_dir), "--config", str(cfg)]) == EXIT_USAGE


class TestReconstruct:
    def test_rotation_rmse(self, fitted):
        out = fitted
        assert main(["reconstruct", str(fitted / "model.json"), "--x0", "1,0", "--t-grid", "0:1:201",
                     "-o", str(out)]) == EXIT_OK
        table = rows(out / "reconstruction.csv")
        assert table[0] == ["t", "x1", "x2", "imag_residual"]
        data = np.array(table[1:], dtype=float)
        t = data[:, 0]
        exact = np.column_stack([np.cos(t), -np.sin(t)])
        assert np.sqrt(np.mean(np.sum((data[:, 1:3] - exact) ** 2, axis=1))) < 0.05
        assert data[:, 3].max() < 1e-6

    def test_training_initial_condition(self, osc_dir, fitted):
        from liouville_dmd import load_trajectories
        tr = load_trajectories(osc_dir / "oscillator_0002.csv")[0]
        x0 = ",".join(format(v, ".17g") for v in tr.start)
        assert main(["reconstruct", str(fitted / "model.json"), f"--x0={x0}", "--t-grid", "0:1:201",
                     "-o", str(fitted)]) == EXIT_OK
        data = np.array(rows(fitted / "reconstruction.csv")[1:], dtype=float)
        assert np.sqrt(np.mean(np.sum((data[:, 1:3] - tr.states) ** 2, axis=1))) < 0.05

    def test_two_point_list(self, fitted):
        assert main(["reconstruct", str(fitted / "model.json"), "--x0", "1,0", "--t-grid", "0,0.5",
                     "-o", str(fitted)]) == EXIT_OK
        assert len(rows(fitted / "reconstruction.csv")) == 3

    def test_stale_model(self, osc_dir, fitted, capsys):
        with open(osc_dir / "oscillator_0000.csv", "a") as fh:
            fh.write("5,0,0\n")
        assert main(["reconstruct", str(fitted / "model.json"), "--x0", "1,0", "--t-grid", "0:1:3",
                     "-o", str(fitted)]) == EXIT_DATA
        assert "digest" in capsys.readouterr().err

    @pytest.mark.parametrize("grid", ["0:1", "1", "a:b:c", "0:-1:5"])
    def test_bad_grid(self, fitted, grid):
        code = main(["reconstruct", str(fitted / "model.json"), "--x0", "1,0", "--t-grid", grid, "-o", str(fitted)])
        assert code in (EXIT_USAGE, EXIT_DATA) and code != EXIT_OK

    def test_missing_model(self, tmp_path):
        assert main(["reconstruct", str(tmp_path / "nope.json"), "--x0", "1,0", "--t-grid", "0:1:3"]) == EXIT_DATA


class TestSpectrum:
    def test_rows_and_log(self, fitted):
        assert main(["spectrum", str(fitted / "model.json"), "-o", str(fitted)]) == EXIT_OK
        lin = np.array(rows(fitted / "spectrum.csv")[1:], dtype=float)
        eig = np.array(rows(fitted / "eigenvalues.csv")[1:], dtype=float)
        assert rows(fitted / "spectrum.csv")[0] == ["frequency_hz", "magnitude"]
        assert len(lin) == np.count_nonzero(eig[:, 2] >= 0)
        assert main(["spectrum", str(fitted / "model.json"), "--log", "-o", str(fitted)]) == EXIT_OK
        logged = np.array(rows(fitted / "spectrum.csv")[1:], dtype=float)
        np.testing.assert_allclose(logged[:, 1], np.log10(np.maximum(lin[:, 1], 1e-12)), rtol=1e-14)

    def test_log_of_unit_magnitude_is_zero(self, tmp_path):
        # one constant trajectory at c: xi = c, phi(c) = 1, magnitude |c| = 1
        d = tmp_path / "d"
        d.mkdir()
        (d / "c.csv").write_text("t,x1,x2\n0,0.6,0.8\n0.5,0.6,0.8\n1,0.6,0.8\n")
        assert main(["decompose", str(d), "--eps", "0", "-o", str(tmp_path)]) == EXIT_OK
        assert main(["spectrum", str(tmp_path / "model.json"), "--log", "--x0", "0.6,0.8", "-o", str(tmp_path)]) == 0
        (row,) = rows(tmp_path / "spectrum.csv")[1:]
        assert float(row[0]) == 0 and abs(float(row[1])) < 1e-14


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "liouville_dmd", "synth", "decay", "--count", "2",
                           "-o", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert len(list(tmp_path.glob("*.csv"))) == 2
    proc = subprocess.run([sys.executable, "-m", "liouville_dmd", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 2
