import csv
import filecmp
import os

import numpy as np
import pytest
from click.testing import CliRunner

from torus_pca.cli import EXIT_CONFIG, EXIT_PARSE, main
from torus_pca.errors import ParseError
from torus_pca.geometry import TWO_PI
from torus_pca.io import read_angles


def write(path, text):
    path.write_text(text)
    return str(path)


def blob_csv(path, seed=0, n=120):
    """Two angle blobs on a line, in degrees, with an id column."""
    rng = np.random.default_rng(seed)
    t = np.concatenate([rng.normal(-0.6, 0.12, n // 2), rng.normal(0.6, 0.12, n - n // 2)])
    X = np.column_stack([2 + t, 3 + 0.5 * t, 1 + 0.2 * t]) + rng.normal(0, 0.03, (n, 3))
    X = np.degrees(np.mod(X, TWO_PI))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "alpha", "beta", "gamma"])
        for i, row in enumerate(X):
            w.writerow([f"r{i}"] + [f"{v:.6f}" for v in row])
    return str(path)


class TestReadAngles:
    def test_degrees_wrap(self, tmp_path):
        t = read_angles(write(tmp_path / "a.csv", "a,b\n360,90\n-90,0\n"))
        assert t.shape == (2, 2)
        assert t.values[0, 0] == 0.0
        assert t.values[1, 0] == pytest.approx(1.5 * np.pi)
        assert t.names == ["a", "b"] and t.ids == ["1", "2"]

    def test_radians(self, tmp_path):
        t = read_angles(write(tmp_path / "a.csv", "a,b\n7.0,1.0\n"), unit="rad")
        assert t.values[0, 0] == pytest.approx(7.0 - TWO_PI)

    def test_id_column_and_size(self, tmp_path):
        rows = "\n".join(f"x{i}," + ",".join(str(10 * i + k) for k in range(7)) for i in range(190))
        t = read_angles(write(tmp_path / "a.csv", "id,a1,a2,a3,a4,a5,a6,a7\n" + rows + "\n"))
        assert t.shape == (190, 7)
        assert t.ids[0] == "x0"

    @pytest.mark.parametrize(
        "text, line",
        [
            ("1,2\n3,4\n", 1),
            ("a,b\n1,2\n3\n", 3),
            ("a,b\n1,2\n3,x\n", 3),
            ("a\n1\n", 1),
            ("id,a\nq,1\n", 1),
            ("a,b\n1,nan\n", 2),
        ],
    )
    def test_parse_errors_carry_line(self, tmp_path, text, line):
        with pytest.raises(ParseError) as info:
            read_angles(write(tmp_path / "a.csv", text))
        assert info.value.line == line
        assert f"line {line}" in str(info.value)

    def test_empty(self, tmp_path):
        with pytest.raises(ParseError):
            read_angles(write(tmp_path / "a.csv", "\n"))


class TestCli:
    def test_run_writes_report(self, tmp_path):
        src = blob_csv(tmp_path / "in.csv")
        out = tmp_path / "out"
        res = CliRunner().invoke(main, ["run", "--input", src, "--out-dir", str(out)])
        assert res.exit_code == 0, res.output
        for name in ("membership.csv", "report.txt", "summary.txt", "variance.csv", "projection.csv"):
            assert (out / name).exists()
        with open(out / "membership.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 120 and rows[0]["id"] == "r0"
        # nested means reported in [0, 360)
        for line in (out / "summary.txt").read_text().splitlines():
            for field in line.split():
                if field.startswith("nested_mean_deg="):
                    vals = [float(v) for v in field.split("=")[1].split(";")]
                    assert all(0 <= v < 360 for v in vals)
        # variance profiles are written per cluster and run d = 0..D
        with open(out / "variance.csv") as fh:
            var = list(csv.DictReader(fh))
        for cid in {r["cluster"] for r in var}:
            assert [int(r["d"]) for r in var if r["cluster"] == cid] == [0, 1, 2, 3]

    def test_run_is_byte_identical(self, tmp_path):
        src = blob_csv(tmp_path / "in.csv", seed=1)
        runner = CliRunner()
        for name in ("o1", "o2"):
            res = runner.invoke(main, ["run", "--input", src, "--out-dir", str(tmp_path / name), "--seed", "3"])
            assert res.exit_code == 0, res.output
        files = sorted(os.listdir(tmp_path / "o1"))
        assert "variance.svg" in files
        match, mismatch, errors = filecmp.cmpfiles(tmp_path / "o1", tmp_path / "o2", files, shallow=False)
        assert not mismatch and not errors

    def test_decompose(self, tmp_path):
        src = blob_csv(tmp_path / "in.csv")
        out = tmp_path / "dec"
        res = CliRunner().invoke(main, ["decompose", "--input", src, "--out-dir", str(out), "--variants", "GC-SO"])
        assert res.exit_code == 0, res.output
        assert "GC-SO" in res.output and (out / "variance.csv").exists()

    def test_precluster(self, tmp_path):
        src = blob_csv(tmp_path / "in.csv")
        out = tmp_path / "pc"
        res = CliRunner().invoke(main, ["precluster", "--input", src, "--out-dir", str(out)])
        assert res.exit_code == 0, res.output
        assert "outliers:" in res.output
        with open(out / "precluster.csv") as fh:
            assert len(list(csv.DictReader(fh))) == 120

    def test_simulate_test(self):
        res = CliRunner().invoke(main, ["simulate-test", "--sizes", "30", "--trials", "5"])
        assert res.exit_code == 0, res.output
        lines = res.output.strip().splitlines()
        assert lines[0] == "size,kind1_rate,kind2_rate,se1,se2"
        assert lines[1].startswith("30,")

    def test_plot(self, tmp_path):
        src = blob_csv(tmp_path / "in.csv")
        out = tmp_path / "out"
        runner = CliRunner()
        runner.invoke(main, ["run", "--input", src, "--out-dir", str(out), "--no-plots"])
        assert not (out / "variance.svg").exists()
        res = runner.invoke(main, ["plot", "--out-dir", str(out)])
        assert res.exit_code == 0, res.output
        assert (out / "variance.svg").read_text().lstrip().startswith("<?xml")

    def test_parse_error_exit_code(self, tmp_path):
        bad = write(tmp_path / "bad.csv", "a,b\n1,2\n3\n")
        res = CliRunner().invoke(main, ["run", "--input", bad, "--out-dir", str(tmp_path / "o")])
        assert res.exit_code == EXIT_PARSE == 2
        res = CliRunner().invoke(main, ["run", "--input", str(tmp_path / "missing.csv")])
        assert res.exit_code == EXIT_PARSE

    @pytest.mark.parametrize(
        "args",
        [["--threshold", "1.5"], ["--alpha", "0.7"], ["--variants", "XX-SI"], ["--min-cluster", "0"]],
    )
    def test_config_error_exit_code(self, tmp_path, args):
        src = blob_csv(tmp_path / "in.csv")
        res = CliRunner().invoke(main, ["run", "--input", src, "--out-dir", str(tmp_path / "o")] + args)
        assert res.exit_code == EXIT_CONFIG == 3

    def test_simulate_config_error(self):
        res = CliRunner().invoke(main, ["simulate-test", "--sizes", "a,b"])
        assert res.exit_code == EXIT_CONFIG
