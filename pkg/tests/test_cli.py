import csv
import io
import json
import subprocess
import sys

import pytest

from latepoints.cli import EXIT_INVALID, EXIT_OK, EXIT_USAGE, run
from latepoints.late_sim import CSV_HEADER


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_exponent_example(capsys):
    code, out, _ = call(capsys, "exponent", "--j", "2", "--alpha", "0.25", "--beta", "0.5")
    assert code == EXIT_OK
    value, branch = out.split()
    assert float(value) == pytest.approx(7 / 3, abs=1e-12) and branch == "branch=first"


def test_exponent_prob_variant(capsys):
    code, out, _ = call(capsys, "exponent", "--j", "2", "--alpha", "0.81", "--beta", "0.5", "--variant", "prob")
    assert code == EXIT_OK and out.split() == ["0.72", "branch=second"]


def test_exponent_json(capsys):
    code, out, _ = call(capsys, "exponent", "--j", "1", "--alpha", "0.3", "--beta", "0.5", "--format", "json")
    rec = json.loads(out)
    assert rec["rho_hat"] == pytest.approx(1.4) and rec["crossover_beta"] is None


def test_exponent_grid_csv(capsys):
    code, out, _ = call(capsys, "exponent-grid", "--j-max", "2", "--alpha-grid", "0.25,0.5", "--beta-grid", "0.5")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["j", "alpha", "beta", "rho_hat", "rho", "branch"]
    assert len(rows) == 5


def test_chi_example(capsys):
    code, out, _ = call(capsys, "chi", "--matrix", "[[1,0.5,0.5],[0.5,1,0.5],[0.5,0.5,1]]", "--eta", "0.3")
    assert code == EXIT_OK and out.strip() == "1.5"


def test_chi_exact_and_file(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text("[[1,0.4,0.2],[0.4,1,0.2],[0.2,0.2,1]]")
    code, out, _ = call(capsys, "chi", "--matrix", f"@{path}", "--exact", "--format", "json")
    assert code == EXIT_OK and json.loads(out)["chi"] == "65/33"


def test_decompose_json(capsys):
    code, out, _ = call(capsys, "decompose", "--matrix", "[[1,0.4,0.2],[0.4,1,0.2],[0.2,0.2,1]]", "--format", "json")
    rec = json.loads(out)
    assert rec["tree"]["separation"] == 0.2 and rec["xi"] == pytest.approx(1.4)


def test_green(capsys):
    code, out, _ = call(capsys, "green", "--n", "8", "--x", "1,0", "--y", "0,0")
    assert code == EXIT_OK and float(out) > 0


def test_hitprob(capsys):
    argv = ["hitprob", "--domain", "torus:16", "--points", "4,4;7,5", "--witness", "6,9"]
    code, out, _ = call(capsys, *argv)
    assert code == EXIT_OK and out.count("rel_error=") == 3
    code, out, _ = call(capsys, *argv, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 2
    assert all(float(r["rel_error"]) < 1e-9 for r in rows)


def test_geometry_assign(capsys):
    cfg = json.dumps({"points": [[0, 0], [128, 0]], "n": 16384, "delta": 0.2, "beta": 0.6})
    code, out, _ = call(capsys, "geometry", "assign", "--config", cfg, "--format", "json")
    assert code == EXIT_OK
    assert "0.7" in out


def test_geometry_count(capsys):
    cfg = json.dumps({"j": 2, "n": 16, "lower": [[0, 2], [2, 0]], "upper": [[0, 4], [4, 0]]})
    code, out, _ = call(capsys, "geometry", "count", "--config", cfg)
    assert code == EXIT_OK
    assert str(256 * 40) in out


def test_geometry_missing_key(capsys):
    code, _, err = call(capsys, "geometry", "assign", "--config", '{"n": 16}')
    assert code == EXIT_INVALID and "missing config key" in err


def test_usage_errors(capsys):
    assert call(capsys, "bogus")[0] == EXIT_USAGE
    assert call(capsys, "exponent", "--j", "2", "--alpha", "0.2", "--beta", "0.5", "--frobnicate")[0] == EXIT_USAGE
    assert call(capsys, "exponent", "--j", "2")[0] == EXIT_USAGE
    assert call(capsys, "exponent", "--j", "2", "--alpha", "0.2", "--beta", "0.5", "--seed", "-1")[0] == EXIT_USAGE


def test_validation_errors(capsys):
    assert call(capsys, "exponent", "--j", "2", "--alpha", "1.5", "--beta", "0.5")[0] == EXIT_INVALID
    assert call(capsys, "chi", "--matrix", "[[1,0.5,0.3],[0.5,1,0.2],[0.3,0.2,1]]")[0] == EXIT_INVALID


def test_simulate_csv_deterministic(tmp_path, capsys):
    args = ["simulate", "--alpha", "0.3", "--beta", "0.5", "--j", "2", "--n-grid", "8,12", "--replicas", "3", "--seed", "42"]
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert run(args + ["--out", str(a)]) == EXIT_OK
    assert run(args + ["--out", str(b)]) == EXIT_OK
    assert run(args + ["--out", str(c), "--threads", "2"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    rows = list(csv.reader(io.StringIO(a.read_text())))
    assert tuple(rows[0]) == CSV_HEADER and len(rows) == 7
    assert all(r[-1] == "42" for r in rows[1:])


def test_cover_csv(capsys):
    code, out, _ = call(capsys, "cover", "--n", "8", "--replicas", "2", "--seed", "1")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == EXIT_OK and len(rows) == 3


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "latepoints", "exponent", "--j", "1", "--alpha", "0.5", "--beta", "0.5"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("1 ")
