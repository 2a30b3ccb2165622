import json
import subprocess
import sys

import numpy as np
import pytest

from rvcv.cli import main
from rvcv.grf.io import read_lattice
from rvcv.sde import read_observations


def test_example_then_run(tmp_path, capsys):
    assert main(["example", "exponential"]) == 0
    doc = json.loads(capsys.readouterr().out)
    doc.update(I=[60], K=[1, 3], replicates=2, burn_in=10)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(doc))
    assert main(["run", "--config", str(cfg), "--cores", "2", "--out", str(tmp_path / "out")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["rows"] == 2
    assert (tmp_path / "out" / "exponential_report.csv").exists()


def test_gen_data(tmp_path, capsys):
    assert main(["gen-data", "--experiment", "ising", "--seed", "3", "--rows", "5", "--cols", "4",
                 "--out", str(tmp_path / "y.txt")]) == 0
    y, _ = read_lattice(tmp_path / "y.txt")
    assert y.shape == (5, 4)
    assert main(["gen-data", "--experiment", "sir", "--seed", "3", "--n-obs", "6", "--out",
                 str(tmp_path / "obs.csv")]) == 0
    t, x = read_observations(tmp_path / "obs.csv")
    assert t.size == 6 and x.shape == (6, 2)


def test_oracle_on_file(tmp_path, capsys):
    np.savetxt(tmp_path / "y.txt", [[1, 1, -1], [1, 1, -1], [1, 1, 1]], fmt="%d")
    assert main(["oracle", "--experiment", "ising", "--theta-grid=-4:5:2001", "--data", str(tmp_path / "y.txt")]) == 0
    assert json.loads(capsys.readouterr().out)["posterior_mean"] == pytest.approx(0.45417, abs=1e-4)


@pytest.mark.parametrize("argv,code", [
    (["oracle", "--experiment", "ising", "--theta-grid", "1:0:5", "--rows", "3", "--cols", "3"], 2),
    (["run", "--config", "/nonexistent.json"], 2),
])
def test_error_exit_codes(argv, code, capsys):
    assert main(argv) == code
    assert capsys.readouterr().err.startswith("error [")


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "rvcv.cli", "example", "sir"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["experiment"] == "sir"
