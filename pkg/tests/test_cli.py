import csv
import math
import subprocess
import sys

import numpy as np
import pytest

from kinnet.cli import main
from kinnet.experiments import RunManifest, simulate, sweep_epsilon, table_entropy
from kinnet.topology import with_overrides


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_simulate_writes_csvs(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["simulate", "--scenario", "tripod", "--out", str(out), "--cells", "40", "--t-end", "0.5",
                 "--snapshots", "0.25,0.5", "--coupling", "maxwell"]) == 0
    header, rows = read_csv(out / "snapshot_t0.25.csv")
    assert header == ["edge", "x", "rho", "q"]
    assert len(rows) == 120
    assert all(len(r[2].split("e")[0].replace("-", "").replace(".", "")) == 9 for r in rows)
    header, rows = read_csv(out / "entropy.csv")
    assert header == ["t", "total_entropy", "total_mass"]
    assert float(rows[0][1]) == pytest.approx(13 / 18, abs=1e-8)
    assert "wave" in capsys.readouterr().out


def test_simulate_halfmoment_columns(tmp_path):
    out = tmp_path / "hm"
    assert main(["simulate", "--scenario", "tripod", "--model", "halfmoment", "--out", str(out), "--cells", "20",
                 "--t-end", "0.1"]) == 0
    header, _ = read_csv(out / "snapshot_t0.1.csv")
    assert header == ["edge", "x", "rho", "q", "rho_hat", "q_hat"]


def test_t_end_zero_is_initial_data(tripod, tmp_path):
    sc, net = with_overrides(*tripod, cells=10, t_end=0.0)
    res = simulate(RunManifest(sc, net, tmp_path, [0.0]))
    assert res.steps == 0
    np.testing.assert_array_equal(res.snapshot(0.0).fields[2]["rho"], np.full(10, 2 * 0.3333333333333333))


def test_deterministic_output(tmp_path):
    args = ["simulate", "--scenario", "diamond", "--cells", "30", "--t-end", "3", "--coupling", "half"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("entropy.csv", "snapshot_t3.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_snapshot_outside_range(tripod):
    sc, net = with_overrides(*tripod, t_end=0.5)
    with pytest.raises(ValueError):
        RunManifest(sc, net, None, [0.7])


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["simulate", "--scenario", "missing.json", "--out", str(tmp_path)]) == 1
    assert "not found" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["simulate", "--scenario", str(bad), "--out", str(tmp_path)]) == 1
    assert "line 1" in capsys.readouterr().err
    assert main(["simulate", "--scenario", "tripod", "--out", str(tmp_path), "--cfl", "2"]) == 1
    assert "cfl" in capsys.readouterr().err
    assert main(["simulate", "--scenario", "tripod", "--out", str(tmp_path), "--coupling", "kinetic"]) == 1


def test_coupling_coeff(capsys):
    main(["coupling-coeff", "--variant", "half"])
    assert float(capsys.readouterr().out) == pytest.approx(0.7313, abs=1e-4)
    main(["coupling-coeff", "--variant", "maxwell", "--velocity-model", "unbounded", "--a", "1"])
    assert float(capsys.readouterr().out) == pytest.approx(0.4178, abs=1e-4)


def test_extrapolation(capsys):
    main(["extrapolation", "--method", "maxwell"])
    lines = capsys.readouterr().out.split()
    assert lines[0] == "method,velocity_model,a,lambda"
    assert float(lines[1].split(",")[-1]) == pytest.approx(2 / 3)


def test_fixpoint_cli(capsys):
    assert main(["halfspace-fixpoint", "--r1=-0.2,-0.2", "--length", "5", "--nx", "50", "--nv", "20"]) == 0
    out = capsys.readouterr().out.split()
    assert out[0] == "edge,rho_inf,q_inf,fitted_K" and len(out) == 3


def test_sweep_small(tripod):
    sc, net = with_overrides(*tripod, model="halfmoment", cells=100, t_end=0.5)
    rows = sweep_epsilon(sc, net, [0.1, 0.01])
    assert len(rows) == 2
    assert all(r.distance >= 0 for r in rows)
    assert rows[1].rho_distance < rows[0].rho_distance
    with pytest.raises(ValueError):
        sweep_epsilon(*with_overrides(*tripod, model="wave"), [0.1])


def test_sweep_cli(tmp_path, capsys):
    assert main(["sweep-epsilon", "--model", "halfmoment", "--cells", "50", "--t-end", "0.2", "--epsilons", "0.1",
                 "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "sweep_epsilon.csv")
    assert header == ["epsilon", "distance", "rho_distance"] and len(rows) == 1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_table_entropy_small(tripod):
    rows = table_entropy(*tripod, wave_cells=300, pde_cells=50, velocity_cells=40)
    loss = {r.label: r.entropy_loss for r in rows}
    assert abs(loss["wave full_moment"]) < abs(loss["wave maxwell"]) < abs(loss["wave half_moment"])
    assert all(r.total_entropy > 0 for r in rows)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "kinnet.cli", "coupling-coeff", "--variant", "full"],
                         capture_output=True, text=True, check=True)
    assert float(out.stdout) == pytest.approx(0.5)
