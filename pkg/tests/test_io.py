import json

import numpy as np
import pytest

from dislocsim import io
from dislocsim.grid import make_uniform_grid
from dislocsim.initial_data import ModelParams, build_initial_data
from dislocsim.invariants import MonitorParams, comparison_monitor, gamma_from_trajectory
from dislocsim.solver import StepperConfig, solve


@pytest.fixture(scope="module")
def traj():
    p = ModelParams(0.5, 1.0)
    return solve(build_initial_data(p, 0.05, make_uniform_grid(21)), 0.01, StepperConfig(), p)


def test_trajectory_round_trip_is_bit_exact(tmp_path, traj):
    path = tmp_path / "run.csv"
    io.write_trajectory(path, traj)
    io.write_meta(io.meta_path(path), io.trajectory_meta(traj))
    assert path.read_text().splitlines()[0] == "t,x,rho,kappa"
    back = io.read_trajectory(path)
    assert np.array_equal(back.rho, traj.rho) and np.array_equal(back.kappa, traj.kappa)
    assert np.array_equal(back.times, traj.times)
    assert back.params == traj.params and back.reg == traj.reg


def test_meta_is_json(tmp_path, traj):
    path = tmp_path / "m.json"
    io.write_meta(path, io.trajectory_meta(traj, note="x"))
    meta = json.loads(path.read_text())
    assert meta["n_nodes"] == 21 and meta["steps"] == 10 and meta["note"] == "x"


def test_invariants_csv(tmp_path, traj):
    mon = MonitorParams.from_model(traj.params)
    rep = comparison_monitor(traj, mon, gamma_from_trajectory(traj, mon, traj.reg.gamma0 / 2))
    path = tmp_path / "inv.csv"
    io.write_invariants(path, rep)
    assert path.read_text().splitlines()[0] == "t,m_bar,gamma,gamma_sq,ratio_sup,rho_xxx_sup"
    cols = io.read_invariants(path)
    assert np.array_equal(cols["gamma_sq"], rep.gamma**2)
    assert np.array_equal(cols["m_bar"], rep.m_bar)


def test_format_errors(tmp_path, traj):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    io.write_meta(io.meta_path(path), io.trajectory_meta(traj))
    with pytest.raises(io.FormatError):
        io.read_trajectory(path)
    path.write_text("t,x,rho,kappa\n0,0,0,0\n")
    with pytest.raises(io.FormatError):
        io.read_trajectory(path)
    with pytest.raises(FileNotFoundError):
        io.read_trajectory(tmp_path / "missing.csv")
