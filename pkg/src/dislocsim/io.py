"""CSV and JSON persistence for trajectories and invariant reports.

Floats are written with ``repr``, the shortest string that parses back to the
same double, so a saved run reloads bit for bit.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core_system import RegParams, StatePair
from .grid import Grid
from .initial_data import ModelParams
from .invariants import InvariantReport
from .solver import Trajectory

TRAJECTORY_HEADER = "t,x,rho,kappa"
INVARIANT_HEADER = "t,m_bar,gamma,gamma_sq,ratio_sup,rho_xxx_sup"
INITIAL_HEADER = "x,rho0,kappa0"


class FormatError(ValueError):
    """A stored file does not have the expected layout."""


def _fmt(v) -> str:
    return repr(float(v))


def _write_rows(path: Path, header: str, columns) -> None:
    cols = [np.asarray(c, dtype=float).tolist() for c in columns]
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in zip(*cols):
            fh.write(",".join(map(_fmt, row)) + "\n")


def meta_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.json")


def write_trajectory(path, traj: Trajectory) -> None:
    x = traj.grid.nodes
    nt = len(traj.states)
    _write_rows(
        Path(path),
        TRAJECTORY_HEADER,
        [np.repeat(traj.times, x.size), np.tile(x, nt), traj.rho.ravel(), traj.kappa.ravel()],
    )


def write_meta(path, meta: dict) -> None:
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_meta(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None


def trajectory_meta(traj: Trajectory, **extra) -> dict:
    log = np.array(traj.step_log, dtype=float).reshape(-1, 3)
    meta = {
        "format": 1,
        "epsilon": traj.params.epsilon,
        "tau": traj.params.tau,
        "n_nodes": traj.grid.n_nodes,
        "gamma0": traj.reg.gamma0,
        "m0": traj.reg.m0,
        "steps": len(traj.step_log),
        "t_end": float(traj.times[-1]),
        "max_picard_iters": int(log[:, 1].max()) if log.size else 0,
        "max_contraction_ratio": float(log[:, 2].max()) if log.size else 0.0,
        "median_contraction_ratio": float(np.median(log[:, 2])) if log.size else 0.0,
    }
    meta.update(extra)
    return meta


def _load_table(path, header: str) -> np.ndarray:
    path = Path(path)
    with open(path) as fh:
        first = fh.readline().strip()
    if first != header:
        raise FormatError(f"{path}: expected header {header!r}, found {first!r}")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if data.shape[1] != header.count(",") + 1:
        raise FormatError(f"{path}: wrong column count {data.shape[1]}")
    return data


def read_trajectory(path, meta: dict | None = None) -> Trajectory:
    """Rebuild a Trajectory from its CSV and ``.meta.json`` sidecar."""
    if not Path(path).is_file():
        raise FileNotFoundError(f"trajectory file not found: {path}")
    meta = read_meta(meta_path(path)) if meta is None else meta
    data = _load_table(path, TRAJECTORY_HEADER)
    try:
        n = int(meta["n_nodes"])
        params = ModelParams(float(meta["epsilon"]), float(meta["tau"]))
        reg = RegParams(float(meta["gamma0"]), float(meta["m0"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"metadata for {path}: {exc}") from None
    if data.shape[0] % n:
        raise FormatError(f"{path}: {data.shape[0]} rows is not a multiple of n_nodes={n}")
    blocks = data.reshape(-1, n, 4)
    grid = Grid(n)
    if not np.allclose(blocks[:, :, 1], grid.nodes[None, :], rtol=0, atol=1e-12):
        raise FormatError(f"{path}: x column does not match a uniform {n}-node grid")
    if np.any(blocks[:, :, 0] != blocks[:, :1, 0]):
        raise FormatError(f"{path}: time varies within a block")
    traj = Trajectory(grid, params, reg)
    for b in blocks:
        traj.append(StatePair(grid, b[:, 2].copy(), b[:, 3].copy(), float(b[0, 0])))
    return traj


def write_invariants(path, report: InvariantReport) -> None:
    _write_rows(
        Path(path),
        INVARIANT_HEADER,
        [report.times, report.m_bar, report.gamma, report.gamma**2, report.ratio_sup, report.rho_xxx_sup],
    )


def read_invariants(path) -> dict[str, np.ndarray]:
    data = _load_table(path, INVARIANT_HEADER)
    return {name: data[:, k] for k, name in enumerate(INVARIANT_HEADER.split(","))}


def write_initial_data(path, x, rho0, kappa0) -> None:
    _write_rows(Path(path), INITIAL_HEADER, [x, rho0, kappa0])
