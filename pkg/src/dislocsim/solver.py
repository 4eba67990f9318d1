"""Semi-implicit time stepping with a per-step Picard closure, plus validation oracles.

Each step solves, for a frozen iterate (rho_hat, kappa_hat),

    (rho - rho^n)/dt     = (1+eps) rho_xx - tau kappa_hat_x
    (kappa - kappa^n)/dt = eps kappa_xx + rho_xx * C(rho_hat_x, kappa_hat_x) - tau rho_hat_x

where C is the truncated singular coefficient and rho_xx is the freshly solved
one. Both are backward-Euler tridiagonal solves with Dirichlet ends; the sweep
repeats until successive iterates agree to ``picard_tol``.
"""
from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
import sympy as sp
from scipy.fft import dst, idst

from . import kernels
from .core_system import (
    RegParams,
    StatePair,
    residual_theta,
    singular_coefficient,
    to_theta,
)
from .grid import Grid, ScalarField, d1
from .initial_data import GAMMA0_FRACTION, InitialData, ModelParams

THETA_BAND = 3

Forcing = Callable[[float], tuple[np.ndarray, np.ndarray]]


class PicardDiverged(RuntimeError):
    """The fixed-point sweep did not reach ``picard_tol`` within ``picard_max_iters``."""


class StepCollapse(RuntimeError):
    """dt backed off below 1e-12 * t_end."""


@dataclass(frozen=True)
class StepperConfig:
    dt: float = 1e-3
    picard_tol: float = 1e-10
    picard_max_iters: int = 50
    dt_backoff: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be > 0")
        if not 0 < self.dt_backoff < 1:
            raise ValueError("dt_backoff must lie in (0, 1)")
        if self.picard_max_iters < 1:
            raise ValueError("picard_max_iters must be >= 1")


@dataclass
class Trajectory:
    grid: Grid
    params: ModelParams
    reg: RegParams
    states: list[StatePair] = field(default_factory=list)
    # one (dt, iterations, contraction_ratio) entry per accepted step
    step_log: list[tuple[float, int, float]] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    @property
    def rho(self) -> np.ndarray:
        return np.array([s.rho for s in self.states])

    @property
    def kappa(self) -> np.ndarray:
        return np.array([s.kappa for s in self.states])

    def nearest(self, t: float) -> StatePair:
        return self.states[int(np.argmin(np.abs(self.times - t)))]

    def append(self, state: StatePair):
        if self.states:
            if state.grid != self.grid:
                raise ValueError("state lives on a different grid")
            if not state.time > self.states[-1].time:
                raise ValueError("trajectory times must be strictly increasing")
        self.states.append(state)


def reg_from_slopes(rho_x: np.ndarray, kappa_x: np.ndarray) -> RegParams:
    """gamma0 from 90% of the slope margin; M0 = 2 max|rho_x| + 1."""
    margin = float(np.min(np.sqrt(np.maximum(kappa_x**2 - rho_x**2, 0.0))))
    gamma0 = min(GAMMA0_FRACTION * margin, 0.99)
    return RegParams(gamma0=gamma0, m0=2.0 * float(np.max(np.abs(rho_x))) + 1.0)


def default_reg(init: InitialData) -> RegParams:
    if init.derivs is not None:
        rho_x = init.derivs["rho_x"]
    else:
        rho_x = d1(init.rho0.values, init.grid.h)
    return RegParams(gamma0=init.gamma0, m0=2.0 * float(np.max(np.abs(rho_x))) + 1.0)


def _implicit_solve(prev: np.ndarray, src: np.ndarray, r: float, left: float, right: float) -> np.ndarray:
    """Interior solve of (u - prev)/dt = a u_xx + src with u fixed at both ends; r = a dt / h^2."""
    m = prev.shape[0] - 2
    rhs = prev[1:-1] + src
    rhs[0] += r * left
    rhs[-1] += r * right
    off = np.full(m, -r)
    u = np.empty_like(prev)
    u[0], u[-1] = left, right
    u[1:-1] = kernels.thomas(off, np.full(m, 1.0 + 2.0 * r), off, rhs)
    return u


def step_picard(
    state: StatePair,
    cfg: StepperConfig,
    params: ModelParams,
    reg: RegParams,
    forcing: Forcing | None = None,
    gaps: list | None = None,
) -> tuple[StatePair, int, float]:
    """Advance one step of size ``cfg.dt``; returns (new state, iterations, contraction ratio).

    The ratio is last gap / previous gap of the successive-iterate L-inf
    distances (0.0 when the first sweep already met the tolerance). Pass a
    list as ``gaps`` to receive every gap.
    """
    dt = cfg.dt
    h = state.grid.h
    eps, tau = params.epsilon, params.tau
    t_new = state.time + dt
    if forcing is not None:
        f_rho, f_kap = forcing(t_new)
        f_rho, f_kap = f_rho[1:-1], f_kap[1:-1]
    else:
        f_rho = f_kap = 0.0
    r_rho = dt * (1.0 + eps) / h**2
    r_kap = dt * eps / h**2
    rho0, kap0 = state.rho, state.kappa
    rho_hat, kap_hat = rho0, kap0
    gaps = [] if gaps is None else gaps
    gaps.clear()
    for it in range(1, cfg.picard_max_iters + 1):
        kx_hat = (kap_hat[2:] - kap_hat[:-2]) / (2 * h)
        rx_hat = (rho_hat[2:] - rho_hat[:-2]) / (2 * h)
        rho = _implicit_solve(rho0, dt * (f_rho - tau * kx_hat), r_rho, rho0[0], rho0[-1])
        rxx = (rho[2:] - 2 * rho[1:-1] + rho[:-2]) / h**2
        coef = singular_coefficient(rx_hat, kx_hat, reg)
        kap = _implicit_solve(kap0, dt * (rxx * coef - tau * rx_hat + f_kap), r_kap, kap0[0], kap0[-1])
        gap = max(np.max(np.abs(rho - rho_hat)), np.max(np.abs(kap - kap_hat)))
        if not np.isfinite(gap):
            raise PicardDiverged(f"non-finite iterate at sweep {it}")
        gaps.append(float(gap))
        rho_hat, kap_hat = rho, kap
        if gap < cfg.picard_tol:
            break
    else:
        raise PicardDiverged(
            f"no convergence in {cfg.picard_max_iters} sweeps (last gap {gaps[-1]:.3e}, dt={dt:.3e})"
        )
    ratio = gaps[-1] / gaps[-2] if len(gaps) >= 2 and gaps[-2] > 0 else 0.0
    return StatePair(state.grid, rho_hat, kap_hat, t_new), it, ratio


def march(
    state: StatePair,
    t_end: float,
    cfg: StepperConfig,
    params: ModelParams,
    reg: RegParams,
    forcing: Forcing | None = None,
) -> Iterator[tuple[StatePair, int, float, float]]:
    """Yield (state, iterations, ratio, dt) for every accepted step up to ``t_end``.

    On ``PicardDiverged`` the step is retried with dt scaled by ``dt_backoff``;
    dt never grows back within a run.
    """
    dt = cfg.dt
    floor = 1e-12 * t_end
    while state.time < t_end - 1e-12 * max(t_end, 1.0):
        remaining = t_end - state.time
        step_dt = remaining if dt >= remaining * (1 - 1e-9) else dt
        try:
            new, its, ratio = step_picard(
                state, StepperConfig(step_dt, cfg.picard_tol, cfg.picard_max_iters, cfg.dt_backoff), params, reg, forcing
            )
        except PicardDiverged:
            dt *= cfg.dt_backoff
            if dt < floor:
                raise StepCollapse(f"dt fell to {dt:.3e} at t={state.time:.6g}") from None
            continue
        if step_dt == remaining:
            new = StatePair(new.grid, new.rho, new.kappa, t_end)
        state = new
        yield state, its, ratio, step_dt


def solve(
    init: InitialData,
    t_end: float,
    cfg: StepperConfig,
    params: ModelParams,
    reg: RegParams | None = None,
    forcing: Forcing | None = None,
) -> Trajectory:
    grid = init.grid
    reg = reg or default_reg(init)
    state = StatePair(grid, init.rho0.values.copy(), init.kappa0.values.copy(), 0.0)
    traj = Trajectory(grid, params, reg)
    traj.append(state)
    for new, its, ratio, dt in march(state, t_end, cfg, params, reg, forcing):
        traj.append(new)
        traj.step_log.append((dt, its, ratio))
    return traj


def heat_reference(phi: ScalarField, t_end: float, eps: float, n_terms: int = 200) -> ScalarField:
    """Solution of u_t = eps u_xx with u(.,0) = phi and phi's end values held fixed.

    The homogenized datum phi - (linear interpolant of its end values) is
    expanded in the sine series that interpolates it at the nodes (discrete
    sine transform, at most ``n_terms`` modes); each mode decays exactly as
    exp(-eps (k pi)^2 t).
    """
    x = phi.grid.nodes
    v = phi.values
    lin = v[0] + (v[-1] - v[0]) * x
    w = (v - lin)[1:-1]
    coeff = dst(w, type=1)
    k = np.arange(1, coeff.size + 1)
    coeff = coeff * np.exp(-eps * (k * np.pi) ** 2 * t_end)
    coeff[n_terms:] = 0.0
    out = lin.copy()
    out[1:-1] += idst(coeff, type=1)
    return ScalarField(out, phi.grid)


# ---------------------------------------------------------------------------
# manufactured solutions
# ---------------------------------------------------------------------------

X, T = sp.symbols("x t", real=True)


def _vectorize(expr):
    f = sp.lambdify((X, T), expr, "numpy")
    return lambda x, t: np.broadcast_to(np.asarray(f(x, t), dtype=float), np.broadcast_shapes(np.shape(x), np.shape(t))).copy()


class ManufacturedSolution:
    """A closed-form pair (rho*, kappa*) given as sympy expressions in ``X`` and ``T``."""

    def __init__(self, rho_expr, kappa_expr):
        self.rho_expr = sp.sympify(rho_expr)
        self.kappa_expr = sp.sympify(kappa_expr)
        self.rho = _vectorize(self.rho_expr)
        self.kappa = _vectorize(self.kappa_expr)
        self.rho_x = _vectorize(sp.diff(self.rho_expr, X))
        self.kappa_x = _vectorize(sp.diff(self.kappa_expr, X))

    def forcing_exprs(self, params: ModelParams):
        r, k = self.rho_expr, self.kappa_expr
        eps, tau = params.epsilon, params.tau
        f_rho = sp.diff(r, T) - (1 + eps) * sp.diff(r, X, 2) + tau * sp.diff(k, X)
        f_kap = (
            sp.diff(k, T)
            - eps * sp.diff(k, X, 2)
            - sp.diff(r, X) * sp.diff(r, X, 2) / sp.diff(k, X)
            + tau * sp.diff(r, X)
        )
        return f_rho, f_kap

    def forcing(self, params: ModelParams, grid: Grid) -> Forcing:
        f_rho, f_kap = (_vectorize(e) for e in self.forcing_exprs(params))
        x = grid.nodes
        return lambda t: (f_rho(x, t), f_kap(x, t))

    def theta_forcing(self, params: ModelParams, grid: Grid, t: float) -> tuple[np.ndarray, np.ndarray]:
        f_rho, f_kap = self.forcing_exprs(params)
        gp = _vectorize(sp.diff((f_kap + f_rho) / 2, X))
        gm = _vectorize(sp.diff((f_kap - f_rho) / 2, X))
        x = grid.nodes
        return gp(x, t), gm(x, t)

    def check_admissible(self, t_end: float, samples: int = 101):
        xs, ts = np.meshgrid(np.linspace(0, 1, samples), np.linspace(0, t_end, samples))
        kx = self.kappa_x(xs, ts)
        if np.min(kx) <= 0:
            raise ValueError(f"kappa*_x must be positive on the space-time box (min {np.min(kx):.3g})")
        for fn in (self.rho, self.kappa):
            ends = fn(np.array([0.0, 1.0])[:, None], ts[:, 0][None, :])
            if np.max(np.abs(ends - ends[:, :1])) > 1e-12:
                raise ValueError("manufactured boundary values must be constant in time")


def standard_manufactured() -> ManufacturedSolution:
    decay = sp.exp(-T) * sp.sin(sp.pi * X)
    return ManufacturedSolution(decay / 10, X + decay / 20)


def spatial_ladder(ns=(51, 101, 201), dt_over_h2: float = 1.0) -> list[tuple[int, float]]:
    return [(n, dt_over_h2 / (n - 1) ** 2) for n in ns]


def temporal_ladder(n: int = 201, dts=(4e-3, 2e-3, 1e-3)) -> list[tuple[int, float]]:
    return [(n, dt) for dt in dts]


def solve_manufactured(
    ms: ManufacturedSolution,
    t_end: float,
    ladder: list[tuple[int, float]],
    params: ModelParams,
    cfg: StepperConfig | None = None,
) -> list[dict]:
    """Run the forced system over a refinement ladder; one result row per (n, dt).

    Each row has the L-inf errors against (rho*, kappa*) at ``t_end`` and the
    L-inf theta-system residual (forcing removed) between the last two states.
    """
    ms.check_admissible(t_end)
    cfg = cfg or StepperConfig()
    rows = []
    for n, dt in ladder:
        grid = Grid(n)
        x = grid.nodes
        state = StatePair(grid, ms.rho(x, 0.0), ms.kappa(x, 0.0), 0.0)
        reg = reg_from_slopes(ms.rho_x(x, 0.0), ms.kappa_x(x, 0.0))
        step_cfg = StepperConfig(dt, cfg.picard_tol, cfg.picard_max_iters, cfg.dt_backoff)
        forcing = ms.forcing(params, grid)
        prev = state
        last_dt = dt
        steps = 0
        max_iters = 0
        t0 = _time.perf_counter()
        for new, its, _ratio, sdt in march(state, t_end, step_cfg, params, reg, forcing):
            prev, state, last_dt = state, new, sdt
            steps += 1
            max_iters = max(max_iters, its)
        elapsed = _time.perf_counter() - t0
        err_rho = float(np.max(np.abs(state.rho - ms.rho(x, t_end))))
        err_kap = float(np.max(np.abs(state.kappa - ms.kappa(x, t_end))))
        res_p, res_m = residual_theta(
            to_theta(state), to_theta(prev), last_dt, params, ms.theta_forcing(params, grid, t_end)
        )
        rows.append(
            {
                "n": n,
                "h": grid.h,
                "dt": dt,
                "err_rho": err_rho,
                "err_kappa": err_kap,
                "err": max(err_rho, err_kap),
                "theta_residual": theta_residual_norm(res_p, res_m),
                "steps": steps,
                "max_picard_iters": max_iters,
                "seconds": elapsed,
            }
        )
    return rows


def theta_residual_norm(res_p: ScalarField, res_m: ScalarField, band: int = THETA_BAND) -> float:
    """L-inf norm of the theta residual away from a ``band``-node boundary strip.

    Inside the strip the residual composes one-sided stencils (theta itself is
    a one-sided difference at the end nodes), which is not a consistent
    discretization there.
    """
    sl = slice(band, -band)
    return float(max(np.max(np.abs(res_p.values[sl])), np.max(np.abs(res_m.values[sl]))))


def observed_orders(values, params) -> list[float]:
    """Successive log-ratio slopes log(e_i/e_{i+1}) / log(p_i/p_{i+1})."""
    v = np.asarray(values, dtype=float)
    p = np.asarray(params, dtype=float)
    return list(np.log(v[:-1] / v[1:]) / np.log(p[:-1] / p[1:]))
