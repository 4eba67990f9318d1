"""Certification of the gradient comparison principle along computed trajectories.

For a weight exponent beta and a floor gamma(t) solving
gamma'/gamma = -(c0 + ||rho_xxx(., t)||_inf), gamma(0) = gamma0/2, the
weighted margin

    Mbar(x, t) = cosh(beta (2x - 1)) * (kappa_x - sqrt(gamma^2 + rho_x^2))

must satisfy min_x Mbar >= gamma^2. The factor 2x - 1 maps [0, 1] onto the
symmetric interval on which the weight is built.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core_system import SingularDenominator
from .grid import d1, d3
from .initial_data import ModelParams
from .solver import Trajectory

TOL_CMP = 1e-6


class InfeasibleFit(ValueError):
    """kappa_x <= 0 somewhere, so no triple-exponential floor exists."""


@dataclass(frozen=True)
class MonitorParams:
    beta: float
    c0: float
    c1: float
    c2: float

    @classmethod
    def from_model(cls, params: ModelParams, beta: float | None = None) -> "MonitorParams":
        beta = choose_beta(params) if beta is None else beta
        eps, tau = params.epsilon, params.tau
        c1 = beta**2 / 4 + tau**2 / (8 * eps) + eps * beta**2
        c2 = tau**2 * np.cosh(beta) / (4 * eps)
        return cls(beta=beta, c0=min(c1, c2), c1=c1, c2=c2)

    def consistent_with(self, params: ModelParams, rtol: float = 1e-12) -> bool:
        ref = MonitorParams.from_model(params, self.beta)
        return all(
            np.isclose(getattr(self, k), getattr(ref, k), rtol=rtol, atol=0.0) for k in ("c0", "c1", "c2")
        )


@dataclass
class InvariantReport:
    times: np.ndarray
    m_bar: np.ndarray
    gamma: np.ndarray
    ratio_sup: np.ndarray
    rho_xxx_sup: np.ndarray
    violations: list[tuple[float, int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def choose_beta(params: ModelParams) -> float:
    """Smallest beta in {1, 2, 4, ...} with beta tanh(beta) > |tau|/(1+eps) + 1."""
    need = abs(params.tau) / (1 + params.epsilon) + 1.0
    beta = 1.0
    while not beta * np.tanh(beta) > need:
        beta *= 2.0
    return beta


def _slopes(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    h = traj.grid.h
    return d1(traj.rho, h, axis=1), d1(traj.kappa, h, axis=1)


def rho_xxx_sup(traj: Trajectory) -> np.ndarray:
    return np.max(np.abs(d3(traj.rho, traj.grid.h, axis=1)), axis=1)


def gamma_from_trajectory(traj: Trajectory, mon: MonitorParams, gamma_init: float) -> np.ndarray:
    """Exponentially integrated floor gamma_{k+1} = gamma_k exp(-(c0 + c~_k) dt_k)."""
    return gamma_from_rates(traj.times, rho_xxx_sup(traj), mon.c0, gamma_init)


def gamma_from_rates(times, c_tilde, c0: float, gamma_init: float) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    rates = c0 + np.asarray(c_tilde, dtype=float)[:-1]
    expo = np.concatenate([[0.0], np.cumsum(rates * np.diff(times))])
    # cumulative exponent rather than a running product: one rounding per entry
    return gamma_init * np.exp(-expo)


def comparison_monitor(
    traj: Trajectory, mon: MonitorParams, gamma_series, tol: float = TOL_CMP
) -> InvariantReport:
    if not traj.states:
        raise ValueError("empty trajectory")
    gamma = np.asarray(gamma_series, dtype=float)
    times = traj.times
    if gamma.shape != times.shape:
        raise ValueError("gamma series is not aligned with the trajectory times")
    x = traj.grid.nodes
    rx, kx = _slopes(traj)
    g2 = gamma[:, None] ** 2
    bracket = kx - np.sqrt(g2 + rx**2)
    mbar = np.cosh(mon.beta * (2 * x - 1))[None, :] * bracket
    m_bar = mbar.min(axis=1)

    violations = []
    for k in np.flatnonzero(m_bar < gamma**2 - tol):
        violations.append((float(times[k]), int(np.argmin(mbar[k])), "m_bar < gamma^2"))
    for k, i in zip(*np.nonzero(bracket < -tol)):
        violations.append((float(times[k]), int(i), "kappa_x < sqrt(gamma^2 + rho_x^2)"))

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.max(np.abs(rx / kx), axis=1)
    return InvariantReport(
        times=times,
        m_bar=m_bar,
        gamma=gamma,
        ratio_sup=ratio,
        rho_xxx_sup=rho_xxx_sup(traj),
        violations=violations,
    )


def gamma_log_ode(E: float, gamma_init: float, t_end: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed form of gamma' = -E (1 + |log gamma|) gamma for 0 < gamma < 1.

    With u = 1 - log gamma the equation is u' = E u, so
    gamma(t) = exp(1 - (1 - log gamma_init) e^{E t}). Returns (times, gamma).
    """
    if not 0 < gamma_init < 1:
        raise ValueError("gamma_init must lie in (0, 1)")
    if E < 0:
        raise ValueError("E must be >= 0")
    times = _time_grid(t_end, dt)
    return times, np.exp(1.0 - (1.0 - np.log(gamma_init)) * np.exp(E * times))


def gamma_log_ode_rk4(E: float, gamma_init: float, t_end: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    times = _time_grid(t_end, dt)
    rhs = lambda g: -E * (1.0 + abs(np.log(g))) * g  # noqa: E731
    out = np.empty_like(times)
    g = out[0] = gamma_init
    for k in range(1, times.size):
        s = times[k] - times[k - 1]
        k1 = rhs(g)
        k2 = rhs(g + 0.5 * s * k1)
        k3 = rhs(g + 0.5 * s * k2)
        k4 = rhs(g + s * k3)
        g = g + s / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k] = g
    return times, out


def _time_grid(t_end: float, dt: float) -> np.ndarray:
    n = int(np.floor(t_end / dt + 1e-9))
    times = np.arange(n + 1) * dt
    if t_end - times[-1] > 1e-12 * max(1.0, t_end):
        times = np.append(times, t_end)
    return times


def _triple_exp_holds(b: float, times: np.ndarray, floor: np.ndarray) -> bool:
    with np.errstate(over="ignore"):
        bound = np.exp(-np.exp(np.exp(b * (times + 1.0))))
    return bool(np.all(bound <= floor))


def fit_triple_exponential(traj: Trajectory, tol: float = 1e-6) -> float:
    """Smallest b >= 0 with exp(-exp(exp(b (t+1)))) <= min_x kappa_x(., t) at every sample."""
    _, kx = _slopes(traj)
    floor = kx.min(axis=1)
    if np.min(floor) <= 0:
        raise InfeasibleFit(f"min kappa_x = {np.min(floor):.3g} <= 0")
    times = traj.times
    return fit_triple_exponential_series(times, floor, tol)


def fit_triple_exponential_series(times, floor, tol: float = 1e-6) -> float:
    times = np.asarray(times, dtype=float)
    floor = np.asarray(floor, dtype=float)
    if np.min(floor) <= 0:
        raise InfeasibleFit(f"min kappa_x = {np.min(floor):.3g} <= 0")
    if _triple_exp_holds(0.0, times, floor):
        return 0.0
    lo, hi = 0.0, 1.0
    while not _triple_exp_holds(hi, times, floor):
        lo, hi = hi, 2 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _triple_exp_holds(mid, times, floor):
            hi = mid
        else:
            lo = mid
    return hi


def ratio_bound_check(traj: Trajectory, tol: float = TOL_CMP) -> tuple[np.ndarray, bool]:
    """Per-time ||rho_x / kappa_x||_inf and whether it stays <= 1 + tol."""
    rx, kx = _slopes(traj)
    if np.min(kx) <= 0:
        raise SingularDenominator(f"kappa_x = {np.min(kx):.3g} <= 0")
    series = np.max(np.abs(rx / kx), axis=1)
    return series, bool(np.all(series <= 1.0 + tol))
