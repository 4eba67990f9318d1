"""Right-hand sides of the coupled system, its truncated variant, and the theta split.

    kappa_t = eps kappa_xx + rho_x rho_xx / kappa_x - tau rho_x
    rho_t   = (1+eps) rho_xx - tau kappa_x

The truncated variant replaces 1/kappa_x by 1/((g0/2) + (kappa_x - g0/2)^+)
and rho_x (in the singular product only) by clamp(rho_x, +-2 M0).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, ScalarField, d1, d2
from .initial_data import ModelParams


class SingularDenominator(ArithmeticError):
    """kappa_x (equivalently theta+ + theta-) is not positive somewhere."""


@dataclass(frozen=True)
class RegParams:
    gamma0: float
    m0: float

    def __post_init__(self):
        if not 0 < self.gamma0 < 1:
            raise ValueError(f"gamma0 must lie in (0, 1), got {self.gamma0}")
        if not self.m0 > 0:
            raise ValueError(f"m0 must be > 0, got {self.m0}")


@dataclass(frozen=True)
class StatePair:
    """rho and kappa sampled on one grid at one time level."""

    grid: Grid
    rho: np.ndarray
    kappa: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        n = self.grid.n_nodes
        for name in ("rho", "kappa"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (n,):
                raise ValueError(f"{name} has shape {v.shape}, expected ({n},)")
            object.__setattr__(self, name, v)

    @property
    def rho_field(self) -> ScalarField:
        return ScalarField(self.rho, self.grid)

    @property
    def kappa_field(self) -> ScalarField:
        return ScalarField(self.kappa, self.grid)


@dataclass(frozen=True)
class ThetaPair:
    theta_plus: ScalarField
    theta_minus: ScalarField


def truncate(y, zeta: float):
    if not zeta > 0:
        raise ValueError("zeta must be > 0")
    out = np.clip(y, -zeta, zeta)
    return float(out) if np.ndim(out) == 0 else out


def rhs_rho(state: StatePair, params: ModelParams) -> ScalarField:
    h = state.grid.h
    return ScalarField((1 + params.epsilon) * d2(state.rho, h) - params.tau * d1(state.kappa, h), state.grid)


def singular_coefficient(rho_x, kappa_x, reg: RegParams):
    """T_{2M0}(rho_x) / ((g0/2) + (kappa_x - g0/2)^+), the factor multiplying rho_xx."""
    half = 0.5 * reg.gamma0
    return np.clip(rho_x, -2 * reg.m0, 2 * reg.m0) / (half + np.maximum(kappa_x - half, 0.0))


def rhs_kappa_regularized(state: StatePair, params: ModelParams, reg: RegParams) -> ScalarField:
    h = state.grid.h
    rx, kx = d1(state.rho, h), d1(state.kappa, h)
    val = params.epsilon * d2(state.kappa, h) + d2(state.rho, h) * singular_coefficient(rx, kx, reg) - params.tau * rx
    return ScalarField(val, state.grid)


def rhs_kappa_exact(state: StatePair, params: ModelParams) -> ScalarField:
    h = state.grid.h
    rx, kx = d1(state.rho, h), d1(state.kappa, h)
    if np.min(kx) <= 0:
        i = int(np.argmin(kx))
        raise SingularDenominator(f"kappa_x = {kx[i]:.3g} <= 0 at x = {state.grid.nodes[i]:.4g}")
    val = params.epsilon * d2(state.kappa, h) + rx * d2(state.rho, h) / kx - params.tau * rx
    return ScalarField(val, state.grid)


def to_theta(state: StatePair) -> ThetaPair:
    h = state.grid.h
    rx, kx = d1(state.rho, h), d1(state.kappa, h)
    return ThetaPair(ScalarField(0.5 * (kx + rx), state.grid), ScalarField(0.5 * (kx - rx), state.grid))


def residual_theta(
    theta: ThetaPair,
    theta_prev: ThetaPair,
    dt: float,
    params: ModelParams,
    forcing: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[ScalarField, ScalarField]:
    """Backward-difference residual of both lines of the theta system.

    ``forcing`` = (g+, g-) is subtracted when the fields come from a forced
    (manufactured) run; for a forced pair (f_kappa, f_rho) in the (rho, kappa)
    equations, g+- = (f_kappa +- f_rho)_x / 2.
    """
    grid = theta.theta_plus.grid
    h = grid.h
    tp, tm = theta.theta_plus.values, theta.theta_minus.values
    s = tp + tm
    if np.min(s) <= 0:
        raise SingularDenominator("theta+ + theta- <= 0")
    eps, tau = params.epsilon, params.tau
    drift = (d1(tp, h) - d1(tm, h)) / s - tau
    res_p = (tp - theta_prev.theta_plus.values) / dt - eps * d2(tp, h) - d1(drift * tp, h)
    res_m = (tm - theta_prev.theta_minus.values) / dt - eps * d2(tm, h) + d1(drift * tm, h)
    if forcing is not None:
        res_p = res_p - forcing[0]
        res_m = res_m - forcing[1]
    return ScalarField(res_p, grid), ScalarField(res_m, grid)
