"""Admissible initial pairs (rho0, kappa0) and their verification.

The family used here is

    rho0(x)   = A sin(pi x) + q_rho(x)
    kappa0(x) = x + q_kappa(x)

with quintic corrections q = x^2 (1-x)^2 (a + b x). The corrections vanish
together with their first derivative at both ends, so they leave the boundary
values and slopes alone and only adjust the endpoint curvatures needed by the
first-order compatibility conditions

    (1+eps) rho0_xx = tau kappa0_x,   (1+eps) kappa0_xx = tau rho0_x   at x = 0, 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .grid import Grid, ScalarField, d1, d2

COMPAT_TOL = 1e-10
GAMMA0_FRACTION = 0.9


class ConstraintInfeasible(ValueError):
    """The constructed pair violates kappa0_x > |rho0_x| somewhere."""


@dataclass(frozen=True)
class ModelParams:
    epsilon: float
    tau: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True)
class InitialData:
    """Initial pair plus the margin constant gamma0 in (0, 1).

    ``derivs`` optionally carries exact nodal values of rho0_x, rho0_xx,
    kappa0_x, kappa0_xx; when absent, verification falls back to stencils.
    """

    rho0: ScalarField
    kappa0: ScalarField
    gamma0: float
    derivs: dict | None = None
    coeffs: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.rho0.grid


# q(x) = a*phi1(x) + b*phi2(x)
_PHI1 = Polynomial([0, 0, 1]) * Polynomial([1, -1]) ** 2
_PHI2 = _PHI1 * Polynomial([0, 1])


def correction_coefficients(params: ModelParams, amplitude: float) -> tuple[np.ndarray, np.ndarray]:
    """Solve the 4x4 endpoint system for (a_rho, b_rho) and (a_kappa, b_kappa)."""
    eps, tau, A = params.epsilon, params.tau, amplitude
    pi = np.pi
    basis = (_PHI1, _PHI2)
    rows, rhs = [], []
    for xe in (0.0, 1.0):
        rb_x = A * pi * np.cos(pi * xe)
        rb_xx = -A * pi**2 * np.sin(pi * xe)
        kb_x, kb_xx = 1.0, 0.0
        p1 = [phi.deriv(1)(xe) for phi in basis]
        p2 = [phi.deriv(2)(xe) for phi in basis]
        # unknown order: a_rho, b_rho, a_kappa, b_kappa
        rows.append([(1 + eps) * p2[0], (1 + eps) * p2[1], -tau * p1[0], -tau * p1[1]])
        rhs.append(tau * kb_x - (1 + eps) * rb_xx)
        rows.append([-tau * p1[0], -tau * p1[1], (1 + eps) * p2[0], (1 + eps) * p2[1]])
        rhs.append(tau * rb_x - (1 + eps) * kb_xx)
    c = np.linalg.solve(np.array(rows), np.array(rhs))
    return c[:2], c[2:]


def build_initial_data(params: ModelParams, amplitude: float, grid: Grid) -> InitialData:
    x = grid.nodes
    pi = np.pi
    c_rho, c_kap = correction_coefficients(params, amplitude)
    q_rho = c_rho[0] * _PHI1 + c_rho[1] * _PHI2
    q_kap = c_kap[0] * _PHI1 + c_kap[1] * _PHI2

    rho = amplitude * np.sin(pi * x) + q_rho(x)
    kap = x + q_kap(x)
    rho[0] = rho[-1] = 0.0
    kap[0], kap[-1] = 0.0, 1.0
    derivs = {
        "rho_x": amplitude * pi * np.cos(pi * x) + q_rho.deriv(1)(x),
        "rho_xx": -amplitude * pi**2 * np.sin(pi * x) + q_rho.deriv(2)(x),
        "kappa_x": 1.0 + q_kap.deriv(1)(x),
        "kappa_xx": q_kap.deriv(2)(x),
    }
    kx, rx = derivs["kappa_x"], derivs["rho_x"]
    if np.any(kx <= np.abs(rx)):
        i = int(np.argmin(kx - np.abs(rx)))
        raise ConstraintInfeasible(
            f"kappa0_x <= |rho0_x| at x={x[i]:.4g} (amplitude {amplitude} too large for "
            f"eps={params.epsilon}, tau={params.tau})"
        )
    margin = float(np.min(np.sqrt(np.maximum(kx**2 - rx**2, 0.0))))
    gamma0 = min(GAMMA0_FRACTION * margin, 0.99)
    return InitialData(
        ScalarField(rho, grid),
        ScalarField(kap, grid),
        gamma0,
        derivs=derivs,
        coeffs={"rho": c_rho.tolist(), "kappa": c_kap.tolist(), "amplitude": amplitude},
    )


@dataclass(frozen=True)
class InitialDataReport:
    compat_rho: tuple[float, float]  # (1+eps) rho_xx - tau kappa_x at x=0, x=1
    compat_kappa: tuple[float, float]  # (1+eps) kappa_xx - tau rho_x at x=0, x=1
    boundary: tuple[float, float, float, float]  # rho(0), rho(1), kappa(0), kappa(1)-1
    margin: float  # min_x kappa_x - sqrt(gamma0^2 + rho_x^2)

    def max_compat(self) -> float:
        return max(map(abs, self.compat_rho + self.compat_kappa))

    def ok(self, tol: float = COMPAT_TOL) -> bool:
        return (
            self.max_compat() < tol
            and max(map(abs, self.boundary)) < tol
            and self.margin >= -tol
        )


def verify_initial_data(data: InitialData, params: ModelParams) -> InitialDataReport:
    grid = data.grid
    if data.kappa0.grid != grid:
        raise ValueError("rho0 and kappa0 live on different grids")
    if data.derivs is not None:
        rx, rxx = data.derivs["rho_x"], data.derivs["rho_xx"]
        kx, kxx = data.derivs["kappa_x"], data.derivs["kappa_xx"]
    else:
        h = grid.h
        rx, rxx = d1(data.rho0.values, h), d2(data.rho0.values, h)
        kx, kxx = d1(data.kappa0.values, h), d2(data.kappa0.values, h)
    eps, tau = params.epsilon, params.tau
    cr = (1 + eps) * rxx - tau * kx
    ck = (1 + eps) * kxx - tau * rx
    r, k = data.rho0.values, data.kappa0.values
    margin = float(np.min(kx - np.sqrt(data.gamma0**2 + rx**2)))
    return InitialDataReport(
        compat_rho=(float(cr[0]), float(cr[-1])),
        compat_kappa=(float(ck[0]), float(ck[-1])),
        boundary=(float(r[0]), float(r[-1]), float(k[0]), float(k[-1] - 1.0)),
        margin=margin,
    )
