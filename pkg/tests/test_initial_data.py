import itertools

import numpy as np
import pytest

from dislocsim.grid import ScalarField, make_uniform_grid
from dislocsim.initial_data import (
    COMPAT_TOL,
    ConstraintInfeasible,
    InitialData,
    ModelParams,
    build_initial_data,
    correction_coefficients,
    verify_initial_data,
)

GRID = make_uniform_grid(201)
BOX = list(itertools.product((0.1, 1.0), (-1.0, 0.0, 1.0), (0.0, 0.05, 0.1)))


def test_model_params_rejects_nonpositive_epsilon():
    with pytest.raises(ValueError):
        ModelParams(0.0, 1.0)


def test_zero_stress_zero_amplitude():
    data = build_initial_data(ModelParams(1.0, 0.0), 0.0, GRID)
    assert np.all(data.rho0.values == 0)
    np.testing.assert_array_equal(data.kappa0.values, GRID.nodes)
    assert data.coeffs["rho"] == [0.0, 0.0] and data.coeffs["kappa"] == [0.0, 0.0]
    assert data.gamma0 == pytest.approx(0.9, abs=1e-15)


def test_zero_stress_sinusoid():
    data = build_initial_data(ModelParams(1.0, 0.0), 0.1, GRID)
    np.testing.assert_allclose(data.rho0.values, 0.1 * np.sin(np.pi * GRID.nodes), atol=1e-15)
    np.testing.assert_array_equal(data.kappa0.values, GRID.nodes)
    assert data.gamma0 == pytest.approx(0.9 * np.sqrt(1 - (0.1 * np.pi) ** 2), rel=1e-12)


def test_coupled_correction_nonzero():
    params = ModelParams(0.5, 1.0)
    c_rho, c_kap = correction_coefficients(params, 0.05)
    assert np.any(c_rho != 0) and np.any(c_kap != 0)
    rep = verify_initial_data(build_initial_data(params, 0.05, GRID), params)
    assert rep.max_compat() < 1e-10
    assert rep.ok()


@pytest.mark.parametrize("eps, tau, amp", BOX)
def test_box_round_trip(eps, tau, amp):
    params = ModelParams(eps, tau)
    data = build_initial_data(params, amp, GRID)
    rep = verify_initial_data(data, params)
    assert rep.max_compat() < COMPAT_TOL
    assert rep.boundary == (0.0, 0.0, 0.0, 0.0)
    assert 0 < data.gamma0 < 1
    kx, rx = data.derivs["kappa_x"], data.derivs["rho_x"]
    assert np.all(kx >= np.sqrt(data.gamma0**2 + rx**2))
    assert rep.margin >= 0


def test_infeasible_amplitude():
    with pytest.raises(ConstraintInfeasible):
        build_initial_data(ModelParams(1.0, 0.0), 0.5, GRID)


def test_verify_trivial_pair_with_stencils():
    x = GRID.nodes
    data = InitialData(ScalarField(np.zeros_like(x), GRID), ScalarField(x, GRID), 0.5)
    rep = verify_initial_data(data, ModelParams(1.0, 0.0))
    assert rep.max_compat() < 1e-9
    assert rep.margin == pytest.approx(1 - 0.5, abs=1e-12)


def test_verify_flags_incompatible_parabola():
    x = GRID.nodes
    data = InitialData(ScalarField(x * (1 - x), GRID), ScalarField(x, GRID), 0.1)
    rep = verify_initial_data(data, ModelParams(1.0, 0.0))
    np.testing.assert_allclose(rep.compat_rho, (-4.0, -4.0), atol=1e-8)
    assert not rep.ok()
