"""Acceptance criteria, one test per criterion.

Each ``criterion_N`` returns ``(ok, detail)``; the pytest wrappers assert
``ok`` and log a PASS/FAIL line that is printed in the terminal summary.
Run ``python tests/test_acceptance.py`` to get the same lines without pytest.
"""
from __future__ import annotations

import itertools
import math
import time
from functools import cache

import numpy as np
import pytest

from dislocsim.core_system import to_theta
from dislocsim.grid import ScalarField, make_uniform_grid
from dislocsim.initial_data import InitialData, ModelParams, build_initial_data
from dislocsim.invariants import (
    TOL_CMP,
    MonitorParams,
    comparison_monitor,
    gamma_from_trajectory,
    gamma_log_ode,
    gamma_log_ode_rk4,
)
from dislocsim.norms import (
    ANALYTIC_KT_CORPUS,
    EXTENSION_CORPUS,
    SpaceTimeField,
    bmo_bruteforce,
    bmo_norm,
    frac_sobolev_norm,
    holder_norm,
    holder_seminorm_t,
    holder_seminorm_x,
    kt_corpus_ratios,
    extension_corpus_fields,
    st_lp_norm,
    sym_asym_relation,
    w212_norm,
)
from dislocsim.solver import (
    StepperConfig,
    heat_reference,
    observed_orders,
    solve,
    solve_manufactured,
    spatial_ladder,
    standard_manufactured,
    temporal_ladder,
)

SWEEP = list(itertools.product((0.1, 1.0), (-1.0, 0.0, 1.0), (0.0, 0.05, 0.1)))
MMS_PARAMS = ModelParams(0.1, 1.0)


# ---------------------------------------------------------------------------
# shared runs
# ---------------------------------------------------------------------------


@cache
def mms_rows():
    ms = standard_manufactured()
    t0 = time.perf_counter()
    spatial = solve_manufactured(ms, 0.1, spatial_ladder((51, 101, 201)), MMS_PARAMS)
    temporal = solve_manufactured(ms, 1.0, temporal_ladder(201, (4e-3, 2e-3, 1e-3)), MMS_PARAMS)
    return spatial, temporal, time.perf_counter() - t0


@cache
def sweep_runs():
    """Criterion-3 box at n=201, t_end=1, default stepper: (eps, tau, A) -> (traj, init)."""
    grid = make_uniform_grid(201)
    t0 = time.perf_counter()
    runs = {}
    for eps, tau, amp in SWEEP:
        params = ModelParams(eps, tau)
        init = build_initial_data(params, amp, grid)
        runs[eps, tau, amp] = (solve(init, 1.0, StepperConfig(), params), init)
    return runs, time.perf_counter() - t0


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def criterion_1():
    spatial, temporal, secs = mms_rows()
    s = observed_orders([r["err"] for r in spatial], [r["h"] for r in spatial])
    t = observed_orders([r["err"] for r in temporal], [r["dt"] for r in temporal])
    ok = all(1.8 <= o <= 2.2 for o in s) and all(0.8 <= o <= 1.2 for o in t) and secs < 60
    return ok, f"spatial orders {_fmt(s)}, temporal orders {_fmt(t)}, {secs:.1f}s"


def criterion_2():
    n, dt, eps = 201, 1e-3, 1.0
    grid = make_uniform_grid(n)
    x = grid.nodes
    kap0 = ScalarField(x + 0.1 * np.sin(np.pi * x), grid)
    margin = float(np.min(1 + 0.1 * np.pi * np.cos(np.pi * x)))
    init = InitialData(ScalarField(np.zeros(n), grid), kap0, 0.9 * margin)
    params = ModelParams(eps, 0.0)
    t0 = time.perf_counter()
    traj = solve(init, 1.0, StepperConfig(dt=dt), params)
    secs = time.perf_counter() - t0
    bound = 10 * dt + 10 * grid.h**2
    gaps = []
    for t in (0.1, 0.5, 1.0):
        st = traj.nearest(t)
        assert abs(st.time - t) < 1e-9
        ref = heat_reference(kap0, t, eps)
        gaps.append(float(np.max(np.abs(st.kappa - ref.values))))
    rho_max = float(np.max(np.abs(traj.rho)))
    ok = max(gaps) < bound and rho_max == 0.0 and secs < 10
    return ok, f"max gaps {_fmt(gaps, '.2e')} < {bound:.2e}, max|rho| {rho_max}, {secs:.1f}s"


def _reports():
    runs, _ = sweep_runs()
    out = {}
    for key, (traj, init) in runs.items():
        mon = MonitorParams.from_model(traj.params)
        gamma = gamma_from_trajectory(traj, mon, init.gamma0 / 2)
        out[key] = comparison_monitor(traj, mon, gamma, TOL_CMP)
    return out


def criterion_3():
    runs, secs = sweep_runs()
    reps = _reports()
    n_viol = sum(len(r.violations) for r in reps.values())
    margin = min(float(np.min(r.m_bar - r.gamma**2)) for r in reps.values())
    ok = n_viol == 0 and len(runs) == len(SWEEP) and secs < 300
    return ok, f"{len(runs)} runs, {n_viol} violations, min(m_bar - gamma^2) = {margin:.4f}, {secs:.1f}s"


def criterion_4():
    runs, _ = sweep_runs()
    worst = math.inf
    for traj, _init in runs.values():
        for st in traj.states:
            th = to_theta(st)
            worst = min(worst, float(th.theta_plus.values.min()), float(th.theta_minus.values.min()))
    return worst > 0, f"min theta over all runs, nodes, times = {worst:.4f}"


def criterion_5():
    spatial, _, _ = mms_rows()
    comb = [r["h"] ** 2 + r["dt"] for r in spatial]
    o = observed_orders([r["theta_residual"] for r in spatial], comb)
    return all(v >= 0.8 for v in o), f"theta residual orders in h^2+dt: {_fmt(o)}"


def criterion_6():
    runs, _ = sweep_runs()
    ratios = np.concatenate([np.array(tr.step_log)[:, 2] for tr, _ in runs.values()])
    medians = [float(np.median(np.array(tr.step_log)[:, 2])) for tr, _ in runs.values()]
    ok = bool(np.all(ratios < 1)) and max(medians) < 0.5
    return ok, f"{ratios.size} steps, max ratio {ratios.max():.4f}, max per-run median {max(medians):.4f}"


def criterion_7():
    g0 = math.exp(-1)
    errs, rk = [], []
    for t in (0.0, math.log(2.0), 1.0):
        if t == 0.0:
            times, g = gamma_log_ode(1.0, g0, 1.0, 1e-3)
            _, g4 = gamma_log_ode_rk4(1.0, g0, 1.0, 1e-3)
            k = 0
        else:
            times, g = gamma_log_ode(1.0, g0, t, 1e-3)
            _, g4 = gamma_log_ode_rk4(1.0, g0, t, 1e-3)
            k = -1
        assert times[k] == t
        exact = math.exp(1 - 2 * math.exp(t))
        errs.append(abs(g[k] - exact))
        rk.append(abs(g4[k] - g[k]))
    ok = max(errs) < 1e-10 and max(rk) < 1e-8
    return ok, f"closed-form errors {_fmt(errs, '.1e')}, RK4 gaps {_fmt(rk, '.1e')}"


BMO_FIELDS = {
    "const": lambda x, t: 0.7 + 0.0 * x + 0.0 * t,
    "x": EXTENSION_CORPUS["x"],
    "x2": EXTENSION_CORPUS["x2"],
    "jump": EXTENSION_CORPUS["jump"],
}


def criterion_8():
    t0 = time.perf_counter()
    exact_ok, worst_rel = True, 0.0
    for n in (17, 33):
        for name, fn in BMO_FIELDS.items():
            f = SpaceTimeField.sample(fn, n, n, 1.0)
            cand = bmo_norm(f)
            exact_ok &= cand == bmo_bruteforce(f)
            fine = bmo_bruteforce(f, refine=4, exact_sums=False)
            if fine > 0:
                worst_rel = max(worst_rel, (fine - cand) / fine)
            else:
                exact_ok &= cand == 0.0
    secs = time.perf_counter() - t0
    ok = exact_ok and worst_rel < 0.05 and secs < 30
    return ok, f"exact match {exact_ok}, max gap to refined oracle {100 * worst_rel:.2f}%, {secs:.1f}s"


@cache
def kt_maxima():
    out = {}
    for n in (201, 401):
        grid = make_uniform_grid(n)
        trajs = []
        for eps, tau, amp in ((1.0, 1.0, 0.05), (0.1, -1.0, 0.1)):
            p = ModelParams(eps, tau)
            trajs.append(solve(build_initial_data(p, amp, grid), 1.0, StepperConfig(), p))
        out[n] = kt_corpus_ratios(n, trajs)
    return out


def criterion_9():
    r = kt_maxima()
    m201, m401 = max(r[201].values()), max(r[401].values())
    const = r[401]["const"], r[201]["const"]
    ok = m401 < 1.1 * m201 and const == (1.0, 1.0)
    return ok, f"corpus max {m201:.5f} (n=201) -> {m401:.5f} (n=401), constant ratio {const[0]!r}"


def criterion_10():
    c = {n: max(sym_asym_relation(f)[1]["c_emp"] for f in extension_corpus_fields(n, 0.25).values()) for n in (17, 33)}
    change = abs(c[33] - c[17]) / c[17]
    return change < 0.15, f"max c_emp {c[17]:.4f} (n=17), {c[33]:.4f} (n=33), change {100 * change:.2f}%"


def _homogeneous_norms(f: SpaceTimeField) -> dict[str, float]:
    return {
        "bmo": bmo_norm(f),
        "holder_x": holder_seminorm_x(f, 0.5),
        "holder_t": holder_seminorm_t(f, 0.25),
        "holder_1.5": holder_norm(f, 1.5),
        "l2": st_lp_norm(f, 2.0),
        "w212": w212_norm(f),
        "frac_sobolev": frac_sobolev_norm(f.values[-1], 0.5, 2.0),
    }


def criterion_11():
    corpus = {**EXTENSION_CORPUS, **ANALYTIC_KT_CORPUS}
    worst = 0.0
    bound_ok = True
    for fn in corpus.values():
        f = SpaceTimeField.sample(fn, 33, 33, 1.0)
        base = _homogeneous_norms(f)
        for lam in (-2.5, 0.5, 3.0):
            scaled = _homogeneous_norms(f.with_values(lam * f.values))
            for k, v in base.items():
                worst = max(worst, abs(scaled[k] - abs(lam) * v) / max(abs(lam) * v, 1e-300))
        b = base["bmo"]
        for c in (-1.0, 3.0):
            shifted = bmo_norm(f.with_values(f.values + c))
            worst = max(worst, abs(shifted - b) / b if b > 0 else (0.0 if shifted == 0 else math.inf))
        bound_ok &= b <= 2 * float(np.max(np.abs(f.values)))
    return worst < 1e-12 and bound_ok, f"max relative deviation {worst:.2e}, bmo <= 2 sup: {bound_ok}"


CRITERIA = {
    1: ("manufactured-solution convergence", criterion_1),
    2: ("decoupled limit vs Fourier heat reference", criterion_2),
    3: ("comparison-monitor certification", criterion_3),
    4: ("positivity of theta+-", criterion_4),
    5: ("theta-system consistency", criterion_5),
    6: ("Picard contraction", criterion_6),
    7: ("gamma log-ODE exactness", criterion_7),
    8: ("BMO oracle equivalence", criterion_8),
    9: ("Kozono-Taniuchi stability", criterion_9),
    10: ("sym/asym empirical constant stability", criterion_10),
    11: ("norm homogeneity and shift invariance", criterion_11),
}


def _fmt(values, spec=".4f") -> str:
    return "[" + ", ".join(format(float(v), spec) for v in values) + "]"


def run_criterion(k: int) -> tuple[bool, str]:
    name, fn = CRITERIA[k]
    ok, detail = fn()
    return ok, f"{'PASS' if ok else 'FAIL'} criterion {k:>2} ({name}): {detail}"


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, acceptance_line):
    ok, line = run_criterion(k)
    acceptance_line(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    failures = 0
    for k in sorted(CRITERIA):
        ok, line = run_criterion(k)
        failures += not ok
        print(line, flush=True)
    raise SystemExit(1 if failures else 0)
