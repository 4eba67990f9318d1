"""Command-line entry point: ``dislocsim {simulate,verify,mms,norms,gamma}``.

Every subcommand accepts ``--config FILE``, a flat ``key = value`` file whose
keys are the long flag names (dashes or underscores). Flags given on the
command line override the file. Exit codes: 0 success, 1 verification or run
failure, 2 IO or configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import io, kernels
from .core_system import SingularDenominator, to_theta, residual_theta
from .grid import make_uniform_grid
from .initial_data import ConstraintInfeasible, ModelParams, build_initial_data
from .invariants import (
    MonitorParams,
    comparison_monitor,
    fit_triple_exponential,
    gamma_from_trajectory,
    gamma_log_ode,
    gamma_log_ode_rk4,
)
from .norms import (
    kozono_taniuchi_ratio,
    kt_corpus_fields,
    kt_strides,
    extension_corpus_fields,
    holder_norm,
    sym_asym_relation,
)
from .solver import (
    StepCollapse,
    StepperConfig,
    observed_orders,
    solve,
    solve_manufactured,
    spatial_ladder,
    standard_manufactured,
    temporal_ladder,
    theta_residual_norm,
)

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2
MMS_MIN_ORDER = 1.8


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    epsilon: float
    tau: float
    amplitude: float
    n: int
    t_end: float
    dt: float
    picard_tol: float
    picard_max_iters: int
    beta: float | None
    out: str

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be > 0")
        if not self.t_end > 0:
            raise ConfigError("t-end must be > 0")
        if self.n < 7:
            raise ConfigError("n must be >= 7")
        if self.beta is not None and not self.beta > 0:
            raise ConfigError("beta must be > 0")

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.epsilon, self.tau)

    @property
    def stepper(self) -> StepperConfig:
        return StepperConfig(dt=self.dt, picard_tol=self.picard_tol, picard_max_iters=self.picard_max_iters)


def read_config(path) -> list[tuple[int, str, str]]:
    """(line number, key, raw value) for every non-blank, non-comment line."""
    entries = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            entries.append((lineno, key.replace("-", "_"), value))
    return entries


def _apply_config(sub: argparse.ArgumentParser, path) -> None:
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    defaults = {}
    for lineno, key, raw in read_config(path):
        action = actions.get(key)
        if action is None:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            if action.nargs in ("+", "*"):
                value = [action.type(v) if action.type else v for v in raw.replace(",", " ").split()]
            elif action.const is not None and action.nargs == 0:
                value = raw.lower() in ("1", "true", "yes", "on")
            else:
                value = action.type(raw) if action.type else raw
        except (TypeError, ValueError):
            raise ConfigError(f"{path}:{lineno}: invalid value {raw!r} for {key!r}") from None
        defaults[key] = value
    sub.set_defaults(**defaults)


def _require(args, parser, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        parser.error("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _emit(line: str = "") -> None:
    print(line)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = RunConfig(
        epsilon=args.epsilon,
        tau=args.tau,
        amplitude=args.amplitude,
        n=args.n,
        t_end=args.t_end,
        dt=args.dt,
        picard_tol=args.picard_tol,
        picard_max_iters=args.picard_max_iters,
        beta=args.beta,
        out=args.out,
    )
    params = cfg.params
    try:
        init = build_initial_data(params, cfg.amplitude, make_uniform_grid(cfg.n))
    except ConstraintInfeasible as exc:
        raise ConfigError(f"initial data infeasible: {exc}") from None
    try:
        traj = solve(init, cfg.t_end, cfg.stepper, params)
    except StepCollapse as exc:
        _emit(f"step collapse: {exc}")
        return EXIT_FAIL
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_trajectory(out, traj)
    # the output path is left out so identical runs write identical sidecars
    config = {k: v for k, v in asdict(cfg).items() if k != "out"}
    meta = io.trajectory_meta(traj, config=config)
    io.write_meta(io.meta_path(out), meta)
    io.write_initial_data(out.with_name(out.stem + ".init.csv"), init.grid.nodes, init.rho0.values, init.kappa0.values)
    _emit(f"wrote {out} ({len(traj.states)} time levels x {cfg.n} nodes)")
    _emit(f"steps={meta['steps']} max_picard_iters={meta['max_picard_iters']} "
          f"max_contraction_ratio={meta['max_contraction_ratio']!r}")
    return EXIT_OK


def _theta_summary(traj) -> tuple[float, float]:
    """(min over nodes and times of min(theta+, theta-), max interior theta residual)."""
    thetas = [to_theta(s) for s in traj.states]
    theta_min = min(float(min(t.theta_plus.values.min(), t.theta_minus.values.min())) for t in thetas)
    res = 0.0
    for k in range(1, len(thetas)):
        dt = traj.states[k].time - traj.states[k - 1].time
        res = max(res, theta_residual_norm(*residual_theta(thetas[k], thetas[k - 1], dt, traj.params)))
    return theta_min, res


def cmd_verify(args) -> int:
    path = Path(args.trajectory)
    traj = io.read_trajectory(path)
    meta = io.read_meta(io.meta_path(path))
    beta = args.beta if args.beta is not None else (meta.get("config") or {}).get("beta")
    mon = MonitorParams.from_model(traj.params, beta)
    gamma = gamma_from_trajectory(traj, mon, traj.reg.gamma0 / 2)
    report = comparison_monitor(traj, mon, gamma, args.tol)
    report_path = Path(args.report) if args.report else path.with_name(path.stem + ".invariants.csv")
    io.write_invariants(report_path, report)

    _emit(f"monitor beta={float(mon.beta)!r} c0={float(mon.c0)!r} gamma(0)={float(gamma[0])!r}")
    _emit(f"min(m_bar - gamma^2) = {float(np.min(report.m_bar - gamma**2))!r}")
    theta_ok = False
    try:
        theta_min, res = _theta_summary(traj)
        _emit(f"min theta = {theta_min!r}")
        _emit(f"max interior theta residual = {res!r}")
        theta_ok = theta_min > 0
        if not theta_ok:
            _emit("VIOLATION theta+- not positive")
    except SingularDenominator as exc:
        _emit(f"VIOLATION {exc}")
    failed = not (report.ok and theta_ok)
    shown = report.violations[: args.max_listed]
    for t, i, kind in shown:
        _emit(f"VIOLATION t={t!r} node={i} {kind}")
    if len(report.violations) > len(shown):
        _emit(f"... {len(report.violations) - len(shown)} more violations")
    b_fit = None
    if not failed:
        try:
            b_fit = fit_triple_exponential(traj)
            _emit(f"triple-exponential fit b = {b_fit!r}")
        except ValueError:
            pass
    summary = {
        "violations": len(report.violations),
        "theta_positive": bool(theta_ok),
        "fitted_b": b_fit,
        "beta": float(mon.beta),
        "c0": float(mon.c0),
        "min_margin": float(np.min(report.m_bar - gamma**2)),
    }
    _write_json(report_path.with_suffix(".json"), summary)
    _emit(f"wrote {report_path}")
    _emit("FAIL" if failed else "OK")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_mms(args) -> int:
    params = ModelParams(args.epsilon, args.tau)
    ms = standard_manufactured()
    spatial = solve_manufactured(ms, args.t_end_spatial, spatial_ladder(tuple(args.ns), args.dt_over_h2), params)
    doc = {"epsilon": args.epsilon, "tau": args.tau, "spatial": spatial}
    s_orders = observed_orders([r["err"] for r in spatial], [r["h"] for r in spatial])
    comb = [r["h"] ** 2 + r["dt"] for r in spatial]
    doc["spatial_orders"] = s_orders
    doc["theta_orders"] = observed_orders([r["theta_residual"] for r in spatial], comb)
    _emit("spatial ladder (dt = %s h^2, t_end = %s)" % (args.dt_over_h2, args.t_end_spatial))
    _emit(f"{'n':>5} {'dt':>12} {'err':>12} {'theta_res':>12}")
    for r in spatial:
        _emit(f"{r['n']:>5} {r['dt']:>12.4e} {r['err']:>12.4e} {r['theta_residual']:>12.4e}")
    _emit("orders: " + " ".join(f"{o:.4f}" for o in s_orders))
    _emit("theta residual orders in h^2+dt: " + " ".join(f"{o:.4f}" for o in doc["theta_orders"]))
    if args.dts:
        temporal = solve_manufactured(ms, args.t_end_temporal, temporal_ladder(args.n_temporal, tuple(args.dts)), params)
        doc["temporal"] = temporal
        doc["temporal_orders"] = observed_orders([r["err"] for r in temporal], [r["dt"] for r in temporal])
        _emit(f"temporal ladder (n = {args.n_temporal}, t_end = {args.t_end_temporal})")
        for r in temporal:
            _emit(f"{r['n']:>5} {r['dt']:>12.4e} {r['err']:>12.4e}")
        _emit("orders: " + " ".join(f"{o:.4f}" for o in doc["temporal_orders"]))
    for rows in (doc["spatial"], doc.get("temporal", [])):
        for r in rows:
            r.pop("seconds", None)
    if args.out:
        _write_json(args.out, doc)
    ok = min(s_orders) >= MMS_MIN_ORDER
    _emit("OK" if ok else f"FAIL spatial order below {MMS_MIN_ORDER}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_norms(args) -> int:
    if not args.p > 3:
        raise ConfigError(f"--p must exceed 3, got {args.p}")
    trajectories = []
    if args.trajectory:
        trajectories = [io.read_trajectory(p) for p in args.trajectory]
    # integrability exponent p > 3 fixes the Hoelder order alpha = 1 - 3/p
    alpha = 1.0 - 3.0 / args.p
    kt = {}
    sx, st = kt_strides(args.n_kt)
    for name, f in kt_corpus_fields(args.n_kt, trajectories).items():
        ratio, comps = kozono_taniuchi_ratio(f, sx, st)
        kt[name] = {"ratio": ratio, **comps, "holder_alpha": holder_norm(f, alpha)}
    ext = {}
    for name, f in extension_corpus_fields(args.n_ext, args.ext_T).items():
        lhs, comps = sym_asym_relation(f)
        ext[name] = {"sym_bmo": lhs, **comps}
    doc = {
        "holder_exponent": {"p": args.p, "alpha": alpha},
        "kozono_taniuchi": {"n": args.n_kt, "fields": kt, "max_ratio": max(v["ratio"] for v in kt.values())},
        "sym_asym": {
            "n": args.n_ext,
            "T": args.ext_T,
            "fields": ext,
            "max_c_emp": max(v["c_emp"] for v in ext.values()),
        },
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        _write_json(args.out, doc)
        _emit(f"wrote {args.out}")
    else:
        _emit(text)
    return EXIT_OK


def cmd_gamma(args) -> int:
    if args.trajectory:
        traj = io.read_trajectory(args.trajectory)
        mon = MonitorParams.from_model(traj.params, args.beta)
        g_init = (traj.reg.gamma0 if args.gamma0 is None else args.gamma0) / 2
        gamma = gamma_from_trajectory(traj, mon, g_init)
        rows = [traj.times, gamma]
        header = "t,gamma"
    else:
        g_init = args.gamma0 / 2
        if not 0 < g_init < 1:
            raise ConfigError("gamma0/2 must lie in (0, 1)")
        times, closed = gamma_log_ode(args.E, g_init, args.t_end, args.dt)
        _, rk4 = gamma_log_ode_rk4(args.E, g_init, args.t_end, args.dt)
        rows = [times, closed, rk4, np.abs(closed - rk4)]
        header = "t,closed_form,rk4,abs_diff"
        _emit(f"{'t':>10} {'closed_form':>24} {'rk4':>24} {'abs_diff':>10}")
        for t in sorted({0.0, math.log(2.0), args.t_end}):
            if t > times[-1] + 1e-12:
                continue
            k = int(np.argmin(np.abs(times - t)))
            _emit(f"{times[k]:>10.6f} {float(closed[k])!r:>24} {float(rk4[k])!r:>24} {abs(closed[k] - rk4[k]):>10.2e}")
        _emit(f"max |closed - rk4| = {float(np.max(rows[3]))!r}")
    if args.out:
        io._write_rows(Path(args.out), header, rows)
        _emit(f"wrote {args.out}")
    return EXIT_OK


def _write_json(path, doc) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dislocsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s (kernels: {kernels.BACKEND})")
    subs = parser.add_subparsers(dest="command", required=True)

    def sub(name, func, help_):
        p = subs.add_parser(name, help=help_)
        p.add_argument("--config", help="flat key = value file; flags override it")
        p.set_defaults(func=func)
        return p

    p = sub("simulate", cmd_simulate, "run the coupled system and store the trajectory")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--amplitude", type=float)
    p.add_argument("--n", type=int, default=201, help="grid nodes (default 201)")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--picard-tol", type=float, default=1e-10)
    p.add_argument("--picard-max-iters", type=int, default=50)
    p.add_argument("--beta", type=float, help="monitor weight exponent recorded for verify")
    p.add_argument("--out", default="run.csv", help="trajectory CSV; also writes <stem>.meta.json and <stem>.init.csv")

    p = sub("verify", cmd_verify, "certify a stored trajectory against the comparison monitor")
    p.add_argument("--trajectory", help="trajectory CSV written by simulate")
    p.add_argument("--beta", type=float)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--report", help="invariant CSV (default <stem>.invariants.csv)")
    p.add_argument("--max-listed", type=int, default=20)

    p = sub("mms", cmd_mms, "manufactured-solution convergence study")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--ns", type=int, nargs="+", default=[51, 101, 201])
    p.add_argument("--dt-over-h2", type=float, default=1.0)
    p.add_argument("--t-end-spatial", type=float, default=0.1)
    p.add_argument("--dts", type=float, nargs="*", default=[4e-3, 2e-3, 1e-3])
    p.add_argument("--n-temporal", type=int, default=201)
    p.add_argument("--t-end-temporal", type=float, default=1.0)
    p.add_argument("--out", help="JSON report")

    p = sub("norms", cmd_norms, "norm diagnostics over the standard corpora")
    p.add_argument("--n-kt", type=int, default=201)
    p.add_argument("--n-ext", type=int, default=17)
    p.add_argument("--p", type=float, default=4.0, help="integrability exponent > 3; Hoelder order is 1 - 3/p")
    p.add_argument("--ext-T", type=float, default=0.25)
    p.add_argument("--trajectory", nargs="*", default=[], help="stored runs whose rho_xxx joins the corpus")
    p.add_argument("--out", help="JSON report (stdout if omitted)")

    p = sub("gamma", cmd_gamma, "log-ODE floor: closed form vs RK4, or the floor along a stored run")
    p.add_argument("--E", type=float, default=1.0)
    p.add_argument("--gamma0", type=float, default=None, help="initial floor is gamma0/2 (default 2/e)")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--trajectory")
    p.add_argument("--beta", type=float)
    p.add_argument("--out", help="CSV table")
    return parser


_REQUIRED = {"simulate": ("epsilon", "tau", "amplitude"), "verify": ("trajectory",)}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        if args.config:
            _apply_config(sub, args.config)
            args = parser.parse_args(argv)
        _require(args, sub, *_REQUIRED.get(args.command, ()))
        if args.command == "gamma" and args.gamma0 is None and not args.trajectory:
            args.gamma0 = 2.0 / math.e
        return args.func(args)
    except (ConfigError, io.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
