"""Time the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is called on
inputs of the size the simulator and the norm routines actually use, and the
best of several repeats is reported.  ``--end-to-end`` additionally times a
full simulation in a subprocess per backend.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from dislocsim import _kernels_py as py
from dislocsim.norms import SpaceTimeField, _cylinder_tables

try:
    from dislocsim import _kernels as cy
except ImportError:
    cy = None


def _cases(rng):
    for n in (199, 1999):
        lo = np.full(n, -0.4)
        up = lo.copy()
        diag = np.full(n, 1.8)
        rhs = rng.normal(size=n)
        yield f"thomas n={n}", "thomas", (lo, diag, up, rhs)
    for shape in ((26, 201), (51, 401)):
        v = np.ascontiguousarray(rng.normal(size=shape))
        yield f"holder_pairs {shape[0]}x{shape[1]}", "holder_pairs", (v, 1.0 / (shape[1] - 1), 0.5)
    for n, stride in ((101, 1), (201, 2)):
        nt = (n - 1) // 8 + 1
        f = SpaceTimeField(rng.normal(size=(nt, n)), 1.0 / (n - 1), 0.25 / (nt - 1))
        cx = np.arange(0, n, stride, dtype=np.intp)
        ct = np.arange(0, nt, dtype=np.intp)
        ks = np.arange(stride, (n - 1) // 2 + 1, stride, dtype=np.intp)
        lag, minj = _cylinder_tables(f, ks)
        keep = minj <= nt - 1
        yield f"bmo_sweep {nt}x{n} stride {stride}", "bmo_sweep", (f.values, cx, ct, ks[keep], lag[keep], minj[keep])


def best_time(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def end_to_end(backend):
    env = dict(os.environ)
    env.pop("DISLOCSIM_PURE", None)
    if backend == "python":
        env["DISLOCSIM_PURE"] = "1"
    code = (
        "import time\n"
        "from dislocsim import kernels\n"
        "from dislocsim.grid import Grid\n"
        "from dislocsim.initial_data import ModelParams, build_initial_data\n"
        "from dislocsim.solver import StepperConfig, solve\n"
        "p = ModelParams(0.5, 1.0)\n"
        "init = build_initial_data(p, 0.05, Grid(201))\n"
        "t = time.perf_counter(); solve(init, 1.0, StepperConfig(dt=1e-3), p)\n"
        "print(kernels.BACKEND, time.perf_counter() - t)\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, seconds = out.stdout.split()
    return name, float(seconds)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for label, name, inputs in _cases(rng):
        tp = best_time(getattr(py, name), inputs, args.repeat)
        if cy is None:
            print(f"{label:36s} {tp * 1e3:12.4f} {'n/a':>12s} {'n/a':>8s}")
            continue
        tc = best_time(getattr(cy, name), inputs, args.repeat)
        print(f"{label:36s} {tp * 1e3:12.4f} {tc * 1e3:12.4f} {tp / tc:8.1f}")
    if args.end_to_end:
        for backend in ("python", "cython"):
            name, secs = end_to_end(backend)
            print(f"simulate n=201, 1000 steps [{name}]: {secs:.2f} s")


if __name__ == "__main__":
    main()
