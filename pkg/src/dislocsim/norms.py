"""Discrete function-space norms on space-time rectangles.

Covers the parabolic Hölder seminorms and norms, the fractional Sobolev norm,
the parabolic BMO seminorm over lower cylinders, W^{2,1}_2, the symmetric and
antisymmetric periodic extensions, and the two empirical ratio diagnostics
built from them (logarithmic Sobolev ratio and sym/asym BMO ratio).

Fields are time-major: ``values[j, i]`` is the sample at
(x0 + i*h, t0 + j*dt).
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, floor

import numpy as np

from . import kernels
from .grid import derivative, trapezoid_integral, trapezoid_weights

_TOL = 1e-9


class IntegerOrder(ValueError):
    pass


class EmptyDomain(ValueError):
    pass


class ZeroDenominator(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class SpaceTimeField:
    values: np.ndarray
    h: float
    dt: float
    x0: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("values must be 2-D (time, space)")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def n_t(self) -> int:
        return self.values.shape[0]

    @property
    def n_x(self) -> int:
        return self.values.shape[1]

    @property
    def x(self) -> np.ndarray:
        return self.x0 + np.arange(self.n_x) * self.h

    @property
    def t(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_t) * self.dt

    @property
    def length(self) -> float:
        return (self.n_x - 1) * self.h

    @property
    def duration(self) -> float:
        return (self.n_t - 1) * self.dt

    def with_values(self, values) -> "SpaceTimeField":
        return SpaceTimeField(values, self.h, self.dt, self.x0, self.t0)

    @classmethod
    def sample(cls, func, n_x: int, n_t: int, T: float = 1.0, x_range=(0.0, 1.0)) -> "SpaceTimeField":
        a, b = x_range
        h = (b - a) / (n_x - 1)
        dt = T / (n_t - 1)
        x = a + np.arange(n_x) * h
        t = np.arange(n_t) * dt
        vals = np.broadcast_to(func(x[None, :], t[:, None]), (n_t, n_x))
        return cls(np.array(vals, dtype=float), h, dt, a, 0.0)


# ---------------------------------------------------------------------------
# Hölder
# ---------------------------------------------------------------------------


def holder_seminorm_x(f: SpaceTimeField, alpha: float) -> float:
    _check_alpha(alpha)
    return kernels.holder_pairs(f.values, f.h, alpha)


def holder_seminorm_t(f: SpaceTimeField, alpha: float) -> float:
    _check_alpha(alpha)
    return kernels.holder_pairs(np.ascontiguousarray(f.values.T), f.dt, alpha)


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError(f"Hölder exponent must lie in (0, 1), got {alpha}")


def stencil_derivatives(f: SpaceTimeField):
    """Derivative provider D_t^r D_x^s built from the shared finite-difference stencils."""
    cache = {}

    def provide(r: int, s: int) -> np.ndarray:
        if (r, s) not in cache:
            v = derivative(f.values, f.dt, r, axis=0) if r else f.values
            cache[r, s] = derivative(v, f.h, s, axis=1) if s else v
        return cache[r, s]

    return provide


def holder_norm(f: SpaceTimeField, ell: float, derivatives=None) -> float:
    """Parabolic Hölder norm |v|^(ell) for non-integer 0 < ell < 4.

    Sum of sup norms of D_t^r D_x^s v with 2r+s <= [ell], the x-seminorms of
    order ell-[ell] of the top derivatives (2r+s = [ell]), and the t-seminorms
    of order (ell-2r-s)/2 for every 0 < ell-2r-s < 2. ``derivatives(r, s)``
    must return the sampled derivative; stencils are used by default.
    """
    if float(ell).is_integer():
        raise IntegerOrder(f"Hölder order must be non-integer, got {ell}")
    if not 0 < ell < 4:
        raise ValueError("Hölder order must lie in (0, 4)")
    D = derivatives or stencil_derivatives(f)
    top = int(floor(ell))
    pairs = [(r, s) for r in range(top // 2 + 1) for s in range(top + 1) if 2 * r + s <= top]
    total = sum(float(np.max(np.abs(D(r, s)))) for r, s in pairs)
    frac = ell - top
    for r, s in pairs:
        if 2 * r + s == top:
            total += holder_seminorm_x(f.with_values(D(r, s)), frac)
    for r in range(2):
        for s in range(4):
            gap = ell - 2 * r - s
            if 0 < gap < 2:
                total += holder_seminorm_t(f.with_values(D(r, s)), gap / 2)
    return total


# ---------------------------------------------------------------------------
# fractional Sobolev
# ---------------------------------------------------------------------------


def frac_sobolev_norm(values, s: float, p: float, a: float = 0.0, b: float = 1.0) -> float:
    """||f||_{W^s_p(a,b)} = sum_{k<=[s]} ||f^(k)||_p + Gagliardo seminorm of f^([s]).

    The double integral of |g(x)-g(y)|^p / |x-y|^(1+sigma p) is an exhaustive
    trapezoid double sum off the diagonal. Each diagonal cell is replaced by
    its exact integral under the linearization g(x)-g(y) ~ g'(x_i)(x-y),
    which removes the O(h) loss that dropping the diagonal would cause.
    """
    v = np.asarray(values, dtype=float)
    if float(s).is_integer() or s <= 0:
        raise ValueError("s must be positive and non-integer")
    if not p > 1:
        raise ValueError("p must be > 1")
    n = v.size
    h = (b - a) / (n - 1)
    w = trapezoid_weights(n, h)
    k_top = int(floor(s))
    sigma = s - k_top
    derivs = [v] + [derivative(v, h, k) for k in range(1, k_top + 2)]
    whole = sum(float(trapezoid_integral(np.abs(g) ** p, h)) ** (1 / p) for g in derivs[: k_top + 1])
    g = derivs[k_top]
    x = a + np.arange(n) * h
    dx = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(dx, 1.0)
    kern = np.abs(g[:, None] - g[None, :]) ** p / dx ** (1 + sigma * p)
    np.fill_diagonal(kern, 0.0)
    off = float(w @ kern @ w)
    q = p * (1 - sigma) - 1  # exponent of |x-y| in the linearized integrand
    cell = 2 * h ** (q + 2) / ((q + 1) * (q + 2))
    diag = float(np.sum((w / h) ** 2 * np.abs(derivs[k_top + 1]) ** p) * cell)
    return whole + (off + diag) ** (1 / p)


# ---------------------------------------------------------------------------
# BMO over lower parabolic cylinders
# ---------------------------------------------------------------------------


def _cylinder_tables(f: SpaceTimeField, ks):
    r2 = (np.asarray(ks, dtype=float) * f.h) ** 2 / f.dt
    lag = np.floor(r2 + _TOL).astype(np.intp)
    minj = np.ceil(r2 - _TOL).astype(np.intp)
    return lag, minj


def bmo_search(f: SpaceTimeField, x_stride: int = 1, t_stride: int = 1):
    """Best grid-aligned cylinder: returns (oscillation, i_center, j_center, k_radius).

    Candidates are closed cylinders |x - x_i| <= k h, t_j - (k h)^2 <= t <= t_j
    lying in the field's rectangle, with centers on every ``x_stride``-th node
    and ``t_stride``-th time level and k a positive multiple of ``x_stride``.
    The mean oscillation is the plain average of |v - mean| over enclosed samples.
    """
    cx = np.arange(0, f.n_x, x_stride, dtype=np.intp)
    ct = np.arange(0, f.n_t, t_stride, dtype=np.intp)
    ks = np.arange(x_stride, (f.n_x - 1) // 2 + 1, x_stride, dtype=np.intp)
    lag, minj = _cylinder_tables(f, ks)
    keep = minj <= f.n_t - 1
    ks, lag, minj = ks[keep], lag[keep], minj[keep]
    best, i, j, k = kernels.bmo_sweep(f.values, cx, ct, ks, lag, minj)
    if k == -1:
        raise EmptyDomain("no lower cylinder fits in the field (duration < h^2?)")
    return best, i, j, k


def bmo_norm(f: SpaceTimeField, x_stride: int = 1, t_stride: int = 1) -> float:
    return bmo_search(f, x_stride, t_stride)[0]


def bmo_bruteforce(f: SpaceTimeField, refine: int = 1, exact_sums: bool = True) -> float:
    """Reference sup of mean oscillations, enumerated cylinder by cylinder.

    Centers run over a lattice ``refine`` times finer than the grid in both x
    and t; radii over all multiples of h. With ``exact_sums`` the block sums
    are accumulated left to right in row-major order.
    """
    v = f.values
    hx, ht = f.h / refine, f.dt / refine
    best = None
    for mx in range(refine * (f.n_x - 1) + 1):
        xc = mx * hx
        for k in range(1, f.n_x):
            r = k * f.h
            if xc - r < -_TOL * f.h or xc + r > f.length + _TOL * f.h:
                continue
            i_lo = int(ceil((xc - r) / f.h - _TOL))
            i_hi = int(floor((xc + r) / f.h + _TOL))
            for mt in range(refine * (f.n_t - 1) + 1):
                tc = mt * ht
                if tc - r * r < -_TOL * f.dt:
                    continue
                j_lo = int(ceil((tc - r * r) / f.dt - _TOL))
                j_hi = int(floor(tc / f.dt + _TOL))
                if j_hi < j_lo:
                    continue
                block = v[j_lo : j_hi + 1, i_lo : i_hi + 1]
                if exact_sums:
                    flat = block.ravel().tolist()
                    acc = 0.0
                    for u in flat:
                        acc += u
                    mean = acc / len(flat)
                    acc = 0.0
                    for u in flat:
                        acc += abs(u - mean)
                    osc = acc / len(flat)
                else:
                    osc = float(np.mean(np.abs(block - block.mean())))
                if best is None or osc > best:
                    best = osc
    if best is None:
        raise EmptyDomain("no lower cylinder fits in the field")
    return best


# ---------------------------------------------------------------------------
# Sobolev / Lebesgue on the rectangle
# ---------------------------------------------------------------------------


def st_integral(f: SpaceTimeField, values=None) -> float:
    v = f.values if values is None else values
    return float(trapezoid_integral(trapezoid_integral(v, f.h, axis=1), f.dt))


def st_lp_norm(f: SpaceTimeField, p: float = 2.0, values=None) -> float:
    v = f.values if values is None else values
    return st_integral(f, np.abs(v) ** p) ** (1 / p)


def w212_norm(f: SpaceTimeField) -> float:
    """||u||_2 + ||u_x||_2 + ||u_xx||_2 + ||u_t||_2 over the rectangle."""
    D = stencil_derivatives(f)
    return sum(st_lp_norm(f, 2.0, D(r, s)) for r, s in ((0, 0), (0, 1), (0, 2), (1, 0)))


# ---------------------------------------------------------------------------
# extensions and ratio diagnostics
# ---------------------------------------------------------------------------


def _extend(f: SpaceTimeField, sign: float) -> SpaceTimeField:
    if abs(f.x0) > _TOL or abs(f.length - 1.0) > 1e-9:
        raise ValueError("extensions are defined for fields on [0, 1]")
    m = f.n_x - 1
    j = np.arange(4 * m + 1)
    pos = (j - m) % (2 * m)  # 0..2m-1 measured from x = 0
    mirrored = pos > m
    idx = np.where(mirrored, 2 * m - pos, pos)
    fac = np.where(mirrored, sign, 1.0)
    return SpaceTimeField(f.values[:, idx] * fac[None, :], f.h, f.dt, -1.0, f.t0)


def sym_extend(f: SpaceTimeField) -> SpaceTimeField:
    """Even reflection about x = 0, then 2-periodic; covers [-1, 3]."""
    return _extend(f, 1.0)


def asym_extend(f: SpaceTimeField) -> SpaceTimeField:
    """Odd reflection about x = 0, then 2-periodic; covers [-1, 3]."""
    return _extend(f, -1.0)


def kozono_taniuchi_ratio(f: SpaceTimeField, x_stride: int = 1, t_stride: int = 1):
    """||v||_inf / ((||v||_BMO + ||v||_L1) (1 + log+ ||v||_W)) with its components."""
    sup = float(np.max(np.abs(f.values)))
    bmo = bmo_norm(f, x_stride, t_stride)
    l1 = st_lp_norm(f, 1.0)
    w = w212_norm(f)
    log_plus = max(0.0, np.log(w)) if w > 0 else 0.0
    denom = (bmo + l1) * (1.0 + log_plus)
    if denom == 0.0:
        raise ZeroDenominator("field is identically zero")
    comps = {"sup": sup, "bmo": bmo, "l1": l1, "w212": w, "log_plus": log_plus}
    return sup / denom, comps


def sym_asym_relation(f: SpaceTimeField):
    """(||f_sym||_BMO, components) with the asym BMO norm and the mean of |f_sym| over (-1,1)x(0,T)."""
    fs, fa = sym_extend(f), asym_extend(f)
    lhs = bmo_norm(fs)
    m = f.n_x - 1
    inner = fs.with_values(np.abs(fs.values[:, : 2 * m + 1]))
    mean_abs = st_lp_norm(inner, 1.0) / (2.0 * f.duration)
    comps = {"asym_bmo": bmo_norm(fa), "mean_abs_sym": mean_abs}
    denom = comps["asym_bmo"] + mean_abs
    comps["c_emp"] = lhs / denom if denom > 0 else float("nan")
    return lhs, comps


# ---------------------------------------------------------------------------
# standard corpora
# ---------------------------------------------------------------------------


def _jump(x, t):
    return np.where(x < 0.5, 1.0, -1.0) + 0.0 * t


EXTENSION_CORPUS = {
    "x": lambda x, t: x + 0.0 * t,
    "x2": lambda x, t: x**2 + 0.0 * t,
    "sin": lambda x, t: np.sin(np.pi * x) + 0.0 * t,
    "jump": _jump,
}

ANALYTIC_KT_CORPUS = {
    "const": lambda x, t: 1.0 + 0.0 * x + 0.0 * t,
    "x": lambda x, t: x + 0.0 * t,
    "x2": lambda x, t: x**2 + 0.0 * t,
    "xt": lambda x, t: x * t,
    "sin_decay": lambda x, t: np.sin(np.pi * x) * np.exp(-t),
    "cos2": lambda x, t: np.cos(2 * np.pi * x) + 0.0 * t,
    **{
        f"bump{k}": (lambda k: lambda x, t: k * np.exp(-(((x - 0.5) / 0.1) ** 2)) + 0.0 * t)(k)
        for k in (1, 4, 16)
    },
}


def extension_corpus_fields(n: int, T: float = 0.25) -> dict[str, SpaceTimeField]:
    return {name: SpaceTimeField.sample(fn, n, n, T) for name, fn in EXTENSION_CORPUS.items()}


def kt_time_levels(n: int) -> int:
    return (n - 1) // 8 + 1


def kt_strides(n: int) -> tuple[int, int]:
    """BMO strides keeping the physical candidate lattice fixed (spacing 1/50 in x, 1/25 in t)."""
    n_t = kt_time_levels(n)
    return max(1, (n - 1) // 50), max(1, (n_t - 1) // 25)


def trajectory_field(times, values, n_t: int) -> SpaceTimeField:
    """Resample a stored (times, values) history onto n_t uniform levels by nearest time."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t_target = np.linspace(times[0], times[-1], n_t)
    idx = np.clip(np.searchsorted(times, t_target - 1e-12), 0, times.size - 1)
    h = 1.0 / (values.shape[1] - 1)
    return SpaceTimeField(values[idx], h=h, dt=(times[-1] - times[0]) / (n_t - 1), t0=float(times[0]))


def rho_xxx_field(traj, n_t: int) -> SpaceTimeField:
    return trajectory_field(traj.times, derivative(traj.rho, traj.grid.h, 3, axis=1), n_t)


def kt_corpus_fields(n: int, trajectories=()) -> dict[str, SpaceTimeField]:
    """Analytic KT corpus on I_1 at n x kt_time_levels(n) samples, plus rho_xxx of each trajectory."""
    n_t = kt_time_levels(n)
    out = {name: SpaceTimeField.sample(fn, n, n_t, 1.0) for name, fn in ANALYTIC_KT_CORPUS.items()}
    for k, traj in enumerate(trajectories):
        out[f"rho_xxx_{k}"] = rho_xxx_field(traj, n_t)
    return out


def kt_corpus_ratios(n: int, trajectories=()) -> dict[str, float]:
    sx, st = kt_strides(n)
    return {name: kozono_taniuchi_ratio(f, sx, st)[0] for name, f in kt_corpus_fields(n, trajectories).items()}
