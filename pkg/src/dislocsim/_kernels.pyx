# cython: language_level=3
"""Compiled hot loops. Signatures mirror ``_kernels_py`` exactly."""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow

cnp.import_array()


def thomas(const double[::1] lower, const double[::1] diag,
           const double[::1] upper, const double[::1] rhs):
    cdef Py_ssize_t m = diag.shape[0]
    cdef Py_ssize_t i
    cdef double denom
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] x = out
    cdef double[::1] cp = np.empty(m, dtype=np.float64)
    cdef double[::1] dp = np.empty(m, dtype=np.float64)
    if m == 0:
        return out
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, m):
        denom = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / denom
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / denom
    x[m - 1] = dp[m - 1]
    for i in range(m - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return out


def holder_pairs(const double[:, ::1] values, double spacing, double alpha):
    cdef Py_ssize_t nr = values.shape[0]
    cdef Py_ssize_t nc = values.shape[1]
    cdef Py_ssize_t r, i, d
    cdef double best = 0.0
    cdef double scale, q
    for d in range(1, nc):
        scale = pow(d * spacing, alpha)
        for r in range(nr):
            for i in range(nc - d):
                q = fabs(values[r, i + d] - values[r, i]) / scale
                if q > best:
                    best = q
    return best


def bmo_sweep(const double[:, ::1] values, const Py_ssize_t[::1] cx,
              const Py_ssize_t[::1] ct, const Py_ssize_t[::1] ks,
              const Py_ssize_t[::1] lag, const Py_ssize_t[::1] minj):
    """Max mean oscillation over grid-aligned closed cylinders.

    ``lag[q]``/``minj[q]`` belong to radius ``ks[q]``. Returns
    ``(best, i, j, k)``; ``k == -1`` when no cylinder fits.
    """
    cdef Py_ssize_t nx = values.shape[1]
    cdef Py_ssize_t a, b, q, r, c, i, j, k, L
    cdef double s, mean, dev, osc
    cdef double best = 0.0
    cdef Py_ssize_t bi = -1, bj = -1, bk = -1
    cdef Py_ssize_t count
    for q in range(ks.shape[0]):
        k = ks[q]
        L = lag[q]
        for b in range(ct.shape[0]):
            j = ct[b]
            if j < minj[q]:
                continue
            for a in range(cx.shape[0]):
                i = cx[a]
                if i - k < 0 or i + k > nx - 1:
                    continue
                s = 0.0
                count = 0
                for r in range(j - L, j + 1):
                    for c in range(i - k, i + k + 1):
                        s += values[r, c]
                        count += 1
                mean = s / count
                dev = 0.0
                for r in range(j - L, j + 1):
                    for c in range(i - k, i + k + 1):
                        dev += fabs(values[r, c] - mean)
                osc = dev / count
                if bk == -1 or osc > best:
                    best = osc
                    bi = i
                    bj = j
                    bk = k
    return best, bi, bj, bk
