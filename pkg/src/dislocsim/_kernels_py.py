"""Pure-Python/numpy fallbacks for the compiled kernels in ``_kernels.pyx``.

Same signatures and return conventions; used when the extension is not
built or when ``DISLOCSIM_PURE=1`` is set.
"""
import numpy as np
from scipy.linalg import solve_banded


def thomas(lower, diag, upper, rhs):
    m = diag.shape[0]
    if m == 0:
        return np.empty(0)
    ab = np.zeros((3, m))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs)


def holder_pairs(values, spacing, alpha):
    values = np.asarray(values, dtype=float)
    nc = values.shape[1]
    best = 0.0
    for d in range(1, nc):
        q = np.abs(values[:, d:] - values[:, :-d]).max() / (d * spacing) ** alpha
        best = max(best, float(q))
    return best


def bmo_sweep(values, cx, ct, ks, lag, minj):
    values = np.asarray(values, dtype=float)
    nx = values.shape[1]
    cx = np.asarray(cx)
    best, bi, bj, bk = 0.0, -1, -1, -1
    for k, L, j0 in zip(ks, lag, minj):
        k, L = int(k), int(L)
        ok = cx[(cx - k >= 0) & (cx + k <= nx - 1)]
        if ok.size == 0:
            continue
        for j in ct:
            j = int(j)
            if j < j0:
                continue
            rows = values[j - L : j + 1]
            # all x-windows at once, one flattened block per row: (windows, rows*(2k+1))
            win = np.lib.stride_tricks.sliding_window_view(rows, 2 * k + 1, axis=1)
            blocks = win[:, ok - k, :].transpose(1, 0, 2).reshape(ok.size, -1)
            count = blocks.shape[1]
            # cumulative sums run strictly left to right, matching the compiled loop bit for bit
            mean = np.cumsum(blocks, axis=1)[:, -1] / count
            osc = np.cumsum(np.abs(blocks - mean[:, None]), axis=1)[:, -1] / count
            a = int(np.argmax(osc))
            if bk == -1 or osc[a] > best:
                best, bi, bj, bk = float(osc[a]), int(ok[a]), j, k
    return best, bi, bj, bk
