"""Hot loops for generator assembly, with a numba path and a numpy path.

The numba kernels are used when numba imports and ``SU3LASER_NO_NUMBA`` is not
set to a truthy value.  Both paths emit the same set of ``(row, col, value)``
triplets; since no two triplets share a position the compressed matrices they
produce are bitwise identical.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("SU3LASER_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


@njit(cache=True)
def _su3_triplets_jit(N, k, offsets, two_r, two_r3, two_r3p, omega, gamma_c, pump, chi):
    n = two_r.size
    rows = np.empty(7 * n, dtype=np.int64)
    cols = np.empty(7 * n, dtype=np.int64)
    vals = np.empty(7 * n, dtype=np.float64)
    diag_im = np.empty(n, dtype=np.float64)
    pos = 0
    half_om = 0.5 * omega
    for col in range(n):
        tr = two_r[col]
        t3 = two_r3[col]
        t3p = two_r3p[col]
        trp = tr - k
        blk = tr + 1 - k

        # coherent drive; phases already folded in so the values are real
        a = np.sqrt((tr - t3) * (tr + t3 + 2) / 4.0)
        if a != 0.0 and half_om != 0.0:
            rows[pos] = offsets[tr] + ((t3 + 2 + tr) // 2) * blk + (t3p + trp) // 2
            cols[pos] = col
            vals[pos] = -half_om * a
            pos += 1
        a = np.sqrt((tr + t3) * (tr - t3 + 2) / 4.0)
        if a != 0.0 and half_om != 0.0:
            rows[pos] = offsets[tr] + ((t3 - 2 + tr) // 2) * blk + (t3p + trp) // 2
            cols[pos] = col
            vals[pos] = half_om * a
            pos += 1
        a = np.sqrt((trp + t3p) * (trp - t3p + 2) / 4.0)
        if a != 0.0 and half_om != 0.0:
            rows[pos] = offsets[tr] + ((t3 + tr) // 2) * blk + (t3p - 2 + trp) // 2
            cols[pos] = col
            vals[pos] = half_om * a
            pos += 1
        a = np.sqrt((trp - t3p) * (trp + t3p + 2) / 4.0)
        if a != 0.0 and half_om != 0.0:
            rows[pos] = offsets[tr] + ((t3 + tr) // 2) * blk + (t3p + 2 + trp) // 2
            cols[pos] = col
            vals[pos] = -half_om * a
            pos += 1

        # C- rho C+ raises r by 1/2
        a = np.sqrt((N - tr) * (tr + t3 + 2) * (N - tr + k) * (trp + t3p + 2) / 4.0)
        if a != 0.0 and gamma_c != 0.0:
            nt = tr + 1
            rows[pos] = offsets[nt] + ((t3 + 1 + nt) // 2) * (nt + 1 - k) + (t3p + 1 + nt - k) // 2
            cols[pos] = col
            vals[pos] = gamma_c * a
            pos += 1
        # P+ rho P- lowers r by 1/2
        a = np.sqrt((tr - t3) * (N - tr + 1) * (trp - t3p) * (N - tr + k + 1) / 4.0)
        if a != 0.0 and pump != 0.0:
            nt = tr - 1
            rows[pos] = offsets[nt] + ((t3 + 1 + nt) // 2) * (nt + 1 - k) + (t3p + 1 + nt - k) // 2
            cols[pos] = col
            vals[pos] = pump * a
            pos += 1

        lcc = (N - tr) * (tr + t3 + 2) / 2.0
        rcc = (N - tr + k) * (trp + t3p + 2) / 2.0
        lpp = (tr - t3) * (N - tr + 1) / 2.0
        rpp = (trp - t3p) * (N - tr + k + 1) / 2.0
        d = -0.5 * gamma_c * (lcc + rcc) - 0.5 * pump * (lpp + rpp)
        diag_im[col] = chi * (lcc - rcc)
        rows[pos] = col
        cols[pos] = col
        vals[pos] = d
        pos += 1
    return rows[:pos], cols[:pos], vals[:pos], diag_im


def _su3_triplets_np(N, k, offsets, two_r, two_r3, two_r3p, omega, gamma_c, pump, chi):
    tr = two_r
    t3 = two_r3
    t3p = two_r3p
    trp = tr - k
    blk = tr + 1 - k
    col = np.arange(tr.size, dtype=np.int64)
    half_om = 0.5 * omega
    R, C, V = [], [], []

    def emit(mask, row, val):
        R.append(row[mask])
        C.append(col[mask])
        V.append(val[mask])

    with np.errstate(invalid="ignore"):
        if half_om != 0.0:
            base = offsets[tr]
            a = np.sqrt((tr - t3) * (tr + t3 + 2) / 4.0)
            emit(a != 0.0, base + ((t3 + 2 + tr) // 2) * blk + (t3p + trp) // 2, -half_om * a)
            a = np.sqrt((tr + t3) * (tr - t3 + 2) / 4.0)
            emit(a != 0.0, base + ((t3 - 2 + tr) // 2) * blk + (t3p + trp) // 2, half_om * a)
            a = np.sqrt((trp + t3p) * (trp - t3p + 2) / 4.0)
            emit(a != 0.0, base + ((t3 + tr) // 2) * blk + (t3p - 2 + trp) // 2, half_om * a)
            a = np.sqrt((trp - t3p) * (trp + t3p + 2) / 4.0)
            emit(a != 0.0, base + ((t3 + tr) // 2) * blk + (t3p + 2 + trp) // 2, -half_om * a)
        if gamma_c != 0.0:
            a = np.sqrt((N - tr) * (tr + t3 + 2) * (N - tr + k) * (trp + t3p + 2) / 4.0)
            nt = np.minimum(tr + 1, N)
            m = a != 0.0
            emit(m, offsets[nt] + ((t3 + 1 + nt) // 2) * (nt + 1 - k) + (t3p + 1 + nt - k) // 2, gamma_c * a)
        if pump != 0.0:
            a = np.sqrt((tr - t3) * (N - tr + 1) * (trp - t3p) * (N - tr + k + 1) / 4.0)
            nt = np.maximum(tr - 1, 0)
            m = a != 0.0
            emit(m, offsets[nt] + ((t3 + 1 + nt) // 2) * (nt + 1 - k) + (t3p + 1 + nt - k) // 2, pump * a)
    lcc = (N - tr) * (tr + t3 + 2) / 2.0
    rcc = (N - tr + k) * (trp + t3p + 2) / 2.0
    lpp = (tr - t3) * (N - tr + 1) / 2.0
    rpp = (trp - t3p) * (N - tr + k + 1) / 2.0
    d = -0.5 * gamma_c * (lcc + rcc) - 0.5 * pump * (lpp + rpp)
    R.append(col)
    C.append(col)
    V.append(d)
    diag_im = chi * (lcc - rcc)
    return np.concatenate(R), np.concatenate(C), np.concatenate(V), diag_im


def su3_triplets(N, k, offsets, two_r, two_r3, two_r3p, omega, gamma_c, pump, chi, use_numba=None):
    """Triplets of the gauge-transformed SU(3) generator on one sector.

    Returns ``rows, cols, vals, diag_im`` where ``diag_im`` is the imaginary
    part of the diagonal (nonzero only through the dispersive term).
    """
    if use_numba is None:
        use_numba = HAVE_NUMBA
    fn = _su3_triplets_jit if (use_numba and HAVE_NUMBA) else _su3_triplets_np
    return fn(
        int(N), int(k), offsets, two_r, two_r3, two_r3p,
        float(omega), float(gamma_c), float(pump), float(chi),
    )
