"""Hot numeric kernels, each with a numba path and a pure-numpy path.

The module-level names (``thomas_solve``, ``smallest_eigenvalue``,
``simplex_level_integrals``) are bound to the numba implementation when
numba is importable and ``PSTABLE_DISABLE_NUMBA`` is unset; the ``*_numpy``
variants are always available so the two paths can be compared directly.
"""

from itertools import permutations

import numpy as np
from scipy.linalg import solve_banded

from ._accel import HAVE_NUMBA, njit

__all__ = [
    "thomas_solve",
    "thomas_solve_numpy",
    "sturm_count",
    "smallest_eigenvalue",
    "smallest_eigenvalue_numpy",
    "simplex_level_integrals",
    "simplex_level_integrals_numpy",
    "kuhn_simplices",
]


# --------------------------------------------------------------------------
# tridiagonal solve

@njit(cache=True)
def _thomas_nb(lower, diag, upper, rhs):
    m = diag.shape[0]
    c = np.empty(m)
    x = np.empty(m)
    beta = diag[0]
    if beta == 0.0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    x[0] = rhs[0] / beta
    for i in range(1, m):
        c[i] = upper[i - 1] / beta
        beta = diag[i] - lower[i] * c[i]
        if beta == 0.0:
            raise ZeroDivisionError("zero pivot in tridiagonal solve")
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / beta
    for i in range(m - 2, -1, -1):
        x[i] -= c[i + 1] * x[i + 1]
    return x


def thomas_solve_numpy(lower, diag, upper, rhs):
    """Solve a tridiagonal system via LAPACK banded storage.

    ``lower[i]`` multiplies ``x[i-1]`` in row i (``lower[0]`` unused),
    ``upper[i]`` multiplies ``x[i+1]`` (``upper[-1]`` unused).
    """
    m = diag.shape[0]
    ab = np.zeros((3, m))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs, check_finite=False)


# --------------------------------------------------------------------------
# symmetric tridiagonal eigenvalue by Sturm bisection

@njit(cache=True)
def _sturm_count_nb(diag, off, x):
    # number of eigenvalues strictly below x (LDL^T inertia)
    m = diag.shape[0]
    count = 0
    q = diag[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, m):
        if q == 0.0:
            q = 1e-300
        q = diag[i] - x - off[i - 1] * off[i - 1] / q
        if q < 0.0:
            count += 1
    return count


def sturm_count(diag, off, x):
    """Count eigenvalues of the symmetric tridiagonal (diag, off) below ``x``."""
    if HAVE_NUMBA:
        return int(_sturm_count_nb(diag, off, float(x)))
    return int(_sturm_counts_np(diag, off, np.array([float(x)]))[0])


def _sturm_counts_np(diag, off, shifts):
    count = np.zeros(shifts.shape, dtype=np.int64)
    q = diag[0] - shifts
    count += q < 0.0
    for i in range(1, diag.shape[0]):
        q = np.where(q == 0.0, 1e-300, q)
        q = diag[i] - shifts - off[i - 1] * off[i - 1] / q
        count += q < 0.0
    return count


def _gershgorin(diag, off):
    r = np.zeros_like(diag)
    r[:-1] += np.abs(off)
    r[1:] += np.abs(off)
    return float(np.min(diag - r)), float(np.max(diag + r))


@njit(cache=True)
def _bisect_nb(diag, off, lo, hi, tol):
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _sturm_count_nb(diag, off, mid) >= 1:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _bisect_np(diag, off, lo, hi, tol, sections=32):
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        shifts = np.linspace(lo, hi, sections + 2)[1:-1]
        counts = _sturm_counts_np(diag, off, shifts)
        above = np.nonzero(counts >= 1)[0]
        new_hi = shifts[above[0]] if above.size else hi
        below = np.nonzero(counts == 0)[0]
        new_lo = shifts[below[-1]] if below.size else lo
        if new_hi - new_lo >= hi - lo:
            break
        lo, hi = new_lo, new_hi
    return lo, hi


def smallest_eigenvalue_numpy(diag, off, tol=1e-14):
    """Bracket of the smallest eigenvalue of a symmetric tridiagonal matrix."""
    lo, hi = _gershgorin(diag, off)
    return _bisect_np(np.asarray(diag, float), np.asarray(off, float), lo, hi, tol)


def _smallest_eigenvalue_nb(diag, off, tol=1e-14):
    lo, hi = _gershgorin(diag, off)
    return _bisect_nb(np.asarray(diag, float), np.asarray(off, float), lo, hi, tol)


# --------------------------------------------------------------------------
# exact level-set volumes of the piecewise-linear interpolant on Kuhn simplices

def kuhn_simplices(d):
    """Vertex offsets (d!, d+1, d) and edge axes (d!, d) of the Kuhn split of a cube."""
    perms = list(permutations(range(d)))
    offs = np.zeros((len(perms), d + 1, d), dtype=np.int64)
    axes = np.zeros((len(perms), d), dtype=np.int64)
    for s, perm in enumerate(perms):
        for k, ax in enumerate(perm):
            offs[s, k + 1] = offs[s, k]
            offs[s, k + 1, ax] += 1
            axes[s, k] = ax
    return offs, axes


@njit(cache=True)
def _frac_above(a, t):
    # a sorted ascending, len 3 (triangle) or 4 (tetrahedron); t strictly inside (a[0], a[-1])
    if a.shape[0] == 3:
        if t <= a[1]:
            return 1.0 - (t - a[0]) ** 2 / ((a[1] - a[0]) * (a[2] - a[0]))
        return (a[2] - t) ** 2 / ((a[2] - a[0]) * (a[2] - a[1]))
    if t <= a[1]:
        return 1.0 - (t - a[0]) ** 3 / ((a[1] - a[0]) * (a[2] - a[0]) * (a[3] - a[0]))
    if t >= a[2]:
        return (a[3] - t) ** 3 / ((a[3] - a[0]) * (a[3] - a[1]) * (a[3] - a[2]))
    x = t - a[0]
    y = t - a[1]
    b = a[2] - t
    c = a[3] - t
    num = b * c * (x * x + x * y + y * y) + (b + c) * x * y * (x + y) + x * x * y * y
    return 1.0 - num / ((b + x) * (c + x) * (b + y) * (c + y))


@njit(cache=True)
def _accumulate(a, vol, wgt, th, dv, dw, out_v, out_w):
    k0 = np.searchsorted(th, a[0], side="left")
    k1 = np.searchsorted(th, a[a.shape[0] - 1], side="left")
    dv[0] += vol
    dv[k0] -= vol
    dw[0] += vol * wgt
    dw[k0] -= vol * wgt
    for k in range(k0, k1):
        fr = 1.0 if th[k] <= a[0] else _frac_above(a, th[k])
        out_v[k] += vol * fr
        out_w[k] += vol * wgt * fr


@njit(cache=True)
def _simplex_nb(vals, h, offs, axes, th, apow):
    d = vals.ndim
    nk = th.shape[0]
    dv = np.zeros(nk + 1)
    dw = np.zeros(nk + 1)
    out_v = np.zeros(nk)
    out_w = np.zeros(nk)
    cellvol = 1.0
    for ax in range(d):
        cellvol *= h[ax]
    nsim = offs.shape[0]
    vol = cellvol / nsim
    a = np.empty(d + 1)
    vv = np.empty(d + 1)
    shp = vals.shape
    ncell = 1
    for ax in range(d):
        ncell *= shp[ax] - 1
    idx = np.empty(d, dtype=np.int64)
    flat = vals.ravel()
    strides = np.empty(d, dtype=np.int64)
    st = 1
    for ax in range(d - 1, -1, -1):
        strides[ax] = st
        st *= shp[ax]
    for c in range(ncell):
        rem = c
        for ax in range(d - 1, -1, -1):
            idx[ax] = rem % (shp[ax] - 1)
            rem //= shp[ax] - 1
        base = 0
        for ax in range(d):
            base += idx[ax] * strides[ax]
        # skip cells where every corner is zero
        anynz = False
        for k in range(1 << d):
            off = 0
            for ax in range(d):
                if (k >> ax) & 1:
                    off += strides[ax]
            if flat[base + off] != 0.0:
                anynz = True
                break
        if not anynz:
            continue
        for s in range(nsim):
            for k in range(d + 1):
                off = 0
                for ax in range(d):
                    off += offs[s, k, ax] * strides[ax]
                vv[k] = flat[base + off]
            g2 = 0.0
            for k in range(d):
                dk = (vv[k + 1] - vv[k]) / h[axes[s, k]]
                g2 += dk * dk
            wgt = g2 ** (0.5 * apow) if apow != 0.0 else 1.0
            for k in range(d + 1):
                a[k] = vv[k]
            a.sort()
            _accumulate(a, vol, wgt, th, dv, dw, out_v, out_w)
    out_v += np.cumsum(dv)[:nk]
    out_w += np.cumsum(dw)[:nk]
    return out_v, out_w


def _frac_above_np(a, t):
    """Vectorised fraction of each simplex where the linear interpolant exceeds t."""
    d = a.shape[1] - 1
    a0, alast = a[:, 0], a[:, -1]
    out = np.where((t < a0) | ((t == a0) & (alast > a0)), 1.0, 0.0)
    inside = (t > a0) & (t < alast)
    if not np.any(inside):
        return out
    b = a[inside]
    fr = np.empty(b.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        if d == 2:
            lowc = t <= b[:, 1]
            lo = 1.0 - (t - b[:, 0]) ** 2 / ((b[:, 1] - b[:, 0]) * (b[:, 2] - b[:, 0]))
            hi = (b[:, 2] - t) ** 2 / ((b[:, 2] - b[:, 0]) * (b[:, 2] - b[:, 1]))
            fr = np.where(lowc, lo, hi)
        else:
            lowc = t <= b[:, 1]
            highc = t >= b[:, 2]
            lo = 1.0 - (t - b[:, 0]) ** 3 / (
                (b[:, 1] - b[:, 0]) * (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 0]))
            hi = (b[:, 3] - t) ** 3 / (
                (b[:, 3] - b[:, 0]) * (b[:, 3] - b[:, 1]) * (b[:, 3] - b[:, 2]))
            x = t - b[:, 0]
            y = t - b[:, 1]
            bb = b[:, 2] - t
            cc = b[:, 3] - t
            num = bb * cc * (x * x + x * y + y * y) + (bb + cc) * x * y * (x + y) + x * x * y * y
            mid = 1.0 - num / ((bb + x) * (cc + x) * (bb + y) * (cc + y))
            fr = np.where(lowc, lo, np.where(highc, hi, mid))
    out[inside] = fr
    return out


def _simplex_arrays(vals, h, apow):
    d = vals.ndim
    offs, axes = kuhn_simplices(d)
    corner = []
    for s in range(offs.shape[0]):
        verts = []
        for k in range(d + 1):
            sl = tuple(slice(int(o), int(o) + n - 1) for o, n in zip(offs[s, k], vals.shape))
            verts.append(vals[sl].ravel())
        corner.append(np.stack(verts, axis=1))
    vv = np.concatenate(corner, axis=0)  # (S, d+1) in path order
    ax = np.repeat(axes, vv.shape[0] // axes.shape[0], axis=0)
    hh = np.asarray(h, float)[ax]
    g2 = np.sum((np.diff(vv, axis=1) / hh) ** 2, axis=1)
    wgt = g2 ** (0.5 * apow) if apow != 0.0 else np.ones_like(g2)
    keep = np.any(vv != 0.0, axis=1)
    return np.sort(vv[keep], axis=1), wgt[keep], float(np.prod(h)) / offs.shape[0]


def simplex_level_integrals_numpy(vals, h, thresholds, apow=0.0):
    """V(t) = |{f_PL > t}| and W(t) = int_{f_PL > t} |grad f_PL|^apow for each threshold.

    ``vals`` is the nodal array (already |v|), ``h`` the spacing per axis;
    thresholds must be sorted ascending.  Cells cover the full grid box.
    """
    vals = np.ascontiguousarray(vals, dtype=float)
    th = np.asarray(thresholds, dtype=float)
    a, wgt, vol = _simplex_arrays(vals, h, apow)
    out_v = np.empty(th.shape[0])
    out_w = np.empty(th.shape[0])
    for k, t in enumerate(th):
        fr = _frac_above_np(a, t)
        out_v[k] = vol * fr.sum()
        out_w[k] = vol * np.dot(fr, wgt)
    return out_v, out_w


def _simplex_level_integrals_nb(vals, h, thresholds, apow=0.0):
    vals = np.ascontiguousarray(vals, dtype=float)
    offs, axes = kuhn_simplices(vals.ndim)
    return _simplex_nb(vals, np.asarray(h, float), offs, axes,
                       np.ascontiguousarray(thresholds, dtype=float), float(apow))


if HAVE_NUMBA:
    def thomas_solve(lower, diag, upper, rhs):
        return _thomas_nb(np.ascontiguousarray(lower, float), np.ascontiguousarray(diag, float),
                          np.ascontiguousarray(upper, float), np.ascontiguousarray(rhs, float))

    smallest_eigenvalue = _smallest_eigenvalue_nb
    simplex_level_integrals = _simplex_level_integrals_nb
else:
    thomas_solve = thomas_solve_numpy
    smallest_eigenvalue = smallest_eigenvalue_numpy
    simplex_level_integrals = simplex_level_integrals_numpy

thomas_solve.__doc__ = thomas_solve_numpy.__doc__
