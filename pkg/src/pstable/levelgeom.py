"""Geometry of level sets: mean curvature, tangential gradients, the I_{p,q}
functionals, coarea densities and a Michael-Simon checker on closed surfaces."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .fields import CartesianField, RadialField, gradient, hessian, radial_superlevel_measure, sphere_area
from .reports import Report


@dataclass(frozen=True)
class LevelGeomSample:
    """Nodewise |grad v|, level-set mean curvature H and |grad_T |grad v|^(p/q)|."""

    gradnorm: np.ndarray
    H: np.ndarray
    tgrad: np.ndarray
    valid: np.ndarray
    eps_grad: float


def _check_pq(p, q):
    if p < 1.0 or q < 1.0:
        raise ValueError("exponents p, q must be >= 1")


def level_geometry(f: CartesianField, p: float, q: float, eps_grad: Optional[float] = None,
                   n: Optional[int] = None) -> LevelGeomSample:
    """Mean curvature and tangential gradient from finite-difference derivatives.

    -(n-1) H = lap v / |Dv| - <D2v Dv, Dv> / |Dv|^3 and
    grad_T |Dv| = D2v Dv / |Dv| - <D2v Dv, Dv> Dv / |Dv|^3.
    Nodes with |Dv| <= eps_grad (default 1e-6 max |Dv|) are marked invalid.
    """
    _check_pq(p, q)
    n = f.d if n is None else n
    g = gradient(f)
    D2 = hessian(f)
    gn = np.sqrt(np.sum(g * g, axis=0))
    if eps_grad is None:
        eps_grad = 1e-6 * float(gn.max()) if gn.max() > 0 else 1.0
    valid = f.mask & (gn > eps_grad)
    safe = np.where(valid, gn, 1.0)
    Hg = np.einsum("ij...,j...->i...", D2, g)
    quad = np.sum(Hg * g, axis=0)
    lap = np.trace(D2, axis1=0, axis2=1)
    H = -(lap / safe - quad / safe ** 3) / (n - 1)
    tvec = Hg / safe - quad * g / safe ** 3
    tn = np.sqrt(np.sum(tvec * tvec, axis=0))
    tgrad = (p / q) * safe ** (p / q - 1.0) * tn
    zero = np.zeros_like(gn)
    return LevelGeomSample(np.where(valid, gn, zero), np.where(valid, H, zero),
                           np.where(valid, tgrad, zero), valid, float(eps_grad))


@dataclass(frozen=True)
class Functional:
    p: float
    q: float
    value: float
    tangential: float
    curvature: float
    empty: bool = False


def _radial_parts(f: RadialField, p, q):
    # H = 1/r and no tangential term; exact cell weights of r^(n-1-q)
    if f.n <= q + 1:
        raise ValueError("radial I_pq needs n > q + 1 for the r^-q weight to be integrable")
    s = np.abs(f.slopes())
    curv = float(np.dot(f.cell_weights(f.n - 1 - q), s ** p))
    return 0.0, curv


def _cartesian_parts(f: CartesianField, p, q, eps_grad, n, tangential=True):
    geo = level_geometry(f, p, q, eps_grad, n)
    pp = p / (p - 1.0) if p > 1.0 else math.inf
    w = f.weights()
    tan = float(np.sum(w * (geo.tgrad / pp) ** q)) if tangential and p > 1.0 else 0.0
    curv = float(np.sum(w * np.abs(geo.H) ** q * geo.gradnorm ** p))
    return tan, curv, not np.any(geo.valid)


def functional_Ipq(f, p: float, q: float, eps_grad: Optional[float] = None,
                   n: Optional[int] = None) -> Functional:
    """I_{p,q}(f)^p = int (tgrad/p')^q + |H|^q |Df|^p over nodes with nonzero gradient."""
    _check_pq(p, q)
    if isinstance(f, RadialField):
        tan, curv = _radial_parts(f, p, q)
        empty = not np.any(f.values)
    else:
        tan, curv, empty = _cartesian_parts(f, p, q, eps_grad, n)
    if empty:
        warnings.warn("no node with nonzero gradient; functional set to 0", RuntimeWarning, stacklevel=2)
    return Functional(p, q, (tan + curv) ** (1.0 / p), tan, curv, empty)


def functional_Ipq_tilde(f, p: float, q: float, eps_grad: Optional[float] = None,
                         n: Optional[int] = None) -> Functional:
    """Curvature-only variant: int |H|^q |Df|^p, then the p-th root."""
    _check_pq(p, q)
    if isinstance(f, RadialField):
        _, curv = _radial_parts(f, p, q)
        empty = not np.any(f.values)
    else:
        _, curv, empty = _cartesian_parts(f, p, q, eps_grad, n, tangential=False)
    return Functional(p, q, curv ** (1.0 / p), 0.0, curv, empty)


@dataclass(frozen=True)
class Majorant:
    value: float          # int |D2f|^q |Df|^(p-q)
    c_dom: float          # max over valid nodes of integrand / |D2f|^q |Df|^(p-q)
    c_bound: float        # ((p-1)/q)^q + (n-1)^(-q/2)


def hessian_majorant(f: CartesianField, p: float, q: float, eps_grad: Optional[float] = None,
                     n: Optional[int] = None) -> Majorant:
    """Quadrature of |D2f|^q |Df|^(p-q) (Frobenius norm) and the measured domination constant."""
    _check_pq(p, q)
    n = f.d if n is None else n
    geo = level_geometry(f, p, q, eps_grad, n)
    D2 = hessian(f)
    fro = np.sqrt(np.sum(D2 * D2, axis=(0, 1)))
    maj = fro ** q * geo.gradnorm ** (p - q)
    maj = np.where(geo.valid, maj, 0.0)
    pp = p / (p - 1.0)
    integrand = (geo.tgrad / pp) ** q + np.abs(geo.H) ** q * geo.gradnorm ** p
    sel = geo.valid & (maj > 1e-12 * max(float(maj.max()), 1e-300))
    c_dom = float(np.max(integrand[sel] / maj[sel])) if np.any(sel) else 0.0
    bound = ((p - 1.0) / q) ** q + (n - 1.0) ** (-q / 2.0)
    return Majorant(float(np.sum(f.weights() * maj)), c_dom, bound)


# --------------------------------------------------------------------------
# coarea densities

def _default_window(f) -> float:
    return 2.0 * float(np.max(np.abs(f.values))) / 256.0


def superlevel_integrals(f, thresholds, a: float = 0.0):
    """(|{|f| > t}|, int_{|f| > t} |Df|^a) for the piecewise-linear interpolant."""
    th = np.asarray(thresholds, float)
    if isinstance(f, RadialField):
        return radial_superlevel_measure(f, th, a)
    return kernels.simplex_level_integrals(np.abs(f.values), f.h, th, a)


def coarea_density(f, t, a: float = 1.0, delta: Optional[float] = None):
    """int_{|f|=t} |Df|^(a-1) dsigma as -dW/dt, W(t) = int_{|f|>t} |Df|^a, centered over a window."""
    t = np.atleast_1d(np.asarray(t, float))
    delta = _default_window(f) if delta is None else float(delta)
    if not delta > 0.0:
        return np.zeros_like(t)
    lo = np.maximum(t - 0.5 * delta, 0.0)
    hi = t + 0.5 * delta
    pts = np.unique(np.concatenate((lo, hi)))
    _, W = superlevel_integrals(f, pts, a)
    Wl = np.interp(lo, pts, W)
    Wh = np.interp(hi, pts, W)
    out = (Wl - Wh) / (hi - lo)
    top = float(np.max(np.abs(f.values)))
    return np.where((t < 0.0) | (t >= top), 0.0, out)


def perimeter(f, t, delta: Optional[float] = None):
    """Perimeter of {|f| > t}; zero outside the range of |f|."""
    return coarea_density(f, t, 1.0, delta)


# --------------------------------------------------------------------------
# closed surfaces for the Michael-Simon inequality

@dataclass(frozen=True)
class ParametricSurface:
    """Closed hypersurface in R^n given by a chart on a tensor quadrature grid."""

    n: int
    chart: Callable[[np.ndarray], np.ndarray]     # params (k, N) -> points (n, N)
    params: np.ndarray                              # quadrature nodes (k, N)
    weights: np.ndarray                             # quadrature weight x area element
    H: np.ndarray                                   # mean curvature at the nodes
    name: str = "surface"

    @property
    def points(self) -> np.ndarray:
        return self.chart(self.params)

    @property
    def area(self) -> float:
        return float(self.weights.sum())

    def tangential_gradient_norm(self, phi: Callable[[np.ndarray], np.ndarray],
                                 step: float = 1e-5) -> np.ndarray:
        k = self.params.shape[0]
        T = np.empty((k, self.n, self.params.shape[1]))
        dphi = np.empty((k, self.params.shape[1]))
        for i in range(k):
            e = np.zeros((k, 1))
            e[i] = step
            xp, xm = self.chart(self.params + e), self.chart(self.params - e)
            T[i] = (xp - xm) / (2 * step)
            dphi[i] = (phi(xp) - phi(xm)) / (2 * step)
        G = np.einsum("iaN,jaN->Nij", T, T)
        sol = np.linalg.solve(G, dphi.T[..., None])[..., 0]
        return np.sqrt(np.maximum(np.einsum("Ni,Ni->N", sol, dphi.T), 0.0))


def _gauss_on(a, b, m):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def _periodic(m):
    return 2 * np.pi * np.arange(m) / m, np.full(m, 2 * np.pi / m)


def sphere(n: int, R: float = 1.0, nodes: int = 16) -> ParametricSurface:
    """S^{n-1}_R in hyperspherical coordinates: Gauss-Legendre in polar angles, trapezoid in azimuth."""
    if n < 3:
        raise ValueError("sphere needs n >= 3 (a closed curve has no interior Sobolev range)")
    polar = [_gauss_on(0.0, np.pi, nodes) for _ in range(n - 2)]
    az = _periodic(2 * nodes)
    grids = np.meshgrid(*[p[0] for p in polar], az[0], indexing="ij")
    wgrids = np.meshgrid(*[p[1] for p in polar], az[1], indexing="ij")
    params = np.stack([g.ravel() for g in grids])
    w = np.prod(np.stack([g.ravel() for g in wgrids]), axis=0)
    for k in range(n - 2):
        w = w * np.sin(params[k]) ** (n - 2 - k)

    def chart(th):
        out = np.empty((n, th.shape[1]))
        s = np.full(th.shape[1], R)
        for k in range(n - 1):
            out[k] = s * np.cos(th[k])
            s = s * np.sin(th[k])
        out[n - 1] = s
        return out

    return ParametricSurface(n, chart, params, w * R ** (n - 1), np.full(w.shape, 1.0 / R),
                             f"sphere(n={n}, R={R})")


def torus(R: float = 2.0, r: float = 1.0, nodes: int = 64) -> ParametricSurface:
    """Torus of revolution in R^3; H = (R + 2 r cos v) / (2 r (R + r cos v))."""
    if not R > r > 0:
        raise ValueError("need R > r > 0")
    u, wu = _periodic(nodes)
    v, wv = _periodic(nodes)
    U, Vv = np.meshgrid(u, v, indexing="ij")
    params = np.stack([U.ravel(), Vv.ravel()])
    cv = np.cos(params[1])
    w = np.outer(wu, wv).ravel() * r * (R + r * cv)
    H = (R + 2 * r * cv) / (2 * r * (R + r * cv))

    def chart(pr):
        a, b = pr
        rho = R + r * np.cos(b)
        return np.stack([rho * np.cos(a), rho * np.sin(a), r * np.sin(b)])

    return ParametricSurface(3, chart, params, w, H, f"torus(R={R}, r={r})")


def ellipsoid(a: float, b: float, c: float, nodes: int = 64) -> ParametricSurface:
    """Ellipsoid x^2/a^2 + y^2/b^2 + z^2/c^2 = 1 in R^3 with curvature from the implicit form."""
    th, wt = _gauss_on(0.0, np.pi, nodes)
    ph, wp = _periodic(2 * nodes)
    T, P = np.meshgrid(th, ph, indexing="ij")
    params = np.stack([T.ravel(), P.ravel()])
    st, ct = np.sin(params[0]), np.cos(params[0])
    sp, cp = np.sin(params[1]), np.cos(params[1])
    x, y, z = a * st * cp, b * st * sp, c * ct
    # |X_theta x X_phi| written out
    nrm = st * np.sqrt((b * c * st * cp) ** 2 + (a * c * st * sp) ** 2 + (a * b * ct) ** 2)
    w = np.outer(wt, wp).ravel() * nrm
    grad = np.stack([x / a ** 2, y / b ** 2, z / c ** 2])
    d2 = np.array([1 / a ** 2, 1 / b ** 2, 1 / c ** 2])
    g2 = np.sum(grad ** 2, axis=0)
    lap = d2.sum()
    quad = np.sum(d2[:, None] * grad ** 2, axis=0)
    H = (g2 * lap - quad) / (2 * g2 ** 1.5)

    def chart(pr):
        t_, p_ = pr
        return np.stack([a * np.sin(t_) * np.cos(p_), b * np.sin(t_) * np.sin(p_), c * np.cos(t_)])

    return ParametricSurface(3, chart, params, w, H, f"ellipsoid({a}, {b}, {c})")


def michael_simon_check(M: ParametricSurface, phi: Optional[Callable] = None, q: float = 1.0,
                        A: Optional[float] = None, tol: float = 1e-6) -> Report:
    """(int |phi|^q*)^(1/q*) <= A (int |grad phi|^q + |H phi|^q)^(1/q), q* = (n-1)q/(n-1-q).

    The report's ``constant`` is the minimal A for this instance; the pass flag
    compares it with ``A`` (default: the value for round spheres).
    """
    m = M.n - 1
    if not (1.0 <= q < m):
        raise ValueError(f"need 1 <= q < n-1 = {m}")
    qs = m * q / (m - q)
    X = M.points
    vals = np.ones(X.shape[1]) if phi is None else np.asarray(phi(X), float)
    tg = np.zeros_like(vals) if phi is None else M.tangential_gradient_norm(phi)
    lhs = float(np.dot(M.weights, np.abs(vals) ** qs)) ** (1.0 / qs)
    rhs = float(np.dot(M.weights, tg ** q + np.abs(M.H * vals) ** q)) ** (1.0 / q)
    a_min = lhs / rhs if rhs > 0 else math.inf
    A = sphere_area(M.n) ** (-1.0 / m) if A is None else A
    rep = Report.compare("michael_simon", lhs, A * rhs, A, tol, resolution=int(M.weights.size),
                         surface=M.name, minimal_A=a_min, q=q)
    return rep
