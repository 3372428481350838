"""Discrete fields on the ball (radial profiles) and on Cartesian grids.

Radial profiles carry an ambient dimension ``n``; every radial integral uses
the weight ``|dB_1| r^(n-1)``, so one mesh stands in for any dimension.
Cartesian fields live on a uniform 2-D or 3-D grid with a boolean domain
mask and are extended by zero outside it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

from . import kernels


def sphere_area(n: int) -> float:
    """Area of the unit sphere in R^n, 2 pi^(n/2) / Gamma(n/2)."""
    return float(np.exp(np.log(2.0) + 0.5 * n * np.log(np.pi) - gammaln(0.5 * n)))


def ball_volume(n: int) -> float:
    return sphere_area(n) / n


@dataclass(frozen=True)
class RadialField:
    """Values u(r_i) of a radial function on ``0 = r_0 < ... < r_M``."""

    n: int
    mesh: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        mesh = np.asarray(self.mesh, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if self.n < 2:
            raise ValueError(f"ambient dimension must be >= 2, got {self.n}")
        if mesh.ndim != 1 or mesh.size < 2:
            raise ValueError("radial mesh needs at least two nodes")
        if mesh[0] != 0.0:
            raise ValueError("radial mesh must start at r = 0")
        if np.any(np.diff(mesh) <= 0.0):
            raise ValueError("radial mesh must be strictly increasing")
        if values.shape != mesh.shape:
            raise ValueError("values and mesh differ in length")
        if not np.all(np.isfinite(values)):
            raise ValueError("radial values must be finite")
        mesh.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "mesh", mesh)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, fn, n: int, m: int = 2000, radius: float = 1.0, grading: float = 1.0):
        """Sample ``fn(r)`` on a mesh r_i = radius * (i/m)**grading."""
        mesh = radial_mesh(m, radius, grading)
        return cls(n, mesh, np.asarray(fn(mesh), dtype=float))

    @property
    def R_max(self) -> float:
        return float(self.mesh[-1])

    @property
    def volume(self) -> float:
        return ball_volume(self.n) * self.R_max ** self.n

    def with_values(self, values) -> "RadialField":
        return RadialField(self.n, self.mesh, values)

    def slopes(self) -> np.ndarray:
        """Cell slopes (u_{i+1} - u_i) / (r_{i+1} - r_i)."""
        return np.diff(self.values) / np.diff(self.mesh)

    def derivative(self) -> np.ndarray:
        """Nodal derivative: u'(0) = 0, interpolated cell slopes inside, one-sided at R."""
        r, u = self.mesh, self.values
        du = np.empty_like(u)
        du[0] = 0.0
        if r.size > 2:
            h0 = r[1:-1] - r[:-2]
            h1 = r[2:] - r[1:-1]
            du[1:-1] = (h0 ** 2 * (u[2:] - u[1:-1]) + h1 ** 2 * (u[1:-1] - u[:-2])) / (h0 * h1 * (h0 + h1))
            # second-order backward difference on a nonuniform stencil
            h0, h1 = r[-1] - r[-2], r[-2] - r[-3]
            a = h0 + h1
            du[-1] = ((u[-1] - u[-2]) * (a * a) - (u[-1] - u[-3]) * (h0 * h0)) / (h0 * a * h1)
        else:
            du[-1] = (u[-1] - u[-2]) / (r[-1] - r[-2])
        return du

    def cell_weights(self, power: Optional[float] = None) -> np.ndarray:
        """Exact integrals of |dB_1| r^power over each cell (power defaults to n-1)."""
        k = self.n - 1 if power is None else power
        r = self.mesh
        if k == -1:
            with np.errstate(divide="ignore"):
                return sphere_area(self.n) * (np.log(r[1:]) - np.log(r[:-1]))
        with np.errstate(divide="ignore"):
            return sphere_area(self.n) * (r[1:] ** (k + 1) - r[:-1] ** (k + 1)) / (k + 1)

    def node_weights(self) -> np.ndarray:
        """Trapezoid weights for int g |dB_1| r^(n-1) dr."""
        w = np.zeros_like(self.mesh)
        g = sphere_area(self.n) * self.mesh ** (self.n - 1)
        dr = np.diff(self.mesh)
        w[:-1] += 0.5 * dr * g[:-1]
        w[1:] += 0.5 * dr * g[1:]
        return w

    def integrate(self, nodal: np.ndarray) -> float:
        return float(np.dot(self.node_weights(), nodal))

    def __call__(self, r) -> np.ndarray:
        return np.interp(r, self.mesh, self.values)


def radial_mesh(m: int, radius: float = 1.0, grading: float = 1.0) -> np.ndarray:
    """Mesh radius * (i/m)**grading, i = 0..m; grading > 1 clusters nodes at the origin."""
    if m < 2:
        raise ValueError("need at least two radial cells")
    xi = np.linspace(0.0, 1.0, m + 1)
    return radius * xi ** grading


@dataclass(frozen=True)
class CartesianField:
    """Nodal values on a uniform d-dimensional grid with a domain mask."""

    values: np.ndarray
    h: Tuple[float, ...]
    origin: Tuple[float, ...] = None
    mask: np.ndarray = None
    domain_volume: Optional[float] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        d = values.ndim
        if d not in (2, 3):
            raise ValueError(f"grid dimension must be 2 or 3, got {d}")
        h = tuple(float(x) for x in np.broadcast_to(np.asarray(self.h, float), (d,)))
        if any(x <= 0.0 for x in h):
            raise ValueError("grid spacing must be positive")
        origin = (0.0,) * d if self.origin is None else tuple(float(x) for x in self.origin)
        mask = np.ones(values.shape, bool) if self.mask is None else np.asarray(self.mask, bool)
        if mask.shape != values.shape:
            raise ValueError("mask shape differs from values")
        if np.any(values[~mask] != 0.0):
            raise ValueError("values outside the domain mask must be exactly zero")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        values.setflags(write=False)
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_function(cls, fn, lo, hi, shape, mask_fn=None, domain_volume=None):
        """Sample ``fn(*coords)`` on the box [lo, hi]; zero outside ``mask_fn``."""
        shape = tuple(int(s) for s in shape)
        lo = np.broadcast_to(np.asarray(lo, float), (len(shape),))
        hi = np.broadcast_to(np.asarray(hi, float), (len(shape),))
        axes = [np.linspace(a, b, s) for a, b, s in zip(lo, hi, shape)]
        grids = np.meshgrid(*axes, indexing="ij")
        vals = np.asarray(fn(*grids), dtype=float) * np.ones(shape)
        mask = np.ones(shape, bool) if mask_fn is None else np.asarray(mask_fn(*grids), bool)
        vals = np.where(mask, vals, 0.0)
        h = tuple((b - a) / (s - 1) for a, b, s in zip(lo, hi, shape))
        return cls(vals, h, tuple(lo), mask, domain_volume)

    @property
    def d(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def axes(self):
        return [o + h * np.arange(s) for o, h, s in zip(self.origin, self.h, self.shape)]

    def coords(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def weights(self) -> np.ndarray:
        """Trapezoid weights over the grid box, restricted to the mask."""
        w = np.ones(self.shape)
        for ax, hx in enumerate(self.h):
            wa = np.full(self.shape[ax], hx)
            wa[0] = wa[-1] = 0.5 * hx
            shp = [1] * self.d
            shp[ax] = -1
            w = w * wa.reshape(shp)
        return np.where(self.mask, w, 0.0)

    @property
    def volume(self) -> float:
        if self.domain_volume is not None:
            return float(self.domain_volume)
        return float(self.weights().sum())

    def integrate(self, nodal: np.ndarray) -> float:
        return float(np.sum(self.weights() * nodal))

    def with_values(self, values) -> "CartesianField":
        return CartesianField(np.where(self.mask, values, 0.0), self.h, self.origin, self.mask,
                              self.domain_volume)


Field = Union[RadialField, CartesianField]


# --------------------------------------------------------------------------
# finite differences

def _shift(a, ax, k):
    """a[i + k] along ``ax`` with False/0 padding (no wrap)."""
    out = np.zeros_like(a)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    n = a.shape[ax]
    if k >= 0:
        src[ax] = slice(k, n)
        dst[ax] = slice(0, n - k)
    else:
        src[ax] = slice(0, n + k)
        dst[ax] = slice(-k, n)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _check_shape(f: CartesianField):
    if min(f.shape) < 3:
        raise ValueError(f"finite differences need at least 3 nodes per axis, got {f.shape}")


def _d1(v, mask, ax, h):
    m = [_shift(mask, ax, k) for k in (-2, -1, 1, 2)]
    vs = {k: _shift(v, ax, k) for k in (-2, -1, 1, 2)}
    central = m[1] & m[2]
    fwd = ~central & m[2] & m[3]
    bwd = ~central & ~fwd & m[1] & m[0]
    fwd1 = ~central & ~fwd & ~bwd & m[2]
    bwd1 = ~central & ~fwd & ~bwd & ~fwd1 & m[1]
    out = np.zeros_like(v)
    out = np.where(central, (vs[1] - vs[-1]) / (2 * h), out)
    out = np.where(fwd, (-3 * v + 4 * vs[1] - vs[2]) / (2 * h), out)
    out = np.where(bwd, (3 * v - 4 * vs[-1] + vs[-2]) / (2 * h), out)
    out = np.where(fwd1, (vs[1] - v) / h, out)
    out = np.where(bwd1, (v - vs[-1]) / h, out)
    # isolated along this axis: zero extension outside the mask
    rest = ~(central | fwd | bwd | fwd1 | bwd1)
    out = np.where(rest, (vs[1] - vs[-1]) / (2 * h), out)
    return np.where(mask, out, 0.0)


def _d2(v, mask, ax, h):
    ks = (-3, -2, -1, 1, 2, 3)
    m = {k: _shift(mask, ax, k) for k in ks}
    vs = {k: _shift(v, ax, k) for k in ks}
    central = m[-1] & m[1]
    fwd = ~central & m[1] & m[2] & m[3]
    bwd = ~central & ~fwd & m[-1] & m[-2] & m[-3]
    fwd1 = ~central & ~fwd & ~bwd & m[1] & m[2]
    bwd1 = ~central & ~fwd & ~bwd & ~fwd1 & m[-1] & m[-2]
    h2 = h * h
    out = np.zeros_like(v)
    out = np.where(central, (vs[-1] - 2 * v + vs[1]) / h2, out)
    out = np.where(fwd, (2 * v - 5 * vs[1] + 4 * vs[2] - vs[3]) / h2, out)
    out = np.where(bwd, (2 * v - 5 * vs[-1] + 4 * vs[-2] - vs[-3]) / h2, out)
    out = np.where(fwd1, (v - 2 * vs[1] + vs[2]) / h2, out)
    out = np.where(bwd1, (v - 2 * vs[-1] + vs[-2]) / h2, out)
    rest = ~(central | fwd | bwd | fwd1 | bwd1)
    out = np.where(rest, (vs[-1] - 2 * v + vs[1]) / h2, out)
    return np.where(mask, out, 0.0)


def gradient(f: CartesianField) -> np.ndarray:
    """Second-order gradient, shape (d, *grid); one-sided stencils at the mask edge."""
    _check_shape(f)
    return np.stack([_d1(f.values, f.mask, ax, f.h[ax]) for ax in range(f.d)])


def hessian(f: CartesianField) -> np.ndarray:
    """Symmetric Hessian, shape (d, d, *grid); mixed entries by nested central differences."""
    _check_shape(f)
    d = f.d
    out = np.empty((d, d) + f.shape)
    first = [_d1(f.values, f.mask, ax, f.h[ax]) for ax in range(d)]
    for a in range(d):
        out[a, a] = _d2(f.values, f.mask, a, f.h[a])
        for b in range(a + 1, d):
            mixed = 0.5 * (_d1(first[a], f.mask, b, f.h[b]) + _d1(first[b], f.mask, a, f.h[a]))
            out[a, b] = out[b, a] = mixed
    return out


# --------------------------------------------------------------------------
# distribution functions, truncation, norms

@dataclass(frozen=True)
class DistributionFunction:
    thresholds: np.ndarray
    measures: np.ndarray
    domain_volume: float = field(default=np.inf)

    def __call__(self, t):
        return np.interp(t, self.thresholds, self.measures)


def radial_superlevel_measure(f: RadialField, thresholds, weight_power: float = 0.0):
    """Exact |{|u_PL| > t}| for a radial profile (and the matching |u'|^a weighted integral)."""
    r = f.mesh
    u = np.abs(f.values)
    slope = np.abs(np.diff(u) / np.diff(r))
    wcell = slope ** weight_power if weight_power else np.ones_like(slope)
    k = f.n
    c = ball_volume(f.n)
    th = np.asarray(thresholds, float)
    out_v = np.empty(th.shape)
    out_w = np.empty(th.shape)
    ua, ub = u[:-1], u[1:]
    ra, rb = r[:-1], r[1:]
    for j, t in enumerate(th):
        lo, hi = _cell_subinterval(ra, rb, ua, ub, t, above=True)
        vol = c * (hi ** k - lo ** k)
        out_v[j] = vol.sum()
        out_w[j] = np.dot(vol, wcell)
    return out_v, out_w


def _cell_subinterval(ra, rb, ua, ub, t, above=True):
    """Sub-interval [lo, hi] of each cell where the linear interpolant is > t (or <= t)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        rc = ra + (t - ua) * (rb - ra) / (ub - ua)
    a_in = (ua > t) if above else (ua <= t)
    b_in = (ub > t) if above else (ub <= t)
    lo = np.where(a_in, ra, np.where(b_in, rc, ra))
    hi = np.where(b_in, rb, np.where(a_in, rc, ra))
    both_out = ~a_in & ~b_in
    lo = np.where(both_out, ra, lo)
    hi = np.where(both_out, ra, hi)
    return lo, hi


def radial_region_weights(f: RadialField, s: float, above: bool, power: Optional[float] = None):
    """Exact per-cell integrals of |dB_1| r^power over the part of each cell where |u| > s (or <= s)."""
    u = np.abs(f.values)
    lo, hi = _cell_subinterval(f.mesh[:-1], f.mesh[1:], u[:-1], u[1:], s, above=above)
    k = f.n - 1 if power is None else power
    return sphere_area(f.n) * (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)


def distribution(f: Field, thresholds) -> DistributionFunction:
    """Distribution function V(t) = |{|f| > t}| of the piecewise-linear interpolant."""
    th = np.asarray(thresholds, dtype=float)
    if th.ndim != 1 or np.any(np.diff(th) <= 0.0):
        raise ValueError("thresholds must be strictly increasing")
    if isinstance(f, RadialField):
        v, _ = radial_superlevel_measure(f, th)
        vol = f.volume
    else:
        v, _ = kernels.simplex_level_integrals(np.abs(f.values), f.h, th, 0.0)
        vol = f.volume
    v = np.minimum(v, vol)
    v = np.minimum.accumulate(v)
    peak = float(np.max(np.abs(f.values)))
    v = np.where(th >= peak, 0.0, v)
    return DistributionFunction(th, v, vol)


def truncate(f: Field, s: float) -> Field:
    """Nodewise min(s, f)."""
    if s < 0:
        raise ValueError("truncation level must be nonnegative")
    return f.with_values(np.minimum(s, f.values))


def region_mask(f: Field, region) -> np.ndarray:
    """Nodal indicator of ``region``: None, (">", s), ("<=", s), or a boolean array."""
    if region is None:
        return np.ones(f.values.shape, bool)
    if isinstance(region, np.ndarray):
        return region.astype(bool)
    op, s = region
    a = np.abs(f.values)
    if op == ">":
        return a > s
    if op == ">=":
        return a >= s
    if op == "<":
        return a < s
    if op == "<=":
        return a <= s
    raise ValueError(f"unknown region operator {op!r}")


def lp_norm(f: Field, r: float, region=None) -> float:
    """L^r norm over the domain (or a level region); r = inf gives the max."""
    if not (r >= 1.0):
        raise ValueError("exponent must be in [1, inf]")
    sel = region_mask(f, region)
    a = np.abs(f.values)
    if not np.any(sel):
        return 0.0
    if np.isinf(r):
        return float(np.max(np.where(sel, a, 0.0)))
    integrand = np.where(sel, a ** r, 0.0)
    return f.integrate(integrand) ** (1.0 / r)


def is_radial_nonincreasing(f: RadialField, tol: float = 0.0) -> bool:
    return bool(np.all(np.diff(f.values) <= tol))


def as_shape(seq: Sequence[int]) -> Tuple[int, ...]:
    return tuple(int(s) for s in seq)
