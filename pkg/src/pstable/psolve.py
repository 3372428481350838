"""Radial solver for -Delta_p u = lambda f(u) on the unit ball.

The operator is discretized in conservation form on a (possibly graded)
radial mesh.  With half-cell radii rho_i, cell slopes s_i and the regularized
flux phi(s) = (eps^2 + s^2)^((p-2)/2) s, node i balances

    rho_{i+1/2}^(n-1) phi(s_i) - rho_{i-1/2}^(n-1) phi(s_{i-1}) + lambda f(u_i) V_i = 0,

with V_i the control volume |{rho_{i-1/2} < r < rho_{i+1/2}}| / |dB_1|, zero
flux at the origin and u = 0 on the last node.  The Jacobian is a symmetric
tridiagonal matrix; its lumped-mass normalization is the discrete second
variation used for the stability eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import kernels
from .fields import RadialField, lp_norm, radial_mesh, sphere_area
from .reports import Report


class NoConvergence(RuntimeError):
    """Newton iteration failed; past the fold when raised during continuation."""


# --------------------------------------------------------------------------
# problem description

_TAGS = ("exp", "power", "const")


@dataclass(frozen=True)
class ProblemSpec:
    n: int
    p: float
    f: str = "exp"
    m: float = 2.0           # exponent of (1+u)^m
    c: float = 1.0           # value of the constant nonlinearity
    eps_reg: Optional[float] = None
    M: int = 2000
    grading: float = 2.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("ambient dimension must be >= 2")
        if not self.p > 1.0:
            raise ValueError("p must exceed 1")
        if self.f not in _TAGS:
            raise ValueError(f"unknown nonlinearity {self.f!r}; expected one of {_TAGS}")
        if self.f == "power" and not self.m > self.p - 1.0:
            raise ValueError("power nonlinearity needs m > p - 1 to be superlinear")
        if self.f == "const" and not self.c > 0.0:
            raise ValueError("constant nonlinearity must be positive")
        if self.eps_reg is not None and self.eps_reg < 0.0:
            raise ValueError("eps_reg must be nonnegative")
        if self.M < 4:
            raise ValueError("mesh needs at least 4 cells")
        if not self.grading >= 1.0:
            raise ValueError("grading must be >= 1")

    @property
    def superlinear(self) -> bool:
        return self.f != "const"

    def mesh(self) -> np.ndarray:
        return radial_mesh(self.M, 1.0, self.grading)

    def f_val(self, u):
        if self.f == "exp":
            return np.exp(u)
        if self.f == "power":
            return (1.0 + u) ** self.m
        return np.full_like(np.asarray(u, float), self.c)

    def f_der(self, u):
        if self.f == "exp":
            return np.exp(u)
        if self.f == "power":
            return self.m * (1.0 + u) ** (self.m - 1.0)
        return np.zeros_like(np.asarray(u, float))

    def F(self, u):
        """Antiderivative of f vanishing at 0."""
        if self.f == "exp":
            return np.expm1(u)
        if self.f == "power":
            return ((1.0 + u) ** (self.m + 1.0) - 1.0) / (self.m + 1.0)
        return self.c * np.asarray(u, float)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSpec":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        extra = set(d) - set(cls.__dataclass_fields__)
        if extra:
            raise ValueError(f"unknown problem fields: {sorted(extra)}")
        return cls(**known)


def torsion_profile(n: int, p: float, lam: float, c: float = 1.0):
    """Exact solution for f = c: u = (lam c/n)^(1/(p-1)) (p-1)/p (1 - r^(p/(p-1)))."""
    amp = (lam * c / n) ** (1.0 / (p - 1.0)) * (p - 1.0) / p
    pp = p / (p - 1.0)
    return lambda r: amp * (1.0 - np.asarray(r, float) ** pp)


def torsion_pohozaev_sides(n: int, p: float, lam: float, c: float = 1.0) -> Tuple[float, float]:
    """Closed-form Pohozaev sides for the torsion solution."""
    pp = p / (p - 1.0)
    k = lam * c / n
    area = sphere_area(n)
    grad_p = area * k ** pp / (n + pp)
    int_g = lam * c * area * k ** (1.0 / (p - 1.0)) * ((p - 1.0) / p) * (1.0 / n - 1.0 / (n + pp))
    lhs = n * int_g - (n - p) / p * grad_p
    rhs = area * k ** pp / pp
    return lhs, rhs


# --------------------------------------------------------------------------
# discrete operator

@dataclass(frozen=True)
class _Grid:
    r: np.ndarray        # nodes r_0..r_M
    dr: np.ndarray       # cell widths, length M
    w: np.ndarray        # rho_{i+1/2}^(n-1), length M
    V: np.ndarray        # control volumes for unknowns 0..M-1

    @classmethod
    def build(cls, r: np.ndarray, n: int) -> "_Grid":
        dr = np.diff(r)
        half = 0.5 * (r[:-1] + r[1:])
        w = half ** (n - 1)
        lo = np.concatenate(([0.0], half[:-1]))
        V = (half ** n - lo ** n) / n
        return cls(r, dr, w, V)


def _phi(s, p, eps):
    if p == 2.0:
        return s
    return (eps * eps + s * s) ** (0.5 * (p - 2.0)) * s


def _dphi(s, p, eps):
    if p == 2.0:
        return np.ones_like(s)
    e2s2 = eps * eps + s * s
    return e2s2 ** (0.5 * (p - 4.0)) * ((p - 1.0) * s * s + eps * eps)


def _phi_inverse(y: float, p: float, eps: float) -> float:
    """Solve phi(s) = y for s (phi is odd and increasing)."""
    if y == 0.0:
        return 0.0
    sgn = math.copysign(1.0, y)
    y = abs(y)
    s = y ** (1.0 / (p - 1.0))
    for _ in range(60):
        g = float(_phi(np.array(s), p, eps)) - y
        d = float(_dphi(np.array(s), p, eps))
        if d <= 0.0:
            break
        step = g / d
        s = max(s - step, 0.5 * s)
        if abs(step) <= 1e-15 * s:
            break
    return sgn * s


def _balance(spec: ProblemSpec, g: _Grid, lam: float, u: np.ndarray, eps: float):
    """Flux balance A_i (length M) and the cell fluxes."""
    ufull = np.append(u, 0.0)
    s = np.diff(ufull) / g.dr
    flux = g.w * _phi(s, spec.p, eps)
    A = flux.copy()
    A[1:] -= flux[:-1]
    A += lam * spec.f_val(u) * g.V
    return A, s


def _jacobian(spec: ProblemSpec, g: _Grid, lam: float, u: np.ndarray, eps: float, s=None):
    """Symmetric tridiagonal dA/du as (off-diagonal, diagonal)."""
    if s is None:
        s = np.diff(np.append(u, 0.0)) / g.dr
    k = g.w * _dphi(s, spec.p, eps) / g.dr     # cell conductances, length M
    m = u.size
    diag = -k.copy()
    diag[1:] -= k[:-1]
    diag += lam * spec.f_der(u) * g.V
    return k[: m - 1].copy(), diag


def _stiffness_pencil(spec: ProblemSpec, g: _Grid, lam: float, u: np.ndarray, eps: float):
    """Second variation K - lam diag(f' V) in symmetric tridiagonal form, plus the mass."""
    off, diag = _jacobian(spec, g, lam, u, eps)
    return -diag, -off, g.V


# --------------------------------------------------------------------------
# branch points

@dataclass(frozen=True)
class BranchPoint:
    lam: float
    u: RadialField
    newton_iters: int
    residual: float
    eps_reg: float
    spec: ProblemSpec
    mu1: float = float("nan")
    norms: Dict[str, float] = field(default_factory=dict)
    pohozaev_residual: float = float("nan")

    @property
    def sup_u(self) -> float:
        return float(np.max(self.u.values))


def _norms(spec: ProblemSpec, lam: float, u: RadialField) -> Dict[str, float]:
    n, p = spec.n, spec.p
    s = u.slopes()
    out = {
        "linf": float(np.max(np.abs(u.values))),
        "w1p": float(np.dot(u.cell_weights(), np.abs(s) ** p)) ** (1.0 / p),
        "l1_f": u.integrate(spec.f_val(u.values)),
    }
    if n > p + 2:
        out["lq2star"] = lp_norm(u, n * p / (n - p - 2))
    return out


def default_eps(spec: ProblemSpec, u0: np.ndarray, mesh: np.ndarray) -> float:
    if spec.eps_reg is not None or spec.p == 2.0:
        return 0.0 if spec.eps_reg is None else float(spec.eps_reg)
    slope = np.max(np.abs(np.diff(u0) / np.diff(mesh))) if u0.size > 1 else 0.0
    return max(1e-8 * slope, 1e-14)


def solve_at(spec: ProblemSpec, lam: float, init: Optional[RadialField] = None, *,
             tol: float = 1e-10, max_iter: int = 60, eps: Optional[float] = None,
             with_diagnostics: bool = True) -> BranchPoint:
    """Damped Newton solve of the discrete problem at ``lam`` starting from ``init``.

    Convergence means max_i |A_i| <= tol * lam * sum_i f(u_i) V_i, i.e. the flux
    imbalance of every control volume is below ``tol`` times the total source.
    """
    if not lam > 0.0:
        raise ValueError("lambda must be positive")
    mesh = spec.mesh() if init is None else init.mesh
    g = _Grid.build(mesh, spec.n)
    if init is None:
        f0 = float(spec.f_val(np.array(0.0)))
        u = torsion_profile(spec.n, spec.p, lam, f0)(mesh)[:-1]
    else:
        if init.n != spec.n:
            raise ValueError("initial profile has a different ambient dimension")
        if np.any(init.values < 0.0):
            raise ValueError("initial profile must be nonnegative")
        u = np.array(init.values[:-1], dtype=float)
    if eps is None:
        eps = default_eps(spec, np.append(u, 0.0), mesh)

    def scaled(A, u):
        src = lam * float(np.dot(spec.f_val(u), g.V))
        return float(np.max(np.abs(A))) / src

    with np.errstate(over="raise", invalid="raise"):
        try:
            A, s = _balance(spec, g, lam, u, eps)
            res = scaled(A, u)
        except (FloatingPointError, ZeroDivisionError) as exc:
            raise NoConvergence(f"overflow at start: {exc}") from None
        it = 0
        while res > tol:
            if it >= max_iter:
                raise NoConvergence(f"no convergence after {max_iter} iterations (residual {res:.3e})")
            it += 1
            off, di = _jacobian(spec, g, lam, u, eps, s)
            try:
                delta = kernels.thomas_solve(np.append(0.0, off), di, np.append(off, 0.0), -A)
            except ZeroDivisionError:
                raise NoConvergence("singular Jacobian") from None
            if not np.all(np.isfinite(delta)):
                raise NoConvergence("singular Jacobian")
            alpha = 1.0
            while True:
                trial = u + alpha * delta
                try:
                    if np.all(trial > -1.0 if spec.f == "power" else np.isfinite(trial)):
                        At, st = _balance(spec, g, lam, trial, eps)
                        rt = scaled(At, trial)
                        if rt < (1.0 - 1e-4 * alpha) * res or rt <= tol:
                            break
                except FloatingPointError:
                    pass
                alpha *= 0.5
                if alpha < 1e-4:
                    raise NoConvergence(f"line search failed (residual {res:.3e})")
            u, A, s, res = trial, At, st, rt
    field_u = RadialField(spec.n, mesh, np.append(u, 0.0))
    pt = BranchPoint(lam, field_u, it, res, eps, spec)
    if with_diagnostics:
        pt = replace(pt, mu1=stability_eigenvalue(pt), norms=_norms(spec, lam, field_u),
                     pohozaev_residual=pohozaev_check(pt)["residual"])
    return pt


# --------------------------------------------------------------------------
# stability

def _pencil(point: BranchPoint):
    spec = point.spec
    g = _Grid.build(point.u.mesh, spec.n)
    return (*_stiffness_pencil(spec, g, point.lam, point.u.values[:-1], point.eps_reg), g)


def stability_eigenpair(point: BranchPoint, iters: int = 4) -> Tuple[float, np.ndarray]:
    """Smallest eigenpair of the discrete second variation against the lumped mass.

    Sturm bisection brackets the eigenvalue; inverse iteration shifted just
    below the bracket returns the eigenvector and a Rayleigh-quotient value.
    """
    diag, off, mass, _ = _pencil(point)
    isq = 1.0 / np.sqrt(mass)
    d = diag * isq * isq
    e = off * isq[:-1] * isq[1:]
    lo, hi = kernels.smallest_eigenvalue(d, e)
    scale = max(abs(lo), abs(hi), 1e-300)
    shift = lo - 1e-9 * scale
    v = np.ones_like(d) / math.sqrt(d.size)
    lower = np.concatenate(([0.0], e))
    upper = np.concatenate((e, [0.0]))
    for _ in range(iters):
        w = kernels.thomas_solve(lower, d - shift, upper, v)
        nrm = np.linalg.norm(w)
        if not np.isfinite(nrm) or nrm == 0.0:
            break
        v = w / nrm
    av = d * v
    av[:-1] += e * v[1:]
    av[1:] += e * v[:-1]
    rq = float(np.dot(v, av))
    mu = rq if lo - 1e-6 * scale <= rq <= hi + 1e-6 * scale else 0.5 * (lo + hi)
    phi = v * isq
    if phi[np.argmax(np.abs(phi))] < 0:
        phi = -phi
    return mu, np.append(phi, 0.0)


def stability_eigenvalue(point: BranchPoint) -> float:
    """mu1 of the weighted linearized operator; >= 0 means semi-stable."""
    return stability_eigenpair(point)[0]


def stability_key_inequality(point: BranchPoint, eta: RadialField, p: Optional[float] = None,
                             tol: float = 1e-2) -> Report:
    """((n-1)/(p-1)) int r^-2 |u'|^p eta^2 <= int |u'|^p eta'^2 for radial u."""
    p = point.spec.p if p is None else p
    u = point.u
    if eta.mesh.shape != u.mesh.shape or not np.allclose(eta.mesh, u.mesh):
        eta = RadialField(u.n, u.mesh, eta(u.mesh))
    if abs(eta.values[-1]) > 1e-12 * max(1.0, float(np.max(np.abs(eta.values)))):
        raise ValueError("test function must vanish on the boundary")
    n = u.n
    grad_p = np.abs(u.slopes()) ** p
    deta2 = eta.slopes() ** 2
    # cellwise integrals with the exact weights; eta^2 averaged over each cell
    ev = eta.values
    eta2 = (ev[:-1] ** 2 + ev[:-1] * ev[1:] + ev[1:] ** 2) / 3.0
    w_m2 = u.cell_weights(n - 3)
    if n - 3 <= -1 and u.mesh[0] == 0.0:
        # r^(n-3) is not integrable at 0; there |u'| ~ r, so weight the first cell by (r/r_mid)^p
        h = u.mesh[1]
        w_m2 = w_m2.copy()
        w_m2[0] = sphere_area(n) * h ** (n - 2) * 2.0 ** p / (n - 2 + p)
    lhs = (n - 1) / (p - 1) * float(np.dot(w_m2, grad_p * eta2))
    rhs = float(np.dot(u.cell_weights(), grad_p * deta2))
    return Report.compare("stability_key", lhs, rhs, None, tol, resolution=int(u.mesh.size - 1),
                          lam=point.lam)


# --------------------------------------------------------------------------
# Pohozaev identity

def boundary_slope(point: BranchPoint) -> float:
    """|u'(1)| from the flux identity phi(u'(1)) = -lam int_0^1 f(u) r^(n-1) dr."""
    u = point.u
    total = point.lam * u.integrate(point.spec.f_val(u.values)) / sphere_area(u.n)
    return abs(_phi_inverse(total, point.spec.p, point.eps_reg))


def pohozaev_check(point: BranchPoint) -> Dict[str, float]:
    """Both sides of the Pohozaev identity, their relative residual and the energy bound."""
    spec, u, lam = point.spec, point.u, point.lam
    n, p = spec.n, spec.p
    grad_p = float(np.dot(u.cell_weights(), np.abs(u.slopes()) ** p))
    int_g = lam * u.integrate(spec.F(u.values))
    lhs = n * int_g - (n - p) / p * grad_p
    boundary = sphere_area(n) * boundary_slope(point) ** p   # int over dB_1 of |u'|^p
    rhs = boundary * (p - 1.0) / p
    scale = max(abs(lhs), abs(rhs))
    residual = 0.0 if scale == 0.0 else abs(lhs - rhs) / scale
    energy = grad_p / p - int_g
    return {
        "lhs": lhs,
        "rhs": rhs,
        "residual": residual,
        "grad_p": grad_p,
        "energy": energy,
        "energy_bound_ok": bool(grad_p <= u.R_max * rhs * (1.0 + 1e-8)),
    }


# --------------------------------------------------------------------------
# continuation

@dataclass(frozen=True)
class StepPolicy:
    lam0: float = 1e-2
    step0: Optional[float] = None
    grow: float = 1.5
    max_rel_step: float = 0.5
    min_rel_step: float = 1e-8
    max_points: int = 5000
    lam_max: float = 1e8
    tol_eig_rel: float = 1e-2


@dataclass(frozen=True)
class Branch:
    points: Tuple[BranchPoint, ...]
    lambda_star_bracket: Tuple[float, float]
    tol_eig: float
    failures: int = 0

    @property
    def extremal_profile(self) -> RadialField:
        return self.points[-1].u

    @property
    def ends_at_fold(self) -> bool:
        return abs(self.points[-1].mu1) < self.tol_eig

    @property
    def lambda_star(self) -> float:
        return 0.5 * (self.lambda_star_bracket[0] + self.lambda_star_bracket[1])

    def lambdas(self) -> np.ndarray:
        return np.array([pt.lam for pt in self.points])

    def table(self) -> List[Dict[str, float]]:
        return [branch_row(pt) for pt in self.points]


BRANCH_COLUMNS = ("lambda", "sup_u", "mu1", "W1p_seminorm", "L1_f", "pohozaev_residual",
                  "newton_iters")


def branch_row(pt: BranchPoint) -> Dict[str, float]:
    return {
        "lambda": pt.lam,
        "sup_u": pt.sup_u,
        "mu1": pt.mu1,
        "W1p_seminorm": pt.norms.get("w1p", float("nan")),
        "L1_f": pt.norms.get("l1_f", float("nan")),
        "pohozaev_residual": pt.pohozaev_residual,
        "newton_iters": pt.newton_iters,
    }


def continue_branch(spec: ProblemSpec, policy: StepPolicy = StepPolicy()) -> Branch:
    """Natural continuation of the minimal branch up to the fold.

    A trial point is accepted only if Newton converges, the stability
    eigenvalue is positive and the profile dominates the previous one;
    otherwise the step is halved.  ``tol_eig`` (relative to mu1 at the first
    point) classifies the endpoint as a fold.  Stops once the step falls below
    ``min_rel_step * lam``.
    """
    if not spec.superlinear:
        raise ValueError("continuation to a fold needs a superlinear nonlinearity")
    lam = policy.lam0
    first = solve_at(spec, lam)
    tol_eig = policy.tol_eig_rel * abs(first.mu1)
    points = [first]
    step = policy.step0 if policy.step0 is not None else policy.lam0
    failed_at = math.inf
    failures = 0
    while len(points) < policy.max_points:
        prev = points[-1]
        step = min(step, policy.max_rel_step * prev.lam)
        if step < policy.min_rel_step * prev.lam:
            break
        trial_lam = prev.lam + step
        if trial_lam > policy.lam_max:
            break
        ok = False
        try:
            pt = solve_at(spec, trial_lam, prev.u, eps=prev.eps_reg)
            ok = pt.mu1 > 0.0 and np.all(pt.u.values >= prev.u.values - 1e-12 * prev.sup_u)
        except NoConvergence:
            pass
        if ok:
            points.append(pt)
            step *= policy.grow
        else:
            failures += 1
            failed_at = trial_lam
            step *= 0.5
    return Branch(tuple(points), (points[-1].lam, failed_at), tol_eig, failures)


# --------------------------------------------------------------------------
# critical-case construction

def psi_profile(point: BranchPoint) -> Tuple[np.ndarray, np.ndarray]:
    """Levels t_i = u(r_i) (increasing) and psi(t_i) = |dB_1| r^(n-1) |u'|^(p+1)."""
    return psi_levels(point.u, point.spec.p)


def psi_levels(u: RadialField, p: float):
    if np.any(np.diff(u.values) > 0.0):
        raise ValueError("level inversion needs a radially nonincreasing profile")
    du = u.derivative()
    psi = sphere_area(u.n) * u.mesh ** (u.n - 1) * np.abs(du) ** (p + 1.0)
    return u.values[::-1].copy(), psi[::-1].copy()


def critical_constant(n: int, p: float) -> float:
    """Radial constant C with C psi^((n-3)/(n-1)) = ((n-1)/(p-1)) int_{u=t} r^-2 |u'|^(p-1)."""
    return (n - 1) / (p - 1) * sphere_area(n) ** (2.0 / (n - 1))


@dataclass(frozen=True)
class EtaSchedule:
    s: float
    levels: np.ndarray
    eta_levels: np.ndarray
    field: RadialField
    C: float


def eta_s_schedule(point: BranchPoint, s: float, C: Optional[float] = None) -> EtaSchedule:
    """Test function eta_s(u) of the critical case: t/s below s, exponential growth above."""
    if not s > 0.0:
        raise ValueError("s must be positive")
    u = point.u
    n = u.n
    C = critical_constant(n, point.spec.p) if C is None else C
    t, psi = psi_profile(point)
    # integrand sqrt(C psi^((n-3)/(n-1)) / psi) = sqrt(C) psi^(-1/(n-1))
    with np.errstate(divide="ignore"):
        rate = np.sqrt(C) * np.where(psi > 0, psi, np.nan) ** (-1.0 / (n - 1)) / math.sqrt(2.0)
    eta = np.empty_like(t)
    below = t <= s
    eta[below] = t[below] / s
    above = ~below
    if np.any(above):
        tt = np.concatenate(([s], t[above]))
        rr = np.interp(tt, t, rate)
        rr = np.where(np.isfinite(rr), rr, 0.0)
        expo = np.concatenate(([0.0], np.cumsum(0.5 * (rr[1:] + rr[:-1]) * np.diff(tt))))
        eta[above] = np.exp(expo[1:])
    field_eta = RadialField(n, u.mesh, eta[::-1])
    return EtaSchedule(s, t, eta, field_eta, C)
