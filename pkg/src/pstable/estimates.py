"""Regularity exponents and a priori estimate checks on computed minimal solutions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .fields import CartesianField, RadialField, lp_norm, radial_region_weights, sphere_area
from .psolve import Branch, BranchPoint, ProblemSpec, critical_constant, solve_at
from .reports import EstimateReport, Report


@dataclass(frozen=True)
class RegularityExponents:
    n: int
    p: float
    q2star: Optional[float]
    r1: Optional[float]
    rbar0: Optional[float]
    rbar1: Optional[float]
    rtilde0: Optional[float]
    radial_bounded_threshold: float

    @property
    def radial_bounded(self) -> bool:
        """Extremal radial solutions are bounded iff n < p + 4p/(p-1)."""
        return self.n < self.radial_bounded_threshold

    def to_dict(self) -> Dict[str, object]:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["radial_bounded"] = self.radial_bounded
        return d


def exponent_table(n: int, p: float) -> RegularityExponents:
    """Exponents of the regularity theory; entries outside their range are None."""
    if not p > 1.0 or n < 2:
        raise ValueError("need p > 1 and n >= 2")
    pp = p / (p - 1.0)
    q2 = n * p / (n - p - 2) if n > p + 2 else None
    r1 = n * p * p / ((1 + p) * n - p - 2) if n > p + 2 else None
    root = 2.0 * math.sqrt((n - 1.0) / (p - 1.0))
    rbar1 = n * p / (n - root - 2) if n - root - 2 > 0 else None
    rbar0 = n * p / (n - root - p - 2) if n - root - p - 2 > 0 else None
    rt0 = (p - 1.0) * n / (n - (p + pp)) if n > p + pp else None
    return RegularityExponents(n, p, q2, r1, rbar0, rbar1, rt0, p + 4.0 * p / (p - 1.0))


def s_grid(point: BranchPoint, count: int = 32) -> np.ndarray:
    """Logarithmic truncation levels in (0, ||u||_inf]."""
    top = point.sup_u
    return np.geomspace(1e-3 * top, top, count)


# --------------------------------------------------------------------------
# truncated integrals on radial profiles

def _grad_power_below(u: RadialField, s: float, a: float) -> float:
    """int_{u <= s} |u'|^a, exact on the piecewise-linear profile."""
    w = radial_region_weights(u, s, above=False)
    return float(np.dot(w, np.abs(u.slopes()) ** a))


def _excess_norm(u: RadialField, s: float, r: float) -> float:
    """(int_{u > s} (u - s)^r)^(1/r)."""
    return lp_norm(u.with_values(np.maximum(u.values - s, 0.0)), r)


def check_thm14_a(point: BranchPoint, s: float, C: Optional[float] = None) -> EstimateReport:
    """||u||_inf <= s + C s^(-2/p) |Omega|^((p+2-n)/(np)) (int_{u<=s} |Du|^(p+2))^(1/p) for n <= p+2.

    Without ``C`` the report only records the smallest admissible constant.
    """
    n, p = point.spec.n, point.spec.p
    if n > p + 2:
        raise ValueError("the L-infinity estimate is for n <= p + 2")
    if not s > 0.0:
        raise ValueError("s must be positive")
    u = point.u
    vol = u.volume
    tail = vol ** ((p + 2 - n) / (n * p)) * _grad_power_below(u, s, p + 2) ** (1.0 / p) / s ** (2.0 / p)
    lhs = point.sup_u
    c_meas = max(lhs - s, 0.0) / tail if tail > 0 else (0.0 if lhs <= s else math.inf)
    use = c_meas if C is None else C
    rhs = s + use * tail
    ok = lhs <= rhs * (1 + 1e-12) if C is not None else math.isfinite(c_meas)
    return EstimateReport("thm14a", lhs, rhs, C, (rhs - lhs) / rhs if rhs else 0.0,
                          int(u.mesh.size - 1), bool(ok), 0.0, {"lam": point.lam}, s, c_meas)


def check_thm14_b(point: BranchPoint, s: float, C: Optional[float] = None) -> EstimateReport:
    """(int_{u>s} (u-s)^q)^(1/q) <= C s^(-2/p) (int_{u<=s} |Du|^(p+2))^(1/p), q = np/(n-p-2)."""
    n, p = point.spec.n, point.spec.p
    if not n > p + 2:
        raise ValueError("the truncated L^q estimate is for n > p + 2")
    if not s > 0.0:
        raise ValueError("s must be positive")
    u = point.u
    q2 = n * p / (n - p - 2)
    lhs = _excess_norm(u, s, q2)
    tail = _grad_power_below(u, s, p + 2) ** (1.0 / p) / s ** (2.0 / p)
    c_meas = lhs / tail if tail > 0 else (0.0 if lhs == 0 else math.inf)
    use = c_meas if C is None else C
    rhs = use * tail
    ok = lhs <= rhs * (1 + 1e-12) if C is not None else math.isfinite(c_meas)
    return EstimateReport("thm14b", lhs, rhs, C, (rhs - lhs) / rhs if rhs else 0.0,
                          int(u.mesh.size - 1), bool(ok), 0.0, {"lam": point.lam}, s, c_meas)


def measured_constant(points: Sequence[BranchPoint], count: int = 32) -> float:
    """Largest admissible constant of the matching truncation estimate over points and s-grids."""
    best = 0.0
    for pt in points:
        check = check_thm14_a if pt.spec.n <= pt.spec.p + 2 else check_thm14_b
        for s in s_grid(pt, count):
            best = max(best, check(pt, float(s)).constant_measured)
    return best


def critical_case_bound(point: BranchPoint, s: float, C: Optional[float] = None) -> EstimateReport:
    """For n = p + 2: ||u||_inf - s <= (2/(C s^2) int_{u<=s} |Du|^(p+2))^(1/(n-2)) (sqrt(2/C)(n-3)/2)^((n-3)/(n-2))."""
    n, p = point.spec.n, point.spec.p
    if not math.isclose(n, p + 2):
        raise ValueError("critical bound needs n = p + 2")
    C = critical_constant(n, p) if C is None else C
    grad = _grad_power_below(point.u, s, p + 2)
    rhs = (2.0 / (C * s * s) * grad) ** (1.0 / (n - 2)) \
        * (math.sqrt(2.0 / C) * (n - 3) / 2.0) ** ((n - 3) / (n - 2))
    lhs = max(point.sup_u - s, 0.0)
    return EstimateReport("critical", lhs, rhs, C, (rhs - lhs) / rhs if rhs else 0.0,
                          int(point.u.mesh.size - 1), bool(lhs <= rhs * (1 + 1e-10)), 0.0,
                          {"lam": point.lam}, s, lhs / rhs if rhs else math.inf)


# --------------------------------------------------------------------------
# gradient bootstrap

def bootstrap_gradient(point: BranchPoint, r0: float, r: float) -> EstimateReport:
    """int |Du|^r <= r |Omega| + (r1/r - 1)^-1 (int |u|^r0 + ||lam f(u)||_1), r1 = p r0/(r0+1)."""
    n, p = point.spec.n, point.spec.p
    if n > p and r0 < (p - 1.0) * n / (n - p) - 1e-12:
        raise ValueError("r0 must be >= (p-1)n/(n-p)")
    r1 = p * r0 / (r0 + 1.0)
    if not (0 < r < r1):
        raise ValueError(f"need 0 < r < r1 = {r1}")
    u = point.u
    lhs = float(np.dot(u.cell_weights(), np.abs(u.slopes()) ** r))
    h1 = point.lam * u.integrate(point.spec.f_val(u.values))
    rhs = r * u.volume + (lp_norm(u, r0) ** r0 + h1) / (r1 / r - 1.0)
    return EstimateReport("bootstrap", lhs, rhs, None, (rhs - lhs) / rhs, int(u.mesh.size - 1),
                          bool(lhs <= rhs), 0.0, {"lam": point.lam, "r0": r0, "r": r, "r1": r1})


# --------------------------------------------------------------------------
# bounds along a branch

def approach_points(branch: Branch, deltas=(1e-2, 1e-3, 1e-4)) -> List[BranchPoint]:
    """Minimal solutions at lam = lam*(1 - delta), each warm-started from the branch."""
    spec = branch.points[0].spec
    lam_star = branch.lambda_star_bracket[0]
    lams = branch.lambdas()
    out = []
    for d in deltas:
        lt = lam_star * (1.0 - d)
        i = max(int(np.searchsorted(lams, lt)) - 1, 0)
        out.append(solve_at(spec, lt, branch.points[i].u, eps=branch.points[i].eps_reg))
    return out


def _shrinking(values) -> Tuple[bool, List[float]]:
    inc = np.abs(np.diff(values))
    return bool(inc.size < 2 or inc[-1] <= inc[0]), inc.tolist()


def check_thm16(branch: Branch, deltas=(1e-2, 1e-3, 1e-4)) -> List[EstimateReport]:
    """L1-controlled bounds along the branch.

    The fitted constant is max over the branch of ||u||_inf / ||f(u)||_1^(1/(p-1))
    (n <= p+2) or ||u||_{np/(n-p-2)} / ||f(u)||_1^(1/(p-1)) (n > p+2).  It counts
    as stable when its values at lam*(1 - delta) change by shrinking amounts as
    delta decreases.  The energy report checks int |Du|^p against the boundary
    term (1/p') |dB_1| |u'(1)|^p, which |u'(1)|^(p-1) |dB_1| = lam ||f(u)||_1 ties
    to the L1 norm of f(u).
    """
    pts = list(branch.points)
    spec = pts[0].spec
    n, p = spec.n, spec.p
    key = "linf" if n <= p + 2 else "lq2star"
    near = approach_points(branch, deltas)

    def ratio(pt):
        return pt.norms[key] / pt.norms["l1_f"] ** (1.0 / (p - 1.0))

    near_r = [ratio(pt) for pt in near]
    c_fit = max(max(ratio(pt) for pt in pts), max(near_r))
    stable, inc = _shrinking(near_r)
    res = int(pts[-1].u.mesh.size - 1)
    label = "thm16a" if key == "linf" else "thm16b"
    out = [EstimateReport(label, near_r[-1], c_fit, c_fit, 1.0 - near_r[-1] / c_fit, res, stable, 0.0,
                          {"norm": key, "deltas": list(deltas), "ratios": near_r, "increments": inc},
                          None, c_fit)]
    worst = -math.inf
    for pt in pts + near:
        grad_p = pt.norms["w1p"] ** p
        flux = pt.lam * pt.norms["l1_f"] / sphere_area(n)
        bound = (p - 1.0) / p * sphere_area(n) * flux ** (p / (p - 1.0))
        worst = max(worst, grad_p / bound)
    w1p = [pt.norms["w1p"] for pt in near]
    w_stable, w_inc = _shrinking(w1p)
    out.append(EstimateReport("thm16_energy", float(worst), 1.0, None, 1.0 - worst, res,
                              bool(worst <= 1.0 + 1e-3 and w_stable), 0.0,
                              {"w1p_near": w1p, "increments": w_inc,
                               "w1p_max": max(pt.norms["w1p"] for pt in pts + near)}, None, worst))
    return out


def boundedness_evidence(branch: Branch, deltas=(1e-1, 1e-2, 1e-3, 1e-4),
                         shrink: float = 0.9) -> Dict[str, object]:
    """Growth of sup u at lam = lam*(1 - delta) for decreasing delta.

    Bounded extremal solutions give increments that shrink decade by decade;
    logarithmic blow-up keeps them from shrinking.  Classified bounded when the
    last increment is below ``shrink`` times the one before.
    """
    sups = [pt.sup_u for pt in approach_points(branch, deltas)]
    inc = np.diff(sups)
    ratio = float(inc[-1] / inc[-2]) if inc.size >= 2 and inc[-2] > 0 else math.nan
    return {"deltas": list(deltas), "sup_u": sups, "increments": inc.tolist(),
            "ratio": ratio, "bounded": bool(ratio < shrink)}


def boundary_estimate_check(u, epsilon_b: float, gamma: Optional[float] = None) -> Report:
    """sup over the collar {dist(x, boundary) < epsilon_b} against ||u||_1 / gamma.

    The report records the measured gamma = ||u||_1 / sup_collar; with ``gamma``
    given it checks sup_collar <= ||u||_1 / gamma.
    """
    if not epsilon_b > 0:
        raise ValueError("collar width must be positive")
    if isinstance(u, RadialField):
        collar = u.mesh >= u.R_max - epsilon_b
    else:
        dist = _distance_to_boundary(u)
        collar = u.mask & (dist < epsilon_b)
    sup = float(np.max(np.abs(u.values[collar]))) if np.any(collar) else 0.0
    l1 = lp_norm(u, 1.0)
    g_meas = l1 / sup if sup > 0 else math.inf
    if gamma is None:
        rep = Report.compare("boundary", sup, sup, None, 0.0, int(u.values.size), gamma=g_meas, l1=l1)
        return rep
    return Report.compare("boundary", sup, l1 / gamma, 1.0 / gamma, 0.0, int(u.values.size),
                          gamma=g_meas, l1=l1)


def _distance_to_boundary(f: CartesianField) -> np.ndarray:
    return ndimage.distance_transform_edt(f.mask, sampling=f.h)


def gamma_along_branch(branch: Branch, epsilon_b: float) -> np.ndarray:
    return np.array([boundary_estimate_check(pt.u, epsilon_b).details["gamma"] for pt in branch.points])
