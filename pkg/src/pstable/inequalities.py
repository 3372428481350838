"""Morrey, Sobolev and Moser-Trudinger type bounds in terms of I_{p,q}, their
explicit constants, and the isoperimetric inequality on level sets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .fields import RadialField, ball_volume, distribution, lp_norm, sphere_area
from .levelgeom import functional_Ipq, perimeter
from .reports import Report


@dataclass(frozen=True)
class ExponentTable:
    n: int
    p: float
    q: float
    p_q_star: float
    regime: str
    p_prime: float


def exponents(n: int, p: float, q: float) -> ExponentTable:
    s = p + q
    if n < s:
        regime = "morrey"
    elif n > s:
        regime = "sobolev"
    else:
        regime = "critical"
    pqs = n * p / (n - s) if n > s else math.inf
    pp = p / (p - 1.0) if p > 1.0 else math.inf
    return ExponentTable(n, p, q, pqs, regime, pp)


def optimal_constant_Cnpq(n: int, p: float, q: float) -> float:
    """Best constant of the 1-D weighted Sobolev inequality

    (int_0^R |phi|^p* s^(n-1))^(1/p*) <= C (int_0^R s^-q |phi'|^p s^(n-1))^(1/p), p* = np/(n-p-q).
    """
    if not n > p + q:
        raise ValueError("C(n,p,q) needs n > p + q")
    if not p > 1.0:
        raise ValueError("C(n,p,q) needs p > 1")
    s = p + q
    pqs = n * p / (n - s)
    pp = p / (p - 1.0)
    lg = gammaln(n * p / s) - gammaln(n / s) - gammaln(1.0 + n * (p - 1.0) / s)
    return float(((p - 1.0) / (n - s)) ** (1.0 / pp) * n ** (-1.0 / pqs) * math.exp(lg * s / (n * p)))


def radial_sobolev_ratio(n: int, p: float, q: float, R: float, m: int = 4000) -> float:
    """LHS/RHS of the 1-D inequality for the extremal-type profile, shifted to vanish at R."""
    s_ = p + q
    expo = -(n - s_) / s_
    k = s_ / (p - 1.0)
    s = np.concatenate(([0.0], np.geomspace(1e-8 * R, R, m)))
    phi = (1.0 + s ** k) ** expo
    phi = phi - phi[-1]
    dphi = expo * (1.0 + s ** k) ** (expo - 1.0) * k * s ** (k - 1.0)
    pqs = n * p / (n - s_)
    lhs = np.trapezoid(np.abs(phi) ** pqs * s ** (n - 1), s) ** (1.0 / pqs)
    rhs = np.trapezoid(np.abs(dphi) ** p * s ** (n - 1.0 - q), s) ** (1.0 / p)
    return float(lhs / (optimal_constant_Cnpq(n, p, q) * rhs))


@dataclass(frozen=True)
class ConstantSet:
    n: int
    p: float
    q: float
    A: float
    C: float                          # comparison constant A^(q/p) |dB_1|^(q/((n-1)p))
    C1: Optional[float] = None        # Morrey constant including the volume factor
    C1_universal: Optional[float] = None
    C2: Optional[float] = None
    C3: Optional[float] = None
    Cnpq: Optional[float] = None
    volume: Optional[float] = None


def sphere_A(n: int) -> float:
    """Michael-Simon constant at which round spheres give equality."""
    return sphere_area(n) ** (-1.0 / (n - 1))


def constants_remark(n: int, p: float, q: float, A: Optional[float] = None,
                     volume: Optional[float] = None) -> ConstantSet:
    """Explicit constants for the three regimes; undefined entries are None."""
    if not p > 1.0 or q < 1.0:
        raise ValueError("need p > 1 and q >= 1")
    A = sphere_A(n) if A is None else float(A)
    area = sphere_area(n)
    C = A ** (q / p) * area ** (q / ((n - 1) * p))
    pp = p / (p - 1.0)
    C1 = C1u = C2 = C3 = Cn = None
    if n < p + q:
        C1u = area ** (-1.0 / p) * ((p - 1.0) / (p + q - n)) ** (1.0 / pp) \
            * ball_volume(n) ** (-(p + q - n) / (n * p)) * C
        if volume is not None:
            C1 = C1u * volume ** ((p + q - n) / (n * p))
    elif n > p + q:
        Cn = optimal_constant_Cnpq(n, p, q)
        pqs = n * p / (n - p - q)
        C2 = Cn * area ** (1.0 / pqs - 1.0 / p) * C
    else:
        C3 = area ** (-1.0 / p) * A ** ((n - p) / p) * area ** ((n - p) / ((n - 1) * p))
    return ConstantSet(n, p, q, A, C, C1, C1u, C2, C3, Cn, volume)


def _dim(f) -> int:
    return f.n if isinstance(f, RadialField) else f.d


def _resolution(f):
    return int(f.values.size)


def check_morrey(f, p: float, q: float, cs: Optional[ConstantSet] = None, tol: float = 1e-2) -> Report:
    """||f||_inf <= C1 I_{p,q}(f), C1 carrying the factor (|Omega|/|B_1|)^((p+q-n)/(np))."""
    n = _dim(f)
    if not (q + 1 < n < p + q):
        raise ValueError(f"Morrey regime needs q+1 < n < p+q (n={n}, p={p}, q={q})")
    cs = constants_remark(n, p, q) if cs is None else cs
    vol = f.volume
    C1 = cs.C1_universal * vol ** ((p + q - n) / (n * p))
    I = functional_Ipq(f, p, q).value
    return Report.compare("morrey", lp_norm(f, math.inf), C1 * I, C1, tol, _resolution(f), I=I)


def check_sobolev(f, p: float, q: float, r: Optional[float] = None, cs: Optional[ConstantSet] = None,
                  tol: float = 1e-2) -> Report:
    """||f||_r <= C2 |Omega|^(1/r - 1/p*) I_{p,q}(f) for 1 <= r <= p*."""
    n = _dim(f)
    if not n > p + q:
        raise ValueError(f"Sobolev regime needs n > p+q (n={n}, p={p}, q={q})")
    cs = constants_remark(n, p, q) if cs is None else cs
    pqs = n * p / (n - p - q)
    r = pqs if r is None else float(r)
    if not (1.0 <= r <= pqs * (1 + 1e-12)):
        raise ValueError(f"need 1 <= r <= p* = {pqs}")
    I = functional_Ipq(f, p, q).value
    factor = f.volume ** (1.0 / r - 1.0 / pqs)
    return Report.compare("sobolev", lp_norm(f, r), cs.C2 * factor * I, cs.C2, tol, _resolution(f),
                          I=I, r=r)


def check_moser_trudinger(f, p: float, q: float, cs: Optional[ConstantSet] = None,
                          tol: float = 1e-2) -> Report:
    """int exp((|f| / (C3 I))^p') <= n/(n-1) |Omega| when n = p + q."""
    n = _dim(f)
    if not math.isclose(n, p + q):
        raise ValueError(f"Moser-Trudinger regime needs n = p+q (n={n}, p={p}, q={q})")
    cs = constants_remark(n, p, q) if cs is None else cs
    I = functional_Ipq(f, p, q).value
    pp = p / (p - 1.0)
    vol = f.volume
    if I == 0.0:
        lhs = vol if not np.any(f.values) else math.inf
    else:
        lhs = f.integrate(np.exp((np.abs(f.values) / (cs.C3 * I)) ** pp))
        if not isinstance(f, RadialField) and f.domain_volume is not None:
            # the zero extension contributes exp(0) on the part of Omega off the grid mask
            lhs += f.domain_volume - float(f.weights().sum())
    return Report.compare("moser_trudinger", lhs, n / (n - 1.0) * vol, cs.C3, tol, _resolution(f), I=I)


def isoperimetric_check(f, thresholds=None, tol: float = 1e-2, levels: int = 64,
                        delta: Optional[float] = None) -> Report:
    """n |B_1|^(1/n) V(t)^((n-1)/n) <= P(t) on a threshold grid; reports the worst t."""
    n = _dim(f)
    top = float(np.max(np.abs(f.values)))
    if thresholds is None:
        if top == 0.0:
            return Report.compare("isoperimetric", 0.0, 0.0, None, tol, _resolution(f))
        thresholds = top * (np.arange(1, levels) / levels)
    th = np.asarray(thresholds, float)
    V = distribution(f, np.unique(np.concatenate(([0.0], th)))) if th.size else None
    vals = np.interp(th, V.thresholds, V.measures)
    lhs = n * ball_volume(n) ** (1.0 / n) * vals ** ((n - 1.0) / n)
    P = perimeter(f, th, delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(P > 0, lhs / P, np.where(lhs > 0, np.inf, 0.0))
    k = int(np.argmax(ratio))
    rep = Report.compare("isoperimetric", float(lhs[k]), float(P[k]), None, tol, _resolution(f),
                         t=float(th[k]), max_ratio=float(ratio[k]))
    return rep
