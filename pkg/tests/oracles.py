"""Independent reference computations and the numbers frozen from them.

Nothing here imports pstable.  FROZEN holds values produced by these oracles
(or by closed forms) before the corresponding code existed; the oracle tests
re-derive them so a drift in either side is caught.
"""

import math

import mpmath as mp
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar


def gelfand_shooting(n, p=2.0, smax=40.0):
    """Solve (s^(n-1) phi_p(w'))' = -s^(n-1) e^w, w(0) = 0, on [0, smax].

    Scaling u(r) = w(s0 r) - w(s0) gives the ball solution at
    lambda = s0^p e^(w(s0)) with sup u = -w(s0).
    """

    def rhs(s, y):
        w, flux = y
        ph = flux / s ** (n - 1)
        return [math.copysign(abs(ph) ** (1.0 / (p - 1.0)), ph), -s ** (n - 1) * math.exp(w)]

    s0 = 1e-6
    sol = solve_ivp(rhs, (s0, smax), [0.0, -s0 ** n / n], rtol=1e-12, atol=1e-14, dense_output=True)

    def lam(s):
        return s ** p * math.exp(sol.sol(s)[0])

    return sol, lam


def gelfand_lambda_star(n, p=2.0):
    _, lam = gelfand_shooting(n, p)
    r = minimize_scalar(lambda s: -lam(s), bounds=(0.5, 10.0), method="bounded",
                        options={"xatol": 1e-12})
    return lam(r.x)


def gelfand_sup_at(n, lam_target, p=2.0):
    """sup u on the minimal branch at the given lambda."""
    sol, lam = gelfand_shooting(n, p)
    r = minimize_scalar(lambda s: -lam(s), bounds=(0.5, 10.0), method="bounded",
                        options={"xatol": 1e-12})
    s1 = brentq(lambda s: lam(s) - lam_target, 1e-3, r.x, xtol=1e-14)
    return -sol.sol(s1)[0]


def sobolev_constant_mp(n, p, q, dps=30):
    """Best 1-D weighted Sobolev constant via mpmath Gamma functions."""
    with mp.workdps(dps):
        n, p, q = mp.mpf(n), mp.mpf(p), mp.mpf(q)
        s = p + q
        pqs = n * p / (n - s)
        pp = p / (p - 1)
        g = mp.gamma(n * p / s) / (mp.gamma(n / s) * mp.gamma(1 + n * (p - 1) / s))
        return float(((p - 1) / (n - s)) ** (1 / pp) * n ** (-1 / pqs) * g ** (s / (n * p)))


def sphere_area_mp(n):
    with mp.workdps(30):
        return float(2 * mp.pi ** (mp.mpf(n) / 2) / mp.gamma(mp.mpf(n) / 2))


FROZEN = {
    # shooting oracle, n = 2, lambda = 1; closed form 2 ln(4 - 2 sqrt 2)
    "gelfand_n2_sup_at_1": 0.3166943676407499,
    "gelfand_n2_lambda_star": 2.0,
    "gelfand_n3_lambda_star": 3.3219921183,
    # singular solutions u = -p ln r at lambda = p^(p-1) (n - p)
    "singular_n10_p2": 16.0,
    "singular_n15_p3": 108.0,
    # |S^9| / 2 = pi^5 / Gamma(5)
    "energy_n10": 12.750820199386727,
    # Gamma-function constant, (n, p, q) = (4, 2, 1) and (6, 2, 2)
    "C_4_2_1": 0.957832562517565,
    "C_6_2_2": 0.625762324951589,
    # |dB_1|^(-1/(n-1))
    "A_sphere_3": 0.28209479177387814,
    "A_sphere_4": 0.37001848415367811,
    "A_sphere_6": 0.50316459714325932,
    # exponent arithmetic
    "q2star_6_2": 6.0,
    "r1_6_2": 12.0 / 7.0,
    "rbar0_11_2": 22.0 / (7.0 - 2.0 * math.sqrt(10.0)),
    # torus R = 2, r = 1 with phi = 1, q = 1: sqrt(r/R)/pi by the Minkowski integral
    "A_torus_2_1": math.sqrt(0.5) / math.pi,
}


def lp_oracle_cone(n, r):
    """int_{B_1} (1 - |x|)^r dx = |dB_1| Gamma(r+1) Gamma(n) / Gamma(r+n+1)."""
    return sphere_area_mp(n) * math.gamma(r + 1) * math.gamma(n) / math.gamma(r + n + 1)


def radial_quad(fn, n, a=0.0, b=1.0):
    """|dB_1| int_a^b fn(r) r^(n-1) dr by adaptive quadrature."""
    with mp.workdps(20):
        return float(sphere_area_mp(n) * mp.quad(lambda r: fn(r) * r ** (n - 1), [a, b]))


def ball_field_grid(fn, d, shape):
    """Samples fn on the box [-1.05, 1.05]^d with the unit-ball mask (numpy only)."""
    x = np.linspace(-1.05, 1.05, shape)
    X = np.meshgrid(*([x] * d), indexing="ij")
    r = np.sqrt(sum(c * c for c in X))
    return X, r, r < 1.0
