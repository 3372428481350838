import math

import numpy as np
import pytest
from scipy.special import jn_zeros

import oracles as o
from oracles import FROZEN
from pstable.fields import RadialField, truncate
from pstable.psolve import (BRANCH_COLUMNS, BranchPoint, NoConvergence, ProblemSpec, StepPolicy,
                            continue_branch, eta_s_schedule, pohozaev_check, psi_levels, psi_profile,
                            solve_at, stability_eigenpair, stability_eigenvalue,
                            stability_key_inequality, torsion_pohozaev_sides, torsion_profile)


def test_problem_spec_validation():
    with pytest.raises(ValueError):
        ProblemSpec(2, 1.0)
    with pytest.raises(ValueError):
        ProblemSpec(3, 3.0, f="power", m=1.5)
    with pytest.raises(ValueError):
        ProblemSpec(3, 2.0, f="sin")
    with pytest.raises(ValueError):
        ProblemSpec.from_dict({"n": 3, "p": 2.0, "bogus": 1})
    s = ProblemSpec(5, 2.5, f="power", m=3.0)
    assert ProblemSpec.from_dict(s.to_dict()) == s
    assert s.F(np.array(0.0)) == 0.0
    with pytest.raises(ValueError):
        continue_branch(ProblemSpec(3, 2.0, f="const"))


def test_gelfand_n2_matches_shooting():
    pt = solve_at(ProblemSpec(2, 2.0), 1.0)
    assert pt.sup_u == pytest.approx(FROZEN["gelfand_n2_sup_at_1"], abs=1e-6)
    assert pt.residual <= 1e-10


def test_small_lambda_linear_regime():
    for p in (2.0, 3.0):
        spec = ProblemSpec(3, p)
        a = solve_at(spec, 1e-4).sup_u
        b = solve_at(spec, 1e-5).sup_u
        # sup u ~ lambda^(1/(p-1))
        assert a / b == pytest.approx(10 ** (1 / (p - 1)), rel=1e-3)


@pytest.mark.parametrize("n,p", [(2, 2.0), (3, 2.0), (4, 3.0), (3, 1.6)])
def test_torsion_reproduced(n, p):
    spec = ProblemSpec(n, p, f="const", c=1.5)
    pt = solve_at(spec, 2.0)
    exact = torsion_profile(n, p, 2.0, 1.5)(pt.u.mesh)
    assert np.abs(pt.u.values - exact).max() < 1e-5 * exact.max()
    if p == 2.0:
        assert exact[0] == pytest.approx(2.0 * 1.5 / (2 * n))


def test_solve_rejects_bad_input():
    spec = ProblemSpec(3, 2.0)
    with pytest.raises(ValueError):
        solve_at(spec, 0.0)
    bad = RadialField(3, spec.mesh(), -np.ones(spec.M + 1))
    with pytest.raises(ValueError):
        solve_at(spec, 1.0, bad)
    with pytest.raises(NoConvergence):
        solve_at(spec, 10.0)  # beyond the fold


def test_regularization_insensitive():
    spec = ProblemSpec(3, 3.0)
    a = solve_at(spec, 5.0)
    b = solve_at(spec, 5.0, eps=a.eps_reg / 10)
    assert abs(a.sup_u - b.sup_u) / a.sup_u < 1e-4


def test_branch_n2_and_bracket(branches):
    br = branches(2)
    assert br.lambda_star == pytest.approx(FROZEN["gelfand_n2_lambda_star"], rel=5e-3)
    lo, hi = br.lambda_star_bracket
    assert hi - lo <= 1e-6 * br.lambda_star
    assert np.all(np.diff(br.lambdas()) > 0)
    sups = [pt.sup_u for pt in br.points]
    assert np.all(np.diff(sups) >= 0)
    for a, b in zip(br.points[:-1], br.points[1:]):
        assert np.all(b.u.values >= a.u.values - 1e-12)
    assert len(br.table()[0]) == len(BRANCH_COLUMNS)


def test_lambda_star_mesh_refinement(branches):
    # halving h at the production mesh moves lambda* by less than the bracket bound
    a = branches(3, 2.0, 2000).lambda_star
    b = branches(3, 2.0, 4000).lambda_star
    assert abs(a - b) < 1e-6 * b
    assert a == pytest.approx(FROZEN["gelfand_n3_lambda_star"], rel=1e-6)
    assert abs(b - FROZEN["gelfand_n3_lambda_star"]) < abs(a - FROZEN["gelfand_n3_lambda_star"])


def test_singular_branches(branches):
    br = branches(10)
    assert br.lambda_star == pytest.approx(FROZEN["singular_n10_p2"], rel=1e-2)
    u = br.extremal_profile
    r = u.mesh
    err = np.abs(u.values + 2 * np.log(np.maximum(r, 1e-300)))
    # the approach is logarithmically slow near the origin
    assert err[(r > 0.2) & (r < 0.95)].max() < 1e-2
    assert err[np.searchsorted(r, 0.05)] > err[np.searchsorted(r, 0.1)] > err[np.searchsorted(r, 0.4)]
    br = branches(15, 3.0)
    assert br.lambda_star == pytest.approx(FROZEN["singular_n15_p3"], rel=2e-2)


def test_residual_and_pohozaev_on_branch(branches):
    for n in (2, 3, 6):
        for pt in branches(n).points:
            assert pt.residual <= 1e-10
            assert pt.pohozaev_residual <= 1e-4
            assert pohozaev_check(pt)["energy_bound_ok"]


def test_pohozaev_torsion_closed_form():
    lam = 3.7
    lhs, rhs = torsion_pohozaev_sides(2, 2.0, lam)
    assert lhs == pytest.approx(lam ** 2 * math.pi / 4, rel=1e-14)
    assert rhs == pytest.approx(lam ** 2 * math.pi / 4, rel=1e-14)
    for n, p in ((3, 2.0), (5, 3.0), (4, 1.5)):
        lhs, rhs = torsion_pohozaev_sides(n, p, 1.3)
        assert abs(lhs - rhs) <= 1e-10 * abs(rhs)
    pt = solve_at(ProblemSpec(2, 2.0, f="const"), lam)
    chk = pohozaev_check(pt)
    assert chk["lhs"] == pytest.approx(lam ** 2 * math.pi / 4, rel=1e-5)
    assert chk["residual"] < 1e-5


def test_pohozaev_of_zero():
    spec = ProblemSpec(3, 2.0, f="const")
    u = RadialField(3, spec.mesh(), np.zeros(spec.M + 1))
    chk = pohozaev_check(BranchPoint(0.0, u, 0, 0.0, 0.0, spec))
    assert chk["lhs"] == 0.0 and chk["rhs"] == 0.0 and chk["residual"] == 0.0


def test_stability_of_zero_profile_is_dirichlet_eigenvalue():
    spec = ProblemSpec(2, 2.0)
    u = RadialField(2, spec.mesh(), np.zeros(spec.M + 1))
    mu = stability_eigenvalue(BranchPoint(1.0, u, 0, 0.0, 0.0, spec))
    assert mu == pytest.approx(jn_zeros(0, 1)[0] ** 2 - 1.0, rel=1e-4)


def test_stability_along_branch(branches):
    for n in (2, 3, 6, 9):
        br = branches(n)
        mus = np.array([pt.mu1 for pt in br.points])
        assert mus[0] > 0 and np.all(mus > 0)
        assert np.all(np.diff(mus) < 0)
        assert br.ends_at_fold


def test_eigenvector_homogeneity(branches):
    pt = branches(3).points[5]
    mu, phi = stability_eigenpair(pt)
    from pstable.psolve import _pencil
    diag, off, mass, _ = _pencil(pt)
    for c in (1.0, -3.0, 1e-6):
        v = c * phi[:-1]
        Kv = diag * v
        Kv[:-1] += off * v[1:]
        Kv[1:] += off * v[:-1]
        q = float(v @ Kv) / float(v @ (mass * v))
        assert q == pytest.approx(mu, rel=1e-8)
        assert math.copysign(1, q) == math.copysign(1, mu)


def test_key_inequality_with_truncations(branches):
    for n in (3, 6):
        for pt in branches(n).points[::4]:
            for s in np.geomspace(1e-3, 1, 8) * pt.sup_u:
                assert stability_key_inequality(pt, truncate(pt.u, s)).passed
            rep = stability_key_inequality(pt, pt.u.with_values(np.zeros_like(pt.u.values)))
            assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.passed


def test_key_inequality_with_distance_cap(branches):
    for pt in branches(3).points[::5]:
        r = pt.u.mesh
        eta = RadialField(3, r, np.minimum(1 - r, 0.2))
        assert stability_key_inequality(pt, eta).passed
    with pytest.raises(ValueError):
        stability_key_inequality(pt, RadialField(3, r, np.ones_like(r)))


def test_psi_of_cone_and_eta_continuity(branches):
    u = RadialField.from_function(lambda r: 1 - r, 2, 400)
    t, psi = psi_levels(u, 1.0)
    sel = t > 0.01
    assert np.allclose(psi[sel], 2 * math.pi * (1 - t[sel]), rtol=1e-10)
    with pytest.raises(ValueError):
        psi_levels(RadialField(2, [0, 0.5, 1], [0, 1, 0]), 2.0)
    pt = branches(4).points[-3]
    t, psi = psi_profile(pt)
    assert np.all(np.diff(t) >= 0)
    s = 0.5 * pt.sup_u
    sched = eta_s_schedule(pt, s)
    assert np.interp(s, sched.levels, sched.eta_levels) == pytest.approx(1.0, abs=1e-3)
    assert np.all(np.diff(sched.eta_levels) >= 0)


def test_step_policy_defaults():
    pol = StepPolicy()
    assert pol.min_rel_step == 1e-8 and pol.tol_eig_rel == 1e-2


def test_key_inequality_finite_in_the_plane(branches):
    from pstable.estimates import s_grid
    from pstable.fields import truncate
    pt = branches(2).points[0]
    for s in s_grid(pt)[:3]:
        rep = stability_key_inequality(pt, truncate(pt.u, float(s)))
        assert np.isfinite(rep.lhs) and rep.passed
