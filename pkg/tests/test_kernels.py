"""numba and numpy kernel paths agree with each other and with scipy."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh_tridiagonal, solve_banded

from pstable import kernels
from pstable._accel import backend, max_threads


def _tridiag(rng, m):
    diag = 3.0 + rng.random(m)
    lower = -rng.random(m)
    upper = -rng.random(m)
    return lower, diag, upper, rng.random(m)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 300), st.integers(0, 10_000))
def test_thomas_matches_banded_solver(m, seed):
    lower, diag, upper, rhs = _tridiag(np.random.default_rng(seed), m)
    ab = np.zeros((3, m))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    ref = solve_banded((1, 1), ab, rhs)
    assert np.allclose(kernels.thomas_solve(lower, diag, upper, rhs), ref, rtol=1e-12, atol=1e-13)
    assert np.allclose(kernels.thomas_solve_numpy(lower, diag, upper, rhs), ref, rtol=1e-12, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 200), st.integers(0, 10_000))
def test_smallest_eigenvalue_brackets_lapack(m, seed):
    rng = np.random.default_rng(seed)
    diag = rng.normal(size=m)
    off = rng.normal(size=m - 1)
    ref = eigh_tridiagonal(diag, off, eigvals_only=True)[0]
    for fn in (kernels.smallest_eigenvalue, kernels.smallest_eigenvalue_numpy):
        lo, hi = fn(diag, off)
        assert lo - 1e-12 <= ref <= hi + 1e-12
        assert hi - lo < 1e-10 * max(1.0, abs(ref))


def test_sturm_count_counts_eigenvalues_below_shift():
    rng = np.random.default_rng(1)
    diag, off = rng.normal(size=50), rng.normal(size=49)
    ev = eigh_tridiagonal(diag, off, eigvals_only=True)
    for x in (-3.0, -0.5, 0.0, 0.7, 4.0):
        assert kernels.sturm_count(diag, off, x) == int(np.sum(ev < x))


@pytest.mark.parametrize("d", [2, 3])
def test_simplex_integrals_paths_agree(d):
    rng = np.random.default_rng(d)
    vals = rng.random((9,) * d)
    th = np.linspace(0, 1, 17)
    h = (0.1,) * d
    for a in (0.0, 1.0, 2.5):
        V1, W1 = kernels.simplex_level_integrals(vals, h, th, a)
        V2, W2 = kernels.simplex_level_integrals_numpy(vals, h, th, a)
        assert np.allclose(V1, V2, rtol=1e-12, atol=1e-12 * V2[0])
        assert np.allclose(W1, W2, rtol=1e-12, atol=1e-12 * W2[0])


def test_simplex_volume_of_box_and_linear_field():
    # f = x on [0,1]^2: |{f > t}| = 1 - t exactly for a piecewise-linear field
    x = np.linspace(0, 1, 11)
    vals = np.repeat(x[:, None], 11, axis=1)
    th = np.array([0.0, 0.25, 0.5, 0.93])
    V, W = kernels.simplex_level_integrals(vals, (0.1, 0.1), th, 1.0)
    assert np.allclose(V, 1 - th, atol=1e-14)
    assert np.allclose(W, 1 - th, atol=1e-14)


def test_kuhn_simplices_tile_the_cube():
    for d in (2, 3):
        offs, axes = kernels.kuhn_simplices(d)
        assert len(axes) == (2 if d == 2 else 6)


def test_backend_and_threads(monkeypatch):
    assert backend() in ("numba", "numpy")
    monkeypatch.setenv("PSTABLE_THREADS", "3")
    assert max_threads() == 3
    monkeypatch.setenv("PSTABLE_THREADS", "junk")
    assert max_threads() >= 1


def test_numpy_fallback_selected_by_env(tmp_path):
    import os
    import subprocess
    import sys

    code = ("from pstable import kernels, backend;"
            "print(backend(), kernels.thomas_solve is kernels.thomas_solve_numpy)")
    env = dict(os.environ, PSTABLE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]
