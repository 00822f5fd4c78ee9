import math

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from wgmaxwell import eigensolver as es
from wgmaxwell.assembly import assemble, constraint_residual, interpolate
from wgmaxwell.eigensolver import (
    SolverConfig,
    SolverError,
    filter_pairs,
    residuals,
    solve,
    solve_dense,
    solve_dense_qz,
    solve_iterative,
    vnorm,
)
from wgmaxwell.mesh import generate_uniform

EXACT = np.array([1.0, 1.0, 2.0, 4.0, 4.0])


def te_field(x, y):
    return np.cos(x) * np.sin(y), -np.sin(x) * np.cos(y)


def system(n, kind="square", k=1, eps_r=1.0, mu_r=1.0):
    return assemble(generate_uniform(n, kind=kind), k, (1 / n) ** 0.1, eps_r=eps_r, mu_r=mu_r)


@pytest.fixture(scope="module")
def sys8():
    return system(8)


@pytest.mark.parametrize("kind", ["square", "tri"])
@pytest.mark.parametrize("n", [2, 4])
def test_dense_and_iterative_match_qz(n, kind):
    s = system(n, kind)
    cfg = SolverConfig(num_eigs=5)
    ref = solve_dense_qz(s, cfg)
    assert len(ref) == 5
    for got in (solve_dense(s, cfg), solve_iterative(s, cfg)):
        np.testing.assert_allclose(got.eigenvalues, ref.eigenvalues, rtol=1e-8, atol=0)


def test_auto_method_selection(sys8):
    assert solve(system(2)).method == "dense"
    assert solve(sys8, SolverConfig(dense_limit=10)).method == "iterative"


def test_lower_bounds_coarse(sys8):
    res = solve(sys8, SolverConfig(num_eigs=5))
    assert np.all(res.eigenvalues < EXACT)
    coarse = solve(system(4), SolverConfig(num_eigs=5)).eigenvalues
    assert np.all(EXACT - res.eigenvalues < EXACT - coarse)


def test_eps_r_scaling():
    a = solve(system(4, eps_r=1.0)).eigenvalues
    b = solve(system(4, eps_r=4.0)).eigenvalues
    np.testing.assert_allclose(a / b, 4.0, rtol=1e-10)


def test_mu_r_scaling():
    a = solve(system(4, mu_r=1.0)).eigenvalues
    b = solve(system(4, mu_r=2.0)).eigenvalues
    # mu_r only scales the curl part, not the stabilizer, so this is not exactly 2
    assert np.all(b < a)


def test_eigenvectors_b_orthonormal_and_converged(sys8):
    cfg = SolverConfig(num_eigs=5)
    for res in (solve_dense(sys8, cfg), solve_iterative(sys8, cfg)):
        U = res.eigenvectors
        np.testing.assert_allclose(U.T @ (sys8.B @ U), np.eye(5), atol=1e-8)
        assert np.all(res.residual_norms <= 1e-8)
        assert np.all(res.constraint_norms <= 1e-8)
        for j, lam in enumerate(res.eigenvalues):
            r, c = residuals(sys8, lam, U[:, j], res.multipliers[:, j])
            assert max(r, c) <= 1e-8


def test_unstabilized_multiplier_gives_divergence_free_modes():
    s = system(4)
    res = solve(s, SolverConfig(num_eigs=3, p_stab_weight=0.0))
    assert res.method == "dense-qz"
    for j in range(len(res)):
        assert constraint_residual(s, res.eigenvectors[:, j]) <= 1e-8


def test_filter_rejects_multiplier_mode(sys8):
    u = np.zeros((sys8.n_u, 1))
    u[sys8.dofs.n_u0:, 0] = 1.0    # edge dofs only: zero B-mass
    p = np.ones((sys8.n_p, 1))
    res = filter_pairs(sys8, [1.5], u, p, SolverConfig())
    assert len(res) == 0
    assert res.rejected == [(1.5, "multiplier mode")]


def test_filter_rejects_unconverged_and_nonpositive(sys8):
    good = solve(sys8, SolverConfig(num_eigs=3))
    lam = good.eigenvalues[2]
    us = np.column_stack([good.eigenvectors[:, 2]] * 3)
    ps = np.column_stack([good.multipliers[:, 2]] * 3)
    delta = 1e-3
    res = filter_pairs(sys8, [lam - delta, -lam, 0.0], us, ps, SolverConfig())
    assert len(res) == 0
    reasons = dict(res.rejected)
    assert reasons[lam - delta].startswith("residual")
    assert reasons[-lam] == "zero or negative"
    assert reasons[0.0] == "zero or negative"


def test_filter_drops_duplicates_and_sorts(sys8):
    good = solve(sys8, SolverConfig(num_eigs=3))
    idx = [2, 0, 2]
    res = filter_pairs(sys8, good.eigenvalues[idx], good.eigenvectors[:, idx],
                       good.multipliers[:, idx], SolverConfig())
    np.testing.assert_allclose(res.eigenvalues, good.eigenvalues[[0, 2]])
    assert [r for _, r in res.rejected] == ["duplicate"]
    flags = res.filter_flags
    assert [f for _, f in flags] == ["accepted", "accepted", "duplicate"]


def test_filter_normalizes(sys8):
    good = solve(sys8, SolverConfig(num_eigs=1))
    res = filter_pairs(sys8, good.eigenvalues, 7.0 * good.eigenvectors, 7.0 * good.multipliers,
                       SolverConfig())
    u = res.eigenvectors[:, 0]
    assert u @ (sys8.B @ u) == pytest.approx(1.0, rel=1e-12)


def test_shift_retry_warns(monkeypatch, sys8):
    real = spla.splu
    calls = []

    def flaky(F, *a, **kw):
        calls.append(1)
        if len(calls) == 1:
            raise RuntimeError("Factor is exactly singular")
        return real(F, *a, **kw)

    monkeypatch.setattr(es.spla, "splu", flaky)
    with pytest.warns(RuntimeWarning, match="retrying"):
        res = solve_iterative(sys8, SolverConfig(num_eigs=3, shift=0.3))
    assert res.shift == pytest.approx(0.31)
    assert len(res) == 3


def test_shift_retry_exhausted(monkeypatch, sys8):
    def broken(F, *a, **kw):
        raise RuntimeError("Factor is exactly singular")

    monkeypatch.setattr(es.spla, "splu", broken)
    with pytest.warns(RuntimeWarning), pytest.raises(SolverError):
        solve_iterative(sys8, SolverConfig(num_eigs=3, shift_retries=2))


def test_iterative_seed_determinism(sys8):
    a = solve_iterative(sys8, SolverConfig(seed=3))
    b = solve_iterative(sys8, SolverConfig(seed=3))
    np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(num_eigs=0)
    with pytest.raises(ValueError):
        SolverConfig(method="lobpcg")
    assert SolverConfig(num_eigs=20).subspace == 80


def test_vnorm_zero_and_shape(sys8):
    assert vnorm(sys8, np.zeros(sys8.n_u)) == 0.0
    with pytest.raises(ValueError):
        vnorm(sys8, np.zeros(3))


@pytest.mark.parametrize("n", [2, 5])
def test_vnorm_constant_field(n):
    # curl vanishes and interior jumps vanish; only boundary edges (where the
    # tangential trace is eliminated) contribute h_T^-1 |e| (c.t)^2 each
    s = system(n)
    c = np.array([0.7, -0.4])
    u = interpolate(s, lambda x, y: (np.full_like(x, c[0]), np.full_like(x, c[1])))
    h_t = math.pi * math.sqrt(2) / n
    L = math.pi / n
    expected = 2 * n * (L / h_t) * (c @ c)
    assert vnorm(s, u) ** 2 == pytest.approx(expected, rel=1e-12)


def test_vnorm_of_interpolant_approaches_curl_norm():
    # ||curl u||_L2 = ||2 cos x cos y|| = pi on (0, pi)^2
    errs = []
    for n in (8, 16, 32):
        s = system(n)
        errs.append(abs(vnorm(s, interpolate(s, te_field)) - math.pi))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.02 * math.pi


@pytest.mark.slow
def test_multiplicity_clusters_fine_mesh():
    s = system(64)
    res = solve_iterative(s, SolverConfig(num_eigs=5))
    lam = res.eigenvalues
    assert lam[1] - lam[0] <= 1e-8 * lam[0]
    assert lam[4] - lam[3] <= 1e-8 * lam[3]
    assert lam[2] - lam[1] > 0.5
    U = res.eigenvectors
    np.testing.assert_allclose(U.T @ (s.B @ U), np.eye(5), atol=1e-8)
