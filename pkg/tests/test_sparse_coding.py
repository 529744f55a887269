"""Tests for the LASSO solver and the online dictionary learner."""

import itertools

import numpy as np
import pytest

from arrayext.sparse_coding import (
    Dictionary,
    OdlLog,
    lasso,
    odl_train,
    reconstruction_error,
)


def lasso_objective(d, y, w, lam):
    r = y - d @ w
    return float(np.sum(r * r) + lam * np.sum(np.abs(w)))


def kkt_residual(d, y, w, lam):
    """Largest violation of the stationarity conditions of
    min ||y - D w||^2 + lam ||w||_1 (zero at the exact optimum)."""
    c = d.T @ (y - d @ w)
    worst = 0.0
    for j in range(w.size):
        if w[j] != 0.0:
            worst = max(worst, abs(2.0 * c[j] - lam * np.sign(w[j])))
        else:
            worst = max(worst, max(0.0, 2.0 * abs(c[j]) - lam))
    return worst


def brute_force_lasso(d, y, lam):
    """Global minimizer by enumerating all sign patterns (small problems).

    For a fixed sign pattern s the optimum solves the stationarity system
    2 D_S^T D_S w_S = 2 D_S^T y - lam * s_S; candidates whose solution
    matches the assumed signs are scored by the true objective.
    """
    n = d.shape[1]
    best_w = np.zeros(n)
    best_obj = lasso_objective(d, y, best_w, lam)
    for signs in itertools.product((-1.0, 0.0, 1.0), repeat=n):
        s = np.array(signs)
        sup = np.flatnonzero(s)
        if sup.size == 0:
            continue
        ds = d[:, sup]
        try:
            w_s = np.linalg.solve(
                2.0 * ds.T @ ds, 2.0 * ds.T @ y - lam * s[sup]
            )
        except np.linalg.LinAlgError:
            continue
        if np.any(np.sign(w_s) != s[sup]):
            continue
        w = np.zeros(n)
        w[sup] = w_s
        obj = lasso_objective(d, y, w, lam)
        if obj < best_obj:
            best_obj, best_w = obj, w
    return best_w, best_obj


def random_dictionary(n_features, n_atoms, seed):
    rng = np.random.default_rng(seed)
    atoms = rng.standard_normal((n_features, n_atoms))
    return Dictionary(atoms=atoms / np.linalg.norm(atoms, axis=0))


def test_single_atom_soft_threshold():
    # One unit-norm atom: the solution is the soft threshold of d^T y at lam/2.
    rng = np.random.default_rng(0)
    d = rng.standard_normal(6)
    d /= np.linalg.norm(d)
    y = rng.standard_normal(6)
    lam = 0.3
    rho = float(d @ y)
    expected = np.sign(rho) * max(abs(rho) - lam / 2.0, 0.0)
    w = lasso(Dictionary(atoms=d[:, None]), y[:, None], lam).codes
    assert np.isclose(w[0, 0], expected, atol=1e-10)


def test_lasso_matches_brute_force_oracle():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        d = random_dictionary(5, 3, seed)
        y = rng.standard_normal((5, 1))
        lam = float(rng.uniform(0.05, 0.8))
        w = lasso(d, y, lam, tol=1e-12, max_iter=2000).codes[:, 0]
        w_ref, obj_ref = brute_force_lasso(d.atoms, y[:, 0], lam)
        obj = lasso_objective(d.atoms, y[:, 0], w, lam)
        assert obj <= obj_ref + 1e-9
        assert np.allclose(w, w_ref, atol=1e-6)


def test_lasso_kkt_residuals_random_instances():
    worst = 0.0
    for seed in range(30):
        rng = np.random.default_rng(100 + seed)
        d = random_dictionary(12, 20, 100 + seed)
        y = rng.standard_normal((12, 4))
        lam = 0.1
        # Boundary-degenerate instances need many sweeps, but each is cheap.
        w = lasso(d, y, lam, tol=1e-12, max_iter=50000).codes
        for c in range(y.shape[1]):
            worst = max(worst, kkt_residual(d.atoms, y[:, c], w[:, c], lam))
    assert worst <= 1e-6


def test_lasso_zero_solution_for_large_penalty():
    d = random_dictionary(8, 5, 1)
    y = np.random.default_rng(1).standard_normal((8, 3))
    # lam above 2*max|d^T y| forces the all-zero solution.
    lam = 2.0 * float(np.abs(d.atoms.T @ y).max()) + 1.0
    w = lasso(d, y, lam)
    assert np.all(w.codes == 0)
    assert w.converged


def test_lasso_objective_history_monotone():
    rng = np.random.default_rng(2)
    d = random_dictionary(10, 15, 2)
    y = rng.standard_normal((10, 6))
    result = lasso(d, y, 0.05, record_objective=True)
    hist = result.objective_history
    assert hist is not None and hist.size >= 1
    assert np.all(np.diff(hist) <= 1e-12)


def test_lasso_matches_recorded_path():
    # Fast and objective-recording paths must agree on the solution.
    rng = np.random.default_rng(3)
    d = random_dictionary(10, 8, 3)
    y = rng.standard_normal((10, 5))
    w_fast = lasso(d, y, 0.1, tol=1e-12, max_iter=2000).codes
    w_slow = lasso(d, y, 0.1, tol=1e-12, max_iter=2000, record_objective=True).codes
    assert np.allclose(w_fast, w_slow, atol=1e-8)


def test_lasso_input_validation():
    d = random_dictionary(4, 3, 0)
    with pytest.raises(ValueError):
        lasso(d, np.ones((5, 2)), 0.1)
    with pytest.raises(ValueError):
        lasso(d, np.ones((4, 2)), -0.1)


def test_lasso_unconverged_flag():
    d = random_dictionary(20, 40, 4)
    y = np.random.default_rng(4).standard_normal((20, 2))
    result = lasso(d, y, 0.001, tol=1e-14, max_iter=1)
    assert not result.converged


def test_reconstruction_error_definition():
    d = random_dictionary(4, 4, 5)
    y = np.random.default_rng(5).standard_normal((4, 3))
    codes = lasso(d, y, 0.1)
    resid = y - d.atoms @ codes.codes
    assert np.isclose(reconstruction_error(d, codes, y), np.sum(resid * resid))


def test_odl_atoms_unit_norm():
    rng = np.random.default_rng(6)
    samples = rng.standard_normal((10, 400))
    d = odl_train(samples, l=16, lam=0.1, n_iters=10, batch_size=64, rng_seed=6)
    assert d.atoms.shape == (10, 16)
    assert np.allclose(d.column_norms(), 1.0, atol=1e-10)


def test_odl_deterministic():
    rng = np.random.default_rng(7)
    samples = rng.standard_normal((8, 300))
    d1 = odl_train(samples, 12, 0.1, 5, batch_size=32, rng_seed=7)
    d2 = odl_train(samples, 12, 0.1, 5, batch_size=32, rng_seed=7)
    assert np.array_equal(d1.atoms, d2.atoms)
    d3 = odl_train(samples, 12, 0.1, 5, batch_size=32, rng_seed=8)
    assert not np.array_equal(d1.atoms, d3.atoms)


def test_odl_zero_iters_returns_normalized_samples():
    rng = np.random.default_rng(8)
    samples = rng.standard_normal((6, 50))
    d = odl_train(samples, 10, 0.1, n_iters=0, rng_seed=8)
    assert np.allclose(d.column_norms(), 1.0)
    # Every atom is a normalized sample column.
    normalized = samples / np.linalg.norm(samples, axis=0)
    for j in range(10):
        diffs = np.linalg.norm(normalized - d.atoms[:, [j]], axis=0)
        assert diffs.min() < 1e-12


def test_odl_dictionary_update_monotone():
    # Each constrained block update may not increase the accumulated surrogate.
    rng = np.random.default_rng(9)
    samples = rng.standard_normal((10, 500))
    log = OdlLog()
    odl_train(samples, 20, 0.1, 15, batch_size=64, rng_seed=9, log=log)
    assert len(log.update_monotone) == 15
    for before, after in log.update_monotone:
        assert after <= before + 1e-9


def test_odl_improves_coding_objective():
    # Sparse synthetic data: training must code better than the raw init.
    rng = np.random.default_rng(10)
    true_d = rng.standard_normal((12, 24))
    true_d /= np.linalg.norm(true_d, axis=0)
    w = rng.standard_normal((24, 800)) * (rng.random((24, 800)) < 0.1)
    samples = true_d @ w
    lam = 0.05
    d0 = odl_train(samples, 24, lam, n_iters=0, rng_seed=10)
    d1 = odl_train(samples, 24, lam, n_iters=30, batch_size=128, rng_seed=10)

    def coding_cost(d):
        codes = lasso(d, samples, lam)
        return reconstruction_error(d, codes, samples) + lam * np.sum(np.abs(codes.codes))

    assert coding_cost(d1) < coding_cost(d0)


def test_odl_input_validation():
    with pytest.raises(ValueError):
        odl_train(np.zeros((4, 10)), 4, 0.1, 1)
    with pytest.raises(ValueError):
        odl_train(np.ones((4, 10)), 0, 0.1, 1)
