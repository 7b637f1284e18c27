import numpy as np
import pytest

from picard_bsde.basis import SparseBasis
from picard_bsde.errors import DataError, DegenerateFitError, ParameterError
from picard_bsde.regression import fit, residual, solve_least_squares


def random_points(box, n, rng):
    t = box.maturity * rng.random(n)
    x = box.lower + (box.upper - box.lower) * rng.random((n, box.lower.size))
    return t, x


def test_exact_recovery(basis2, box2):
    rng = np.random.default_rng(1)
    alpha = rng.standard_normal(basis2.p)
    t, x = random_points(box2, 60, rng)
    y = basis2.value(alpha, t, x)
    got = fit(basis2, t, x, y)
    np.testing.assert_allclose(got, alpha, rtol=1e-8, atol=1e-8)
    assert residual(basis2, got, t, x, y) <= 1e-16 * (y @ y)


def test_constant_samples(basis2, box2):
    t, x = random_points(box2, 40, np.random.default_rng(2))
    got = fit(basis2, t, x, np.full(40, 3.25))
    assert got[0] == pytest.approx(3.25, abs=1e-10)
    np.testing.assert_allclose(got[1:], 0.0, atol=1e-9)


def test_duplicated_column_matches_pseudo_inverse():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((10, 4))
    A[:, 3] = A[:, 1]
    y = rng.standard_normal(10)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > 1e-10 * s[0]
    oracle = Vt[keep].T @ ((U[:, keep].T @ y) / s[keep])
    got = solve_least_squares(A, y)
    np.testing.assert_allclose(got, oracle, atol=1e-8)
    assert got[1] == pytest.approx(got[3], abs=1e-8)


def test_residual_is_local_minimum():
    rng = np.random.default_rng(4)
    for _ in range(20):
        n, p = rng.integers(8, 30), rng.integers(2, 8)
        A = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        a = solve_least_squares(A, y)
        base = np.sum((y - A @ a) ** 2)
        for j in range(p):
            for eps in (1e-4, -1e-4):
                b = a.copy()
                b[j] += eps
                assert np.sum((y - A @ b) ** 2) >= base


def test_deterministic():
    rng = np.random.default_rng(5)
    A, y = rng.standard_normal((50, 6)), rng.standard_normal(50)
    assert np.array_equal(solve_least_squares(A, y), solve_least_squares(A.copy(), y.copy()))


def test_errors():
    with pytest.raises(DegenerateFitError):
        solve_least_squares(np.zeros((5, 2)), np.ones(5))
    with pytest.raises(DataError):
        solve_least_squares(np.ones((3, 1)), np.array([1.0, np.nan, 2.0]))
    with pytest.raises(ParameterError):
        solve_least_squares(np.ones((3, 2)), np.ones(4))
    with pytest.raises(ParameterError):
        solve_least_squares(np.ones((3, 2)), np.ones(3), ridge=-1.0)


def test_ridge_shrinks():
    rng = np.random.default_rng(6)
    A, y = rng.standard_normal((30, 5)), rng.standard_normal(30)
    a0 = solve_least_squares(A, y)
    a1 = solve_least_squares(A, y, ridge=10.0)
    oracle = np.linalg.solve(A.T @ A + 10.0 * np.eye(5), A.T @ y)
    np.testing.assert_allclose(a1, oracle, rtol=1e-10)
    assert np.linalg.norm(a1) < np.linalg.norm(a0)
