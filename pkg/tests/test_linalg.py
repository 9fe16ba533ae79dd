import numpy as np
import pytest

from flatflow.linalg import BandedSpd, LinearSolveError, cg_solve, tridiag_solve


def random_banded_spd(nx, nz, rng, periodic=False):
    east = rng.uniform(0.1, 1.0, size=(nz, max(nx - 1, 0)))
    north = rng.uniform(0.1, 1.0, size=(max(nz - 1, 0), nx))
    zwrap = rng.uniform(0.1, 1.0, size=nx) if periodic and nz > 1 else np.zeros(0)
    diag = np.full((nz, nx), 0.5)
    diag[:, :-1] += east
    diag[:, 1:] += east
    diag[:-1, :] += north
    diag[1:, :] += north
    if zwrap.size:
        diag[0, :] += zwrap
        diag[-1, :] += zwrap
    return BandedSpd(nx=nx, nz=nz, diag=diag, east=-east, north=-north,
                     zwrap=-zwrap if zwrap.size else np.zeros(0))


class DenseOperator:
    def __init__(self, a):
        self.a = a

    def matvec(self, x, out=None):
        return self.a @ x.reshape(-1)

    def diagonal(self):
        return np.diag(self.a)


def test_cg_identity_one_iteration(each_backend):
    a = BandedSpd(nx=3, nz=2, diag=np.ones((2, 3)),
                  east=np.zeros((2, 2)), north=np.zeros((1, 3)))
    b = np.arange(6, dtype=float) + 1
    x, iters = cg_solve(a, b, rel_tol=1e-12)
    np.testing.assert_allclose(x, b, rtol=1e-12)
    assert iters <= 1


def test_cg_diagonal():
    d = np.array([[2.0, 4.0], [5.0, 10.0]])
    a = BandedSpd(nx=2, nz=2, diag=d, east=np.zeros((2, 1)), north=np.zeros((1, 2)))
    b = np.array([2.0, 8.0, 5.0, 1.0])
    x, _ = cg_solve(a, b, rel_tol=1e-14)
    np.testing.assert_allclose(x, b / d.reshape(-1), rtol=1e-12)


def test_cg_matches_dense_oracle(each_backend):
    rng = np.random.default_rng(7)
    a = random_banded_spd(5, 4, rng, periodic=True)
    b = rng.normal(size=20)
    x, _ = cg_solve(a, b, rel_tol=1e-14)
    expected = np.linalg.solve(a.to_dense(), b)
    np.testing.assert_allclose(x, expected, atol=1e-8)


def test_cg_generic_operator_btb():
    rng = np.random.default_rng(3)
    bmat = rng.normal(size=(20, 20))
    a = DenseOperator(bmat.T @ bmat + np.eye(20))
    b = rng.normal(size=20)
    x, _ = cg_solve(a, b, rel_tol=1e-13)
    np.testing.assert_allclose(x, np.linalg.solve(a.a, b), atol=1e-8)


def test_cg_error_monotone_in_A_norm():
    rng = np.random.default_rng(11)
    a = random_banded_spd(4, 3, rng)
    dense = a.to_dense()
    b = rng.normal(size=12)
    x_exact = np.linalg.solve(dense, b)
    errors = []

    def record(_k, x):
        e = x - x_exact
        errors.append(float(e @ (dense @ e)))

    cg_solve(a, b, rel_tol=1e-12, on_iterate=record)
    assert len(errors) >= 3
    assert all(later <= earlier * (1 + 1e-12)
               for earlier, later in zip(errors, errors[1:]))


def test_cg_max_iter_error():
    rng = np.random.default_rng(5)
    a = random_banded_spd(10, 10, rng)
    b = rng.normal(size=100)
    with pytest.raises(LinearSolveError) as err:
        cg_solve(a, b, rel_tol=1e-14, max_iter=2)
    assert err.value.residual is not None


def test_banded_symmetry_exact():
    rng = np.random.default_rng(13)
    a = random_banded_spd(6, 5, rng, periodic=True).to_dense()
    assert np.array_equal(a, a.T)


def test_tridiag_identity():
    rhs = np.array([3.0, -1.0, 2.0])
    x = tridiag_solve(np.zeros(2), np.ones(3), np.zeros(2), rhs)
    np.testing.assert_array_equal(x, rhs)


def test_tridiag_hand_case():
    # [[2,1],[1,3]] x = [3,5]  ->  x = (4/5, 7/5)
    x = tridiag_solve(np.array([1.0]), np.array([2.0, 3.0]), np.array([1.0]),
                      np.array([3.0, 5.0]))
    np.testing.assert_allclose(x, [0.8, 1.4], rtol=1e-14)


def test_tridiag_laplacian_linear_solution(each_backend):
    # -u'' = 0 with u(0)=1, u(1)=0 via standard second differences: linear profile
    n = 17
    lower = -np.ones(n - 1)
    upper = -np.ones(n - 1)
    diag = 2.0 * np.ones(n)
    rhs = np.zeros(n)
    rhs[0] = 1.0
    x = tridiag_solve(lower, diag, upper, rhs)
    expected = 1.0 - (np.arange(n) + 1) / (n + 1)
    np.testing.assert_allclose(x, expected, atol=1e-12)


def test_tridiag_forward_multiply_reproduces_rhs():
    rng = np.random.default_rng(2)
    n = 40
    lower = rng.uniform(-1, 0, n - 1)
    upper = rng.uniform(-1, 0, n - 1)
    diag = 3 + rng.uniform(0, 1, n)
    rhs = rng.normal(size=n)
    x = tridiag_solve(lower, diag, upper, rhs)
    recon = diag * x
    recon[1:] += lower * x[:-1]
    recon[:-1] += upper * x[1:]
    np.testing.assert_allclose(recon, rhs, atol=1e-13)


def test_tridiag_zero_pivot():
    with pytest.raises(LinearSolveError):
        tridiag_solve(np.array([1.0]), np.array([0.0, 1.0]), np.array([1.0]),
                      np.array([1.0, 1.0]))
