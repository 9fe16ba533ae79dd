"""Structured SPD operators, preconditioned conjugate gradients, tridiagonal solve."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend


class LinearSolveError(RuntimeError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


@dataclass
class BandedSpd:
    """Symmetric 5-point operator on an (nz, nx) lattice; one triangle stored.

    east[j, i] couples (j, i)-(j, i+1); north[j, i] couples (j, i)-(j+1, i);
    zwrap[i], when present, couples the top row to the bottom row (periodic z).
    """

    nx: int
    nz: int
    diag: np.ndarray                      # (nz, nx)
    east: np.ndarray                      # (nz, nx-1)
    north: np.ndarray                     # (nz-1, nx)
    zwrap: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n(self) -> int:
        return self.nx * self.nz

    def matvec(self, x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        x2 = x.reshape(self.nz, self.nx)
        if out is None:
            out = np.empty_like(x2)
        backend.kernels().spd5_matvec(self.diag, self.east, self.north, self.zwrap, x2, out)
        return out

    def diagonal(self) -> np.ndarray:
        return self.diag.reshape(-1)

    def to_dense(self) -> np.ndarray:
        nx, nz = self.nx, self.nz
        a = np.zeros((self.n, self.n))
        ix = lambda j, i: j * nx + i
        for j in range(nz):
            for i in range(nx):
                a[ix(j, i), ix(j, i)] = self.diag[j, i]
                if i < nx - 1:
                    a[ix(j, i), ix(j, i + 1)] += self.east[j, i]
                    a[ix(j, i + 1), ix(j, i)] += self.east[j, i]
                if j < nz - 1:
                    a[ix(j, i), ix(j + 1, i)] += self.north[j, i]
                    a[ix(j + 1, i), ix(j, i)] += self.north[j, i]
        if self.zwrap.size:
            for i in range(nx):
                a[ix(nz - 1, i), ix(0, i)] += self.zwrap[i]
                a[ix(0, i), ix(nz - 1, i)] += self.zwrap[i]
        return a


def cg_solve(a, b: np.ndarray, x0: np.ndarray | None = None,
             rel_tol: float = 1e-10, max_iter: int = 100000,
             precond=None, on_iterate=None) -> tuple[np.ndarray, int]:
    """Preconditioned CG; stops when ||b - A x|| <= rel_tol * ||b||.

    `a` needs .matvec(x) and .diagonal(). The default preconditioner is
    Jacobi; `precond(r) -> z` overrides it. Returns (x, iterations).
    `on_iterate(k, x)` is called after each update when given.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    n = b.size
    if precond is None:
        inv_diag = 1.0 / a.diagonal()
        precond = lambda r: inv_diag * r
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64).reshape(-1).copy()
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros(n), 0
    target = rel_tol * b_norm
    r = b - a.matvec(x).reshape(-1)
    if float(np.linalg.norm(r)) <= target:
        return x, 0
    z = precond(r)
    p = z.copy()
    rz = float(r @ z)
    for k in range(1, max_iter + 1):
        ap = a.matvec(p).reshape(-1)
        alpha = rz / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        if on_iterate is not None:
            on_iterate(k, x.copy())
        res = float(np.linalg.norm(r))
        if res <= target:
            return x, k
        z = precond(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise LinearSolveError(
        f"CG did not reach {rel_tol:g} relative residual in {max_iter} iterations "
        f"(residual {res / b_norm:.3e} relative)", residual=res)


def tridiag_solve(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray,
                  rhs: np.ndarray) -> np.ndarray:
    """Thomas-algorithm solve of a tridiagonal system.

    lower/upper have length n-1 (sub/super diagonals), diag and rhs length n.
    """
    diag = np.asarray(diag, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    n = diag.size
    lower = np.asarray(lower, dtype=np.float64).reshape(-1)
    upper = np.asarray(upper, dtype=np.float64).reshape(-1)
    if lower.size != max(n - 1, 0) or upper.size != max(n - 1, 0) or rhs.size != n:
        raise ValueError("inconsistent tridiagonal sizes")
    if n == 0:
        return np.zeros(0)
    # kernels expect padded upper of length n for uniform indexing
    up = np.zeros(n)
    up[: n - 1] = upper
    try:
        return backend.kernels().thomas(lower, diag, up, rhs)
    except ZeroDivisionError as exc:
        raise LinearSolveError(str(exc)) from exc
