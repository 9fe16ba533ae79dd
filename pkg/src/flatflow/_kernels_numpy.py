"""Pure-numpy implementations of the hot per-step kernels."""
from __future__ import annotations

import numpy as np


def _f(s, m):
    return m * s * s / (m * s * s + (1.0 - s) ** 2)


def reconstruct_uw(s, kappa, m, dx, dz):
    """Nonlocal edge velocities from the saturation field.

    u at an interior x-edge is the mean of the two adjacent cells' mobility*kappa
    normalized by their own column integrals; boundary x-edges are one-sided.
    w telescopes the horizontal divergence up from the impermeable bottom;
    both wall rows are pinned to zero.
    """
    nz, nx = s.shape
    lam = (m * s * s + (1.0 - s) ** 2) * kappa
    den = dz * lam.sum(axis=0)
    a = lam / den[None, :]
    u = np.empty((nz, nx + 1))
    u[:, 1:-1] = 0.5 * (a[:, :-1] + a[:, 1:])
    u[:, 0] = a[:, 0]
    u[:, -1] = a[:, -1]
    w = np.zeros((nz + 1, nx))
    if nz > 1:
        w[1:, :] = -(dz / dx) * np.cumsum(u[:, 1:] - u[:, :-1], axis=0)
        w[nz, :] = 0.0
    return u, w, den


def upwind_rhs(u, w, s, s_in, m, dx, dz):
    """Negative divergence of the upwind advective flux, plus boundary totals.

    Returns (rhs, influx, outflux); influx/outflux are the instantaneous
    volumetric rates of the transported quantity through x=0 and x=1.
    """
    nz, nx = s.shape
    f = _f(s, m)
    f_in = _f(s_in, m)
    fpad_left = np.concatenate([f_in[:, None], f], axis=1)
    fpad_right = np.concatenate([f, f[:, -1:]], axis=1)
    flux_x = np.maximum(u, 0.0) * fpad_left + np.minimum(u, 0.0) * fpad_right
    rhs = -(flux_x[:, 1:] - flux_x[:, :-1]) / dx
    if nz > 1:
        wi = w[1:-1, :]
        flux_z = np.maximum(wi, 0.0) * f[:-1, :] + np.minimum(wi, 0.0) * f[1:, :]
        rhs[:-1, :] -= flux_z / dz
        rhs[1:, :] += flux_z / dz
    influx = dz * float(flux_x[:, 0].sum())
    outflux = dz * float(flux_x[:, -1].sum())
    return rhs, influx, outflux


def diffusion_rhs_add(rhs, s, hx, hz, eps_x, eps_z, dx, dz):
    """Add the divergence of the edge-diffusive flux; zero flux through all boundaries.

    hx: H at interior x-edges, (nz, nx-1); hz: H at interior z-edges, (nz-1, nx).
    """
    if eps_x > 0.0 and s.shape[1] > 1:
        gx = eps_x * hx * (s[:, 1:] - s[:, :-1]) / dx
        rhs[:, :-1] += gx / dx
        rhs[:, 1:] -= gx / dx
    if eps_z > 0.0 and s.shape[0] > 1:
        gz = eps_z * hz * (s[1:, :] - s[:-1, :]) / dz
        rhs[:-1, :] += gz / dz
        rhs[1:, :] -= gz / dz
    return rhs


def helmholtz_matvec(cx, cz, x, out):
    """(I - cx Dxx - cz Dzz) x in difference form: constants pass through bitwise.

    Mirror closure in x, periodic closure in z.
    """
    nz, nx = x.shape
    np.copyto(out, x)
    if cx != 0.0 and nx > 1:
        d = cx * (x[:, :-1] - x[:, 1:])
        out[:, :-1] += d
        out[:, 1:] -= d
    if cz != 0.0 and nz > 1:
        d = cz * (x[:-1, :] - x[1:, :])
        out[:-1, :] += d
        out[1:, :] -= d
        d = cz * (x[-1, :] - x[0, :])
        out[-1, :] += d
        out[0, :] -= d
    return out


def spd5_matvec(diag, east, north, zwrap, x, out):
    """y = A x for the symmetric 5-band operator (one triangle stored)."""
    np.multiply(diag, x, out=out)
    if east.size:
        out[:, :-1] += east * x[:, 1:]
        out[:, 1:] += east * x[:, :-1]
    if north.size:
        out[:-1, :] += north * x[1:, :]
        out[1:, :] += north * x[:-1, :]
    if zwrap is not None and zwrap.size:
        out[-1, :] += zwrap * x[0, :]
        out[0, :] += zwrap * x[-1, :]
    return out


def thomas_columns(sub, diag, sup, rhs, out):
    """Independent tridiagonal solves down every column of an (nz, nx) lattice.

    sub/sup hold the couplings between layer j and j+1 (rows 0..nz-2);
    the recurrence runs over z, vectorized across columns.
    """
    nz, nx = diag.shape
    c = np.empty((nz, nx))
    d = np.empty((nz, nx))
    c[0] = (sup[0] / diag[0]) if nz > 1 else 0.0
    d[0] = rhs[0] / diag[0]
    for j in range(1, nz):
        piv = diag[j] - sub[j - 1] * c[j - 1]
        c[j] = sup[j] / piv if j < nz - 1 else 0.0
        d[j] = (rhs[j] - sub[j - 1] * d[j - 1]) / piv
    out[nz - 1] = d[nz - 1]
    for j in range(nz - 2, -1, -1):
        out[j] = d[j] - c[j] * out[j + 1]
    return out


def thomas(lower, diag, upper, rhs):
    """Tridiagonal direct solve; raises on vanishing pivot."""
    n = diag.size
    c = np.empty(n)
    d = np.empty(n)
    piv = diag[0]
    if abs(piv) < 1e-300:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    c[0] = upper[0] / piv if n > 1 else 0.0
    d[0] = rhs[0] / piv
    for k in range(1, n):
        piv = diag[k] - lower[k - 1] * c[k - 1]
        if abs(piv) < 1e-300:
            raise ZeroDivisionError("zero pivot in tridiagonal solve")
        c[k] = upper[k] / piv if k < n - 1 else 0.0
        d[k] = (rhs[k] - lower[k - 1] * d[k - 1]) / piv
    x = np.empty(n)
    x[-1] = d[-1]
    for k in range(n - 2, -1, -1):
        x[k] = d[k] - c[k] * x[k + 1]
    return x
