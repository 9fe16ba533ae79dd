"""Numba-compiled counterparts of the hot kernels (loop form, fastmath off)."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True, inline="always")
def _f(s, m):
    return m * s * s / (m * s * s + (1.0 - s) * (1.0 - s))


@njit(cache=True, nogil=True)
def reconstruct_uw(s, kappa, m, dx, dz):
    """Nonlocal edge velocities; mobility*kappa is formed inline (one pass)."""
    nz, nx = s.shape
    lam = np.empty((nz, nx))
    den = np.empty(nx)
    for i in range(nx):
        acc = 0.0
        for j in range(nz):
            sv = s[j, i]
            lv = (m * sv * sv + (1.0 - sv) * (1.0 - sv)) * kappa[j, i]
            lam[j, i] = lv
            acc += lv
        den[i] = dz * acc
    u = np.empty((nz, nx + 1))
    for j in range(nz):
        u[j, 0] = lam[j, 0] / den[0]
        u[j, nx] = lam[j, nx - 1] / den[nx - 1]
        for i in range(1, nx):
            u[j, i] = 0.5 * (lam[j, i - 1] / den[i - 1] + lam[j, i] / den[i])
    w = np.zeros((nz + 1, nx))
    if nz > 1:
        r = dz / dx
        for i in range(nx):
            acc = 0.0
            for j in range(nz - 1):
                acc -= r * (u[j, i + 1] - u[j, i])
                w[j + 1, i] = acc
    return u, w, den


@njit(cache=True, nogil=True)
def upwind_rhs(u, w, s, s_in, m, dx, dz):
    """Advective -div plus boundary totals; fractional flow formed inline."""
    nz, nx = s.shape
    f = np.empty((nz, nx))
    for j in range(nz):
        for i in range(nx):
            f[j, i] = _f(s[j, i], m)
    rhs = np.zeros((nz, nx))
    influx = 0.0
    outflux = 0.0
    for j in range(nz):
        fin = _f(s_in[j], m)
        prev = u[j, 0] * fin if u[j, 0] >= 0.0 else u[j, 0] * f[j, 0]
        influx += prev
        for i in range(nx):
            if i < nx - 1:
                ue = u[j, i + 1]
                cur = ue * f[j, i] if ue >= 0.0 else ue * f[j, i + 1]
            else:
                cur = u[j, nx] * f[j, nx - 1]
                outflux += cur
            rhs[j, i] = -(cur - prev) / dx
            prev = cur
    if nz > 1:
        for j in range(nz - 1):
            for i in range(nx):
                we = w[j + 1, i]
                fz = we * f[j, i] if we >= 0.0 else we * f[j + 1, i]
                rhs[j, i] -= fz / dz
                rhs[j + 1, i] += fz / dz
    return rhs, influx * dz, outflux * dz


@njit(cache=True, nogil=True)
def diffusion_rhs_add(rhs, s, hx, hz, eps_x, eps_z, dx, dz):
    nz, nx = s.shape
    if eps_x > 0.0 and nx > 1:
        for j in range(nz):
            for i in range(nx - 1):
                g = eps_x * hx[j, i] * (s[j, i + 1] - s[j, i]) / dx
                rhs[j, i] += g / dx
                rhs[j, i + 1] -= g / dx
    if eps_z > 0.0 and nz > 1:
        for j in range(nz - 1):
            for i in range(nx):
                g = eps_z * hz[j, i] * (s[j + 1, i] - s[j, i]) / dz
                rhs[j, i] += g / dz
                rhs[j + 1, i] -= g / dz
    return rhs


@njit(cache=True, nogil=True)
def helmholtz_matvec(cx, cz, x, out):
    nz, nx = x.shape
    for j in range(nz):
        for i in range(nx):
            out[j, i] = x[j, i]
    if cx != 0.0 and nx > 1:
        for j in range(nz):
            for i in range(nx - 1):
                d = cx * (x[j, i] - x[j, i + 1])
                out[j, i] += d
                out[j, i + 1] -= d
    if cz != 0.0 and nz > 1:
        for j in range(nz - 1):
            for i in range(nx):
                d = cz * (x[j, i] - x[j + 1, i])
                out[j, i] += d
                out[j + 1, i] -= d
        for i in range(nx):
            d = cz * (x[nz - 1, i] - x[0, i])
            out[nz - 1, i] += d
            out[0, i] -= d
    return out


@njit(cache=True, nogil=True)
def spd5_matvec(diag, east, north, zwrap, x, out):
    nz, nx = x.shape
    for j in range(nz):
        for i in range(nx):
            acc = diag[j, i] * x[j, i]
            if i < nx - 1:
                acc += east[j, i] * x[j, i + 1]
            if i > 0:
                acc += east[j, i - 1] * x[j, i - 1]
            if j < nz - 1:
                acc += north[j, i] * x[j + 1, i]
            if j > 0:
                acc += north[j - 1, i] * x[j - 1, i]
            out[j, i] = acc
    if zwrap.size:
        for i in range(nx):
            out[nz - 1, i] += zwrap[i] * x[0, i]
            out[0, i] += zwrap[i] * x[nz - 1, i]
    return out


@njit(cache=True, nogil=True)
def thomas_columns(sub, diag, sup, rhs, out):
    nz, nx = diag.shape
    c = np.empty((nz, nx))
    d = np.empty((nz, nx))
    for i in range(nx):
        c[0, i] = sup[0, i] / diag[0, i] if nz > 1 else 0.0
        d[0, i] = rhs[0, i] / diag[0, i]
    for j in range(1, nz):
        for i in range(nx):
            piv = diag[j, i] - sub[j - 1, i] * c[j - 1, i]
            c[j, i] = sup[j, i] / piv if j < nz - 1 else 0.0
            d[j, i] = (rhs[j, i] - sub[j - 1, i] * d[j - 1, i]) / piv
    for i in range(nx):
        out[nz - 1, i] = d[nz - 1, i]
    for j in range(nz - 2, -1, -1):
        for i in range(nx):
            out[j, i] = d[j, i] - c[j, i] * out[j + 1, i]
    return out


@njit(cache=True, nogil=True)
def thomas(lower, diag, upper, rhs):
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
