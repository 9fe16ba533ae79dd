"""Independent brute-force references used to pin expected values.

Everything here is written as plain loops straight from the discrete
definitions, kept free of the package's vectorized code paths.
"""
import numpy as np


def frac_flow(s, m):
    return m * s * s / (m * s * s + (1.0 - s) ** 2)


def tot_mob(s, m):
    return m * s * s + (1.0 - s) ** 2


def diffusion(s, kap, m):
    return kap * m * s * s * (1.0 - s) ** 2 / (m * s * s + (1.0 - s) ** 2)


def dense_velocity(S, kappa, m, dx, dz):
    """Edge velocities by direct evaluation of the nonlocal formulas."""
    nz, nx = S.shape
    den = np.zeros(nx)
    for i in range(nx):
        for jj in range(nz):
            den[i] += dz * tot_mob(S[jj, i], m) * kappa[jj, i]
    u = np.zeros((nz, nx + 1))
    for j in range(nz):
        for e in range(nx + 1):
            if e == 0:
                u[j, e] = tot_mob(S[j, 0], m) * kappa[j, 0] / den[0]
            elif e == nx:
                u[j, e] = tot_mob(S[j, nx - 1], m) * kappa[j, nx - 1] / den[nx - 1]
            else:
                left = tot_mob(S[j, e - 1], m) * kappa[j, e - 1] / den[e - 1]
                right = tot_mob(S[j, e], m) * kappa[j, e] / den[e]
                u[j, e] = 0.5 * (left + right)
    w = np.zeros((nz + 1, nx))
    for i in range(nx):
        for j in range(1, nz):
            acc = 0.0
            for mm in range(j):
                acc += u[mm, i + 1] - u[mm, i]
            w[j, i] = -(dz / dx) * acc
    return u, w


def dense_ve_step(S, kappa, m, s_in, dt, dx, dz):
    """One explicit update by direct transcription of the upwind scheme."""
    nz, nx = S.shape
    u, w = dense_velocity(S, kappa, m, dx, dz)
    f = frac_flow(S, m)
    f_in = frac_flow(s_in, m)
    new = S.copy()
    for j in range(nz):
        for i in range(nx):
            total = 0.0
            # east edge, outward normal +x
            v = u[j, i + 1]
            s_out = f[j, i + 1] if i + 1 < nx else f[j, i]
            total += dz * (max(v, 0.0) * f[j, i] + min(v, 0.0) * s_out)
            # west edge, outward normal -x
            v = -u[j, i]
            s_out = f[j, i - 1] if i - 1 >= 0 else f_in[j]
            total += dz * (max(v, 0.0) * f[j, i] + min(v, 0.0) * s_out)
            # top edge, outward normal +z
            if j + 1 <= nz - 1:
                v = w[j + 1, i]
                total += dx * (max(v, 0.0) * f[j, i] + min(v, 0.0) * f[j + 1, i])
            # bottom edge, outward normal -z
            if j - 1 >= 0:
                v = -w[j, i]
                total += dx * (max(v, 0.0) * f[j, i] + min(v, 0.0) * f[j - 1, i])
            new[j, i] = S[j, i] - dt / (dx * dz) * total
    return new


def dense_helmholtz(nx, nz, cx, cz):
    """Dense (I - cx Dxx - cz Dzz): mirror closure in x, periodic in z."""
    n = nx * nz
    a = np.zeros((n, n))
    ix = lambda j, i: j * nx + i
    for j in range(nz):
        for i in range(nx):
            d = 1.0
            if i > 0:
                a[ix(j, i), ix(j, i - 1)] += -cx
                d += cx
            if i < nx - 1:
                a[ix(j, i), ix(j, i + 1)] += -cx
                d += cx
            if nz > 1:
                a[ix(j, i), ix((j - 1) % nz, i)] += -cz
                a[ix(j, i), ix((j + 1) % nz, i)] += -cz
                d += 2 * cz
            a[ix(j, i), ix(j, i)] += d
    return a


def dense_bve_step(S, kappa, m, s_in, dt, dx, dz, bx, bz, ex, ez):
    """IMEX update with a dense linear solve for the pseudo-parabolic increment."""
    nz, nx = S.shape
    Sc = np.clip(S, 0.0, 1.0)
    u, w = dense_velocity(Sc, kappa, m, dx, dz)
    f = frac_flow(Sc, m)
    f_in = frac_flow(s_in, m)
    rhs = np.zeros((nz, nx))
    for j in range(nz):
        for i in range(nx + 1):
            if i == 0:
                v = u[j, 0]
                fx = v * f_in[j] if v >= 0 else v * f[j, 0]
            elif i == nx:
                fx = u[j, nx] * f[j, nx - 1]
            else:
                v = u[j, i]
                fx = v * f[j, i - 1] if v >= 0 else v * f[j, i]
            if i < nx:
                rhs[j, i] += fx / dx
            if i > 0:
                rhs[j, i - 1] -= fx / dx
    for j in range(1, nz):
        for i in range(nx):
            v = w[j, i]
            fz = v * f[j - 1, i] if v >= 0 else v * f[j, i]
            rhs[j - 1, i] -= fz / dz
            rhs[j, i] += fz / dz  # edge j feeds cell j from below
    for j in range(nz):
        for i in range(nx - 1):
            h = diffusion(0.5 * (Sc[j, i] + Sc[j, i + 1]),
                          0.5 * (kappa[j, i] + kappa[j, i + 1]), m)
            g = ex * h * (S[j, i + 1] - S[j, i]) / dx
            rhs[j, i] += g / dx
            rhs[j, i + 1] -= g / dx
    for j in range(nz - 1):
        for i in range(nx):
            h = diffusion(0.5 * (Sc[j, i] + Sc[j + 1, i]),
                          0.5 * (kappa[j, i] + kappa[j + 1, i]), m)
            g = ez * h * (S[j + 1, i] - S[j, i]) / dz
            rhs[j, i] += g / dz
            rhs[j + 1, i] -= g / dz
    a = dense_helmholtz(nx, nz, bx / dx ** 2, bz / dz ** 2)
    delta = np.linalg.solve(a, (dt * rhs).reshape(-1)).reshape(nz, nx)
    return S + delta


def welge_front_speed(m):
    """Shock speed of the 1-D profile from the tangent construction, by bisection.

    Solves f'(s) = f(s)/s on (0,1); the front moves at f(s*)/s*.
    """
    def g(s):
        return 2.0 * m * s * (1.0 - s) / tot_mob(s, m) ** 2 - frac_flow(s, m) / s

    lo, hi = 1e-9, 1.0 - 1e-12
    if g(lo) < 0 or g(hi) > 0:
        raise RuntimeError("bisection bracket failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    s_star = 0.5 * (lo + hi)
    return frac_flow(s_star, m) / s_star
