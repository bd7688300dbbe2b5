"""Independent brute-force oracles shared by the test modules.

These deliberately avoid the algebra used by the library: iterated
integrals are computed as discretized double integrals on a fine
sub-sampling of the path, never via Chen concatenation.
"""

import numpy as np


def sig2_by_quadrature(times, points, nsub=64):
    """Level-1/2 signature of a PWL path by midpoint Riemann sums.

    Evaluates level2[i, j] = int (z_i(s) - z_i(0)) dz_j(s) with ``nsub``
    midpoint samples per linear segment.  The integrand is piecewise
    linear in s, so the midpoint rule is exact up to round-off.
    """
    times = np.asarray(times, dtype=float)
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    M = points.shape[1]
    level1 = points[-1] - points[0]
    level2 = np.zeros((M, M))
    for k in range(times.size - 1):
        dt = times[k + 1] - times[k]
        slope = (points[k + 1] - points[k]) / dt
        tau = (np.arange(nsub) + 0.5) / nsub * dt
        z_mid = points[k][None, :] + tau[:, None] * slope[None, :] - points[0]
        dz = slope * (dt / nsub)
        level2 += np.einsum("si,j->ij", z_mid, dz)
    return level1, level2


def godunov_burgers(u0, dx, T, cfl=0.45):
    """Independent first-order Godunov solver for u_t + (u^2/2)_x = 0.

    Zero-extension boundaries; used as a cross-scheme oracle for the
    z(t) = t reduction of the pathwise solver.
    """
    u = np.asarray(u0, dtype=float).copy()

    def godunov_flux(a, b):
        # exact Riemann flux for the convex flux u^2/2
        fa, fb = 0.5 * a**2, 0.5 * b**2
        f = np.where(a <= b, np.minimum(fa, fb), np.maximum(fa, fb))
        return np.where((a < 0) & (b > 0), 0.0, f)

    t = 0.0
    while t < T - 1e-14:
        smax = max(np.abs(u).max(), 1e-12)
        dt = min(cfl * dx / smax, T - t)
        ug = np.pad(u, 1)
        F = godunov_flux(ug[:-1], ug[1:])
        u = u - dt / dx * (F[1:] - F[:-1])
        t += dt
    return u


def halton(n, dims, skip=20):
    """Deterministic low-discrepancy points in [0, 1)^dims."""
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29][:dims]
    out = np.empty((n, dims))
    for j, p in enumerate(primes):
        seq = []
        for i in range(skip, skip + n):
            f, r, x = 1.0, 0.0, i
            while x > 0:
                f /= p
                r += f * (x % p)
                x //= p
            seq.append(r)
        out[:, j] = seq
    return out
