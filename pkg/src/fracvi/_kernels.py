"""Hot pointwise kernels with numba and pure-numpy twins.

Each kernel has `<name>_numpy` and (when numba is available) `<name>_numba`;
the module-level alias picks the active backend.  benchmarks/bench_kernels.py
compares the two.
"""

import numpy as np

from ._backend import USE_NUMBA

if USE_NUMBA:
    from numba import njit


# ---------------------------------------------------------------------------
# principal-value kernel quadrature: sum over lattice offsets y with
# eps < |y| < L/2 of  y_j * u(x0 + y) / |y|^(d+s+1),  periodic indexing.
# ---------------------------------------------------------------------------

def _annulus_range(h, eps, rmax):
    """First/last lattice radius index inside (eps, rmax), node-inclusive
    at the inner edge so a nominal eps on a node is kept."""
    m_lo = int(np.ceil(eps / h * (1.0 - 1e-9)))
    if m_lo * h <= eps * (1.0 - 1e-9):
        m_lo += 1
    m_hi = int(np.floor(rmax / h * (1.0 - 1e-12)))
    if m_hi * h >= rmax:
        m_hi -= 1
    return m_lo, m_hi


def pv_kernel_sum_numpy(u_nd, i0, s, h, eps, rmax):
    d = u_nd.ndim
    N = u_nd.shape[0]
    if d == 1:
        m_lo, m_hi = _annulus_range(h, eps, rmax)
        mm = np.arange(m_lo, m_hi + 1)
        w = np.ones(mm.size)
        if w.size:
            w[0] = 0.5
            w[-1] = 0.5
        y = mm * h
        up = u_nd[(i0[0] + mm) % N]
        um = u_nd[(i0[0] - mm) % N]
        acc = float(np.sum(w * y * (up - um) / y ** (2.0 + s)))
        return np.array([acc * h])
    half = N // 2
    offs = np.arange(-half, half)
    grids = np.meshgrid(*([offs] * d), indexing="ij")
    r = np.sqrt(sum((g * h) ** 2 for g in grids))
    sel = (r > eps * (1.0 - 1e-9)) & (r < rmax)
    # u(x0 + y): shift so that offset 0 hits node i0
    idx = tuple(np.mod(i0[j] + grids[j], N) for j in range(d))
    uw = u_nd[idx]
    w = np.zeros_like(r)
    w[sel] = 1.0 / r[sel] ** (d + s + 1)
    out = np.empty(d)
    for j in range(d):
        out[j] = np.sum(grids[j][sel] * h * uw[sel] * w[sel])
    return out * h**d


if USE_NUMBA:

    @njit(cache=True, nogil=True)
    def _pv_kernel_sum_1d(u, i0, s, h, m_lo, m_hi):
        N = u.shape[0]
        acc = 0.0
        for m in range(m_lo, m_hi + 1):
            y = m * h
            w = 0.5 if (m == m_lo or m == m_hi) else 1.0
            acc += w * y * (u[(i0 + m) % N] - u[(i0 - m) % N]) / y ** (2.0 + s)
        return acc * h

    @njit(cache=True, nogil=True)
    def _pv_kernel_sum_2d(u, i0, i1, s, h, eps, rmax):
        N = u.shape[0]
        half = N // 2
        elo = eps * (1.0 - 1e-9)
        a0 = 0.0
        a1 = 0.0
        for m0 in range(-half, half):
            y0 = m0 * h
            for m1 in range(-half, half):
                y1 = m1 * h
                r = (y0 * y0 + y1 * y1) ** 0.5
                if r <= elo or r >= rmax:
                    continue
                uv = u[(i0 + m0) % N, (i1 + m1) % N] / r ** (3.0 + s)
                a0 += y0 * uv
                a1 += y1 * uv
        return a0 * h * h, a1 * h * h

    @njit(cache=True, nogil=True)
    def _pv_kernel_sum_3d(u, i0, i1, i2, s, h, eps, rmax):
        N = u.shape[0]
        half = N // 2
        elo = eps * (1.0 - 1e-9)
        a0 = 0.0
        a1 = 0.0
        a2 = 0.0
        for m0 in range(-half, half):
            y0 = m0 * h
            for m1 in range(-half, half):
                y1 = m1 * h
                for m2 in range(-half, half):
                    y2 = m2 * h
                    r = (y0 * y0 + y1 * y1 + y2 * y2) ** 0.5
                    if r <= elo or r >= rmax:
                        continue
                    uv = u[(i0 + m0) % N, (i1 + m1) % N, (i2 + m2) % N]
                    uv /= r ** (4.0 + s)
                    a0 += y0 * uv
                    a1 += y1 * uv
                    a2 += y2 * uv
        h3 = h * h * h
        return a0 * h3, a1 * h3, a2 * h3

    def pv_kernel_sum_numba(u_nd, i0, s, h, eps, rmax):
        if u_nd.ndim == 1:
            m_lo, m_hi = _annulus_range(h, eps, rmax)
            return np.array([_pv_kernel_sum_1d(u_nd, i0[0], s, h, m_lo, m_hi)])
        if u_nd.ndim == 2:
            return np.array(_pv_kernel_sum_2d(u_nd, i0[0], i0[1], s, h, eps, rmax))
        return np.array(
            _pv_kernel_sum_3d(u_nd, i0[0], i0[1], i0[2], s, h, eps, rmax))

    pv_kernel_sum = pv_kernel_sum_numba
else:
    pv_kernel_sum = pv_kernel_sum_numpy


# ---------------------------------------------------------------------------
# radial prox for the ADMM z-update:
#   argmin_{0<=r<=g} (alpha/p) r^p + (rho/2)(r-w)^2   per point.
# Closed form for p=2; a safeguarded Newton on the optimality condition
# alpha r^(p-1) + rho (r - w) = 0 otherwise (magnitude eps-regularized for
# p<2 so the derivative stays finite near r=0).
# ---------------------------------------------------------------------------

def radial_prox_numpy(w, g, alpha, rho, p, reg=1e-12, iters=60):
    w = np.maximum(w, 0.0)
    if p == 2.0:
        r = rho * w / (alpha + rho)
        return np.minimum(r, g)
    r = np.minimum(w, g)
    for _ in range(iters):
        rr = np.sqrt(r * r + reg * reg)
        phi = alpha * rr ** (p - 2.0) * r + rho * (r - w)
        dphi = (
            alpha * rr ** (p - 2.0)
            + alpha * (p - 2.0) * rr ** (p - 4.0) * r * r
            + rho
        )
        step = phi / dphi
        r = np.clip(r - step, 0.0, None)
        if np.max(np.abs(step)) < 1e-14 * (1.0 + np.max(r)):
            break
    return np.minimum(r, g)


if USE_NUMBA:

    @njit(cache=True, nogil=True)
    def _radial_prox_scalar(w, g, alpha, rho, p, reg):
        if w <= 0.0:
            return 0.0
        if p == 2.0:
            r = rho * w / (alpha + rho)
        else:
            r = w if w < g else g
            for _ in range(60):
                rr = (r * r + reg * reg) ** 0.5
                phi = alpha * rr ** (p - 2.0) * r + rho * (r - w)
                dphi = (
                    alpha * rr ** (p - 2.0)
                    + alpha * (p - 2.0) * rr ** (p - 4.0) * r * r
                    + rho
                )
                step = phi / dphi
                r -= step
                if r < 0.0:
                    r = 0.0
                if abs(step) < 1e-14 * (1.0 + r):
                    break
        return r if r < g else g

    @njit(cache=True, nogil=True)
    def radial_prox_numba(w, g, alpha, rho, p, reg=1e-12, iters=60):
        out = np.empty_like(w)
        for i in range(w.shape[0]):
            out[i] = _radial_prox_scalar(w[i], g[i], alpha[i], rho, p, reg)
        return out

    def radial_prox(w, g, alpha, rho, p, reg=1e-12):
        return radial_prox_numba(np.maximum(w, 0.0), g, alpha, rho, p, reg)
else:

    def radial_prox(w, g, alpha, rho, p, reg=1e-12):
        return radial_prox_numpy(w, g, alpha, rho, p, reg)
