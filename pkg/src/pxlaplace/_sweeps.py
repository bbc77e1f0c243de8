"""Compiled Gauss-Seidel kernels for the limit-equation sweeps.

The kernels perform one in-place lexicographic sweep (in one of the 2/4
alternating orderings) of the monotone min/max update with chord
interpolation and upwinded, clipped drift.  They mirror the vectorized
reference implementation in ``infinity``; that path remains the fallback
when numba is unavailable and is the one used for per-update contract
checking.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


@njit(cache=True)
def sweep_1d(v, interior, xi, h, eps_grad, cap, order):
    # cap is the drift-rate bound; the update budget is (h^2/2) * cap
    n = v.shape[0]
    worst = 0.0
    if order == 0:
        start, stop, step = 1, n - 1, 1
    else:
        start, stop, step = n - 2, 0, -1
    for i in range(start, stop, step):
        if not interior[i]:
            continue
        c = v[i]
        left = v[i - 1]
        right = v[i + 1]
        new = 0.5 * (left + right)
        ux_c = (right - left) / (2.0 * h)
        gm = abs(ux_c)
        budget = 0.5 * h * h * cap
        if gm > eps_grad:
            b = np.log(gm) * xi[i]
            if b > 0.0:
                ux = (right - c) / h
            else:
                ux = (c - left) / h
            add = 0.5 * h * h * b * ux
            if add > budget:
                add = budget
            elif add < -budget:
                add = -budget
            new += add
        lo = min(left, right) - budget
        hi = max(left, right) + budget
        if new < lo:
            new = lo
        elif new > hi:
            new = hi
        delta = abs(new - c)
        if delta > worst:
            worst = delta
        v[i] = new
    return worst


@njit(cache=True)
def sweep_2d(v, interior, width, xi_x, xi_y, hx, hy, eps_grad, cap,
             di_all, dj_all, dist_all, pp_all, pq_all, qq_all, ring_start,
             order):
    """One lexicographic Gauss-Seidel pass of the min/max-average update.

    ``di_all``/``dj_all``/... hold the concatenated square-ring stencils for
    widths 1..wmax; ring ``w`` occupies slots ring_start[w-1]:ring_start[w]
    (8w angularly ordered directions).  ``width[i, j]`` selects the ring a
    node may use; chord data pp/pq/qq describe the segments between
    angularly adjacent ring points.
    """
    n = v.shape[0]
    worst = 0.0
    if order == 0:
        i0, i1, istep = 1, n - 1, 1
        j0, j1, jstep = 1, n - 1, 1
    elif order == 1:
        i0, i1, istep = n - 2, 0, -1
        j0, j1, jstep = n - 2, 0, -1
    elif order == 2:
        i0, i1, istep = 1, n - 1, 1
        j0, j1, jstep = n - 2, 0, -1
    else:
        i0, i1, istep = n - 2, 0, -1
        j0, j1, jstep = 1, n - 1, 1
    vals = np.empty(di_all.shape[0])
    for i in range(i0, i1, istep):
        for j in range(j0, j1, jstep):
            if not interior[i, j]:
                continue
            c = v[i, j]
            w = width[i, j]
            k0 = ring_start[w - 1]
            k1 = ring_start[w]
            m = k1 - k0
            vmin = 1.0e300
            vmax = -1.0e300
            for k in range(m):
                vk = v[i + di_all[k0 + k], j + dj_all[k0 + k]]
                vals[k] = vk
                if vk < vmin:
                    vmin = vk
                if vk > vmax:
                    vmax = vk
            sp = -1.0e300
            sm = 1.0e300
            dp = dist_all[k0]
            dm = dist_all[k0]
            for k in range(m):
                r = (vals[k] - c) / dist_all[k0 + k]
                if r > sp:
                    sp = r
                    dp = dist_all[k0 + k]
                if r < sm:
                    sm = r
                    dm = dist_all[k0 + k]
            for k in range(m):
                b = k + 1 if k < m - 1 else 0
                A = vals[k] - c
                B = vals[b] - vals[k]
                den = B * pq_all[k0 + k] - A * qq_all[k0 + k]
                if den != 0.0:
                    t = (A * pq_all[k0 + k] - B * pp_all[k0 + k]) / den
                    if 0.0 < t < 1.0:
                        d = np.sqrt(pp_all[k0 + k] + 2.0 * pq_all[k0 + k] * t
                                    + qq_all[k0 + k] * t * t)
                        r = (A + B * t) / d
                        if r > sp:
                            sp = r
                            dp = d
                        if r < sm:
                            sm = r
                            dm = d
            new = c + (dp * dm / (dp + dm)) * (sp + sm)
            budget = 0.5 * dp * dm * cap
            ux_c = (v[i + 1, j] - v[i - 1, j]) / (2.0 * hx)
            uy_c = (v[i, j + 1] - v[i, j - 1]) / (2.0 * hy)
            gm = np.sqrt(ux_c * ux_c + uy_c * uy_c)
            if gm > eps_grad:
                lng = np.log(gm)
                bx = lng * xi_x[i, j]
                by = lng * xi_y[i, j]
                if bx > 0.0:
                    ux = (v[i + 1, j] - c) / hx
                else:
                    ux = (c - v[i - 1, j]) / hx
                if by > 0.0:
                    uy = (v[i, j + 1] - c) / hy
                else:
                    uy = (c - v[i, j - 1]) / hy
                add = 0.5 * dp * dm * (bx * ux + by * uy)
                if add > budget:
                    add = budget
                elif add < -budget:
                    add = -budget
                new += add
            lo = vmin - budget
            hi = vmax + budget
            if new < lo:
                new = lo
            elif new > hi:
                new = hi
            delta = abs(new - c)
            if delta > worst:
                worst = delta
            v[i, j] = new
    return worst
