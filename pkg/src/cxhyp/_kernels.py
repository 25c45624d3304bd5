"""Compiled per-edge SGD epochs.

Same arithmetic as ``model._step`` with batches drawn from a padded negatives
array (``-1`` marks unused slots).  ``nogil`` lets worker threads share a table.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

SINGULAR_EPS = 1e-12
MODE_CONFORMAL = 0
MODE_QUADRATIC = 1


@njit(cache=True, nogil=True)
def _unitball_pair(points, i, j, gi, gj):
    """d(z_i, z_j); writes the gradient w.r.t. z_i into gi and w.r.t. z_j into gj."""
    z = points[i]
    w = points[j]
    n = z.shape[0]
    a = -1.0 + 0j
    zz = -1.0
    ww = -1.0
    for t in range(n):
        a += z[t] * w[t].conjugate()
        zz += z[t].real ** 2 + z[t].imag ** 2
        ww += w[t].real ** 2 + w[t].imag ** 2
    aa = a.real**2 + a.imag**2
    p = 2.0 * aa / (zz * ww) - 1.0
    if p - 1.0 > SINGULAR_EPS:
        k = 4.0 / math.sqrt(p * p - 1.0)
    else:
        k = 0.0
    ci = k * a / (zz * ww)
    di = k * aa / (zz * zz * ww)
    cj = k * a.conjugate() / (zz * ww)
    dj = k * aa / (ww * ww * zz)
    for t in range(n):
        gi[t] = ci * w[t] - di * z[t]
        gj[t] = cj * z[t] - dj * w[t]
    return math.acosh(max(p, 1.0))


@njit(cache=True, nogil=True)
def _poincare_pair(points, i, j, gi, gj):
    u = points[i]
    v = points[j]
    n = u.shape[0]
    uu = 0.0
    vv = 0.0
    uv = 0.0
    for t in range(n):
        uu += u[t] * u[t]
        vv += v[t] * v[t]
        uv += u[t] * v[t]
    alpha = 1.0 - uu
    beta = 1.0 - vv
    dd = 0.0
    for t in range(n):
        dd += (u[t] - v[t]) ** 2
    gamma = 1.0 + 2.0 * dd / (alpha * beta)
    if gamma - 1.0 > SINGULAR_EPS:
        s = math.sqrt(gamma * gamma - 1.0)
        ki = 4.0 / (beta * s)
        kj = 4.0 / (alpha * s)
    else:
        ki = 0.0
        kj = 0.0
    cu = ki * (vv - 2.0 * uv + 1.0) / (alpha * alpha)
    cv = kj * (uu - 2.0 * uv + 1.0) / (beta * beta)
    for t in range(n):
        gi[t] = cu * u[t] - ki / alpha * v[t]
        gj[t] = cv * v[t] - kj / beta * u[t]
    return math.acosh(max(gamma, 1.0))


@njit(cache=True, nogil=True)
def _apply(points, acc, touched, count, lr, eps, mode):
    n = points.shape[1]
    for c in range(count):
        u = touched[c]
        x = points[u]
        g = acc[u]
        r2 = 0.0
        for t in range(n):
            r2 += abs(x[t]) ** 2
        s = 1.0 - r2
        if mode == MODE_CONFORMAL:
            scale = s * s / 4.0
        else:
            gg = 0.0
            gz = 0.0j
            for t in range(n):
                gg += abs(g[t]) ** 2
                gz += g[t] * np.conj(x[t])
            if gg > 0.0:
                q = 4.0 * (s * gg + abs(gz) ** 2) / (s * s * gg)
                scale = 1.0 / q
            else:
                scale = 0.0
        norm2 = 0.0
        for t in range(n):
            x[t] = x[t] - lr * scale * g[t]
            norm2 += abs(x[t]) ** 2
            g[t] = 0.0
        norm = math.sqrt(norm2)
        if norm >= 1.0 - eps:
            f = (1.0 - eps) / norm
            for t in range(n):
                x[t] = x[t] * f
        touched[c] = -1


@njit(cache=True, nogil=True)
def run_epoch(pair, points, pairs, negs, lr, eps, include_pos, include_self, mode, batch_size, acc, mark):
    m, n = points.shape
    kmax = negs.shape[1] + 1
    gu = np.zeros((kmax, n), dtype=points.dtype)
    gv = np.zeros((kmax, n), dtype=points.dtype)
    dist = np.zeros(kmax)
    idx = np.zeros(kmax, dtype=np.int64)
    touched = np.full(m, -1, dtype=np.int64)
    count = 0
    in_batch = 0
    total = 0.0
    for r in range(pairs.shape[0]):
        p = pairs[r, 0]
        idx[0] = pairs[r, 1]
        k = 1
        for c in range(negs.shape[1]):
            v = negs[r, c]
            if v >= 0 and v != p:
                idx[k] = v
                k += 1
        for c in range(k):
            dist[c] = pair(points, p, idx[c], gu[c], gv[c])
        z = 1.0 if include_self else 0.0
        for c in range(1, k):
            z += math.exp(-dist[c])
        if include_pos:
            z += math.exp(-dist[0])
        total += dist[0] + math.log(z)
        if lr == 0.0:
            continue
        if mark[p] == 0:
            mark[p] = 1
            touched[count] = p
            count += 1
        for c in range(k):
            coef = -math.exp(-dist[c]) / z
            if c == 0:
                coef = 1.0 + coef if include_pos else 1.0
            j = idx[c]
            if mark[j] == 0:
                mark[j] = 1
                touched[count] = j
                count += 1
            for t in range(n):
                acc[p, t] += coef * gu[c, t]
                acc[j, t] += coef * gv[c, t]
        in_batch += 1
        if in_batch == batch_size or r == pairs.shape[0] - 1:
            for c in range(count):
                mark[touched[c]] = 0
            _apply(points, acc, touched, count, lr, eps, mode)
            count = 0
            in_batch = 0
    return total
