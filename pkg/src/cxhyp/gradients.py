"""Closed-form derivatives of the unit-ball distance.

Gradients are packed as complex arrays ``g = dd/dx + i dd/dy`` where
``z = x + i y``; this is ``2 * dd/d(conj z)`` in Wirtinger notation.
"""

from __future__ import annotations

import numpy as np

from .geometry import (
    CONFORMAL,
    QUADRATIC_FORM,
    OutsideBallError,
    _check_in_ball,
    _check_pair,
    as_point,
    bergman_quadratic_form,
    metric_scale,
)

SINGULAR_EPS = 1e-12


class SingularGradientError(ArithmeticError):
    """The distance is not differentiable at coincident points."""


def _forms(z, w):
    a = np.vdot(w, z) - 1.0
    zz = np.vdot(z, z).real - 1.0
    ww = np.vdot(w, w).real - 1.0
    aa = a.real**2 + a.imag**2
    p = 2.0 * aa / (zz * ww) - 1.0
    return a, zz, ww, aa, p


def wirtinger_derivatives(z, w, eps: float = SINGULAR_EPS):
    """``(dd/dz_j, dd/d(conj z_j))`` for ``d = d(z, w)``, each a complex n-vector."""
    z, w = _check_pair(z, w)
    a, zz, ww, aa, p = _forms(z, w)
    if p - 1.0 <= eps:
        raise SingularGradientError("points coincide; distance gradient undefined")
    k = 2.0 / np.sqrt(p * p - 1.0)
    d_z = k * (np.conj(w) * np.conj(a) / (zz * ww) - np.conj(z) * aa / (zz**2 * ww))
    d_zbar = k * (w * a / (zz * ww) - z * aa / (zz**2 * ww))
    return d_z, d_zbar


def distance_partials(z, w, eps: float = SINGULAR_EPS) -> np.ndarray:
    """Euclidean gradient of ``d(., w)`` at ``z``, packed as ``dd/dx + i dd/dy``."""
    z, w = _check_pair(z, w)
    _check_in_ball(z, "z")
    _check_in_ball(w, "w")
    a, zz, ww, aa, p = _forms(z, w)
    if p - 1.0 <= eps:
        raise SingularGradientError("points coincide; distance gradient undefined")
    return 4.0 / np.sqrt(p * p - 1.0) * (a * w / (zz * ww) - aa * z / (zz**2 * ww))


def batch_distance_partials(z: np.ndarray, w: np.ndarray, eps: float = SINGULAR_EPS):
    """Row-wise gradient of ``d(z_i, w_i)`` w.r.t. ``z_i``; singular rows are zero.

    ``z`` and ``w`` broadcast against each other, shape ``(..., n)``.
    Returns ``(grad, dist)``.
    """
    a = np.sum(z * np.conj(w), axis=-1) - 1.0
    zz = np.sum(z.real**2 + z.imag**2, axis=-1) - 1.0
    ww = np.sum(w.real**2 + w.imag**2, axis=-1) - 1.0
    aa = a.real**2 + a.imag**2
    p = 2.0 * aa / (zz * ww) - 1.0
    ok = p - 1.0 > eps
    k = np.zeros_like(p)
    k[ok] = 4.0 / np.sqrt(p[ok] ** 2 - 1.0)
    grad = (k * a / (zz * ww))[..., None] * w - (k * aa / (zz**2 * ww))[..., None] * z
    return grad, np.arccosh(np.maximum(p, 1.0))


def riemannian_gradient(euclid, z, mode: str = CONFORMAL) -> np.ndarray:
    """Rescale a Euclidean gradient at ``z`` into a Riemannian one.

    In ``quadratic_form`` mode the scale is the reciprocal of the Bergman
    quadratic form on the unit vector along ``euclid``, so the direction is kept
    and the two modes agree at the origin and along radial directions.
    """
    euclid, z = _check_pair(euclid, z)
    if mode == CONFORMAL:
        return metric_scale(z, CONFORMAL) * euclid
    if mode == QUADRATIC_FORM:
        _check_in_ball(z)
        norm = np.linalg.norm(euclid)
        if norm == 0.0:
            return np.zeros_like(euclid)
        return euclid / bergman_quadratic_form(z, euclid / norm)
    raise ValueError(f"unknown metric mode {mode!r}")


def finite_difference_oracle(f, z, h: float = 1e-6) -> np.ndarray:
    """Central differences of ``f`` over all ``2n`` real coordinates of ``z``."""
    z = as_point(z)
    n = z.shape[0]
    grad = np.zeros(n, dtype=np.complex128)
    for j in range(n):
        for unit, part in ((1.0, "re"), (1j, "im")):
            step = np.zeros(n, dtype=np.complex128)
            step[j] = unit * h
            hi, lo = z + step, z - step
            for probe in (hi, lo):
                if np.sum(np.abs(probe) ** 2) >= 1.0:
                    raise OutsideBallError(f"perturbed point leaves the ball at h={h}; shrink h")
            slope = (f(hi) - f(lo)) / (2.0 * h)
            if part == "re":
                grad[j] += slope
            else:
                grad[j] += 1j * slope
    return grad
