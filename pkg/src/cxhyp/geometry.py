"""Unit ball model of complex hyperbolic space.

Points are complex numpy arrays ``z`` of shape ``(n,)`` with ``|z| < 1``.  The
homogeneous coordinate ``z_{n+1} = 1`` is never stored; every formula below
adds its contribution explicitly.
"""

from __future__ import annotations

import numpy as np

CONFORMAL = "conformal"
QUADRATIC_FORM = "quadratic_form"
METRIC_MODES = (CONFORMAL, QUADRATIC_FORM)


class OutsideBallError(ValueError):
    """A point lies on or outside the unit ball."""


def as_point(z, name: str = "z") -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    if z.ndim == 0:
        z = z.reshape(1)
    if z.ndim != 1 or z.shape[0] < 1:
        raise ValueError(f"{name} must be a nonempty 1-d vector, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError(f"{name} has non-finite coordinates")
    return z


def _check_pair(z, w):
    z = as_point(z, "z")
    w = as_point(w, "w")
    if z.shape != w.shape:
        raise ValueError(f"dimension mismatch: {z.shape[0]} vs {w.shape[0]}")
    return z, w


def _check_in_ball(z, name="z"):
    r2 = ball_norm_sq(z)
    if not r2 < 1.0:
        raise OutsideBallError(f"{name} is not inside the unit ball (|{name}|^2 = {r2!r})")
    return r2


def hermitian_form(z, w) -> complex:
    """``<<z, w>> = sum_j z_j conj(w_j) - 1`` with both homogeneous coordinates 1."""
    z, w = _check_pair(z, w)
    return complex(np.vdot(w, z) - 1.0)


def ball_norm_sq(z) -> float:
    z = as_point(z)
    return float(np.sum(z.real**2 + z.imag**2))


def cosh_argument(z, w) -> float:
    """The arcosh argument ``2 <<z,w>><<w,z>> / (<<z,z>><<w,w>>) - 1`` (unclamped)."""
    a = np.vdot(w, z) - 1.0
    zz = np.vdot(z, z).real - 1.0
    ww = np.vdot(w, w).real - 1.0
    return float(2.0 * (a.real**2 + a.imag**2) / (zz * ww) - 1.0)


def distance(z, w) -> float:
    """``arcosh(p)`` with ``p`` the cosh argument, evaluated as ``2 asinh(sqrt((p - 1) / 2))``.

    ``(p - 1) / 2`` is ``((1-|z|^2)|z-w|^2 + |<z-w, z>|^2) / ((1-|z|^2)(1-|w|^2))``,
    which carries no cancellation when ``z`` and ``w`` are close, where
    ``arcosh`` near 1 would lose half the significant digits.
    """
    z, w = _check_pair(z, w)
    rz = _check_in_ball(z, "z")
    rw = _check_in_ball(w, "w")
    diff = z - w
    num = (1.0 - rz) * np.vdot(diff, diff).real + abs(np.vdot(z, diff)) ** 2
    return float(2.0 * np.arcsinh(np.sqrt(num / ((1.0 - rz) * (1.0 - rw)))))


def distances(z: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distances from ``z`` to every row of ``points``; no validation, hot path."""
    rz = np.vdot(z, z).real
    diff = points - z
    rw = np.einsum("ij,ij->i", points.real, points.real) + np.einsum("ij,ij->i", points.imag, points.imag)
    dd = np.einsum("ij,ij->i", diff.real, diff.real) + np.einsum("ij,ij->i", diff.imag, diff.imag)
    num = (1.0 - rz) * dd + np.abs(diff @ np.conj(z)) ** 2
    return 2.0 * np.arcsinh(np.sqrt(num / ((1.0 - rz) * (1.0 - rw))))


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    return np.stack([distances(z, points) for z in points]) if len(points) else np.zeros((0, 0))


def bergman_quadratic_form(z, v) -> float:
    """Bergman metric ``ds^2`` at ``z`` on the tangent vector ``v``.

    Expands ``-4/<<z,z>>^2 * det[[<<z,z>>, <<dz,z>>], [<<z,dz>>, <<dz,dz>>]]`` with
    ``dz = (v, 0)``:  ``4((1-|z|^2)|v|^2 + |<v,z>|^2) / (1-|z|^2)^2``.
    """
    z, v = _check_pair(z, v)
    s = 1.0 - _check_in_ball(z)
    vz = np.vdot(z, v)
    vv = np.vdot(v, v).real
    return float(4.0 * (s * vv + abs(vz) ** 2) / s**2)


def metric_scale(z, mode: str = CONFORMAL, direction=None) -> float:
    """Metric factor used to turn Euclidean gradients into Riemannian ones.

    ``conformal`` returns the inverse rescale ``(1 - |z|^2)^2 / 4``.
    ``quadratic_form`` returns the Bergman quadratic form evaluated on
    ``direction`` (a complex n-vector packing real parts and imaginary parts).
    """
    z = as_point(z)
    r2 = _check_in_ball(z)
    if mode == CONFORMAL:
        return (1.0 - r2) ** 2 / 4.0
    if mode == QUADRATIC_FORM:
        if direction is None:
            raise ValueError("quadratic_form mode needs a direction")
        direction = as_point(direction, "direction")
        if not np.any(direction):
            raise ValueError("direction must be nonzero")
        return bergman_quadratic_form(z, direction)
    raise ValueError(f"unknown metric mode {mode!r}; expected one of {METRIC_MODES}")


def poincare_line_distance(z: complex, w: complex) -> float:
    """Distance on a complex line, via ``cosh^2(d/2) = |z conj(w) - 1|^2 / ((|z|^2-1)(|w|^2-1))``."""
    z, w = complex(z), complex(w)
    if abs(z) >= 1 or abs(w) >= 1:
        raise OutsideBallError("modulus must be below 1")
    c2 = abs(z * w.conjugate() - 1) ** 2 / ((abs(z) ** 2 - 1) * (abs(w) ** 2 - 1))
    return float(2.0 * np.arccosh(np.sqrt(max(c2, 1.0))))


def klein_real_distance(x, y) -> float:
    """Distance on the totally real slice, via ``cosh^2(d/2) = (x.y - 1)^2 / ((|x|^2-1)(|y|^2-1))``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    xx, yy = float(x @ x), float(y @ y)
    if xx >= 1 or yy >= 1:
        raise OutsideBallError("norm must be below 1")
    c2 = (float(x @ y) - 1.0) ** 2 / ((xx - 1.0) * (yy - 1.0))
    return float(2.0 * np.arccosh(np.sqrt(max(c2, 1.0))))
