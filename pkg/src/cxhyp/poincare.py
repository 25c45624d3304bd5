"""Real Poincaré-ball baseline sharing the loss, trainer and evaluation stack."""

from __future__ import annotations

import numpy as np

from .geometry import CONFORMAL, OutsideBallError
from .gradients import SINGULAR_EPS
from .model import INIT_RANGE, TrainConfig, train


def poincare_distance(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    uu, vv = float(u @ u), float(v @ v)
    if uu >= 1 or vv >= 1:
        raise OutsideBallError("norm must be below 1")
    return float(_distances(u, v[None, :])[0])


def _distances(u, points):
    # arcosh(1 + 2x) written as 2 asinh(sqrt(x)) to stay accurate for close points
    diff = points - u
    ratio = np.sum(diff * diff, axis=-1) / ((1.0 - u @ u) * (1.0 - np.sum(points * points, axis=-1)))
    return 2.0 * np.arcsinh(np.sqrt(ratio))


def _batch_partials(u, v, eps=SINGULAR_EPS):
    """Gradient of ``d(u_i, v_i)`` w.r.t. ``u_i`` (rows broadcast), and the distances."""
    uu = np.sum(u * u, axis=-1)
    vv = np.sum(v * v, axis=-1)
    diff = u - v
    alpha, beta = np.broadcast_arrays(1.0 - uu, 1.0 - vv)
    gamma = 1.0 + 2.0 * np.sum(diff * diff, axis=-1) / (alpha * beta)
    ok = gamma - 1.0 > eps
    k = np.zeros_like(gamma)
    k[ok] = 4.0 / (beta[ok] * np.sqrt(gamma[ok] ** 2 - 1.0))
    uv = np.sum(u * v, axis=-1)
    coef_u = k * (vv - 2.0 * uv + 1.0) / alpha**2
    grad = coef_u[..., None] * u - (k / alpha)[..., None] * v
    return grad, np.arccosh(np.maximum(gamma, 1.0))


def poincare_partials(u, v) -> np.ndarray:
    g, _ = _batch_partials(np.asarray(u, float), np.asarray(v, float))
    return g


class PoincareBall:
    """Real Poincaré ball; a model of dimension ``n`` stores ``2n`` real coordinates."""

    name = "poincare"
    header = "poincare-v1"
    dtype = np.float64
    metric_modes = (CONFORMAL,)

    def init(self, m, n, rng):
        return rng.uniform(-INIT_RANGE, INIT_RANGE, size=(m, 2 * n))

    def distances(self, u, points):
        return _distances(u, points)

    def pairwise_distances(self, points):
        return np.stack([_distances(u, points) for u in points]) if len(points) else np.zeros((0, 0))

    def grads(self, u, others):
        g_u, dist = _batch_partials(u[None, :], others)
        g_v, _ = _batch_partials(others, u[None, :])
        return g_u, g_v, dist

    def rescale(self, points, grads, mode):
        if mode != CONFORMAL:
            raise ValueError("the Poincaré baseline only has the conformal metric")
        r2 = np.sum(points**2, axis=1)
        return grads * ((1.0 - r2) ** 2 / 4.0)[:, None]

    def to_row(self, point):
        return point

    def row_width(self, n):
        return n

    def from_rows(self, rows):
        return rows


POINCARE_BALL = PoincareBall()


def poincare_rsgd_train(graph, config: TrainConfig | None = None, on_epoch=None):
    """Train the baseline; ``config.dim`` is the complex dimension it is matched against."""
    return train(graph, config, model=POINCARE_BALL.name, on_epoch=on_epoch)
