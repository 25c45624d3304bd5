import math

import numpy as np
import pytest

from cxhyp import geometry as geo
from cxhyp.evaluation import RankingTask, evaluate
from cxhyp.geometry import OutsideBallError
from cxhyp.gradients import finite_difference_oracle
from cxhyp.graphs import balanced_tree
from cxhyp.model import TrainConfig, load_checkpoint, save_checkpoint
from cxhyp.poincare import POINCARE_BALL, poincare_distance, poincare_partials, poincare_rsgd_train


def real_points(rng, count, dim, max_radius=0.9):
    x = rng.normal(size=(count, dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x * rng.uniform(0, max_radius, size=(count, 1))


class TestDistance:
    def test_examples(self):
        assert poincare_distance([0, 0], [0, 0]) == 0.0
        assert poincare_distance([0, 0], [0.3, 0.4]) == pytest.approx(math.log(3))

    def test_outside(self):
        with pytest.raises(OutsideBallError):
            poincare_distance([1.0, 0], [0, 0])
        with pytest.raises(ValueError):
            poincare_distance([0.1], [0.1, 0.2])

    def test_symmetric_and_zero_iff_equal(self, rng):
        for u, v in zip(real_points(rng, 50, 4), real_points(rng, 50, 4)):
            assert poincare_distance(u, v) == pytest.approx(poincare_distance(v, u), abs=1e-12)
            assert poincare_distance(u, u) == 0.0
            assert poincare_distance(u, v) > 0

    def test_matches_complex_line(self, rng):
        # the disc {(x, y)} and the complex line {x + iy} carry the same metric
        for u, v in zip(real_points(rng, 100, 2), real_points(rng, 100, 2)):
            zu, zv = complex(*u), complex(*v)
            assert abs(poincare_distance(u, v) - geo.poincare_line_distance(zu, zv)) < 1e-9
            assert abs(poincare_distance(u, v) - geo.distance([zu], [zv])) < 1e-9


class TestGradient:
    def test_finite_differences(self, rng):
        for u, v in zip(real_points(rng, 100, 4), real_points(rng, 100, 4)):
            if poincare_distance(u, v) < 1e-3:
                continue
            # the oracle perturbs complex coordinates; map the real parts through
            fd = finite_difference_oracle(lambda x: poincare_distance(x.real, v), u + 0j).real
            g = poincare_partials(u, v)
            assert np.linalg.norm(g - fd) < 1e-4 * np.linalg.norm(fd)

    def test_batch_distances(self, rng):
        pts = real_points(rng, 20, 3)
        d = POINCARE_BALL.distances(pts[0], pts)
        np.testing.assert_allclose(d, [poincare_distance(pts[0], p) for p in pts], atol=1e-12)
        np.testing.assert_allclose(POINCARE_BALL.pairwise_distances(pts)[0], d, atol=1e-12)


class TestTraining:
    def test_deterministic(self):
        g = balanced_tree(2, 3)
        a, la = poincare_rsgd_train(g, TrainConfig(dim=3, epochs=20, seed=2))
        b, lb = poincare_rsgd_train(g, TrainConfig(dim=3, epochs=20, seed=2))
        assert np.array_equal(a.points, b.points) and la == lb
        assert a.points.shape == (g.num_nodes, 6) and a.points.dtype == np.float64

    def test_small_tree(self):
        g = balanced_tree(3, 2)
        table, _ = poincare_rsgd_train(g, TrainConfig(dim=10, epochs=300))
        assert evaluate(table, RankingTask("reconstruction", g)).map >= 0.95
        assert np.max(np.sum(table.points**2, axis=1)) < 1

    def test_rejects_quadratic_mode(self):
        with pytest.raises(ValueError):
            poincare_rsgd_train(balanced_tree(2, 1), TrainConfig(metric_mode="quadratic_form", epochs=1))

    def test_checkpoint(self, tmp_path):
        g = balanced_tree(2, 2)
        table, _ = poincare_rsgd_train(g, TrainConfig(dim=2, epochs=5))
        save_checkpoint(table, g.tokens, tmp_path / "p.txt")
        assert (tmp_path / "p.txt").read_text().splitlines()[0] == "poincare-v1 7 4"
        back = load_checkpoint(tmp_path / "p.txt")
        assert back.model == "poincare" and back.points.tobytes() == table.points.tobytes()
