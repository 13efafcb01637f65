import numpy as np
import pytest

from hgct import kernels
from hgct.geom import random_rotation


class TestCrossImplementation:
    """The numba and numpy paths must agree on every kernel."""

    def setup_method(self):
        self.impls = kernels.implementations()

    def test_gamma_matrix_paths_agree(self, rng):
        if "numba" not in self.impls:
            pytest.skip("numba path disabled")
        src = rng.uniform(-1, 1, (40, 3))
        tgt = rng.uniform(-1, 1, (40, 3))
        a = self.impls["numpy"]["gamma_matrix"](src, tgt, 0.3)
        b = self.impls["numba"]["gamma_matrix"](src, tgt, 0.3)
        assert np.max(np.abs(a - b)) < 1e-14

    def test_mae_scores_paths_agree(self, rng):
        if "numba" not in self.impls:
            pytest.skip("numba path disabled")
        rots = np.stack([random_rotation(rng) for _ in range(6)])
        trans = rng.normal(size=(6, 3))
        src = rng.uniform(-1, 1, (100, 3))
        tgt = rng.uniform(-1, 1, (100, 3))
        a = self.impls["numpy"]["mae_scores"](rots, trans, src, tgt, 0.5)
        b = self.impls["numba"]["mae_scores"](rots, trans, src, tgt, 0.5)
        assert np.max(np.abs(a - b)) < 1e-10

    def test_nms_paths_agree(self, rng):
        if "numba" not in self.impls:
            pytest.skip("numba path disabled")
        pts = rng.uniform(-1, 1, (60, 3))
        order = rng.permutation(60)
        a = self.impls["numpy"]["nms_select"](pts, order, 0.3)
        b = self.impls["numba"]["nms_select"](pts, order.astype(np.int64), 0.3)
        assert np.array_equal(a, b)


class TestContracts:
    def test_gamma_symmetric_zero_diag(self, rng):
        src = rng.uniform(-1, 1, (25, 3))
        tgt = rng.uniform(-1, 1, (25, 3))
        g = kernels.gamma_matrix(src, tgt, 0.4)
        assert np.array_equal(g, g.T)
        assert np.all(np.diag(g) == 0)
        assert np.all((g >= 0) & (g <= 1))

    def test_mae_score_bounds(self, rng):
        rots = np.stack([random_rotation(rng) for _ in range(4)])
        trans = rng.normal(size=(4, 3))
        src = rng.uniform(-1, 1, (50, 3))
        tgt = rng.uniform(-1, 1, (50, 3))
        s = kernels.mae_scores(rots, trans, src, tgt, 0.2)
        assert np.all((s >= 0) & (s <= 50))

    def test_nms_first_in_order_always_kept(self, rng):
        pts = rng.uniform(-1, 1, (30, 3))
        order = rng.permutation(30)
        keep = kernels.nms_select(pts, order, 0.5)
        assert keep[order[0]]

    def test_nms_no_two_kept_within_radius(self, rng):
        pts = rng.uniform(-1, 1, (50, 3))
        keep = kernels.nms_select(pts, np.arange(50), 0.4)
        kept = np.flatnonzero(keep)
        for a in range(len(kept)):
            for b in range(a + 1, len(kept)):
                assert np.linalg.norm(pts[kept[a]] - pts[kept[b]]) > 0.4
