import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hgct.errors import DegenerateInput
from hgct.geom import (Correspondence, CorrSet, Point3, RigidTransform,
                       kabsch_svd, random_rotation, residual, residuals,
                       rotation_about_axis, rotation_error_deg,
                       translation_error)


def _corr(src, tgt):
    return Correspondence(Point3.from_array(np.asarray(src, float)),
                          Point3.from_array(np.asarray(tgt, float)))


class TestKabsch:
    def test_identity_on_fixed_points(self):
        pts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
        t = kabsch_svd(pts, pts)
        assert np.allclose(t.R, np.eye(3), atol=1e-12)
        assert np.allclose(t.t, 0.0, atol=1e-12)

    def test_pure_translation(self):
        pts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
        shift = np.array([1.0, 2.0, 3.0])
        t = kabsch_svd(pts, pts + shift)
        assert np.allclose(t.R, np.eye(3), atol=1e-12)
        assert np.allclose(t.t, shift, atol=1e-12)

    def test_generate_and_recover(self, rng):
        # noise-free oracle: apply a known transform, expect exact recovery
        for trial in range(20):
            rot = random_rotation(rng)
            tr = rng.normal(size=3)
            src = rng.uniform(-1, 1, (6, 3))
            tgt = src @ rot.T + tr
            est = kabsch_svd(src, tgt)
            assert np.max(np.abs(est.R - rot)) < 1e-9
            assert np.linalg.norm(est.t - tr) < 1e-9

    def test_weighted_ignores_zero_weight_outlier(self, rng):
        rot = random_rotation(rng)
        tr = rng.normal(size=3)
        src = rng.uniform(-1, 1, (5, 3))
        tgt = src @ rot.T + tr
        src = np.vstack([src, [10.0, -3.0, 2.0]])
        tgt = np.vstack([tgt, [-7.0, 1.0, 0.5]])
        w = np.array([1.0, 1, 1, 1, 1, 0])
        est = kabsch_svd(src, tgt, weights=w)
        assert np.max(np.abs(est.R - rot)) < 1e-9

    def test_left_invariance(self, rng):
        # applying a rigid motion G to all targets composes exactly
        for _ in range(10):
            src = rng.uniform(-1, 1, (8, 3))
            tgt = rng.uniform(-1, 1, (8, 3))
            base = kabsch_svd(src, tgt)
            g = RigidTransform(random_rotation(rng), rng.normal(size=3))
            moved = kabsch_svd(src, g.apply(tgt))
            comp = g.compose(base)
            assert np.max(np.abs(moved.R - comp.R)) < 1e-8
            assert np.linalg.norm(moved.t - comp.t) < 1e-8

    def test_noise_free_residuals_tiny(self, rng):
        rot = random_rotation(rng)
        tr = rng.normal(size=3)
        src = rng.uniform(-1, 1, (4, 3))
        tgt = src @ rot.T + tr
        est = kabsch_svd(src, tgt)
        assert np.all(residuals(est, src, tgt) <= 1e-9)

    def test_collinear_raises(self):
        src = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]])
        with pytest.raises(DegenerateInput):
            kabsch_svd(src, src * 2.0 + 1.0)

    def test_coincident_raises(self):
        src = np.zeros((3, 3))
        with pytest.raises(DegenerateInput):
            kabsch_svd(src, src)

    def test_too_few_points_raises(self):
        src = np.array([[0.0, 0, 0], [1, 0, 0]])
        with pytest.raises(DegenerateInput):
            kabsch_svd(src, src)

    def test_too_few_positive_weights_raises(self):
        pts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
        with pytest.raises(DegenerateInput):
            kabsch_svd(pts, pts, weights=np.array([1.0, 1, 0, 0]))

    def test_planar_points_ok(self):
        # 3 points are always planar; rank-2 covariance must not be rejected
        pts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
        t = kabsch_svd(pts, pts)
        assert t.is_valid()

    def test_reflection_fixed(self, rng):
        for _ in range(20):
            src = rng.uniform(-1, 1, (6, 3))
            tgt = rng.uniform(-1, 1, (6, 3))
            est = kabsch_svd(src, tgt)
            assert est.is_valid(tol=1e-8)


class TestResidual:
    def test_zero_for_identity_match(self):
        c = _corr([0.3, -0.2, 1.0], [0.3, -0.2, 1.0])
        assert residual(RigidTransform.identity(), c) == 0.0

    def test_3_4_5(self):
        c = _corr([0, 0, 0], [0, 3, 4])
        assert residual(RigidTransform.identity(), c) == pytest.approx(5.0, abs=1e-14)

    def test_matches_hand_expansion(self, rng):
        rot = random_rotation(rng)
        tr = rng.normal(size=3)
        s = rng.normal(size=3)
        q = rng.normal(size=3)
        p = rot @ s + tr - q
        expected = np.sqrt(p[0] ** 2 + p[1] ** 2 + p[2] ** 2)
        got = residual(RigidTransform(rot, tr), _corr(s, q))
        assert got == pytest.approx(expected, abs=1e-14)

    @given(st.lists(st.floats(-10, 10), min_size=6, max_size=6))
    @settings(max_examples=200, deadline=None)
    def test_nonnegative(self, vals):
        c = _corr(vals[:3], vals[3:])
        assert residual(RigidTransform.identity(), c) >= 0.0


class TestPoseErrors:
    def test_zero_when_equal(self, rng):
        rot = random_rotation(rng)
        assert rotation_error_deg(rot, rot) == pytest.approx(0.0, abs=1e-6)

    def test_180_about_z(self):
        rz = rotation_about_axis([0, 0, 1], np.pi)
        assert rotation_error_deg(rz, np.eye(3)) == pytest.approx(180.0, abs=1e-9)

    def test_axis_angle_construction(self, rng):
        for _ in range(20):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            rot = rotation_about_axis(axis, np.radians(10.0))
            assert rotation_error_deg(rot, np.eye(3)) == pytest.approx(10.0, abs=1e-6)

    def test_symmetric_and_bounded(self, rng):
        for _ in range(50):
            a = random_rotation(rng)
            b = random_rotation(rng)
            re_ab = rotation_error_deg(a, b)
            re_ba = rotation_error_deg(b, a)
            assert re_ab == pytest.approx(re_ba, abs=1e-9)
            assert 0.0 <= re_ab <= 180.0

    def test_translation_error(self):
        assert translation_error([1, 2, 3], [1, 2, 3]) == 0.0
        assert translation_error([0, 0, 0], [0, 3, 4]) == pytest.approx(5.0)


class TestCorrSet:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            CorrSet(np.zeros((4, 2)), np.zeros((4, 2)))
        with pytest.raises(ValueError):
            CorrSet(np.zeros((4, 3)), np.zeros((5, 3)))
        with pytest.raises(ValueError):
            CorrSet(np.zeros((4, 3)), np.zeros((4, 3)), labels=[True])

    def test_permuted_roundtrip(self, rng):
        src = rng.normal(size=(6, 3))
        tgt = rng.normal(size=(6, 3))
        labels = rng.uniform(size=6) > 0.5
        cs = CorrSet(src, tgt, labels=labels)
        perm = rng.permutation(6)
        ps = cs.permuted(perm)
        assert np.array_equal(ps.src, src[perm])
        assert np.array_equal(ps.labels, labels[perm])
