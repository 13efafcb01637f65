"""Core geometric types, the SVD rigid solver, residuals, and pose-error metrics."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateInput

# Relative singular-value cutoff below which the cross-covariance is treated
# as rank-deficient (collinear or coincident points).
RANK_EPS = 1e-12


@dataclass(frozen=True)
class Point3:
    """A 3D point in meters."""

    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @staticmethod
    def from_array(a) -> "Point3":
        return Point3(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class Correspondence:
    """A putative match pairing a source point with a target point."""

    src: Point3
    tgt: Point3
    feat: Optional[np.ndarray] = None


@dataclass(frozen=True)
class RigidTransform:
    """Rotation (3x3, orthonormal, det +1) and translation (3-vector, meters)."""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "R", np.asarray(self.R, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=np.float64).reshape(3))

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    def apply(self, pts: np.ndarray) -> np.ndarray:
        """Apply to an (N, 3) array (or a single 3-vector)."""
        pts = np.asarray(pts, dtype=np.float64)
        return pts @ self.R.T + self.t

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Apply `other` first, then `self`."""
        return RigidTransform(self.R @ other.R, self.R @ other.t + self.t)

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.R.T, -self.R.T @ self.t)

    def matrix4(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.R
        m[:3, 3] = self.t
        return m

    def is_valid(self, tol: float = 1e-9) -> bool:
        ortho = np.max(np.abs(self.R.T @ self.R - np.eye(3))) <= tol
        det = abs(np.linalg.det(self.R) - 1.0) <= tol
        return bool(ortho and det and np.all(np.isfinite(self.t)))


class CorrSet:
    """A correspondence set stored as flat arrays.

    src, tgt: (N, 3) float64. feat: optional (N, D). gt: optional ground-truth
    RigidTransform. labels: optional boolean inlier flags.
    """

    def __init__(self, src, tgt, feat=None, gt: Optional[RigidTransform] = None,
                 labels=None):
        self.src = np.ascontiguousarray(src, dtype=np.float64)
        self.tgt = np.ascontiguousarray(tgt, dtype=np.float64)
        if self.src.shape != self.tgt.shape or self.src.ndim != 2 or self.src.shape[1] != 3:
            raise ValueError("src/tgt must both be (N, 3)")
        self.feat = None if feat is None else np.ascontiguousarray(feat, dtype=np.float64)
        if self.feat is not None and len(self.feat) != len(self.src):
            raise ValueError("feat length mismatch")
        self.gt = gt
        self.labels = None if labels is None else np.asarray(labels, dtype=bool)
        if self.labels is not None and len(self.labels) != len(self.src):
            raise ValueError("labels length mismatch")

    def __len__(self) -> int:
        return len(self.src)

    def correspondence(self, i: int) -> Correspondence:
        feat = None if self.feat is None else self.feat[i]
        return Correspondence(Point3.from_array(self.src[i]),
                              Point3.from_array(self.tgt[i]), feat)

    def permuted(self, perm) -> "CorrSet":
        perm = np.asarray(perm)
        return CorrSet(self.src[perm], self.tgt[perm],
                       None if self.feat is None else self.feat[perm],
                       self.gt,
                       None if self.labels is None else self.labels[perm])


def _as_points(pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("expected an (N, 3) point array")
    return pts


def kabsch_svd(src, tgt, weights=None) -> RigidTransform:
    """Weighted least-squares rigid fit mapping src points onto tgt points.

    Centroid subtraction, 3x3 cross-covariance, SVD; if det(U V^T) < 0 the
    last singular column is negated (reflection fix).

    Input:
        - src, tgt: (K, 3) paired points, K >= 3
        - weights: optional (K,) nonnegative, >= 3 strictly positive entries
    Raises:
        DegenerateInput if the centered cross-covariance has rank < 2.
    """
    src = _as_points(src)
    tgt = _as_points(tgt)
    if src.shape != tgt.shape:
        raise ValueError("src/tgt shape mismatch")
    k = len(src)
    if k < 3:
        raise DegenerateInput(f"need >= 3 point pairs, got {k}")
    if weights is None:
        w = np.full(k, 1.0 / k)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (k,) or np.any(w < 0):
            raise ValueError("weights must be a nonnegative (K,) vector")
        if np.count_nonzero(w > 0) < 3:
            raise DegenerateInput("need >= 3 strictly positive weights")
        w = w / np.sum(w)

    c_src = w @ src
    c_tgt = w @ tgt
    ps = src - c_src
    pt = tgt - c_tgt
    cov = (pt * w[:, None]).T @ ps  # maps source deviations to target side
    u, s, vt = np.linalg.svd(cov)
    if s[0] <= 0.0 or s[1] < RANK_EPS * s[0]:
        raise DegenerateInput("cross-covariance rank < 2 (collinear or coincident points)")
    if np.linalg.det(u @ vt) < 0.0:
        u = u.copy()
        u[:, -1] = -u[:, -1]
    rot = u @ vt
    t = c_tgt - rot @ c_src
    return RigidTransform(rot, t)


def residual(transform: RigidTransform, c: Correspondence) -> float:
    """Euclidean reprojection distance ||R p_src + t - p_tgt|| in meters."""
    p = transform.R @ c.src.as_array() + transform.t - c.tgt.as_array()
    return float(np.sqrt(p @ p))


def residuals(transform: RigidTransform, src, tgt) -> np.ndarray:
    """Vectorized residuals for (N, 3) src/tgt arrays."""
    d = _as_points(src) @ transform.R.T + transform.t - _as_points(tgt)
    return np.sqrt(np.sum(d * d, axis=1))


def rotation_error_deg(r_est, r_gt) -> float:
    """Geodesic rotation error of R_gt^T R_est in degrees.

    The angle satisfies cos = (trace - 1)/2 and sin = ||skew part||; it is
    evaluated with atan2 because the bare arccos of the clamped trace has a
    ~1.5e-6 degree quantization floor in double precision near zero, which
    would swamp exact-recovery measurements.
    """
    r_est = np.asarray(r_est, dtype=np.float64)
    r_gt = np.asarray(r_gt, dtype=np.float64)
    m = r_gt.T @ r_est
    cos_t = np.clip((np.trace(m) - 1.0) / 2.0, -1.0, 1.0)
    sin_t = 0.5 * np.sqrt((m[2, 1] - m[1, 2]) ** 2 + (m[0, 2] - m[2, 0]) ** 2
                          + (m[1, 0] - m[0, 1]) ** 2)
    return float(np.degrees(np.arctan2(sin_t, cos_t)))


def translation_error(t_est, t_gt) -> float:
    """Euclidean distance between translations, in meters."""
    d = np.asarray(t_est, dtype=np.float64) - np.asarray(t_gt, dtype=np.float64)
    return float(np.sqrt(d @ d))


def pose_errors(est: RigidTransform, gt: RigidTransform):
    return rotation_error_deg(est.R, gt.R), translation_error(est.t, gt.t)


def random_rotation(rng, max_angle_deg: float = 180.0) -> np.ndarray:
    """Rotation by a uniform angle in [0, max] about a uniform random axis."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = np.radians(rng.uniform(0.0, max_angle_deg))
    return rotation_about_axis(axis, angle)


def rotation_about_axis(axis, angle_rad: float) -> np.ndarray:
    """Rodrigues' formula for a unit axis and angle in radians."""
    axis = np.asarray(axis, dtype=np.float64)
    kx, ky, kz = axis
    k_cross = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    return np.eye(3) + np.sin(angle_rad) * k_cross + (1.0 - np.cos(angle_rad)) * (k_cross @ k_cross)


def inlier_labels(corrs: CorrSet, gt: RigidTransform, theta_inlier: float) -> np.ndarray:
    """Inlier flags: residual under the ground-truth transform below theta_inlier."""
    return residuals(gt, corrs.src, corrs.tgt) < theta_inlier
