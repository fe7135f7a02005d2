"""Trajectory error metrics.

Both metrics compare planar pose series ``(x, y, theta)`` in a shared world
frame; no alignment is applied since estimate and truth start from the same
known pose.
"""

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch


def _poses(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[1] < 2:
        raise ValueError(f"expected an (N, 2) or (N, 3) pose array, got shape {a.shape}")
    if a.shape[1] == 2:
        a = np.column_stack([a, np.zeros(len(a))])
    return a[:, :3]


def _check(est, truth):
    est, truth = _poses(est), _poses(truth)
    if len(est) != len(truth):
        raise LengthMismatch(f"estimate has {len(est)} poses, truth has {len(truth)}")
    return est, truth


def ate_series(est, truth):
    est, truth = _check(est, truth)
    return np.hypot(est[:, 0] - truth[:, 0], est[:, 1] - truth[:, 1])


def compute_ate(est, truth):
    """RMSE of planar position error."""
    e = ate_series(est, truth)
    if len(e) == 0:
        raise LengthMismatch("empty pose series")
    return float(np.sqrt(np.mean(e ** 2)))


def relative_motion(a, b):
    """SE(2) motion taking pose ``a`` to pose ``b``, expressed in ``a``'s frame."""
    c, s = np.cos(a[..., 2]), np.sin(a[..., 2])
    dx, dy = b[..., 0] - a[..., 0], b[..., 1] - a[..., 1]
    return np.stack([c * dx + s * dy, -s * dx + c * dy, b[..., 2] - a[..., 2]], axis=-1)


def rpe_series(est, truth, delta=1):
    est, truth = _check(est, truth)
    if len(est) <= delta:
        raise LengthMismatch(f"need more than {delta} poses, got {len(est)}")
    de = relative_motion(est[:-delta], est[delta:])
    dt = relative_motion(truth[:-delta], truth[delta:])
    # translation of dt^-1 * de
    c, s = np.cos(dt[:, 2]), np.sin(dt[:, 2])
    ex, ey = de[:, 0] - dt[:, 0], de[:, 1] - dt[:, 1]
    return np.hypot(c * ex + s * ey, -s * ex + c * ey)


def compute_rpe(est, truth, delta=1):
    """RMSE of the translational relative pose error over ``delta`` steps."""
    e = rpe_series(est, truth, delta)
    return float(np.sqrt(np.mean(e ** 2)))


@dataclass
class Metrics:
    ate_rmse: float
    rpe_rmse: float
    ate_series: np.ndarray
    rpe_series: np.ndarray

    @classmethod
    def from_poses(cls, est, truth, delta=1):
        a = ate_series(est, truth)
        r = rpe_series(est, truth, delta)
        return cls(float(np.sqrt(np.mean(a ** 2))), float(np.sqrt(np.mean(r ** 2))), a, r)

    def to_dict(self):
        return {"ate_rmse": self.ate_rmse, "rpe_rmse": self.rpe_rmse}
