"""Finite-order temporal models for the motion variable ``q``.

The filter state is ``[q, q', ..., q^(n-1)]`` (length ``n``) and evolves by a
truncated Taylor expansion driven by one scalar noise term::

    X(t+dt) = A X(t) + B eta,   A[i, j] = dt^(j-i) / (j-i)!,   B[i] = dt^(n-i) / (n-i)!

Naming: ``n`` is the state length. "Order k" elsewhere in the package means
the highest derivative modeled, i.e. ``n = k + 1`` (a "first order" model
tracks ``[q, q']``).
"""

from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import DimensionMismatch, InsufficientSamples, InvalidOrder, SingularInnovation

DEFAULT_STATE_DIM = 2
DEFAULT_NOISE_SCALE = 0.01
DEFAULT_SMOOTHING_SIGMA = 1.5


@dataclass(frozen=True, eq=False)
class TransitionModel:
    n: int
    dt: float
    A: np.ndarray
    B: np.ndarray
    noise_scale: float

    @property
    def Q(self):
        """Process noise covariance ``B * noise_scale * B^T``."""
        return self.noise_scale * np.outer(self.B, self.B)


def build_transition(n, dt, noise_scale=DEFAULT_NOISE_SCALE):
    if int(n) != n or n < 1:
        raise InvalidOrder(f"state dimension must be a positive integer, got {n}")
    if not dt > 0:
        raise InvalidOrder(f"dt must be positive, got {dt}")
    n = int(n)
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            A[i, j] = dt ** (j - i) / factorial(j - i)
    B = np.array([dt ** (n - i) / factorial(n - i) for i in range(n)])
    return TransitionModel(n, float(dt), A, B, float(noise_scale))


@dataclass(frozen=True, eq=False)
class MotionFilterState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.array(self.mean, dtype=float).reshape(-1))
        cov = np.array(self.cov, dtype=float).reshape(len(self.mean), len(self.mean))
        object.__setattr__(self, "cov", cov)

    @property
    def n(self):
        return len(self.mean)

    @property
    def q(self):
        return float(self.mean[0])


def gaussian_kernel(sigma, truncate=3.0, max_radius=None):
    radius = int(truncate * sigma + 0.5)
    if max_radius is not None:
        radius = min(radius, max_radius)
    x = np.arange(-radius, radius + 1)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(x, sigma, truncate=3.0):
    """Gaussian smoothing with point reflection at both ends.

    Reflecting through the end samples (``2 x[0] - x[k]``) rather than
    mirroring keeps linear trends intact, so derivatives at the newest
    sample are not flattened. Series shorter than the kernel get a
    truncated, renormalized kernel.
    """
    x = np.asarray(x, dtype=float)
    if sigma <= 0 or len(x) < 2:
        return x.copy()
    k = gaussian_kernel(sigma, truncate, max_radius=len(x) - 1)
    r = len(k) // 2
    head = 2 * x[0] - x[r:0:-1]
    tail = 2 * x[-1] - x[-2:-r - 2:-1]
    return np.convolve(np.concatenate([head, x, tail]), k, mode="valid")


def _newest_derivatives(t, s, n):
    """[s, s', ..., s^(n-1)] at the newest sample via backward divided differences."""
    out = [s[-1]]
    for k in range(1, n):
        tt = t[-(k + 1):]
        dd = s[-(k + 1):].copy()
        for level in range(1, k + 1):
            dd[level:] = (dd[level:] - dd[level - 1:-1]) / (tt[level:] - tt[:-level])
        out.append(factorial(k) * dd[-1])
    return np.array(out)


def init_from_samples(q_series, n=DEFAULT_STATE_DIM, smoothing_sigma=DEFAULT_SMOOTHING_SIGMA, q_var=0.0):
    """Initial filter state from a buffered series of ``(t, q)`` pairs.

    The series is Gaussian-smoothed (``smoothing_sigma`` in samples) and the
    derivatives are backward differences at the newest sample. Non-uniform
    spacing is handled with divided differences. The covariance is diagonal:
    ``q_var * (2 / dt)^(2k)`` for the k-th derivative.
    """
    data = np.asarray(q_series, dtype=float).reshape(-1, 2)
    if len(data) < n + 1:
        raise InsufficientSamples(f"state dimension {n} needs {n + 1} samples, got {len(data)}")
    t, q = data[:, 0], data[:, 1]
    if np.any(np.diff(t) <= 0):
        raise InsufficientSamples("sample times must be strictly increasing")
    s = gaussian_smooth(q, smoothing_sigma)
    mean = _newest_derivatives(t, s, n)
    dt = float(np.mean(np.diff(t)))
    cov = np.diag([q_var * (2.0 / dt) ** (2 * k) for k in range(n)])
    return MotionFilterState(mean, cov)


def ekf_predict(state, tm, steps=1):
    if state.n != tm.n:
        raise DimensionMismatch(f"state has dimension {state.n}, transition {tm.n}")
    x, P = state.mean, state.cov
    for _ in range(steps):
        x = tm.A @ x
        P = tm.A @ P @ tm.A.T + tm.Q
    return MotionFilterState(x, 0.5 * (P + P.T))


def observation_matrix(config, state):
    H = np.zeros((3, state.n))
    H[:, 0] = config.jacobian(state.q)
    return H


def ekf_update(state, config, z, obs_cov):
    """EKF correction with a 3D landmark observation.

    Returns
    -------
    state : MotionFilterState
    innovation : ndarray, shape (3,)
    S : ndarray, shape (3, 3)
    """
    R = np.asarray(obs_cov, dtype=float)
    if R.shape != (3, 3):
        raise DimensionMismatch(f"observation covariance must be 3x3, got {R.shape}")
    H = observation_matrix(config, state)
    P = state.cov
    innovation = np.asarray(z, dtype=float) - config.forward(state.q)
    PHt = P @ H.T
    S = H @ PHt + R
    S = 0.5 * (S + S.T)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is not positive definite") from exc
    K = np.linalg.solve(L.T, np.linalg.solve(L, PHt.T)).T
    mean = state.mean + K @ innovation
    P = P - K @ S @ K.T
    return MotionFilterState(mean, 0.5 * (P + P.T)), innovation, S


def observation_log_likelihood(innovation, S):
    """``log N(innovation; 0, S)``."""
    S = np.asarray(S, dtype=float)
    nu = np.asarray(innovation, dtype=float)
    try:
        L = np.linalg.cholesky(0.5 * (S + S.T))
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is not positive definite") from exc
    w = np.linalg.solve(L, nu)
    logdet = 2.0 * np.log(np.diag(L)).sum()
    return float(-0.5 * (w @ w + logdet + len(nu) * np.log(2 * np.pi)))


def ekf_update_direct(state, z, var):
    """Kalman correction with a direct scalar measurement of ``q``.

    Returns the updated state and the innovation.
    """
    P = state.cov
    s = P[0, 0] + var
    if not s > 0:
        raise SingularInnovation("innovation variance is not positive")
    K = P[:, 0] / s
    nu = float(z) - state.mean[0]
    cov = P - np.outer(K, P[0, :])
    return MotionFilterState(state.mean + K * nu, 0.5 * (cov + cov.T)), nu
