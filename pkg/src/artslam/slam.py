"""Planar-robot EKF-SLAM with articulated, static and constant-velocity maps.

All three filters share the same robot motion model (velocity model with a
straight-line branch near zero turn rate), the same control noise
projection and the same depth observation model

    z = R(theta)^T (m - (x, y, 0))

They differ only in how a landmark is parameterized in the joint state:

* :class:`ArticulatedEKFSLAM` stores the motion variables ``[q, q', ...]`` of
  each landmark's committed articulation model. Landmarks are routed through
  model selection until a model is committed.
* :class:`EKFSLAM` stores a fixed 3D position per landmark.
* :class:`DynamicEKFSLAM` stores position and velocity and propagates with
  ``m_t = m_{t-1} + (m_{t-1} - m_{t-2})``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import selection, temporal
from .errors import SingularInnovation, UnknownLandmark
from .geometry import Model

#: turn rates below this use the straight-line motion model
OMEGA_EPS = 1e-6


@dataclass(frozen=True)
class ControlInput:
    v: float
    omega: float
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")


@dataclass
class NoiseParams:
    alphas: tuple = (0.05, 0.01, 0.01, 0.05)
    obs_cov: np.ndarray = field(default_factory=lambda: 0.04 * np.eye(3))

    def __post_init__(self):
        self.alphas = tuple(float(a) for a in self.alphas)
        if len(self.alphas) != 4 or min(self.alphas) < 0:
            raise ValueError("need four nonnegative control noise coefficients")
        self.obs_cov = np.asarray(self.obs_cov, dtype=float).reshape(3, 3)


def wrap_angle(a):
    """Map an angle into (-pi, pi]."""
    w = np.mod(a + np.pi, 2 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w) if np.ndim(w) else (np.pi if w == -np.pi else float(w))


def rot_z(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def robot_propagate(pose, u):
    x, y, th = pose
    v, w, dt = u.v, u.omega, u.dt
    if abs(w) < OMEGA_EPS:
        return np.array([x + v * dt * np.cos(th), y + v * dt * np.sin(th), wrap_angle(th + w * dt)])
    h = 0.5 * w * dt
    chord = v * dt * _sinc(h)[0]
    return np.array([x + chord * np.cos(th + h), y + chord * np.sin(th + h), wrap_angle(th + w * dt)])


def robot_jacobians(pose, u):
    """Jacobians of :func:`robot_propagate` w.r.t. the pose (G) and (v, omega) (V)."""
    _, _, th = pose
    v, w, dt = u.v, u.omega, u.dt
    c, s = np.cos(th), np.sin(th)
    if abs(w) < OMEGA_EPS:
        G = np.array([[1.0, 0.0, -v * dt * s], [0.0, 1.0, v * dt * c], [0.0, 0.0, 1.0]])
        # straight-line limit of the arc model derivatives
        V = np.array([[dt * c, -0.5 * v * dt * dt * s],
                      [dt * s, 0.5 * v * dt * dt * c],
                      [0.0, dt]])
        return G, V
    # half-angle form of the arc terms, free of cancellation as omega -> 0
    h = 0.5 * w * dt
    sh, dsh = _sinc(h)
    ch, sm = np.cos(th + h), np.sin(th + h)
    G = np.array([[1.0, 0.0, -v * dt * sm * sh],
                  [0.0, 1.0, v * dt * ch * sh],
                  [0.0, 0.0, 1.0]])
    k = 0.5 * v * dt * dt
    V = np.array([[dt * ch * sh, k * (ch * dsh - sm * sh)],
                  [dt * sm * sh, k * (sm * dsh + ch * sh)],
                  [0.0, dt]])
    return G, V


def _sinc(h):
    """sin(h)/h and its derivative, with series near zero."""
    if abs(h) < 1e-3:
        h2 = h * h
        return 1.0 - h2 / 6.0 + h2 * h2 / 120.0, -h / 3.0 + h * h2 / 30.0
    return np.sin(h) / h, (h * np.cos(h) - np.sin(h)) / (h * h)


def control_noise_cov(u, p):
    a1, a2, a3, a4 = p.alphas
    v2, w2 = u.v ** 2, u.omega ** 2
    return np.diag([a1 * v2 + a2 * w2, a3 * v2 + a4 * w2])


def predict_observation(pose, m):
    x, y, th = pose
    return rot_z(th).T @ (np.asarray(m, dtype=float) - np.array([x, y, 0.0]))


def observation_robot_jacobian(pose, m):
    """d predict_observation / d (x, y, theta)."""
    x, y, th = pose
    c, s = np.cos(th), np.sin(th)
    Rt = rot_z(th).T
    dRt = np.array([[-s, c, 0.0], [-c, -s, 0.0], [0.0, 0.0, 0.0]])
    d = np.asarray(m, dtype=float) - np.array([x, y, 0.0])
    return np.column_stack([-Rt[:, 0], -Rt[:, 1], dRt @ d])


def sensor_to_world(pose, z):
    x, y, th = pose
    return rot_z(th) @ np.asarray(z, dtype=float) + np.array([x, y, 0.0])


def sensor_to_world_jacobian(pose, z):
    """d sensor_to_world / d (x, y, theta)."""
    _, _, th = pose
    c, s = np.cos(th), np.sin(th)
    zx, zy = z[0], z[1]
    return np.array([[1.0, 0.0, -s * zx - c * zy], [0.0, 1.0, c * zx - s * zy], [0.0, 0.0, 0.0]])


def observation_jacobian(pose, config, q_state):
    """Observation rows for one articulated landmark.

    Returns the 3x3 robot block and the 3xn block over the landmark's motion
    state; only the ``q`` column is nonzero.
    """
    q = q_state[0]
    m = config.forward(q)
    Hl = np.zeros((3, len(q_state)))
    Hl[:, 0] = rot_z(pose[2]).T @ config.jacobian(q)
    return observation_robot_jacobian(pose, m), Hl


class _JointEKF:
    """Joint robot+landmark EKF; subclasses define the landmark parameterization."""

    def __init__(self, noise=None, pose=(0.0, 0.0, 0.0), pose_cov=None):
        self.noise = noise if noise is not None else NoiseParams()
        self.x = np.asarray(pose, dtype=float).copy()
        self.P = np.zeros((3, 3)) if pose_cov is None else np.asarray(pose_cov, dtype=float).copy()
        self.slots = {}
        self.skipped = 0

    @property
    def pose(self):
        return self.x[:3].copy()

    @property
    def pose_cov(self):
        return self.P[:3, :3].copy()

    def __contains__(self, lid):
        return lid in self.slots

    def landmark_state(self, lid):
        i, n = self.slots[lid]
        return self.x[i:i + n].copy()

    # hooks ------------------------------------------------------------
    def _landmark_transition(self, lid, dt):
        """(F, Q) for one landmark block, or None when it does not move."""
        return None

    def _landmark_point(self, lid, xl):
        """World position of a landmark and its Jacobian w.r.t. the block."""
        raise NotImplementedError

    def _observation_cov(self, lid, pose):
        return self.noise.obs_cov

    # core -------------------------------------------------------------
    def _augment(self, lid, mean, cov, cross=None):
        mean = np.asarray(mean, dtype=float)
        n0, k = len(self.x), len(mean)
        P = np.zeros((n0 + k, n0 + k))
        P[:n0, :n0] = self.P
        P[n0:, n0:] = cov
        if cross is not None:
            P[n0:, :n0] = cross
            P[:n0, n0:] = cross.T
        self.x = np.concatenate([self.x, mean])
        self.P = P
        self.slots[lid] = (n0, k)

    def predict(self, u):
        G, V = robot_jacobians(self.x[:3], u)
        N = V @ control_noise_cov(u, self.noise) @ V.T
        n = len(self.x)
        F = np.eye(n)
        F[:3, :3] = G
        Q = np.zeros((n, n))
        Q[:3, :3] = N
        self.x[:3] = robot_propagate(self.x[:3], u)
        for lid, (i, k) in self.slots.items():
            tr = self._landmark_transition(lid, u.dt)
            if tr is None:
                continue
            Fl, Ql = tr
            F[i:i + k, i:i + k] = Fl
            Q[i:i + k, i:i + k] = Ql
            self.x[i:i + k] = Fl @ self.x[i:i + k]
        P = F @ self.P @ F.T + Q
        self.P = 0.5 * (P + P.T)

    def update(self, lid, z):
        """Sequential EKF correction with one observation of a known landmark."""
        i, k = self.slots[lid]
        pose = self.x[:3]
        m, dm = self._landmark_point(lid, self.x[i:i + k])
        Hr = observation_robot_jacobian(pose, m)
        Hl = rot_z(pose[2]).T @ dm
        nu = np.asarray(z, dtype=float) - predict_observation(pose, m)
        PHt = self.P[:, :3] @ Hr.T + self.P[:, i:i + k] @ Hl.T
        S = Hr @ PHt[:3] + Hl @ PHt[i:i + k] + self._observation_cov(lid, pose)
        S = 0.5 * (S + S.T)
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            self.skipped += 1
            raise SingularInnovation(f"innovation covariance of landmark {lid!r} is singular")
        K = np.linalg.solve(L.T, np.linalg.solve(L, PHt.T)).T
        self.x = self.x + K @ nu
        self.x[2] = wrap_angle(self.x[2])
        P = self.P - K @ S @ K.T
        self.P = 0.5 * (P + P.T)
        return nu, S

    def _inverse_observation(self, z):
        """World point for ``z`` with its covariance and cross-covariance to the state."""
        pose = self.x[:3]
        Jp = sensor_to_world_jacobian(pose, z)
        R = rot_z(pose[2])
        mean = sensor_to_world(pose, z)
        cross = Jp @ self.P[:3, :]
        cov = Jp @ self.P[:3, :3] @ Jp.T + R @ self.noise.obs_cov @ R.T
        return mean, 0.5 * (cov + cov.T), cross

    def _try_update(self, lid, z):
        try:
            self.update(lid, z)
            return True
        except SingularInnovation:
            return False


class EKFSLAM(_JointEKF):
    """Standard EKF-SLAM with static 3D landmark positions in the state."""

    def __init__(self, noise=None, pose=(0.0, 0.0, 0.0), pose_cov=None, auto_enroll=True):
        super().__init__(noise, pose, pose_cov)
        self.auto_enroll = auto_enroll

    def _landmark_point(self, lid, xl):
        return xl, np.eye(3)

    def add_landmark(self, lid, mean, cov, cross=None):
        self._augment(lid, mean, cov, cross)

    def step(self, u, obs):
        self.predict(u)
        for lid, z in obs:
            if lid in self.slots:
                self._try_update(lid, z)
            elif self.auto_enroll:
                mean, cov, cross = self._inverse_observation(z)
                self._augment(lid, mean, cov, cross)
            else:
                raise UnknownLandmark(f"landmark {lid!r} is not in the map")


class DynamicEKFSLAM(_JointEKF):
    """EKF-SLAM whose landmarks follow a constant-velocity model.

    ``accel_var`` is the white acceleration variance driving each landmark's
    velocity; new landmarks start at rest with velocity variance ``vel_var``.
    """

    def __init__(self, noise=None, pose=(0.0, 0.0, 0.0), pose_cov=None,
                 accel_var=0.01, vel_var=0.01, auto_enroll=True):
        super().__init__(noise, pose, pose_cov)
        self.accel_var = accel_var
        self.vel_var = vel_var
        self.auto_enroll = auto_enroll
        self._tr_cache = {}

    def _landmark_transition(self, lid, dt):
        if dt not in self._tr_cache:
            I = np.eye(3)
            F = np.block([[I, dt * I], [np.zeros((3, 3)), I]])
            Q = self.accel_var * np.block([[dt ** 4 / 4 * I, dt ** 3 / 2 * I],
                                           [dt ** 3 / 2 * I, dt ** 2 * I]])
            self._tr_cache[dt] = (F, Q)
        return self._tr_cache[dt]

    def _landmark_point(self, lid, xl):
        return xl[:3], np.hstack([np.eye(3), np.zeros((3, 3))])

    def step(self, u, obs):
        self.predict(u)
        for lid, z in obs:
            if lid in self.slots:
                self._try_update(lid, z)
            elif self.auto_enroll:
                mean, cov, cross = self._inverse_observation(z)
                full_cov = np.zeros((6, 6))
                full_cov[:3, :3] = cov
                full_cov[3:, 3:] = self.vel_var * np.eye(3)
                full_cross = np.vstack([cross, np.zeros((3, len(self.x)))])
                self._augment(lid, np.concatenate([mean, np.zeros(3)]), full_cov, full_cross)
            else:
                raise UnknownLandmark(f"landmark {lid!r} is not in the map")


@dataclass
class Action:
    """What the articulated filter did with one observation."""
    landmark_id: object
    kind: str  # "select", "commit" or "update"
    event: object = None


class ArticulatedEKFSLAM(_JointEKF):
    """EKF-SLAM over the motion variables of articulated landmarks.

    Observations of a landmark without a committed model go to its
    model-selection bank (as world points, using the current pose estimate).
    On commit the landmark's motion state joins the joint state with the
    committed candidate's mean and covariance.

    The fitted structure (rest point, axis, circle) is held fixed, but its
    points were placed with the drifting pose estimate. With ``anchor`` set,
    each landmark block is ``[q, ..., q^(n-1), dx, dy, dz]``: a constant 3D
    offset of the whole structure follows the motion state, so
    ``m = forward(q) + d``. The offset starts at zero with the pose-induced
    covariance of the buffered points (and their cross-covariance with the
    current state, as in a standard landmark initialization) plus the sensor
    covariance scaled by ``dof / N``. Without ``anchor`` the block is the
    motion state alone.
    """

    STRUCTURE_DOF = {Model.STATIC: 1, Model.PRISMATIC: 2, Model.REVOLUTE: 3}

    def __init__(self, params=None, noise=None, pose=(0.0, 0.0, 0.0), pose_cov=None,
                 prior=None, auto_enroll=True, anchor=True, anchor_drift=0.0):
        super().__init__(noise, pose, pose_cov)
        self.anchor_drift = anchor_drift
        self.params = params if params is not None else selection.SelectionParams()
        self.prior = prior
        self.auto_enroll = auto_enroll
        self.anchor = anchor
        self.t = 0.0
        self.beliefs = {}
        self.buffers = {}
        self.entries = {}
        self.events = []
        self._point_stats = {}

    def enroll(self, lid):
        self.beliefs[lid] = selection.init_belief(len(selection.MODELS), self.prior)
        self.buffers[lid] = selection.TrackBuffer(lid)
        self._point_stats[lid] = [np.zeros((3, 3)), np.zeros((3, 3))]

    def _landmark_transition(self, lid, dt):
        config, tm = self.entries[lid]
        if tm.dt != dt:
            tm = temporal.build_transition(tm.n, dt, tm.noise_scale)
            self.entries[lid] = (config, tm)
        if not self.anchor:
            return tm.A, tm.Q
        k = tm.n + 3
        F, Q = np.eye(k), np.zeros((k, k))
        F[:tm.n, :tm.n] = tm.A
        Q[:tm.n, :tm.n] = tm.Q
        if config.model is not Model.STATIC:
            Q[tm.n:, tm.n:] = self.anchor_drift * dt * np.eye(3)
        return F, Q

    def _landmark_point(self, lid, xl):
        config, tm = self.entries[lid]
        dm = np.zeros((3, len(xl)))
        dm[:, 0] = config.jacobian(xl[0])
        m = config.forward(xl[0])
        if self.anchor:
            dm[:, tm.n:] = np.eye(3)
            m = m + xl[tm.n:]
        return m, dm

    def landmark_position(self, lid):
        i, k = self.slots[lid]
        return self._landmark_point(lid, self.x[i:i + k])[0]

    def commit(self, lid, candidate):
        self.entries[lid] = (candidate.config, candidate.transition)
        mean, cov = candidate.state.mean, candidate.state.cov
        if not self.anchor:
            self._augment(lid, mean, cov)
            return
        n = len(mean)
        jp_sum, sensor_sum = self._point_stats[lid]
        count = len(self.buffers[lid])
        Jp = jp_sum / count
        dof = self.STRUCTURE_DOF[candidate.config.model]
        offset_cov = Jp @ self.P[:3, :3] @ Jp.T + sensor_sum / count * (dof / count)
        full = np.zeros((n + 3, n + 3))
        full[:n, :n] = cov
        full[n:, n:] = offset_cov
        cross = np.zeros((n + 3, len(self.x)))
        cross[n:] = Jp @ self.P[:3, :]
        self._augment(lid, np.concatenate([mean, np.zeros(3)]), full, cross)

    def committed_config(self, lid):
        return self.entries[lid][0]

    def predict(self, u):
        super().predict(u)
        self.t += u.dt

    def observe(self, lid, z):
        """Route one observation to the joint update or to model selection."""
        if lid in self.slots:
            self._try_update(lid, z)
            return Action(lid, "update")
        if lid not in self.beliefs:
            if not self.auto_enroll:
                raise UnknownLandmark(f"landmark {lid!r} was never enrolled")
            self.enroll(lid)
        pose = self.x[:3]
        Jp = sensor_to_world_jacobian(pose, z)
        R = rot_z(pose[2])
        sensor_part = R @ self.noise.obs_cov @ R.T
        stats = self._point_stats[lid]
        stats[0] += Jp
        stats[1] += sensor_part
        belief, event = selection.step_track(
            self.beliefs[lid], self.buffers[lid], (self.t, sensor_to_world(pose, z)), self.params,
            obs_cov=Jp @ self.P[:3, :3] @ Jp.T + sensor_part)
        self.beliefs[lid] = belief
        if event is None:
            return Action(lid, "select")
        self.events.append(event)
        self.commit(lid, belief.committed_candidate())
        return Action(lid, "commit", event)

    def step(self, u, obs):
        """Advance one time step; returns the per-observation :class:`Action` list."""
        self.predict(u)
        return [self.observe(lid, z) for lid, z in obs]
