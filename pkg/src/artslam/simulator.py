"""Seeded dynamic worlds, robot trajectories and depth-sensor readings.

A scenario is a plain JSON document::

    {
      "kind": "dynamic_world",            # free-form tag
      "seed": 7,                          # drives control and sensor noise
      "dt": 0.1,
      "duration": 89.2,                   # must equal dt * total control steps
      "sensor": {"fov_half_angle": 0.785, "max_range": 4.0},
      "noise": {"alphas": [a1, a2, a3, a4], "obs_cov": [[...], [...], [...]]},
      "robot": {"initial_pose": [x, y, theta],
                "controls": [{"steps": 160, "v": 0.25, "omega": 0.0}, ...]},
      "landmarks": [
        {"id": 0, "config": {"model": "static", "rest": [x, y, z]},
         "schedule": {"kind": "constant", "q": 0.0}},
        {"id": 41, "config": {"model": "prismatic", "axis": [...], "origin": [...]},
         "schedule": {"kind": "linear", "q0": 0.0, "rate": 0.3}},
        {"id": 42, "config": {...},
         "schedule": {"kind": "scripted", "t": [...], "q": [...]}}
      ],
      "filters": {"min_samples": 20, ...}  # optional estimator settings
    }

Configs use the articulation ``to_dict`` layout, SI units throughout.
Scripted schedules interpolate linearly and must cover the full duration.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import OutOfSchedule, ScenarioError
from .rng import SplitMix64
from .slam import ControlInput, NoiseParams, control_noise_cov, predict_observation, robot_propagate

WORKSPACE = 10.0
HEIGHT_RANGE = (0.0, 2.0)


@dataclass(frozen=True)
class SensorSpec:
    fov_half_angle: float = math.pi / 4
    max_range: float = 4.0

    def __post_init__(self):
        if not 0 < self.fov_half_angle <= math.pi:
            raise ScenarioError(f"fov_half_angle must lie in (0, pi], got {self.fov_half_angle}")
        if not self.max_range > 0:
            raise ScenarioError(f"max_range must be positive, got {self.max_range}")


@dataclass(frozen=True)
class Schedule:
    kind: str
    q0: float = 0.0
    rate: float = 0.0
    t: tuple = ()
    q: tuple = ()

    def __call__(self, t):
        if self.kind == "constant":
            return self.q0
        if self.kind == "linear":
            return self.q0 + self.rate * t
        return float(np.interp(t, self.t, self.q))

    def to_dict(self):
        if self.kind == "constant":
            return {"kind": "constant", "q": self.q0}
        if self.kind == "linear":
            return {"kind": "linear", "q0": self.q0, "rate": self.rate}
        return {"kind": "scripted", "t": list(self.t), "q": list(self.q)}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind")
        if kind == "constant":
            return cls("constant", q0=float(d.get("q", 0.0)))
        if kind == "linear":
            return cls("linear", q0=float(d["q0"]), rate=float(d["rate"]))
        if kind == "scripted":
            t, q = tuple(map(float, d["t"])), tuple(map(float, d["q"]))
            if len(t) != len(q) or len(t) < 2 or np.any(np.diff(t) <= 0):
                raise ScenarioError("scripted schedule needs matching, increasing t and q arrays")
            return cls("scripted", t=t, q=q)
        raise ScenarioError(f"unknown schedule kind {kind!r}")


@dataclass(frozen=True, eq=False)
class LandmarkSpec:
    id: object
    config: geometry.ArticulationConfig
    schedule: Schedule

    def position(self, t):
        return self.config.forward(self.schedule(t))

    def to_dict(self):
        return {"id": self.id, "config": self.config.to_dict(), "schedule": self.schedule.to_dict()}


@dataclass(eq=False)
class Scenario:
    landmarks: list
    initial_pose: tuple
    controls: list  # (steps, v, omega) segments
    sensor: SensorSpec = field(default_factory=SensorSpec)
    noise: NoiseParams = field(default_factory=NoiseParams)
    dt: float = 0.1
    seed: int = 0
    kind: str = "custom"
    filters: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [lm.id for lm in self.landmarks]
        if len(set(ids)) != len(ids):
            raise ScenarioError("landmark ids must be unique")
        if not self.dt > 0:
            raise ScenarioError(f"dt must be positive, got {self.dt}")
        for seg in self.controls:
            if int(seg[0]) != seg[0] or seg[0] < 1:
                raise ScenarioError(f"control segment step counts must be positive integers, got {seg[0]}")
        for lm in self.landmarks:
            s = lm.schedule
            if s.kind == "scripted" and (s.t[0] > 0 or s.t[-1] < self.duration - 1e-9):
                raise ScenarioError(f"schedule of landmark {lm.id!r} does not cover the run")

    @property
    def n_steps(self):
        return int(sum(seg[0] for seg in self.controls))

    @property
    def duration(self):
        return self.n_steps * self.dt

    def commanded(self):
        """Commanded control for every step."""
        out = []
        for steps, v, w in self.controls:
            out.extend([ControlInput(float(v), float(w), self.dt)] * int(steps))
        return out

    def to_dict(self):
        return {
            "kind": self.kind,
            "seed": self.seed,
            "dt": self.dt,
            "duration": self.duration,
            "sensor": {"fov_half_angle": self.sensor.fov_half_angle, "max_range": self.sensor.max_range},
            "noise": {"alphas": list(self.noise.alphas), "obs_cov": self.noise.obs_cov.tolist()},
            "robot": {"initial_pose": list(self.initial_pose),
                      "controls": [{"steps": int(s), "v": v, "omega": w} for s, v, w in self.controls]},
            "landmarks": [lm.to_dict() for lm in self.landmarks],
            "filters": dict(self.filters),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        try:
            robot = d["robot"]
            sensor = SensorSpec(float(d["sensor"]["fov_half_angle"]), float(d["sensor"]["max_range"]))
            noise = NoiseParams(d["noise"]["alphas"], d["noise"]["obs_cov"])
            controls = [(int(c["steps"]), float(c["v"]), float(c["omega"])) for c in robot["controls"]]
            landmarks = [LandmarkSpec(lm["id"], geometry.config_from_dict(lm["config"]),
                                      Schedule.from_dict(lm["schedule"])) for lm in d["landmarks"]]
            sc = cls(landmarks, tuple(float(a) for a in robot["initial_pose"]), controls, sensor, noise,
                     float(d["dt"]), int(d.get("seed", 0)), str(d.get("kind", "custom")),
                     dict(d.get("filters", {})))
        except ScenarioError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ScenarioError(f"invalid scenario: {exc!r}") from exc
        if "duration" in d and abs(float(d["duration"]) - sc.duration) > 1e-9 * max(1.0, sc.duration):
            raise ScenarioError(f"duration {d['duration']} does not match {sc.n_steps} steps of {sc.dt}")
        return sc

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
        return cls.from_dict(d)


def _rounded_rectangle(x0, y0, side, corner, v, dt):
    """Counter-clockwise loop of four straights and four quarter turns.

    Returns the initial pose and the control segments. Each quarter turn
    takes a whole number of steps; the turn rate is adjusted to match.
    """
    s_steps = int(round((side - 2 * corner) / (v * dt)))
    turn_steps = int(round(0.5 * math.pi * corner / (v * dt)))
    w = (math.pi / 2) / (turn_steps * dt)
    segs = []
    for _ in range(4):
        segs.append((s_steps, v, 0.0))
        segs.append((turn_steps, v, w))
    return (x0 + corner, y0, 0.0), segs


#: defaults of the 42-landmark world; any key can be overridden per call
DYNAMIC_WORLD = {
    "speed": 0.25,
    "loop_origin": (2.0, 2.0),
    "loop_side": 6.0,
    "loop_corner": 1.0,
    # odometry noise well below NoiseParams' defaults, so that the loop
    # drift is comparable to what the movers inject into a static-only map
    "alphas": (5e-4, 1e-4, 1e-4, 5e-4),
    "obs_var": 0.04,
    "revolute_center": (2.0, 9.3, 1.0),
    "revolute_radius": 0.5,
    "revolute_rate": 2.0,
    "prismatic_origin": (8.6, 0.0, 0.8),
    "prismatic_axis": (0.0, 1.0, 0.0),
    "prismatic_rate": 0.15,
    "filters": {"min_samples": 30, "tau": 0.6, "anchor_drift": 0.05,
                "accel_var": 1e-4, "vel_var": 0.1},
}

THREE_LANDMARK = {
    "obs_var": 0.02 ** 2,
    "steps": 60,
    "revolute_rate": 2.0,
    "prismatic_rate": 0.4,
    "filters": {"min_samples": 7, "tau": 0.6},
}


def generate_default_scenario(kind="dynamic_world", seed=0, **overrides):
    """Default worlds for the selection and SLAM experiments.

    ``three_landmark`` has a stationary robot facing one landmark of each
    model. ``dynamic_world`` has 40 uniformly placed static landmarks plus
    one revolute and one prismatic landmark that the robot faces for long
    stretches of a rounded-rectangle loop. Keyword overrides replace entries
    of :data:`THREE_LANDMARK` or :data:`DYNAMIC_WORLD`.
    """
    horizontal = geometry.Plane([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0])
    if kind == "three_landmark":
        c = {**THREE_LANDMARK, **overrides}
        landmarks = [
            LandmarkSpec(0, geometry.StaticConfig([2.0, 0.5, 1.0]), Schedule("constant")),
            LandmarkSpec(1, geometry.PrismaticConfig([0.0, 1.0, 0.0], [2.5, -1.0, 0.5]),
                         Schedule("linear", rate=c["prismatic_rate"])),
            LandmarkSpec(2, geometry.RevoluteConfig(horizontal, [2.5, 1.0], 1.0),
                         Schedule("linear", rate=c["revolute_rate"])),
        ]
        return Scenario(landmarks, (0.0, 0.0, 0.0), [(c["steps"], 0.0, 0.0)], SensorSpec(),
                        NoiseParams((0.0, 0.0, 0.0, 0.0), c["obs_var"] * np.eye(3)),
                        0.1, int(seed), "three_landmark", dict(c["filters"]))
    if kind != "dynamic_world":
        raise ScenarioError(f"unknown scenario kind {kind!r}")

    c = {**DYNAMIC_WORLD, **overrides}
    rng = SplitMix64(seed).spawn(1)
    pose0, controls = _rounded_rectangle(*c["loop_origin"], c["loop_side"], c["loop_corner"], c["speed"], 0.1)
    landmarks = []
    for i in range(40):
        p = [rng.uniform(0, WORKSPACE), rng.uniform(0, WORKSPACE), rng.uniform(*HEIGHT_RANGE)]
        landmarks.append(LandmarkSpec(i, geometry.StaticConfig(p), Schedule("constant")))
    cx, cy, cz = c["revolute_center"]
    plane = geometry.Plane([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, cz])
    landmarks.append(LandmarkSpec(40, geometry.RevoluteConfig(plane, [cx, cy], c["revolute_radius"]),
                                  Schedule("linear", rate=c["revolute_rate"])))
    axis = np.asarray(c["prismatic_axis"], dtype=float)
    landmarks.append(LandmarkSpec(41, geometry.PrismaticConfig(axis / np.linalg.norm(axis), c["prismatic_origin"]),
                                  Schedule("linear", rate=c["prismatic_rate"])))
    noise = NoiseParams(c["alphas"], c["obs_var"] * np.eye(3))
    return Scenario(landmarks, pose0, controls, SensorSpec(), noise, 0.1, int(seed), "dynamic_world",
                    dict(c["filters"]))


def step_world(scenario, t):
    """Noise-free robot pose under the commanded controls and landmark positions at time ``t``."""
    if t < -1e-12 or t > scenario.duration + 1e-9:
        raise OutOfSchedule(f"t={t} outside [0, {scenario.duration}]")
    pose = np.asarray(scenario.initial_pose, dtype=float)
    remaining = max(0.0, t)
    for steps, v, w in scenario.controls:
        if remaining <= 0:
            break
        span = min(remaining, steps * scenario.dt)
        pose = robot_propagate(pose, ControlInput(v, w, span))
        remaining -= span
    positions = {lm.id: lm.position(t) for lm in scenario.landmarks}
    return pose, positions


def visible(pose, m, spec):
    d = np.asarray(m[:2], dtype=float) - pose[:2]
    r = math.hypot(d[0], d[1])
    if r > spec.max_range:
        return False
    bearing = math.atan2(d[1], d[0]) - pose[2]
    bearing = (bearing + math.pi) % (2 * math.pi) - math.pi
    return abs(bearing) <= spec.fov_half_angle


def sense(pose, positions, spec, obs_cov, rng):
    """Noisy sensor-frame readings of every landmark inside the FOV cone.

    ``positions`` maps id to world position; ids are visited in insertion
    order so the noise stream is reproducible.
    """
    obs_cov = np.asarray(obs_cov, dtype=float)
    out = []
    for lid, m in positions.items():
        if visible(pose, m, spec):
            z = predict_observation(pose, m) + rng.multivariate_normal(obs_cov)
            out.append((lid, z))
    return out


def noisy_controls(u, noise, rng):
    """Executed control: commanded plus a draw from ``N(0, S_t)``."""
    dv, dw = rng.multivariate_normal(control_noise_cov(u, noise))
    return ControlInput(u.v + dv, u.omega + dw, u.dt)


@dataclass(eq=False)
class SimulationLog:
    """Ground truth and sensor streams; index k holds step k + 1."""
    scenario: Scenario
    controls: list
    executed: list
    poses: np.ndarray
    landmark_positions: list
    observations: list

    @property
    def n_steps(self):
        return len(self.controls)

    @property
    def visibility(self):
        return [[lid for lid, _ in obs] for obs in self.observations]


def simulate(scenario, seed=None):
    """Run the world forward; the truth integrates executed (noisy) controls."""
    seed = scenario.seed if seed is None else seed
    root = SplitMix64(seed)
    rng_u, rng_z = root.spawn(2), root.spawn(3)
    pose = np.asarray(scenario.initial_pose, dtype=float)
    controls = scenario.commanded()
    executed, poses, lms, obs = [], [], [], []
    for k, u in enumerate(controls):
        ue = noisy_controls(u, scenario.noise, rng_u)
        pose = robot_propagate(pose, ue)
        t = (k + 1) * scenario.dt
        positions = {lm.id: lm.position(t) for lm in scenario.landmarks}
        executed.append(ue)
        poses.append(pose)
        lms.append(positions)
        obs.append(sense(pose, positions, scenario.sensor, scenario.noise.obs_cov, rng_z))
    return SimulationLog(scenario, controls, executed, np.array(poses), lms, obs)


def observations_csv(log):
    rows = ["step,landmark_id,zx,zy,zz"]
    for k, obs in enumerate(log.observations, start=1):
        rows.extend(f"{k},{lid},{z[0]!r},{z[1]!r},{z[2]!r}" for lid, z in obs)
    return "\n".join(rows) + "\n"


def truth_poses_csv(log):
    return pose_csv(log.poses)


def truth_landmarks_csv(log):
    rows = ["step,landmark_id,mx,my,mz"]
    for k, positions in enumerate(log.landmark_positions, start=1):
        rows.extend(f"{k},{lid},{m[0]!r},{m[1]!r},{m[2]!r}" for lid, m in positions.items())
    return "\n".join(rows) + "\n"


def pose_csv(poses):
    rows = ["step,x,y,theta"]
    rows.extend(f"{k},{float(p[0])!r},{float(p[1])!r},{float(p[2])!r}" for k, p in enumerate(poses, start=1))
    return "\n".join(rows) + "\n"
