"""Experiment drivers behind the command line: structure studies, the
temporal-order study, SLAM runs and feature-track ingestion."""

import csv
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from . import geometry, metrics, report, selection, simulator, slam, temporal
from .errors import InsufficientSamples, MalformedRow, NonMonotoneFrames
from .geometry import Model
from .rng import SplitMix64

# ---------------------------------------------------------------------------
# joint versus separate structure estimation

#: protocol of the 2D revolute study; center and radius follow the classic setup
CIRCLE_STUDY = {
    "center": (2.0, 2.0),
    "radius": 1.0,
    "omega": 0.5,
    "dt": 0.1,
    "n_samples": 30,
}


@dataclass
class MonteCarloReport:
    runs: int
    noise_var: float
    seed: int
    joint: dict
    separate: dict
    protocol: dict = field(default_factory=dict)

    def to_dict(self):
        return {"runs": self.runs, "noise_var": self.noise_var, "seed": self.seed,
                "protocol": dict(self.protocol), "joint": dict(self.joint), "separate": dict(self.separate)}


def revolute_samples(rng, noise_var, center, radius, omega, dt, n_samples):
    """Noisy 2D points on a circle at constant angular rate from a random start angle."""
    theta0 = rng.uniform(0.0, 2 * np.pi)
    t = dt * np.arange(n_samples)
    ang = theta0 + omega * t
    clean = np.asarray(center) + radius * np.column_stack([np.cos(ang), np.sin(ang)])
    noise = np.sqrt(noise_var) * rng.normals(2 * n_samples).reshape(n_samples, 2)
    return t, clean + noise, theta0


def fit_separate(t, z):
    """Circle fit for the structure, then a line fit to the unwrapped angle."""
    center, radius = geometry.fit_circle_2d(z)
    ang = np.unwrap(np.arctan2(z[:, 1] - center[1], z[:, 0] - center[0]))
    omega, theta0 = np.polyfit(t, ang, 1)
    return center, radius, theta0, omega


def joint_cold_start(t, z):
    """Centroid, mean centroid distance, first-point angle and first-difference rate."""
    c = z.mean(axis=0)
    r = float(np.mean(np.hypot(*(z - c).T)))
    a = np.arctan2(z[:2, 1] - c[1], z[:2, 0] - c[0])
    da = (a[1] - a[0] + np.pi) % (2 * np.pi) - np.pi
    return np.array([c[0], c[1], r, a[0], da / (t[1] - t[0])])


def fit_joint(t, z, x0=None):
    """Nonlinear least squares over (center, radius, start angle, rate) with Levenberg-Marquardt."""
    x0 = joint_cold_start(t, z) if x0 is None else x0

    def residual(p):
        ang = p[3] + p[4] * t
        return (np.column_stack([p[0] + p[2] * np.cos(ang), p[1] + p[2] * np.sin(ang)]) - z).ravel()

    sol = least_squares(residual, x0, method="lm")
    p = sol.x
    return p[:2], abs(p[2]), p[3], p[4]


def run_joint_vs_separate(runs=500, noise_var=0.01, seed=1, **protocol):
    if runs < 1:
        raise ValueError("runs must be at least 1")
    proto = {**CIRCLE_STUDY, **protocol}
    rng = SplitMix64(seed)
    true_c = np.asarray(proto["center"], dtype=float)
    errs = {"joint": [], "separate": []}
    for _ in range(int(runs)):
        t, z, _ = revolute_samples(rng, noise_var, **proto)
        for name, fit in (("joint", fit_joint), ("separate", fit_separate)):
            c, r, _, _ = fit(t, z)
            errs[name].append((float(np.linalg.norm(c - true_c)), abs(r - proto["radius"])))
    out = {}
    for name, e in errs.items():
        e = np.asarray(e)
        out[name] = {"center_error": float(e[:, 0].mean()), "radius_error": float(e[:, 1].mean())}
    proto["center"] = list(proto["center"])
    return MonteCarloReport(int(runs), float(noise_var), int(seed), out["joint"], out["separate"], proto)


# ---------------------------------------------------------------------------
# temporal order study

def spring_door_profile(n=120, dt=1 / 30, amplitude=1.2, noise_std=0.01, seed=0):
    """Door angle that accelerates open and settles, sampled with noise.

    The clean profile is ``amplitude * (1 - cos(pi * s)) / 2`` with ``s``
    running over [0, 1] for the first two thirds and then held, a stand-in
    for a recorded spring-loaded door.
    """
    rng = SplitMix64(seed)
    t = dt * np.arange(n)
    s = np.clip(t / (t[-1] * 2 / 3), 0.0, 1.0)
    q = amplitude * 0.5 * (1 - np.cos(np.pi * s)) + noise_std * rng.normals(n)
    return np.column_stack([t, q])


def run_order_study(track, orders=(0, 1, 2), obs_var=1e-4, noise_scale=1.0, smoothing_sigma=0.0):
    """One-step prediction RMSE of a direct-observation EKF for each temporal order.

    ``track`` holds ``(t, q)`` rows at uniform spacing. Order ``k`` tracks
    ``[q, ..., q^(k)]``. Every order is initialized from the first
    ``max(orders) + 2`` samples and scored on the same remaining samples.
    """
    data = np.asarray(track, dtype=float).reshape(-1, 2)
    orders = [int(k) for k in orders]
    if min(orders) < 0:
        raise ValueError("orders must be nonnegative")
    start = max(orders) + 2
    if len(data) <= start:
        raise InsufficientSamples(f"order {max(orders)} needs more than {start} samples, got {len(data)}")
    dt = float(np.mean(np.diff(data[:, 0])))
    table = {}
    for k in orders:
        n = k + 1
        tm = temporal.build_transition(n, dt, noise_scale)
        state = temporal.init_from_samples(data[:start], n, smoothing_sigma, obs_var)
        errs = []
        for _, q in data[start:]:
            state = temporal.ekf_predict(state, tm)
            state, nu = temporal.ekf_update_direct(state, q, obs_var)
            errs.append(nu)
        table[k] = float(np.sqrt(np.mean(np.square(errs))))
    return table


# ---------------------------------------------------------------------------
# SLAM experiments

ALGORITHMS = ("aslam", "ekf", "dyn")

FILTER_DEFAULTS = {
    "min_samples": geometry.DEFAULT_MIN_SAMPLES,
    "tau": selection.DEFAULT_TAU,
    "inflation": selection.DEFAULT_INFLATION,
    "anchor_drift": 0.0,
    "accel_var": 1e-3,
    "vel_var": 1e-2,
}


def filter_settings(scenario, **overrides):
    out = dict(FILTER_DEFAULTS)
    out.update(scenario.filters)
    out.update({k: v for k, v in overrides.items() if v is not None})
    return out


def build_filter(algorithm, scenario, **overrides):
    cfg = filter_settings(scenario, **overrides)
    pose = scenario.initial_pose
    if algorithm == "aslam":
        params = selection.SelectionParams(dt=scenario.dt, tau=float(cfg["tau"]),
                                           min_samples=int(cfg["min_samples"]),
                                           obs_cov=scenario.noise.obs_cov, inflation=float(cfg["inflation"]))
        return slam.ArticulatedEKFSLAM(params, scenario.noise, pose, anchor_drift=float(cfg["anchor_drift"]))
    if algorithm == "ekf":
        return slam.EKFSLAM(scenario.noise, pose)
    if algorithm == "dyn":
        return slam.DynamicEKFSLAM(scenario.noise, pose, accel_var=float(cfg["accel_var"]),
                                   vel_var=float(cfg["vel_var"]))
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")


@dataclass
class SlamRun:
    algorithm: str
    poses: np.ndarray
    cov_traces: np.ndarray
    metrics: metrics.Metrics
    commits: list
    mu_trace: list  # (step, landmark_id, mu tuple)
    skipped: int
    settings: dict


def run_slam(log, algorithm, **overrides):
    """Run one filter over a simulated log."""
    sc = log.scenario
    f = build_filter(algorithm, sc, **overrides)
    poses, traces, mu_rows = [], [], []
    for k, (u, obs) in enumerate(zip(log.controls, log.observations), start=1):
        actions = f.step(u, obs)
        poses.append(f.pose)
        traces.append(float(np.trace(f.P[:3, :3])))
        if algorithm == "aslam":
            # beliefs freeze at commit, so rows stop after the committing step
            for act in actions:
                if act.kind != "update":
                    mu_rows.append((k, act.landmark_id, tuple(float(m) for m in f.beliefs[act.landmark_id].mu)))
    poses = np.array(poses)
    commits = list(f.events) if algorithm == "aslam" else []
    return SlamRun(algorithm, poses, np.array(traces), metrics.Metrics.from_poses(poses, log.poses),
                   commits, mu_rows, f.skipped, filter_settings(sc, **overrides))


def config_hash(obj):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def run_slam_experiment(scenario, algorithm, out_dir=None, seed=None, **overrides):
    """Simulate ``scenario`` and run ``algorithm``; optionally write artifacts.

    Files written to ``out_dir``: ``poses.csv``, ``mu_trace.csv``,
    ``metrics.json``.
    """
    if isinstance(scenario, (str, bytes)) or hasattr(scenario, "__fspath__"):
        scenario = simulator.Scenario.load(scenario)
    seed = scenario.seed if seed is None else int(seed)
    log = simulator.simulate(scenario, seed)
    run = run_slam(log, algorithm, **overrides)
    if out_dir is not None:
        report.write_slam_artifacts(out_dir, run, slam_report(scenario, run, seed))
    return run


def slam_report(scenario, run, seed):
    return {
        "algorithm": run.algorithm,
        "seed": seed,
        "config_hash": config_hash(scenario.to_dict()),
        "settings": run.settings,
        "steps": len(run.poses),
        "ate_rmse": run.metrics.ate_rmse,
        "rpe_rmse": run.metrics.rpe_rmse,
        "skipped_updates": run.skipped,
        "commits": [{"landmark_id": e.landmark_id, "model": e.model.value, "t": e.t, "mu": list(e.mu)}
                    for e in run.commits],
    }


# ---------------------------------------------------------------------------
# feature tracks

TRACK_COLUMNS = ("frame", "track_id", "x", "y", "z")


def _track_id(s):
    s = s.strip()
    try:
        return int(s)
    except ValueError:
        return s


def ingest_tracks(path):
    """Read a ``frame,track_id,x,y,z`` CSV into per-track (frames, points).

    Returns a dict ``track_id -> (frames array, (N, 3) points array)`` in
    first-appearance order.
    """
    tracks = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACK_COLUMNS:
            raise MalformedRow(1, f"header must be {','.join(TRACK_COLUMNS)}, got {header}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise MalformedRow(line, f"expected 5 fields, got {len(row)}")
            try:
                frame = int(row[0])
                xyz = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise MalformedRow(line, str(exc)) from exc
            if not np.all(np.isfinite(xyz)):
                raise MalformedRow(line, "non-finite coordinate")
            tid = _track_id(row[1])
            frames, pts = tracks.setdefault(tid, ([], []))
            if frames and frame <= frames[-1]:
                raise NonMonotoneFrames(tid, line)
            frames.append(frame)
            pts.append(xyz)
    return {tid: (np.array(f), np.array(p, dtype=float).reshape(-1, 3)) for tid, (f, p) in tracks.items()}


@dataclass
class AxisEstimate:
    point: np.ndarray
    direction: np.ndarray
    tracks: list


def aggregate_axis(configs):
    """Common rotation axis of revolute configs.

    Direction is the mean of the plane normals after aligning signs with the
    first; the point is the mean of the circle centers.
    """
    normals = [c.normal for c in configs]
    ref = normals[0]
    aligned = [n if n @ ref >= 0 else -n for n in normals]
    d = np.mean(aligned, axis=0)
    d /= np.linalg.norm(d)
    point = np.mean([c.center for c in configs], axis=0)
    return point, d


AXIS_MIN_SAMPLES = 30


def estimate_axis(tracks, dt=1 / 30, obs_var=1e-4, tau=selection.DEFAULT_TAU, min_samples=AXIS_MIN_SAMPLES):
    """Run model selection on every track and aggregate the committed revolute ones.

    Selection fits structure once from the first ``min_samples`` points. The
    axis itself uses a revolute refit over each whole classified track, since
    the recording is available offline.

    Returns ``(per-track results, AxisEstimate or None)``; each result holds
    the committed model (or None), commit time and final probabilities.
    """
    params = selection.SelectionParams(dt=dt, tau=tau, min_samples=min_samples, obs_cov=obs_var * np.eye(3))
    results, revolute = [], []
    for tid, (frames, pts) in tracks.items():
        belief, event, _ = selection.select_track(tid, frames * dt, pts, params)
        results.append({"track_id": tid,
                        "model": None if event is None else event.model.value,
                        "commit_t": None if event is None else event.t,
                        "mu": [float(m) for m in belief.mu]})
        if event is not None and event.model is Model.REVOLUTE:
            revolute.append((tid, geometry.fit_revolute(pts)))
    if not revolute:
        return results, None
    point, d = aggregate_axis([c for _, c in revolute])
    return results, AxisEstimate(point, d, [tid for tid, _ in revolute])


def door_tracks(axis_point=(1.0, 2.0, 0.0), axis_dir=(0.0, 0.0, 1.0), offsets=((0.3, 0.2), (0.6, 1.0), (0.8, 1.6)),
                rate=0.8, n=60, dt=1 / 30, noise_std=0.003, seed=0):
    """Feature tracks on a plane rotating about a hinge axis.

    Each offset ``(distance from hinge, height along axis)`` gives one track.
    Returns ``{track_id: (frames, points)}``.
    """
    rng = SplitMix64(seed)
    a = np.asarray(axis_dir, dtype=float)
    a /= np.linalg.norm(a)
    u = np.cross(a, [1.0, 0.0, 0.0])
    if np.linalg.norm(u) < 1e-6:
        u = np.cross(a, [0.0, 1.0, 0.0])
    u /= np.linalg.norm(u)
    w = np.cross(a, u)
    p0 = np.asarray(axis_point, dtype=float)
    frames = np.arange(n)
    ang = rate * dt * frames
    out = {}
    for i, (dist, h) in enumerate(offsets):
        pts = p0 + h * a + dist * (np.outer(np.cos(ang), u) + np.outer(np.sin(ang), w))
        pts = pts + noise_std * rng.normals(3 * n).reshape(n, 3)
        out[i] = (frames.copy(), pts)
    return out
