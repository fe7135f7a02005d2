"""Command-line entry point (``artslam``).

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import experiments, metrics, report, simulator
from .errors import InputError, NumericalError

EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _u64(s):
    v = int(s, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {s}")
    return v


def _emit(obj, out_dir, name):
    text = report.dumps(obj)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        report.write_text(os.path.join(out_dir, name), text)
    sys.stdout.write(text)


def _scenario(args):
    if args.scenario:
        return simulator.Scenario.load(args.scenario)
    return simulator.generate_default_scenario(args.kind, args.seed if args.seed is not None else 0)


def cmd_simulate(args):
    sc = _scenario(args)
    seed = sc.seed if args.seed is None else args.seed
    log = simulator.simulate(sc, seed)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    report.write_text(os.path.join(out, "scenario.json"), sc.to_json() + "\n")
    report.write_text(os.path.join(out, "observations.csv"), simulator.observations_csv(log))
    report.write_text(os.path.join(out, "truth_poses.csv"), simulator.truth_poses_csv(log))
    report.write_text(os.path.join(out, "truth_landmarks.csv"), simulator.truth_landmarks_csv(log))
    _emit({"seed": seed, "steps": log.n_steps, "landmarks": len(sc.landmarks),
           "observations": sum(len(o) for o in log.observations),
           "config_hash": experiments.config_hash(sc.to_dict())}, None, None)


def cmd_slam(args):
    sc = _scenario(args)
    seed = sc.seed if args.seed is None else args.seed
    run = experiments.run_slam_experiment(sc, args.algorithm, args.out, seed, tau=args.tau,
                                          min_samples=args.min_samples)
    _emit(experiments.slam_report(sc, run, seed), None, None)


def cmd_montecarlo(args):
    rep = experiments.run_joint_vs_separate(args.runs, args.obs_var, args.seed)
    _emit(rep.to_dict(), args.out, "montecarlo.json")


def _read_q_track(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "t,q":
            raise InputError(f"{path}: line 1: expected header t,q, got {header!r}")
        for i, line in enumerate(fh, start=2):
            if line.strip():
                try:
                    t, q = (float(v) for v in line.split(","))
                except ValueError as exc:
                    raise InputError(f"{path}: line {i}: {exc}") from exc
                rows.append((t, q))
    return np.array(rows)


def cmd_order_study(args):
    if args.track:
        track, source = _read_q_track(args.track), args.track
    else:
        track, source = experiments.spring_door_profile(seed=args.seed or 0), "spring_door_profile"
    orders = list(range(args.order + 1))
    table = experiments.run_order_study(track, orders, obs_var=args.obs_var)
    _emit({"source": source, "seed": args.seed or 0, "samples": len(track), "obs_var": args.obs_var,
           "rmse": {str(k): v for k, v in table.items()}}, args.out, "order_study.json")


def cmd_estimate_axis(args):
    if args.tracks:
        tracks = experiments.ingest_tracks(args.tracks)
        source = args.tracks
    else:
        tracks = experiments.door_tracks(seed=args.seed or 0)
        source = "synthetic_door"
    results, axis = experiments.estimate_axis(tracks, dt=args.dt, obs_var=args.obs_var, tau=args.tau,
                                              min_samples=args.min_samples)
    out = {"source": source, "seed": args.seed or 0, "tracks": results,
           "axis": None if axis is None else {"point": axis.point.tolist(), "direction": axis.direction.tolist(),
                                              "tracks": axis.tracks}}
    _emit(out, args.out, "axis.json")


def cmd_metrics(args):
    est = report.read_pose_csv(args.est)
    truth = report.read_pose_csv(args.truth)
    m = metrics.Metrics.from_poses(est, truth, args.delta)
    _emit(m.to_dict(), args.out, "metrics.json")


def build_parser():
    p = argparse.ArgumentParser(prog="artslam", description="Articulated landmark SLAM experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=False):
        sp.add_argument("--seed", type=_u64, default=None, help="random seed (unsigned 64-bit)")
        sp.add_argument("--out", default=None, help="output directory")
        if scenario:
            sp.add_argument("--scenario", default=None, help="scenario JSON file")
            sp.add_argument("--kind", choices=("three_landmark", "dynamic_world"), default="dynamic_world",
                            help="built-in scenario used when --scenario is absent")

    sp = sub.add_parser("simulate", help="generate a scenario and its sensor streams")
    common(sp, scenario=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("slam", help="run a SLAM filter on a simulated scenario")
    common(sp, scenario=True)
    sp.add_argument("--algorithm", choices=experiments.ALGORITHMS, default="aslam")
    sp.add_argument("--tau", type=float, default=None, help="model commit threshold")
    sp.add_argument("--min-samples", type=int, default=None, help="samples buffered before fitting")
    sp.set_defaults(func=cmd_slam)

    sp = sub.add_parser("montecarlo", help="joint versus separate circle-structure study")
    common(sp)
    sp.add_argument("--runs", type=int, default=500)
    sp.add_argument("--obs-var", type=float, default=0.01, help="per-axis noise variance")
    sp.set_defaults(func=cmd_montecarlo, seed=1)

    sp = sub.add_parser("order-study", help="one-step prediction error per temporal order")
    common(sp)
    sp.add_argument("--track", default=None, help="CSV with header t,q (default: synthetic spring door)")
    sp.add_argument("--order", type=int, default=2, help="highest order compared (orders 0..n)")
    sp.add_argument("--obs-var", type=float, default=1e-4)
    sp.set_defaults(func=cmd_order_study)

    sp = sub.add_parser("estimate-axis", help="classify feature tracks and aggregate a revolute axis")
    common(sp)
    sp.add_argument("--tracks", default=None, help="CSV frame,track_id,x,y,z (default: synthetic door)")
    sp.add_argument("--dt", type=float, default=1 / 30, help="seconds per frame")
    sp.add_argument("--obs-var", type=float, default=1e-4, help="per-axis position noise variance")
    sp.add_argument("--tau", type=float, default=0.6)
    sp.add_argument("--min-samples", type=int, default=experiments.AXIS_MIN_SAMPLES,
                    help="samples buffered before fitting each track")
    sp.set_defaults(func=cmd_estimate_axis)

    sp = sub.add_parser("metrics", help="ATE and RPE between two pose CSV files")
    sp.add_argument("--est", required=True)
    sp.add_argument("--truth", required=True)
    sp.add_argument("--delta", type=int, default=1)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_metrics)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
