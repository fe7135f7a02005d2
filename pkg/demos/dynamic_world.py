"""Compare A-SLAM, Dyn-SLAM and EKF-SLAM in a world with two movers.

The robot drives a rounded-rectangle loop past 40 static landmarks, a
rotating landmark and a sliding one. EKF-SLAM assumes everything is
static and is dragged by the slider, Dyn-SLAM tracks movers with a generic
constant-velocity model, and A-SLAM fits an articulation model to each
landmark before using it.
"""
import sys

import numpy as np

from artslam import experiments as ex
from artslam import simulator as sim

seeds = range(int(sys.argv[1]) if len(sys.argv) > 1 else 3)
rows = {alg: [] for alg in ("aslam", "dyn", "ekf")}
for seed in seeds:
    log = sim.simulate(sim.generate_default_scenario("dynamic_world", seed))
    for alg in rows:
        m = ex.run_slam(log, alg).metrics
        rows[alg].append((m.ate_rmse, m.rpe_rmse))

print(f"median over {len(seeds)} seeds")
for alg, v in rows.items():
    ate, rpe = np.median(np.array(v), axis=0)
    print(f"{alg:6s} ATE {ate:.4f} m  RPE {rpe:.4f} m")
