"""Watch model selection commit a static, a prismatic and a revolute landmark.

The robot stands still and observes one landmark of each kind. Candidate
filters race on the buffered observations; a landmark is committed when
one model's probability clears the threshold. The static one commits last
because a point that does not move is also explained by any moving model
with zero velocity, so its evidence accrues slowly.
"""
from artslam import experiments as ex
from artslam import simulator as sim

scenario = sim.generate_default_scenario("three_landmark", seed=0)
run = ex.run_slam_experiment(scenario, "aslam")
for e in run.commits:
    mu = ", ".join(f"{p:.2f}" for p in e.mu)
    print(f"t={e.t:4.1f}s  landmark {e.landmark_id} -> {e.model.value:10s} mu=({mu})")
