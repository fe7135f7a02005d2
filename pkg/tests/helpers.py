"""Shared builders and oracles for the test suite."""

import numpy as np

from artslam import geometry as g
from artslam import selection
from artslam import simulator as sim
from artslam import slam
from artslam import temporal as tp
from artslam.rng import SplitMix64


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def random_config(rng, model):
    model = g.Model(model)
    if model is g.Model.STATIC:
        return g.StaticConfig([rng.uniform(-3, 3) for _ in range(3)])
    if model is g.Model.PRISMATIC:
        return g.PrismaticConfig(unit(rng.normals(3)), [rng.uniform(-3, 3) for _ in range(3)])
    n = unit(rng.normals(3))
    v1 = unit(np.cross(n, rng.normals(3)))
    plane = g.Plane(v1, np.cross(n, v1), [rng.uniform(-3, 3) for _ in range(3)])
    return g.RevoluteConfig(plane, [rng.uniform(-2, 2), rng.uniform(-2, 2)], rng.uniform(0.2, 3))


def symmetric_psd(P, tol=1e-9):
    return np.allclose(P, P.T, atol=tol) and np.linalg.eigvalsh(0.5 * (P + P.T)).min() > -tol


def aslam_to_ekf_map(aslam, lid):
    """Push the articulated state onto EKF-SLAM coordinates.

    Every committed block maps linearly onto a 3D position when its model is
    static (``m = rest + q (1,1,1) + d``). Returns the linear map ``M`` and
    offset ``c`` with ``x_ekf = c + M x_aslam`` over the pose and all blocks,
    plus the EKF (mean, cov, cross) of landmark ``lid`` for ``add_landmark``.
    """
    order = sorted(aslam.slots.items(), key=lambda kv: kv[1][0])
    n_e = 3 + 3 * len(order)
    M = np.zeros((n_e, len(aslam.x)))
    c = np.zeros(n_e)
    M[:3, :3] = np.eye(3)
    row, new_row = 3, None
    for key, (i, k) in order:
        xl = aslam.x[i:i + k]
        m, T = aslam._landmark_point(key, xl)
        M[row:row + 3, i:i + k] = T
        c[row:row + 3] = m - T @ xl
        if key == lid:
            new_row = row
        row += 3
    x_e = c + M @ aslam.x
    P_e = M @ aslam.P @ M.T
    s = slice(new_row, new_row + 3)
    return x_e[s], P_e[s, s], P_e[s, :new_row]


# finite differences -----------------------------------------------------------

H = 1e-6


def fd_jac(f, x, h=H):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.column_stack(cols)


def angle_safe(f):
    # keep theta wrap from producing jumps inside a finite difference
    def g_(x):
        out = np.asarray(f(x), dtype=float).copy()
        if out.shape == (3,):
            out[2] = np.unwrap([x[2] if len(x) == 3 else 0.0, out[2]])[1]
        return out
    return g_


def propagate_fd(pose, u):
    def f_pose(x):
        return slam.robot_propagate(x, u)

    def f_ctrl(c):
        return slam.robot_propagate(pose, slam.ControlInput(c[0], c[1], u.dt))

    Gf = fd_jac(angle_safe(f_pose), pose)
    Vf = fd_jac(lambda c: np.r_[f_ctrl(c)[:2], np.unwrap([pose[2], f_ctrl(c)[2]])[1]], [u.v, u.omega])
    return Gf, Vf


def full_h_error(rng, model):
    cfg = random_config(rng, model)
    n = 1 if model is g.Model.STATIC else 2
    pose = np.array([rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-np.pi, np.pi)])
    qs = rng.normals(n)
    Hr, Hl = slam.observation_jacobian(pose, cfg, qs)

    def f(x):
        return slam.predict_observation(x[:3], cfg.forward(x[3]))

    Hf = fd_jac(f, np.r_[pose, qs[0]])
    err = max(np.max(np.abs(Hr - Hf[:, :3])), np.max(np.abs(Hl[:, 0] - Hf[:, 3])))
    if n > 1:
        # position does not depend on the derivative states
        err = max(err, np.max(np.abs(Hl[:, 1:])))
    return err


# worlds and reduction ----------------------------------------------------------

def circle_world(n_static=12, steps=200, seed=0, alphas=(0.01, 0.002, 0.002, 0.01), obs_var=0.01, movers=()):
    rng = SplitMix64(1000 + seed)
    lms = []
    for i in range(n_static):
        a = 2 * np.pi * i / n_static
        r = 2.5 + rng.uniform(-0.5, 0.5)
        lms.append(sim.LandmarkSpec(i, g.StaticConfig([r * np.cos(a), r * np.sin(a), rng.uniform(0, 2)]),
                                    sim.Schedule("constant")))
    lms.extend(movers)
    return sim.Scenario(lms, (1.2, 0.0, np.pi / 2), [(steps, 0.3, 0.25)],
                        sim.SensorSpec(np.pi / 3, 4.0), slam.NoiseParams(alphas, obs_var * np.eye(3)), 0.1, seed)


def reduction_run(seed, steps=150):
    """A-SLAM (static model forced, n=1, no landmark process noise) next to EKF-SLAM.

    The EKF ignores observations of landmarks A-SLAM has not committed and
    enrolls each landmark at commit time with the pushforward of A-SLAM's
    new block, so both filters see identical evidence.
    """
    sc = circle_world(seed=seed, steps=steps)
    log = sim.simulate(sc)
    params = selection.SelectionParams(obs_cov=sc.noise.obs_cov, state_dim={m: 1 for m in g.MODELS},
                                       noise_scale={m: 0.0 for m in g.MODELS})
    a = slam.ArticulatedEKFSLAM(params, sc.noise, sc.initial_pose, prior=(1.0, 0.0, 0.0))
    e = slam.EKFSLAM(sc.noise, sc.initial_pose, auto_enroll=False)
    diffs = []
    for u, obs in zip(log.controls, log.observations):
        a.predict(u)
        e.predict(u)
        for lid, z in obs:
            act = a.observe(lid, z)
            if act.kind == "update":
                e.update(lid, z)
            elif act.kind == "commit":
                assert act.event.model is g.Model.STATIC
                e.add_landmark(lid, *aslam_to_ekf_map(a, lid))
        diffs.append(np.max(np.abs(a.pose - e.pose)))
    return np.array(diffs), a


# two-model oracle ---------------------------------------------------------------

def kf_model_probabilities(zs, dt, var, prior_static, prior_prism):
    """Static (q constant) against constant-velocity q, both with direct q readings."""
    b = selection.init_belief(2, models=(g.Model.STATIC, g.Model.PRISMATIC))
    states = [tp.MotionFilterState([prior_static[0]], [[prior_static[1]]]),
              tp.MotionFilterState(prior_prism[0], prior_prism[1])]
    tms = [tp.build_transition(1, dt, 0.0), tp.build_transition(2, dt, 0.0)]
    for k, z in enumerate(zs):
        ll = []
        for i in range(2):
            if k > 0:
                states[i] = tp.ekf_predict(states[i], tms[i])
            S = states[i].cov[0, 0] + var
            states[i], nu = tp.ekf_update_direct(states[i], z, var)
            ll.append(tp.observation_log_likelihood([nu], [[S]]))
        b = selection.update_belief(b, ll)
        assert abs(b.mu.sum() - 1) < 1e-9
    return b.mu


def grid_model_probabilities(zs, dt, var, prior_static, prior_prism):
    t = dt * np.arange(len(zs))
    m0, p0 = prior_static
    q = np.linspace(m0 - 8 * np.sqrt(p0), m0 + 8 * np.sqrt(p0), 4001)
    logp = -0.5 * (q - m0) ** 2 / p0 - 0.5 * np.log(2 * np.pi * p0)
    for z in zs:
        logp = logp - 0.5 * (z - q) ** 2 / var - 0.5 * np.log(2 * np.pi * var)
    ev_static = np.trapezoid(np.exp(logp), q)
    mean, cov = np.asarray(prior_prism[0]), np.asarray(prior_prism[1])
    sd = np.sqrt(np.diag(cov))
    Q0, V0 = np.meshgrid(np.linspace(mean[0] - 8 * sd[0], mean[0] + 8 * sd[0], 801),
                         np.linspace(mean[1] - 8 * sd[1], mean[1] + 8 * sd[1], 801), indexing="ij")
    d = np.stack([Q0 - mean[0], V0 - mean[1]], axis=-1)
    Ci = np.linalg.inv(cov)
    logp = -0.5 * np.einsum("...i,ij,...j", d, Ci, d) - 0.5 * np.log(np.linalg.det(2 * np.pi * cov))
    for tk, z in zip(t, zs):
        logp = logp - 0.5 * (z - Q0 - V0 * tk) ** 2 / var - 0.5 * np.log(2 * np.pi * var)
    ev_prism = np.trapezoid(np.trapezoid(np.exp(logp), V0[0], axis=1), Q0[:, 0])
    w = 0.5 * np.array([ev_static, ev_prism])
    return w / w.sum()
