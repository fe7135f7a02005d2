import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artslam import geometry as g
from artslam.errors import DegenerateGeometry, InsufficientSamples, SingularProjection
from artslam.rng import SplitMix64

finite = st.floats(-5, 5, allow_nan=False)
vec3 = st.tuples(finite, finite, finite)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def random_config(rng, model):
    if model is g.Model.STATIC:
        return g.StaticConfig([rng.uniform(-3, 3) for _ in range(3)])
    if model is g.Model.PRISMATIC:
        return g.PrismaticConfig(unit(rng.normals(3)), [rng.uniform(-3, 3) for _ in range(3)])
    n = unit(rng.normals(3))
    v1 = unit(np.cross(n, rng.normals(3)))
    v2 = np.cross(n, v1)
    plane = g.Plane(v1, v2, [rng.uniform(-3, 3) for _ in range(3)])
    return g.RevoluteConfig(plane, [rng.uniform(-2, 2), rng.uniform(-2, 2)], rng.uniform(0.2, 3))


XY_PLANE = g.Plane([1, 0, 0], [0, 1, 0], [0, 0, 0])
REV = g.RevoluteConfig(XY_PLANE, [2, 2], 1.0)


# plane ---------------------------------------------------------------------

def test_fit_plane_unit_square():
    p = g.fit_plane([(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)])
    np.testing.assert_allclose(p.p0, [0.5, 0.5, 0])
    np.testing.assert_allclose(abs(p.normal @ [0, 0, 1]), 1.0, atol=1e-12)


def test_fit_plane_offset():
    p = g.fit_plane([(0, 0, 5), (1, 0, 5), (0, 1, 5)])
    np.testing.assert_allclose(abs(p.normal[2]), 1.0, atol=1e-12)
    assert p.p0[2] == pytest.approx(5.0)


def test_fit_plane_noisy_normal_within_one_degree():
    rng = SplitMix64(3)
    u = np.array([rng.uniform(-2, 2) for _ in range(100)]).reshape(50, 2)
    pts = np.column_stack([u, 1 - u.sum(axis=1)]) + 0.01 * rng.normals(150).reshape(50, 3)
    n = g.fit_plane(pts).normal
    ang = np.degrees(np.arccos(min(1.0, abs(n @ unit([1, 1, 1])))))
    assert ang < 1.0


def test_fit_plane_basis_orthonormal():
    rng = SplitMix64(5)
    p = g.fit_plane(rng.normals(30).reshape(10, 3))
    assert abs(np.linalg.norm(p.v1) - 1) < 1e-9 and abs(np.linalg.norm(p.v2) - 1) < 1e-9
    assert abs(p.v1 @ p.v2) < 1e-9


@pytest.mark.parametrize("pts", [[(0, 0, 0), (1, 1, 1), (2, 2, 2), (3, 3, 3)], [(0, 0, 0), (1, 0, 0)]])
def test_fit_plane_degenerate(pts):
    with pytest.raises(DegenerateGeometry):
        g.fit_plane(pts)


def _plane_rms(points, p0, normal):
    return np.sqrt(np.mean(((np.asarray(points) - p0) @ normal) ** 2))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_fit_plane_residual_not_worse_than_three_point_plane(seed):
    rng = SplitMix64(seed)
    pts = rng.normals(24).reshape(8, 3) * [2, 2, 0.2]
    plane = g.fit_plane(pts)
    n3 = np.cross(pts[1] - pts[0], pts[2] - pts[0])
    n3 /= np.linalg.norm(n3)
    assert _plane_rms(pts, plane.p0, plane.normal) <= _plane_rms(pts, pts[0], n3) + 1e-12


def _rigid(rng):
    Q, _ = np.linalg.qr(rng.normals(9).reshape(3, 3))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q, rng.normals(3) * 3


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_plane_and_line_fits_are_rigid_covariant(seed):
    rng = SplitMix64(seed)
    R, t = _rigid(rng)
    pts = rng.normals(30).reshape(10, 3) * [3, 1, 0.3]
    moved = pts @ R.T + t
    a, b = g.fit_plane(pts), g.fit_plane(moved)
    np.testing.assert_allclose(R @ a.p0 + t, b.p0, atol=1e-6)
    assert abs(abs((R @ a.normal) @ b.normal) - 1) < 1e-6
    la, lb = g.fit_line_3d(pts), g.fit_line_3d(moved)
    np.testing.assert_allclose(R @ la.origin + t, lb.origin, atol=1e-6)
    np.testing.assert_allclose(R @ la.axis, lb.axis, atol=1e-6)


# circle ---------------------------------------------------------------------

def test_fit_circle_three_points():
    c, r = g.fit_circle_2d([(1, 0), (0, 1), (-1, 0)])
    np.testing.assert_allclose(c, [0, 0], atol=1e-12)
    assert r == pytest.approx(1.0)


def test_fit_circle_exact_arc():
    a = np.array([0, np.pi / 3, 2 * np.pi / 3, np.pi])
    c, r = g.fit_circle_2d(np.column_stack([np.cos(a), np.sin(a)]))
    np.testing.assert_allclose(c, [0, 0], atol=1e-9)
    assert abs(r - 1) < 1e-9


def test_fit_circle_noisy_average_error():
    # full-circle samples, sigma^2 = 0.01 per axis
    rng = SplitMix64(11)
    ce, re = [], []
    for _ in range(200):
        a = np.array([rng.uniform(0, 2 * np.pi) for _ in range(30)])
        pts = np.column_stack([2 + np.cos(a), 2 + np.sin(a)]) + 0.1 * rng.normals(60).reshape(30, 2)
        c, r = g.fit_circle_2d(pts)
        ce.append(np.linalg.norm(c - 2))
        re.append(abs(r - 1))
    assert np.mean(ce) < 0.1 and np.mean(re) < 0.05


def test_fit_circle_collinear():
    with pytest.raises(DegenerateGeometry):
        g.fit_circle_2d([(0, 0), (1, 1), (2, 2)])


def _algebraic_sse(pts, c, r):
    d = ((pts - c) ** 2).sum(axis=1) - r * r
    return float((d ** 2).sum())


@pytest.mark.parametrize("seed", range(5))
def test_fit_circle_beats_random_candidates(seed):
    rng = SplitMix64(100 + seed)
    n = 3 + seed
    a = np.array([rng.uniform(0, 2 * np.pi) for _ in range(n)])
    pts = np.column_stack([np.cos(a), np.sin(a)]) + 0.05 * rng.normals(2 * n).reshape(n, 2)
    c, r = g.fit_circle_2d(pts)
    best = _algebraic_sse(pts, c, r)
    cand_c = 0.3 * rng.normals(20000).reshape(10000, 2)
    cand_r = 1 + 0.3 * rng.normals(10000)
    d = ((pts[None] - cand_c[:, None]) ** 2).sum(axis=2) - cand_r[:, None] ** 2
    assert best <= (d ** 2).sum(axis=1).min() + 1e-12


# line -------------------------------------------------------------------------

def test_fit_line_exact():
    cfg = g.fit_line_3d([(0, 0, 0), (1, 0, 0), (2, 0, 0)])
    np.testing.assert_allclose(cfg.axis, [1, 0, 0], atol=1e-12)
    np.testing.assert_allclose(cfg.origin, [1, 0, 0], atol=1e-12)


def test_fit_line_two_points():
    cfg = g.fit_line_3d([(0, 0, 0), (3, 3, 0)])
    np.testing.assert_allclose(cfg.axis, unit([1, 1, 0]), atol=1e-12)


def test_fit_line_sign_follows_first_to_last():
    cfg = g.fit_line_3d([(0, 0, 2), (0, 0, 1), (0, 0, 0)])
    np.testing.assert_allclose(cfg.axis, [0, 0, -1], atol=1e-12)


def test_fit_line_noisy_axis():
    rng = SplitMix64(7)
    z = np.linspace(0, 2, 20)
    pts = np.column_stack([np.zeros(20), np.zeros(20), z]) + 0.01 * rng.normals(60).reshape(20, 3)
    ang = np.degrees(np.arccos(min(1.0, g.fit_line_3d(pts).axis @ [0, 0, 1])))
    assert ang < 1.0


def test_fit_line_coincident():
    with pytest.raises(DegenerateGeometry):
        g.fit_line_3d([(1, 1, 1)] * 4)


# estimate_config -------------------------------------------------------------

def test_estimate_config_revolute_round_trip():
    a = np.linspace(0, 1.5, 7)
    pts = np.column_stack([1 + 0.5 * np.cos(a), -1 + 0.5 * np.sin(a), np.ones(7)])
    cfg = g.estimate_config("revolute", pts)
    assert isinstance(cfg, g.RevoluteConfig)
    assert cfg.radius == pytest.approx(0.5)
    np.testing.assert_allclose(cfg.center, [1, -1, 1], atol=1e-9)
    for p in pts:
        np.testing.assert_allclose(cfg.forward(cfg.inverse(p)), p, atol=1e-9)


def test_estimate_config_static_mean():
    cfg = g.estimate_config("static", [(1, 2, 3)] * 7)
    np.testing.assert_allclose(cfg.rest, [1, 2, 3])


def test_estimate_config_prismatic_dispatch():
    pts = [(t, 2 * t, 0.5) for t in range(7)]
    a, b = g.estimate_config(g.Model.PRISMATIC, pts), g.fit_line_3d(pts)
    np.testing.assert_array_equal(a.axis, b.axis)
    np.testing.assert_array_equal(a.origin, b.origin)


def test_estimate_config_needs_min_samples():
    with pytest.raises(InsufficientSamples):
        g.estimate_config("static", [(0, 0, 0)] * 6)


# kinematics -----------------------------------------------------------------

def test_forward_examples():
    np.testing.assert_allclose(g.forward_kinematics(REV, 0.0), [3, 2, 0])
    np.testing.assert_allclose(g.forward_kinematics(g.PrismaticConfig([0, 0, 1], [1, 1, 0]), 2.0), [1, 1, 2])
    np.testing.assert_allclose(g.forward_kinematics(g.StaticConfig([1, 2, 3]), 0.1), [1.1, 2.1, 3.1])


def test_inverse_examples():
    assert g.inverse_kinematics(REV, [3, 2, 0]) == pytest.approx(0.0)
    assert g.inverse_kinematics(g.PrismaticConfig([0, 0, 1], [0, 0, 0]), [0.5, 0, 2]) == pytest.approx(2.0)
    assert g.inverse_kinematics(g.StaticConfig([0, 0, 0]), [0.1, 0.1, 0.1]) == pytest.approx(0.1)


def test_inverse_singular_at_center():
    with pytest.raises(SingularProjection):
        g.inverse_kinematics(REV, [2, 2, 0.3])


def test_inverse_unwraps_against_previous():
    q = g.inverse_kinematics(REV, REV.forward(3.0 + 2 * np.pi), previous=2 * np.pi + 2.9)
    assert q == pytest.approx(3.0 + 2 * np.pi)


def test_jacobian_examples():
    np.testing.assert_array_equal(g.landmark_jacobian(g.StaticConfig([4, 5, 6]), 1.7), [1, 1, 1])
    np.testing.assert_allclose(g.landmark_jacobian(REV, np.pi / 2), [-1, 0, 0], atol=1e-15)


@pytest.mark.parametrize("model", g.MODELS)
def test_jacobian_matches_central_difference(model):
    rng = SplitMix64(21)
    h = 1e-6
    for _ in range(200):
        cfg = random_config(rng, model)
        q = rng.uniform(-np.pi, np.pi)
        fd = (cfg.forward(q + h) - cfg.forward(q - h)) / (2 * h)
        assert np.max(np.abs(fd - cfg.jacobian(q))) < 1e-5


@pytest.mark.parametrize("model", g.MODELS)
def test_round_trip(model):
    rng = SplitMix64(31)
    for _ in range(300):
        cfg = random_config(rng, model)
        q = rng.uniform(-np.pi, np.pi)
        back = cfg.inverse(cfg.forward(q))
        err = abs(back - q)
        if model is g.Model.REVOLUTE:
            err = abs((back - q + np.pi) % (2 * np.pi) - np.pi)
        assert err < 1e-9


@settings(max_examples=100, deadline=None)
@given(vec3, st.floats(-10, 10))
def test_static_round_trip_property(rest, q):
    cfg = g.StaticConfig(rest)
    assert abs(cfg.inverse(cfg.forward(q)) - q) < 1e-9


def test_config_dict_round_trip():
    rng = SplitMix64(2)
    for model in g.MODELS:
        cfg = random_config(rng, model)
        back = g.config_from_dict(cfg.to_dict())
        for q in (-1.0, 0.3, 2.0):
            np.testing.assert_array_equal(cfg.forward(q), back.forward(q))


def test_invalid_configs_rejected():
    with pytest.raises(ValueError):
        g.PrismaticConfig([1, 1, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        g.Plane([1, 0, 0], [1, 0, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        g.RevoluteConfig(XY_PLANE, [0, 0], 0.0)


def test_motion_variance_exact_fit_is_zero():
    pts = [REV.forward(q) for q in np.linspace(0, 1, 9)]
    assert g.motion_variance(REV, pts) == pytest.approx(0.0, abs=1e-20)
