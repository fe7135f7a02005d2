"""Articulation structure: least-squares fits and per-model kinematics.

Each articulation model maps a scalar motion variable ``q`` onto a 1-DOF
subspace of 3D space:

* static     ``m = rest + q * (1, 1, 1)``
* prismatic  ``m = origin + q * axis``
* revolute   ``m = p0 + (x0 + r cos q) v1 + (y0 + r sin q) v2``

Configs are immutable and hold numpy arrays; use ``to_dict``/``config_from_dict``
for JSON round trips.
"""

from dataclasses import dataclass
from enum import Enum
from typing import ClassVar, Union

import numpy as np

from .errors import DegenerateGeometry, InsufficientSamples, SingularProjection

#: relative singular-value cutoff for collinear / coincident inputs
DEGENERACY_TOL = 1e-8

DEFAULT_MIN_SAMPLES = 7

_UNIT_TOL = 1e-9
_ONES = np.ones(3)


class Model(str, Enum):
    STATIC = "static"
    PRISMATIC = "prismatic"
    REVOLUTE = "revolute"

    def __str__(self):
        return self.value


MODELS = (Model.STATIC, Model.PRISMATIC, Model.REVOLUTE)


def _vec(a, n=3):
    a = np.array(a, dtype=float).reshape(n)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"non-finite vector {a}")
    a.setflags(write=False)
    return a


def _points(points, dim=3):
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] != dim:
        P = P.reshape(-1, dim)
    return P


@dataclass(frozen=True, eq=False)
class Plane:
    v1: np.ndarray
    v2: np.ndarray
    p0: np.ndarray

    def __post_init__(self):
        for name in ("v1", "v2", "p0"):
            object.__setattr__(self, name, _vec(getattr(self, name)))
        if abs(np.linalg.norm(self.v1) - 1) > _UNIT_TOL or abs(np.linalg.norm(self.v2) - 1) > _UNIT_TOL:
            raise ValueError("plane basis vectors must be unit length")
        if abs(self.v1 @ self.v2) > _UNIT_TOL:
            raise ValueError("plane basis vectors must be orthogonal")

    @property
    def normal(self):
        return np.cross(self.v1, self.v2)

    def project(self, points):
        """In-plane (u, v) coordinates of 3D points."""
        d = _points(points) - self.p0
        return np.column_stack([d @ self.v1, d @ self.v2])

    def lift(self, uv):
        uv = np.asarray(uv, dtype=float)
        return self.p0 + uv[..., :1] * self.v1 + uv[..., 1:2] * self.v2

    def to_dict(self):
        return {"v1": self.v1.tolist(), "v2": self.v2.tolist(), "p0": self.p0.tolist()}


@dataclass(frozen=True, eq=False)
class StaticConfig:
    rest: np.ndarray
    model: ClassVar[Model] = Model.STATIC

    def __post_init__(self):
        object.__setattr__(self, "rest", _vec(self.rest))

    def forward(self, q):
        return self.rest + q * _ONES

    def inverse(self, point, previous=None):
        return float(np.mean(np.asarray(point, dtype=float) - self.rest))

    def jacobian(self, q):
        return _ONES.copy()

    def to_dict(self):
        return {"model": self.model.value, "rest": self.rest.tolist()}


@dataclass(frozen=True, eq=False)
class PrismaticConfig:
    axis: np.ndarray
    origin: np.ndarray
    model: ClassVar[Model] = Model.PRISMATIC

    def __post_init__(self):
        object.__setattr__(self, "axis", _vec(self.axis))
        object.__setattr__(self, "origin", _vec(self.origin))
        if abs(np.linalg.norm(self.axis) - 1) > _UNIT_TOL:
            raise ValueError("prismatic axis must be unit length")

    def forward(self, q):
        return self.origin + q * self.axis

    def inverse(self, point, previous=None):
        return float((np.asarray(point, dtype=float) - self.origin) @ self.axis)

    def jacobian(self, q):
        return self.axis.copy()

    def to_dict(self):
        return {"model": self.model.value, "axis": self.axis.tolist(), "origin": self.origin.tolist()}


@dataclass(frozen=True, eq=False)
class RevoluteConfig:
    plane: Plane
    center2d: np.ndarray
    radius: float
    model: ClassVar[Model] = Model.REVOLUTE

    def __post_init__(self):
        object.__setattr__(self, "center2d", _vec(self.center2d, 2))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError("revolute radius must be positive")

    @property
    def center(self):
        """Circle center in world coordinates."""
        return self.plane.lift(self.center2d)

    @property
    def normal(self):
        return self.plane.normal

    def forward(self, q):
        p = self.plane
        return (p.p0 + (self.center2d[0] + self.radius * np.cos(q)) * p.v1
                + (self.center2d[1] + self.radius * np.sin(q)) * p.v2)

    def inverse(self, point, previous=None):
        du, dv = self.plane.project(point)[0] - self.center2d
        if np.hypot(du, dv) < 1e-12 * max(1.0, self.radius):
            raise SingularProjection("point projects onto the revolute center")
        q = float(np.arctan2(dv, du))
        if previous is not None:
            q += 2 * np.pi * np.round((previous - q) / (2 * np.pi))
        return q

    def jacobian(self, q):
        return self.radius * (-np.sin(q) * self.plane.v1 + np.cos(q) * self.plane.v2)

    def to_dict(self):
        return {"model": self.model.value, "plane": self.plane.to_dict(),
                "center2d": self.center2d.tolist(), "radius": self.radius}


ArticulationConfig = Union[StaticConfig, PrismaticConfig, RevoluteConfig]


def config_from_dict(d):
    model = Model(d["model"])
    if model is Model.STATIC:
        return StaticConfig(d["rest"])
    if model is Model.PRISMATIC:
        return PrismaticConfig(d["axis"], d["origin"])
    pl = d["plane"]
    return RevoluteConfig(Plane(pl["v1"], pl["v2"], pl["p0"]), d["center2d"], d["radius"])


def _centered_svd(P):
    c = P.mean(axis=0)
    _, s, Vt = np.linalg.svd(P - c, full_matrices=False)
    return c, s, Vt


def fit_plane(points):
    """Orthogonal least-squares plane through the centroid of ``points``."""
    P = _points(points)
    if len(P) < 3:
        raise DegenerateGeometry(f"plane fit needs at least 3 points, got {len(P)}")
    c, s, Vt = _centered_svd(P)
    if s[0] == 0 or s[1] < DEGENERACY_TOL * s[0]:
        raise DegenerateGeometry("points are collinear or coincident")
    v1 = Vt[0]
    v2 = np.cross(Vt[2], v1)
    return Plane(v1, v2 / np.linalg.norm(v2), c)


def fit_circle_2d(points2d):
    """Algebraic (Kasa) circle fit.

    Solves ``2 a u + 2 b v + c = u^2 + v^2`` in the least-squares sense on
    centered data, then ``r = sqrt(c + a^2 + b^2)``.

    Returns
    -------
    center : ndarray, shape (2,)
    radius : float
    """
    P = _points(points2d, 2)
    if len(P) < 3:
        raise DegenerateGeometry(f"circle fit needs at least 3 points, got {len(P)}")
    mean, s, _ = _centered_svd(P)
    if s[0] == 0 or s[1] < DEGENERACY_TOL * s[0]:
        raise DegenerateGeometry("points are collinear; circle is underdetermined")
    U = P - mean
    A = np.column_stack([2 * U, np.ones(len(U))])
    rhs = (U ** 2).sum(axis=1)
    (a, b, c), *_ = np.linalg.lstsq(A, rhs, rcond=None)
    r2 = c + a * a + b * b
    if not r2 > 0:
        raise DegenerateGeometry("algebraic circle fit produced a non-positive radius")
    return mean + np.array([a, b]), float(np.sqrt(r2))


def fit_line_3d(points):
    """Principal-direction line fit; axis oriented from first to last point."""
    P = _points(points)
    if len(P) < 2:
        raise DegenerateGeometry(f"line fit needs at least 2 points, got {len(P)}")
    c, s, Vt = _centered_svd(P)
    scale = max(1.0, float(np.abs(P).max()))
    if s[0] <= 1e-12 * scale:
        raise DegenerateGeometry("all points coincide")
    axis = Vt[0]
    if (P[-1] - P[0]) @ axis < 0:
        axis = -axis
    return PrismaticConfig(axis, c)


def fit_revolute(points):
    plane = fit_plane(points)
    center2d, radius = fit_circle_2d(plane.project(points))
    return RevoluteConfig(plane, center2d, radius)


def estimate_config(model, buffer, min_samples=DEFAULT_MIN_SAMPLES):
    """Fit the structure of ``model`` to buffered landmark positions."""
    P = _points(buffer)
    if len(P) < min_samples:
        raise InsufficientSamples(f"{model} fit needs {min_samples} samples, got {len(P)}")
    model = Model(model)
    if model is Model.STATIC:
        return StaticConfig(P.mean(axis=0))
    if model is Model.PRISMATIC:
        return fit_line_3d(P)
    return fit_revolute(P)


def forward_kinematics(config, q):
    return config.forward(q)


def inverse_kinematics(config, point, previous=None):
    return config.inverse(point, previous)


def landmark_jacobian(config, q):
    return config.jacobian(q)


def motion_series(config, points):
    """Inverse kinematics along a track, unwrapping revolute angles."""
    qs = []
    prev = None
    for p in _points(points):
        prev = config.inverse(p, prev)
        qs.append(prev)
    return np.array(qs)


def motion_variance(config, points):
    """Variance of a single ``q`` sample implied by the fit residuals.

    Residual energy orthogonal to the subspace gives a per-axis noise
    variance (isotropic noise assumed), which is mapped onto ``q`` through
    the squared norm of the landmark Jacobian.
    """
    P = _points(points)
    n = len(P)
    if config.model is Model.STATIC:
        per_axis = ((P - config.rest) ** 2).sum() / (3 * n)
        gain = 3.0
    elif config.model is Model.PRISMATIC:
        d = P - config.origin
        ortho = d - np.outer(d @ config.axis, config.axis)
        per_axis = (ortho ** 2).sum() / (2 * n)
        gain = 1.0
    else:
        d = P - config.plane.p0
        out = d @ config.normal
        uv = config.plane.project(P) - config.center2d
        radial = np.hypot(uv[:, 0], uv[:, 1]) - config.radius
        per_axis = ((out ** 2).sum() + (radial ** 2).sum()) / (2 * n)
        gain = config.radius ** 2
    return float(per_axis / gain)
