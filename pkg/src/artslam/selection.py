"""Multiple-model articulation selection for a single landmark track.

Every candidate model keeps its own structure fit and temporal filter. Model
probabilities follow the recursive Bayes rule

    mu_j(t) ∝ p(z_t | Z_{0:t-1}, M_j) mu_j(t-1)

with the predictive likelihood taken from each candidate's EKF innovation.
A model is committed the first time its probability exceeds ``tau``.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import geometry, temporal
from .errors import (AllModelsImplausible, ArtSlamError, InvalidPrior, NotCommitted,
                     NumericalError)
from .geometry import MODELS, Model

DEFAULT_TAU = 0.6
LOG_LIKELIHOOD_FLOOR = -50.0
DEFAULT_INFLATION = 4.0


# static landmarks carry no velocity term and barely drift
DEFAULT_STATE_DIMS = {Model.STATIC: 1, Model.PRISMATIC: temporal.DEFAULT_STATE_DIM,
                      Model.REVOLUTE: temporal.DEFAULT_STATE_DIM}
DEFAULT_NOISE_SCALES = {Model.STATIC: 1e-6, Model.PRISMATIC: temporal.DEFAULT_NOISE_SCALE,
                        Model.REVOLUTE: temporal.DEFAULT_NOISE_SCALE}


def tau_for_model_count(r):
    """Heuristic threshold that grows with the number of competing models."""
    return max(0.5, 1.0 / r + 0.25)


@dataclass
class SelectionParams:
    dt: float = 0.1
    tau: float = DEFAULT_TAU
    min_samples: int = geometry.DEFAULT_MIN_SAMPLES
    obs_cov: np.ndarray = field(default_factory=lambda: 0.04 * np.eye(3))
    state_dim: dict = field(default_factory=lambda: dict(DEFAULT_STATE_DIMS))
    noise_scale: dict = field(default_factory=lambda: dict(DEFAULT_NOISE_SCALES))
    smoothing_sigma: float = temporal.DEFAULT_SMOOTHING_SIGMA
    ll_floor: float = LOG_LIKELIHOOD_FLOOR
    #: candidate filters assume ``inflation * obs_cov``; covers structure-fit error
    inflation: float = DEFAULT_INFLATION

    def transition(self, model):
        return temporal.build_transition(self.state_dim[model], self.dt, self.noise_scale[model])


@dataclass(frozen=True, eq=False)
class Candidate:
    config: geometry.ArticulationConfig
    state: temporal.MotionFilterState
    transition: temporal.TransitionModel
    t: float


#: marker for a candidate whose structure fit failed
FAILED = "failed"


@dataclass(frozen=True, eq=False)
class ModelBelief:
    models: tuple
    mu: np.ndarray
    candidates: dict = field(default_factory=dict)
    committed: Optional[Model] = None

    def probability(self, model):
        return float(self.mu[self.models.index(Model(model))])

    @property
    def fitted(self):
        return all(m in self.candidates for m in self.models)

    def committed_candidate(self):
        if self.committed is None:
            raise NotCommitted("no model has been committed for this track")
        return self.candidates[self.committed]


@dataclass
class TrackBuffer:
    landmark_id: object
    times: list = field(default_factory=list)
    points: list = field(default_factory=list)

    def append(self, t, point):
        if self.times and t <= self.times[-1]:
            raise ValueError(f"timestamp {t} does not follow {self.times[-1]}")
        self.times.append(float(t))
        self.points.append(np.asarray(point, dtype=float))

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class CommitEvent:
    landmark_id: object
    model: Model
    t: float
    mu: tuple


def init_belief(r=3, prior=None, models=MODELS):
    models = tuple(Model(m) for m in models)
    if len(models) != r:
        raise InvalidPrior(f"{r} models requested but {len(models)} given")
    if prior is None:
        mu = np.full(r, 1.0 / r)
    else:
        mu = np.asarray(prior, dtype=float)
        if mu.shape != (r,) or np.any(mu < 0) or abs(mu.sum() - 1) > 1e-9:
            raise InvalidPrior(f"prior must be {r} nonnegative values summing to 1, got {prior}")
    return ModelBelief(models, mu.copy())


def update_belief(belief, log_likelihoods, floor=None):
    """Bayes update of the model probabilities, normalized in log space.

    Non-finite entries mark unavailable likelihoods; with ``floor`` set they
    take the floor value, otherwise a belief with no usable entry raises
    :class:`AllModelsImplausible`.
    """
    ll = np.asarray(log_likelihoods, dtype=float).copy()
    if ll.shape != belief.mu.shape:
        raise ValueError(f"expected {len(belief.mu)} log-likelihoods, got {ll.shape}")
    bad = ~np.isfinite(ll) | np.isnan(ll)
    if floor is not None:
        ll[bad] = floor
        ll = np.maximum(ll, floor)
    elif np.all(bad):
        raise AllModelsImplausible("no candidate produced a usable likelihood")
    else:
        ll[bad] = -np.inf
    with np.errstate(divide="ignore"):
        logpost = ll + np.log(belief.mu)
    if not np.any(np.isfinite(logpost)):
        raise AllModelsImplausible("every model has zero posterior probability")
    logpost -= logpost.max()
    post = np.exp(logpost)
    return replace(belief, mu=post / post.sum())


def _fit_candidate(model, buffer, params):
    P = np.asarray(buffer.points)
    config = geometry.estimate_config(model, P, params.min_samples)
    qs = geometry.motion_series(config, P)
    n = params.state_dim[model]
    state = temporal.init_from_samples(np.column_stack([buffer.times, qs]), n,
                                       params.smoothing_sigma, geometry.motion_variance(config, P))
    return Candidate(config, state, params.transition(model), buffer.times[-1])


def _advance(candidate, t, z, obs_cov, dt):
    steps = max(1, int(round((t - candidate.t) / dt)))
    state = temporal.ekf_predict(candidate.state, candidate.transition, steps)
    state, nu, S = temporal.ekf_update(state, candidate.config, z, obs_cov)
    ll = temporal.observation_log_likelihood(nu, S)
    return replace(candidate, state=state, t=t), ll


def step_track(belief, buffer, z, params, obs_cov=None):
    """Append one observation ``z = (t, point)`` and run one selection step.

    ``buffer`` is appended in place; the updated belief is returned together
    with a :class:`CommitEvent` the first time a model crosses ``tau``.
    """
    t, point = z
    point = np.asarray(point, dtype=float)
    buffer.append(t, point)
    R = params.inflation * np.asarray(params.obs_cov if obs_cov is None else obs_cov, dtype=float)
    candidates = dict(belief.candidates)
    if not belief.fitted:
        if len(buffer) >= params.min_samples:
            for m in belief.models:
                if m in candidates:
                    continue
                try:
                    candidates[m] = _fit_candidate(m, buffer, params)
                except ArtSlamError:
                    candidates[m] = FAILED
        return replace(belief, candidates=candidates), None

    ll = np.full(len(belief.models), np.nan)
    for i, m in enumerate(belief.models):
        cand = candidates[m]
        if cand is FAILED:
            continue
        try:
            candidates[m], ll[i] = _advance(cand, t, point, R, params.dt)
        except NumericalError:
            candidates[m] = FAILED
    belief = update_belief(replace(belief, candidates=candidates), ll, floor=params.ll_floor)
    event = None
    if belief.committed is None:
        j = int(np.argmax(belief.mu))
        if belief.mu[j] > params.tau:
            belief = replace(belief, committed=belief.models[j])
            event = CommitEvent(buffer.landmark_id, belief.models[j], float(t), tuple(belief.mu.tolist()))
    return belief, event


def predict_track(belief, horizon):
    """Extrapolate the committed model ``horizon`` steps ahead."""
    cand = belief.committed_candidate()
    state = cand.state
    out = []
    for _ in range(horizon):
        state = temporal.ekf_predict(state, cand.transition)
        out.append(cand.config.forward(state.q))
    return out


def select_track(landmark_id, times, points, params, prior=None):
    """Run selection over a whole track; returns (belief, commit event or None, mu trace)."""
    belief = init_belief(len(MODELS), prior)
    buffer = TrackBuffer(landmark_id)
    commit = None
    trace = []
    for t, p in zip(times, points):
        belief, event = step_track(belief, buffer, (t, p), params)
        trace.append(belief.mu.copy())
        if event is not None and commit is None:
            commit = event
    return belief, commit, np.array(trace)
