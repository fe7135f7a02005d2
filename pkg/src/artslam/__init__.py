"""Online estimation of articulated landmarks and articulated EKF-SLAM."""

from .geometry import (MODELS, Model, Plane, PrismaticConfig, RevoluteConfig, StaticConfig,
                       estimate_config, fit_circle_2d, fit_line_3d, fit_plane, forward_kinematics,
                       inverse_kinematics, landmark_jacobian)
from .metrics import Metrics, compute_ate, compute_rpe
from .rng import SplitMix64
from .slam import ArticulatedEKFSLAM, ControlInput, DynamicEKFSLAM, EKFSLAM, NoiseParams

__version__ = "0.1.0"

__all__ = [
    "MODELS", "Model", "Plane", "PrismaticConfig", "RevoluteConfig", "StaticConfig",
    "estimate_config", "fit_circle_2d", "fit_line_3d", "fit_plane", "forward_kinematics",
    "inverse_kinematics", "landmark_jacobian",
    "Metrics", "compute_ate", "compute_rpe",
    "SplitMix64",
    "ArticulatedEKFSLAM", "ControlInput", "DynamicEKFSLAM", "EKFSLAM", "NoiseParams",
]
