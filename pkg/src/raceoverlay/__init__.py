"""raceoverlay: real-time car tracking and broadcast-overlay pipeline.

Turns per-frame car detections into identity-stable tracks with coarse 3D
orientation and streams overlay-anchor data to operator consoles.  A seeded
synthetic detector stands in for the neural network, so every run is
reproducible end to end.
"""

from .geometry import BBox, CameraModel, CuboidHull, EulerAngles, Pose3
from .kernels import BACKEND as KERNEL_BACKEND
from .priors import assign_priors, make_prior_set, reconstruct_angle
from .scenesim import CarSpec, Detection, NoiseConfig, ScenarioConfig
from .tracker import Tracker, TrackerParams

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "CameraModel",
    "CarSpec",
    "CuboidHull",
    "Detection",
    "EulerAngles",
    "KERNEL_BACKEND",
    "NoiseConfig",
    "Pose3",
    "ScenarioConfig",
    "Tracker",
    "TrackerParams",
    "assign_priors",
    "make_prior_set",
    "reconstruct_angle",
    "__version__",
]
