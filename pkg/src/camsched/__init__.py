"""Scheduling re-identification queries across a camera network.

A target is followed through a network of non-overlapping cameras. At each
timestep a policy picks one camera to poll (or none while the target is in
transit); a Q-network trained with n-step targets learns when and where to
look. Baselines, metrics and a synthetic trajectory generator are included.
"""

from .agent import Policy, TrainConfig, run_policy, train
from .env import EnvConfig
from .netmodel import CameraNetwork, SynthConfig, Trajectory, TrajectorySet, generate_synthetic

__all__ = [
    "CameraNetwork", "EnvConfig", "Policy", "SynthConfig", "TrainConfig", "Trajectory",
    "TrajectorySet", "generate_synthetic", "run_policy", "train",
]
__version__ = "0.1.0"
