"""Reinforcement-learning collision avoidance and path following for a surface vessel."""
from .dynamics import VesselModel, VesselState, ControlInput, default_model, load_model, step
from .guidance import build_path, nav_features
from .sensing import SensorConfig, sense
from .rewards import RewardConfig, total_reward

__version__ = "0.1.0"
