"""Joint holographic beamforming and QoS-constrained user scheduling on a
reconfigurable holographic surface downlink."""

__version__ = "0.1.0"

from .channel import ArrayGeometry, ChannelSet, PathRealization, array_response, generate_channel, sample_paths, steering_vector_axis
from .config import ConfigError, OptimizerSettings, SystemConfig, load_config
from .holo_opt import GradientWorkspace, NumericalFailure, optimize_weights, sinr_of_weights
from .precoder import ZFInfeasibleError, per_user_rates, zero_forcing
from .scheduler import JointSolution, greedy_schedule, initial_rates, joint_inner_update
from .surface import SurfaceGeometry, build_phase_matrix, effective_channel, effective_surface

__all__ = [
    "ArrayGeometry",
    "ChannelSet",
    "ConfigError",
    "GradientWorkspace",
    "JointSolution",
    "NumericalFailure",
    "OptimizerSettings",
    "PathRealization",
    "SurfaceGeometry",
    "SystemConfig",
    "ZFInfeasibleError",
    "array_response",
    "build_phase_matrix",
    "effective_channel",
    "effective_surface",
    "generate_channel",
    "greedy_schedule",
    "initial_rates",
    "joint_inner_update",
    "load_config",
    "optimize_weights",
    "per_user_rates",
    "sample_paths",
    "sinr_of_weights",
    "steering_vector_axis",
    "zero_forcing",
]
