"""Single-photon measurement-device-independent quantum secure direct communication.

Analytic performance model, security-capacity checks and a Monte Carlo
protocol simulator.
"""

from .channel import DEFAULT_CHANNEL, Basis, ChannelParams, PerformancePoint, capacity_cutoff, performance_point, secrecy_capacity
from .protocol.engine import SessionConfig, run_session

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CHANNEL",
    "Basis",
    "ChannelParams",
    "PerformancePoint",
    "SessionConfig",
    "capacity_cutoff",
    "performance_point",
    "run_session",
    "secrecy_capacity",
]
