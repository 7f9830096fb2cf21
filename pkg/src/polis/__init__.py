"""Agent-society sandbox: agents farm, rob, trade, and concede until a commonwealth forms."""

from .config import ConfigError, SimConfig, load_config
from .loop import detect_commonwealth, live_edit, run_day, run_trial
from .state import EngineInvariantError, WorldState, init_world

__all__ = [
    "ConfigError",
    "EngineInvariantError",
    "SimConfig",
    "WorldState",
    "detect_commonwealth",
    "init_world",
    "live_edit",
    "load_config",
    "run_day",
    "run_trial",
]
