"""Delay-tolerant distributed space-time coding over two-hop relay networks."""
from .simulator import BerPoint, RunResult, run_sweep, run_trial, theoretical_alamouti_ber
from .system_model import (
    ConfigError,
    RelayStrategy,
    Scheme,
    SystemConfig,
    Topology,
    validate_config,
)

__all__ = [
    "BerPoint", "ConfigError", "RelayStrategy", "RunResult", "Scheme", "SystemConfig",
    "Topology", "run_sweep", "run_trial", "theoretical_alamouti_ber", "validate_config",
]
