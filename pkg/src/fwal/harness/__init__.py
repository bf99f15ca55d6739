from fwal.harness.config import ConfigError, ExperimentConfig, ExpertSpec, SolverSpec, load_config, parse_config
from fwal.harness.runner import RunResult, run_experiment
from fwal.harness.verify import EmptyBatteryError, verify_suite

__all__ = [
    "ConfigError",
    "EmptyBatteryError",
    "ExperimentConfig",
    "ExpertSpec",
    "RunResult",
    "SolverSpec",
    "load_config",
    "parse_config",
    "run_experiment",
    "verify_suite",
]
