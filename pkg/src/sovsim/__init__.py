"""Discrete-time simulator of decision-energy concentration in mixed
human/AI decision systems, with boundary enforcement, proposition checks
and transfer-threshold sweeps."""
from .dynamics import advance
from .metrics import MetricsFrame, compute_frame, sovereign
from .model import (
    BoundaryConfig,
    ConfigError,
    DecisionNode,
    DomainClass,
    EconomyParams,
    NodeKind,
    ParamRanges,
    SystemState,
    dump_config,
    generate_random_system,
    load_config,
)
from .sweeps import SweepSpec, bisect_threshold, grid_sweep, run_trajectory

__version__ = "0.1.0"

__all__ = [
    "BoundaryConfig", "ConfigError", "DecisionNode", "DomainClass", "EconomyParams",
    "MetricsFrame", "NodeKind", "ParamRanges", "SweepSpec", "SystemState", "advance",
    "bisect_threshold", "compute_frame", "dump_config", "generate_random_system",
    "grid_sweep", "load_config", "run_trajectory", "sovereign",
]
