"""Distributed mode estimation over undirected networks via consensus protocols."""

from .algorithms import (
    AlgorithmRun, RunSettings, Scenario, candidate_positions, kstar, oracle_kth, oracle_mode, run_algorithm,
    run_algorithm1, run_algorithm2, run_algorithm3, state_count,
)
from .bounds import (
    bound_report, deviation_bound, gain_checks, select_gains, spectral_checks, time_bound_x, time_bound_y,
    time_bound_z,
)
from .errors import (
    AlgorithmInconsistency, ConfigError, DegenerateRingError, GainViolation, InadmissibleChange, LocalInitError,
    LockFailure, ModeConsensusError, NumericalRefusal, UnknownAttributeError,
)
from .integrate import detect_lock, integrate_fixed_step, propagate_linear_exact, run_piecewise
from .network import (
    AttributeTable, NetworkTimeline, ScenarioEvent, Segment, apply_event, build_complete, build_network, build_path,
    build_ring,
)
from .protocols import GainSet, ProtocolSystem, build_system, equilibrium
from .scenario import ScenarioConfig, emit_config, load_config, parse_config, run

__version__ = "0.1.0"

__all__ = [
    "AlgorithmRun", "RunSettings", "Scenario", "candidate_positions", "kstar", "oracle_kth", "oracle_mode",
    "run_algorithm", "run_algorithm1", "run_algorithm2", "run_algorithm3", "state_count", "bound_report",
    "deviation_bound", "gain_checks", "select_gains", "spectral_checks", "time_bound_x", "time_bound_y",
    "time_bound_z", "AlgorithmInconsistency", "ConfigError", "DegenerateRingError", "GainViolation",
    "InadmissibleChange", "LocalInitError", "LockFailure", "ModeConsensusError", "NumericalRefusal",
    "UnknownAttributeError", "detect_lock", "integrate_fixed_step", "propagate_linear_exact", "run_piecewise",
    "AttributeTable", "NetworkTimeline", "ScenarioEvent", "Segment", "apply_event", "build_complete",
    "build_network", "build_path", "build_ring", "GainSet", "ProtocolSystem", "build_system", "equilibrium",
    "ScenarioConfig", "emit_config", "load_config", "parse_config", "run",
]
