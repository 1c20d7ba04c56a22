"""Feedback-aware RF energy harvesting and transmission scheduling.

The harvested energy of an RF-powered transmitter depends on the energy
already in its capacitor, so transmission scheduling feeds back into
harvesting.  This package models that loop, computes offline-optimal
schedules by reducing the KKT system to a one-variable root search,
implements the classic fixed-tunnel baseline and two greedy/online
policies, and provides a Monte Carlo harness plus a brute-force oracle
for validation.
"""

__version__ = "0.1.0"

from .charge import (
    ChargeCircuit,
    HarvestCoefficients,
    harvest_coefficients,
    harvest_sensitivity,
    harvested_energy,
    optimal_residual,
    packet_length_for,
)
from .exceptions import (
    BudgetError,
    ConfigError,
    GenerationError,
    InfeasibleError,
    SolverError,
)
from .oracle import GridSpec, OracleResult, brute_force_optimize
from .scheduling import (
    EnergyScenario,
    FeasibilityReport,
    HarvestTrace,
    SolveReport,
    TransmissionSchedule,
    check_feasibility,
    find_candidates,
    propagate,
    solve,
    terminal_residual,
    throughput,
)
from .simulator import (
    ChannelLink,
    ExperimentConfig,
    future_impact_probe,
    generate_scenario,
    link_budget,
    monte_carlo,
    optimal_schedule,
    rate,
    replay,
)
from .strategies import (
    ClassicTunnel,
    OnlinePredictivePolicy,
    PacketPrediction,
    classic_tunnel,
    max_harvest_schedule,
    online_step,
    predict_next,
    tight_string_schedule,
)

__all__ = [
    "__version__",
    "ChargeCircuit",
    "HarvestCoefficients",
    "harvest_coefficients",
    "harvested_energy",
    "optimal_residual",
    "harvest_sensitivity",
    "packet_length_for",
    "EnergyScenario",
    "TransmissionSchedule",
    "HarvestTrace",
    "FeasibilityReport",
    "SolveReport",
    "propagate",
    "terminal_residual",
    "find_candidates",
    "check_feasibility",
    "throughput",
    "solve",
    "ClassicTunnel",
    "PacketPrediction",
    "OnlinePredictivePolicy",
    "classic_tunnel",
    "max_harvest_schedule",
    "tight_string_schedule",
    "predict_next",
    "online_step",
    "ChannelLink",
    "ExperimentConfig",
    "link_budget",
    "rate",
    "replay",
    "optimal_schedule",
    "generate_scenario",
    "monte_carlo",
    "future_impact_probe",
    "GridSpec",
    "OracleResult",
    "brute_force_optimize",
    "InfeasibleError",
    "SolverError",
    "GenerationError",
    "BudgetError",
    "ConfigError",
]
