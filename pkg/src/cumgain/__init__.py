"""Counterfactual cumulative-gain experimentation: IPW gain estimates,
always-valid gap bounds and cumulative gain successive elimination."""

from .environment import (
    AssumptionReport,
    DayObservation,
    EnvironmentSpec,
    Scenario,
    ScenarioKind,
    oracle_cumulative_gain,
    oracle_gap_rate,
    sample_day,
    verify_assumptions,
)
from .estimation import EstimatorState
from .harness import (
    ExperimentTrace,
    MonteCarloReport,
    ParadoxReport,
    RunSummary,
    regret_curve,
    run_experiment,
    run_monte_carlo,
    simpsons_paradox_check,
)
from .inference import ConfidenceConfig, GapBound
from .policies import PolicyKind, PolicyTag

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "ConfidenceConfig",
    "DayObservation",
    "EnvironmentSpec",
    "EstimatorState",
    "ExperimentTrace",
    "GapBound",
    "MonteCarloReport",
    "ParadoxReport",
    "PolicyKind",
    "PolicyTag",
    "RunSummary",
    "Scenario",
    "ScenarioKind",
    "oracle_cumulative_gain",
    "oracle_gap_rate",
    "regret_curve",
    "run_experiment",
    "run_monte_carlo",
    "sample_day",
    "simpsons_paradox_check",
    "verify_assumptions",
]
