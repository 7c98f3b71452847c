"""Reward-generating environments: synthetic bandits and the epidemic vaccine-allocation bandit."""

from .config import (
    CONTEXTS,
    REDUCTION_KEYS,
    SCENARIOS,
    EpidemicConfig,
    VaccineProfile,
    load_config,
    make_reciprocal,
    scenario_config,
    scenario_reductions,
)
from .epidemic import (
    EpidemicBandit,
    SimOutcome,
    allocate_doses,
    daily_doses,
    epidemic_reward,
    simulate_epidemic,
)
from .strategies import AGE_GROUPS, Vaccine, VaccineStrategy, enumerate_strategies
from .synthetic import SyntheticArmSpec, SyntheticBandit, synthetic_pull

__all__ = [
    "AGE_GROUPS", "CONTEXTS", "REDUCTION_KEYS", "SCENARIOS",
    "EpidemicBandit", "EpidemicConfig", "SimOutcome", "SyntheticArmSpec", "SyntheticBandit",
    "Vaccine", "VaccineProfile", "VaccineStrategy",
    "allocate_doses", "daily_doses", "enumerate_strategies", "epidemic_reward", "load_config",
    "make_reciprocal", "scenario_config", "scenario_reductions", "simulate_epidemic", "synthetic_pull",
]
