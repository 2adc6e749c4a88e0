"""Measurement on shared Bell pairs and the no-signaling verification toolkit."""

from .channel import ChannelConfig, ChannelReport, TrialRecord, run_experiment, run_trial
from .linalg import Ket
from .measurement import MeasurementFamily, outcome_probabilities, sample_outcomes, string_probability
from .nosignaling import BobFamily, alice_marginal, random_bob_family, scenario_equivalence
from .states import DensityOperator, bell_state, maximally_mixed

__all__ = [
    "BobFamily",
    "ChannelConfig",
    "ChannelReport",
    "DensityOperator",
    "Ket",
    "MeasurementFamily",
    "TrialRecord",
    "alice_marginal",
    "bell_state",
    "maximally_mixed",
    "outcome_probabilities",
    "random_bob_family",
    "run_experiment",
    "run_trial",
    "sample_outcomes",
    "scenario_equivalence",
    "string_probability",
]
