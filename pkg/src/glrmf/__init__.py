"""Replica-mean-field rates and exact simulation for Galves-Loecherbach networks."""
from .network import (Hypothesis, Interaction, NetworkSpec, NeuronParams, ValidatedSpec,
                      generate_beyond_pus, pus_profile, validate_spec)
from .rmf import QuadratureConfig, RateSolution, solve_all_rates, solve_rate
from .specfun import e1, ei

__version__ = "0.1.0"
