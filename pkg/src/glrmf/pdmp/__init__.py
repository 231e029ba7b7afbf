"""Event-driven simulation of the replicated spiking network."""
from .generator import LyapunovReport, generator_apply, generator_ratio, lyapunov_scan, state_grid
from .simulate import EventLog, Sampler, SimConfig, config_hash, simulate
from .state import (EXTINCT, ReplicaState, apply_spike, flow, intensity, next_event,
                    simulate_single_network)

__all__ = [
    "EXTINCT", "EventLog", "LyapunovReport", "ReplicaState", "Sampler", "SimConfig",
    "apply_spike", "config_hash", "flow", "generator_apply", "generator_ratio",
    "intensity", "lyapunov_scan", "next_event", "simulate", "simulate_single_network",
    "state_grid",
]
