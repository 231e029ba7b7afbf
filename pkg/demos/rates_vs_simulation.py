"""Solve the mean-field rates of a small feedforward network and check them
against simulations with a growing number of replicas.

Run: python3 demos/rates_vs_simulation.py
"""
from pathlib import Path

import numpy as np

from glrmf.network import load_spec
from glrmf.pdmp import SimConfig, simulate
from glrmf.rmf import solve_all_rates
from glrmf.stats import compare_rates, estimate_rates, pool_rates

spec = load_spec(Path(__file__).with_name("three_neuron.json"))
sol = solve_all_rates(spec)
print("analytic rates:", np.round(sol.beta, 6))

for M in (2, 10, 50):
    ests = [estimate_rates(simulate(spec, SimConfig(M, 2e4, seed, sampler="queue")))
            for seed in range(1, 5)]
    rep = compare_rates(sol, pool_rates(ests))
    errs = ", ".join(f"{r.abs_err:.4f}" for r in rep.rows)
    print(f"M={M:3d}  |rate - beta| = [{errs}]  worst |z| = {rep.worst_abs_z:.2f}")
