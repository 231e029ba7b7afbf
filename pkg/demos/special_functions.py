"""Exponential integral values with error estimates, and the zero-drift limit
of the interaction kernel h.

Run: python3 demos/special_functions.py
"""
import numpy as np

from glrmf.rmf import little_h
from glrmf.specfun import e1, ei

for x in (-50.0, -1.0, 1e-6, 0.3725074107813666, 1.0, 50.0, 600.0):
    r = ei(x)
    print(f"Ei({x:>10g}) = {r.value: .16e}  (est. abs error {r.est_abs_error:.1e})")
print("Ei(-3) + E1(3) =", ei(-3.0).value + e1(3.0).value)

u = np.linspace(-3.0, 0.0, 4)
for a in (1.0, 1e-3, 1e-6, 0.0):
    print(f"a={a:<6g} h(u; w=0.5) =", np.round(little_h(u, 0.5, a), 6))
