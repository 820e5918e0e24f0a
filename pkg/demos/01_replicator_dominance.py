"""Hawk-Dove: the mixed strategy (2/3, 1/3) is an ESS, and the information
left to learn about it shrinks along every replicator trajectory.

Run with ``python3 demos/01_replicator_dominance.py``.
"""
import numpy as np

from relinfo.evogame import (
    batched_replicator_field,
    info_to_learn,
    is_dominant,
    is_ess,
    is_symmetric_nash,
)
from relinfo.numcore import integrate, worst_increase

A = np.array([[-1.0, 4.0], [0.0, 2.0]])
q = np.array([2 / 3, 1 / 3])

for name, check in [("Nash", is_symmetric_nash), ("dominant", is_dominant), ("ESS", is_ess)]:
    v = check(q, A)
    print(f"{name:9s} {v.status.name:12s} margin={v.margin:.3g}")

# a pure strategy is not an equilibrium; the check hands back a deviation
v = is_symmetric_nash(np.array([1.0, 0.0]), A)
print("all-hawk Nash:", v.status.name, "witness", v.witness)

starts = np.array([[0.05, 0.95], [0.3, 0.7], [0.9, 0.1], [0.999, 0.001]])
traj = integrate(batched_replicator_field(A, len(starts)), starts.ravel(), 15.0)
states = traj.states.reshape(len(traj.times), len(starts), 2)
learn = info_to_learn(q)

print("\n start        I(q,p) at t=0   at t=15    worst rise")
for j, p0 in enumerate(starts):
    info = np.array([learn(s) for s in states[:, j]])
    print(f" {p0[0]:.3f}/{p0[1]:.3f}  {info[0]:12.6f}  {info[-1]:9.2e}  {worst_increase(info):9.1e}")
