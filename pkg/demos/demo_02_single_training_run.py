"""One adaptive training run, step by step.

Runs the full loop (rollout, policy evaluation, policy gradient, adaptive
temperature, variance update) for a few thousand iterations on the unit
model with the experiment configuration, and prints how the iterates move:
phi toward -2, Gamma and gamma down their schedules, regret shrinking.
"""

import numpy as np

import lq_explore as lq
from lq_explore.learner import appendix_schedules, train
from lq_explore.sde import RngStream

p = lq.unit_model()
d = lq.validate_model(p)
sch = appendix_schedules()

records = train(p, d, sch, init=dict(phi0=-1.1, Gamma0=0.5, gamma0=2.0),
                n_iters=3000, rng=RngStream(1))

print(" iter      phi     Gamma     gamma   instant regret")
for n in (0, 1, 10, 100, 500, 1000, 2000, 2999):
    r = records[n]
    print(f"{r.n:5d}  {r.phi[0]:+.4f}   {r.Gamma[0, 0]:.4f}   {r.gamma:.4f}   {r.instant_regret:.4f}")

cum = np.cumsum([r.instant_regret for r in records])
print(f"\ncumulative regret after {len(records)} iterations: {cum[-1]:.1f}")
print(f"final distance to phi*: {abs(records[-1].phi[0] + 2.0):.4f}")
print("statuses:", {r.status for r in records})
