"""Environment setup and the closed-form oracle.

Builds the all-ones LQ environment used throughout the experiments, validates
it, and walks through everything the oracle knows without learning: the
optimal gain, the value decomposition Jbar = f(a) + tr(Gamma) g(a), the
Riccati-type functions k1/k3, and instantaneous regret.
"""

import numpy as np

import lq_explore as lq

p = lq.unit_model()
d = lq.validate_model(p)
print("environment: A=B=C=D=Q=H=x0=T=1 (l = m = 1)")
print(f"  sum_j D_j D_j^T = {d.ddt[0, 0]:.1f}, sum_j C_j D_j = {d.cd[0]:.1f}")

phi_star = lq.phi_star(p, d)
print(f"\noptimal gain phi* = {phi_star[0]:+.4f}")
print(f"closed-loop rate a(phi*) = {lq.a_of_phi(phi_star, p, d):+.4f}")

# value of some policies under the plain objective
for phi, G in ((-2.0, 0.0), (-2.0, 0.1), (-1.1, 0.5), (0.0, 0.02)):
    val = lq.jbar([phi], [[G]], p, d)
    reg = lq.instant_regret([phi], [[G]], p, d)
    print(f"  Jbar(phi={phi:+.1f}, Gamma={G:.2f}) = {val:+.4f}   regret = {reg:.4f}")

# k1 is identically one for this model; k3 carries the entropy value
k1 = lq.solve_k1(p, d)
k3 = lq.solve_k3(p, d, gamma=1.0)
t = np.linspace(0, 1, 5)
print(f"\nk1(t) on {t}: {np.round(k1(t), 6)}")
print(f"k3(t) at temperature gamma=1: {np.round(k3(t), 4)}")
print(f"entropy-regularized optimal value V(0, x0) = {-0.5 * k1(0) * p.x0**2 + k3(0.0):+.4f}")

# the shrinking variance fixed point the adaptive learner tracks
for n in (0, 100, 10_000):
    b_n = 20.0 * max(1.0, (n + 1) ** 0.25)
    star = lq.gamma_star_n(b_n, 20.0, d)
    print(f"  Gamma*_n at n={n:>6}: {star[0, 0]:.4f}")
