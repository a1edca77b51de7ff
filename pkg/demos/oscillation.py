"""Rescaled copies T_j v(x) = v(jx mod 1) converge weakly to the mean of v.

Run: python3 demos/oscillation.py
"""

from weakbl.funcspace import StepFunction, abs_power, integrate_composition, lp_norm
from weakbl.oscillate import convergence_table, decay_constant, rescale

v = StepFunction([0, 0.2, 0.55, 1], [2.0, -1.0, 0.5])
psi = StepFunction.indicator(0.1, 0.45)

est = convergence_table(v, psi, [1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144])
C = decay_constant(v, psi)
print(f"limit (int v)(int psi) = {est.predicted_limit:.6f},  C = {C:.3g}")
for j, pairing, dev in zip(est.j_list, est.pairings, est.deviations):
    print(f"  j = {j:4d}  <T_j v, psi> = {pairing: .6f}   j * dev = {j * dev:.4f}")

# T_j only rearranges the values of v: every composed integral, and so every
# Lp norm, stays the same.
w = rescale(v, 7)
print(f"\n{w.n_cells} cells after rescaling by 7")
print(f"int v^2:  {integrate_composition(v, abs_power(2)):.15f} -> {integrate_composition(w, abs_power(2)):.15f}")
print(f"L3 norm:  {lp_norm(v, 3):.15f} -> {lp_norm(w, 3):.15f}")

# Squares converge to the mean of v^2, not to the square of the mean.
sq = convergence_table(v, StepFunction.constant(1.0), [1, 10, 100], abs_power(2))
print(f"\nweak limit of (T_j v)^2: {sq.predicted_limit:.4f}; (int v)^2 = {0.0375 ** 2:.6f}")
