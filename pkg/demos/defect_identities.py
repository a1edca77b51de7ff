"""Brezis-Lieb defects D_j of u + T_j v and the identities they satisfy.

Run: python3 demos/defect_identities.py
"""

import numpy as np

from weakbl.counterex import MomentSpec, search_step_profile
from weakbl.defect import (
    defect_series,
    hilbert_identity_residuals,
    p4_identity_check,
    psi_hypothesis_check,
)
from weakbl.funcspace import StepFunction

sign = StepFunction([0, 0.5, 1], [1.0, -1.0])
halves = StepFunction([0, 0.5, 1], [0.0, 1.0])

# p = 4: the binomial expansion leaves only the cross term 6 int u^2 v^2.
rep = p4_identity_check(1.0, sign, range(1, 9))
print("p = 4, u = 1:", [f"{d:.12f}" for d in rep.D[:4]], "cross term", rep.cross_term)
rep = p4_identity_check(halves, sign, [1, 2, 3, 4, 5, 127, 128])
print("p = 4, u = 0|1:", dict(zip(rep.j_list, np.round(rep.deviations, 4))))
print("  (odd j cut a period at x = 1/2; even j line up with it)")

# p = 2: D_j = 2 <u, T_j v>, which tends to 0 for mean-zero v.
print("\np = 2 residuals |D_j - 2<u, T_j v>|:", f"{max(hilbert_identity_residuals(halves, sign)):.1e}")

# A p = 2.5 witness: the defect limit is negative, and the Psi moment does not
# vanish, so there is no clash with the domination argument.
w = search_step_profile(MomentSpec(2.5)).profile
series = defect_series(1.0, w, 2.5)
print(f"\np = 2.5 witness: D_j = {series.D[0]:.6f} for every j (limit {series.theoretical_limit:.6f})")
psi = psi_hypothesis_check(1.0, w, 2.5)
print(f"  int Psi(1, T_j v) -> {psi.psi_limit:.4f}; hypothesis holds: {psi.hypothesis_holds}")
print(f"  pointwise slack of the domination: {psi.pointwise_min_slack:.2e}")

print("\nCSV form of a series:")
print(defect_series(halves, sign, 3.0, [1, 2, 3, 4]).to_csv())
