"""Where the elementary inequality g_p >= 0 on [-1, 1] starts to hold.

Run: python3 demos/inequality_threshold.py
"""

import numpy as np

from weakbl.inequality import Residual, certify_nonneg, find_violation, scan_p

# Below p = 3 the residual dips below zero; from p = 3 on the grid minimum is
# zero up to rounding and the certificate goes through.
print(f"{'p':>5} {'grid min':>12} {'argmin':>8}  verdict")
for row in scan_p(np.round(np.arange(1.5, 5.01, 0.25), 2), h=1e-4):
    print(f"{row.p:5.2f} {row.grid_min:12.4e} {row.argmin[0]:8.4f}  {row.verdict}")

# The worst point for p < 3 sits at the right end of the box, but the
# residual is already negative just to the right of 0.
for p in (2.5, 2.9):
    t, val = find_violation(Residual("g_p", p), [(-1, 1)])
    print(f"\np = {p}: most negative value {val:.4f} at t = {t:.4f}")

# A certificate records how the lower bound was obtained.
cert = certify_nonneg(Residual("g_p", 3.0), [(-1, 1)], h=1e-5, tol=1e-9)
print(f"\np = 3 certificate: {cert.verdict}")
print(f"  grid minimum          {cert.grid_min:.3e}")
print(f"  certified lower bound {cert.certified_lower_bound:.3e}")
print(f"  slope bound L         {cert.lipschitz_bound:.3g}  (plain L h / 2 bound: {cert.lipschitz_lower_bound:.3e})")
