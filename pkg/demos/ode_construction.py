"""The density route: design psi >= 1, solve v' = gamma / psi(v), read off the moments.

Along the solution, ds = psi(v) dv / gamma, so int phi(v(s)) ds equals
gamma^-1 int phi(t) psi(t) dt.  A density orthogonal to t and |t|^(p-2) t with
a negative F_p moment therefore yields a profile with the same properties.

Run: python3 demos/ode_construction.py  (about a second)
"""

from weakbl.counterex import (
    DensityDesign,
    MomentSpec,
    design_density,
    ode_counterexample,
    solve_profile_ode,
    verify_counterexample,
)

shot = solve_profile_ode(DensityDesign.constant(1.0, 3.0))
print(f"psi = 3 on [-1, 1]: gamma = {shot.gamma:.12f} (expected 6)")

spec = MomentSpec(1.5)
design = design_density(spec)
print(f"\ndesigned density for p = 1.5: {design.reason}")
print(f"  mass {design.mass:.4f}, psi in [{design.min_psi:.3f}, {design.max_psi:.3f}]")
print(f"  moments against psi: {design.moment1:.1e}, {design.moment2:.1e}; "
      f"F_p moment {design.objective:.4f}")

rep = ode_counterexample(spec)
shoot = rep.details["shooting"]
print(f"\nshooting: gamma = {shoot['gamma']:.10f} after {shoot['bisection_steps']} bisections, "
      f"{shoot['n_steps']} RK4 steps")
print(f"{'':12}{'profile':>14}{'pushforward':>14}{'bound':>10}")
for key in ("moment1", "moment2", "objective"):
    print(f"{key:12}{getattr(rep, key):14.3e}{rep.details['pushforward'][key]:14.3e}"
          f"{rep.errors[key + '_bound']:10.1e}")
print(f"verdict {rep.verdict}; re-checked {verify_counterexample(rep).verdict}")

# For p = 2.5 the density has to spread over [-16, 16] and peaks near 2.5e5, so
# ode_counterexample(MomentSpec(2.5)) takes about half a minute of RK4 steps.
