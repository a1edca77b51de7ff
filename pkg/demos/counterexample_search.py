"""Step profiles v with int v = int |v|^(p-2) v = 0 but int F_p(v) < 0.

With u = 1 and u_k = 1 + T_k v, both moment conditions make T_k v and its
power-sign image converge weakly to 0, yet the Brezis-Lieb defect has a
negative limit.  For p >= 3 no such profile exists.

Run: python3 demos/counterexample_search.py
"""

from weakbl.counterex import MomentSpec, search_step_profile, verify_counterexample
from weakbl.funcspace import ValidationError

for p in (1.2, 1.5, 2.5, 2.9, 3.5):
    rep = search_step_profile(MomentSpec(p))
    print(f"p = {p}:  {rep.reason}")
    if rep.verdict:
        v = rep.profile
        levels = ", ".join(f"{t:+.4f} (m = {m:.4f})" for t, m in zip(v.values, v.measures))
        print(f"    levels {levels}")
        print(f"    int F_p(v) = {rep.objective:.6f}, moments {rep.moment1:.1e}, {rep.moment2:.1e}")
        check = verify_counterexample(rep)
        print(f"    weak limits and defect re-checked: {check.verdict}")

# p = 2 has nothing to find: F_2(t) = 2t is a constraint map itself.
try:
    MomentSpec(2.0)
except ValidationError as exc:
    print(f"\np = 2: {exc}")

# For 2 < p < 3 the range matters.  With levels in [-1, 1] the best possible
# average is exactly 0; the default range a = 16 leaves room for a witness.
rep = search_step_profile(MomentSpec(2.5, a=1.0))
print(f"\np = 2.5 with a = 1: {rep.reason}")
