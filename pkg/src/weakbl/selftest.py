"""Quick self-checks: the closed-form and restatement-level facts of every module.

Each check returns ``(value, expected, ok)``; the suite is deterministic so
its JSON output is byte-identical across runs.
"""

from __future__ import annotations

import math

import numpy as np

from . import counterex, defect, funcspace as fs, inequality as ineq, oscillate as osc

SIGN = fs.StepFunction([0.0, 0.5, 1.0], [1.0, -1.0])
ONE = fs.StepFunction.constant(1.0)


def _close(value, expected, tol=1e-12):
    return value, expected, bool(abs(value - expected) <= tol)


def _same_step(f, g):
    return bool(np.array_equal(f.breakpoints, g.breakpoints) and np.array_equal(f.values, g.values))


def _integrate_square():
    return _close(fs.integrate_composition(SIGN, fs.abs_power(2)), 1.0)


def _integrate_identity():
    return _close(fs.integrate_composition(SIGN, fs.identity()), 0.0)


def _pair_constants():
    return _close(fs.pair(ONE, ONE), 1.0)


def _pair_mean_zero():
    return _close(fs.pair(SIGN, ONE), 0.0)


def _norm_two_level():
    return _close(fs.lp_norm(SIGN, 3.7), 1.0)


def _norm_zero():
    return _close(fs.lp_norm(fs.StepFunction.constant(0.0), 2.5), 0.0)


def _rescale_identity():
    ok = _same_step(osc.rescale(SIGN, 1), SIGN)
    return ok, True, ok


def _rescale_tiling():
    want = fs.StepFunction([0, 0.25, 0.5, 0.75, 1], [1, -1, 1, -1])
    ok = _same_step(osc.rescale(SIGN, 2), want)
    return ok, True, ok


def _oscillated_against_one():
    worst = max(abs(osc.pair_oscillated(SIGN, ONE, j)) for j in (1, 2, 3, 7, 64))
    return _close(worst, 0.0)


def _mean_two_level():
    return _close(osc.weak_limit_mean(SIGN), 0.0)


def _mean_constant():
    return _close(osc.weak_limit_mean(fs.StepFunction.constant(-2.5)), -2.5)


def _composition_odd():
    return _close(osc.composition_weak_limit(SIGN, fs.power_sign(2)), 0.0)


def _composition_identity():
    v = fs.StepFunction([0, 0.3, 1], [2.0, -0.5])
    return _close(osc.composition_weak_limit(v, fs.identity()), osc.weak_limit_mean(v))


def _table_mean_zero():
    est = osc.convergence_table(SIGN, ONE, range(1, 17))
    return _close(max(abs(x) for x in est.pairings) + abs(est.predicted_limit), 0.0)


def _table_self_pairing():
    return _close(osc.convergence_table(SIGN, SIGN, [1]).pairings[0], 1.0)


def _g_at_zero():
    worst = max(abs(float(ineq.g_p(0.0, p))) for p in (1.2, 2.0, 2.5, 3.0, 4.0, 7.5))
    return _close(worst, 0.0, 0.0)


def _symmetry_at_zero():
    return _close(float(abs(ineq.Fvec_p(0.0, -1.0, 3.0) - ineq.Fvec_p(0.0, 1.0, 3.0))), 0.0, 0.0)


def _psi_at_t_zero():
    s = np.linspace(-3, 3, 61)
    worst = max(float(np.max(np.abs(ineq.Psi_p(s, 0.0, p)))) for p in (2.0, 2.5, 4.0))
    return _close(worst, 0.0, 0.0)


def _witness_moments():
    rep = counterex.search_step_profile(counterex.MomentSpec(1.5))
    worst = max(abs(rep.moment1), abs(rep.moment2))
    return worst, rep.spec.eps_mom, bool(worst <= rep.spec.eps_mom)


def _shoot_unit():
    gamma, prof = counterex.solve_profile_ode(counterex.DensityDesign.constant(1.0, 1.0))
    lin = float(np.max(np.abs(prof.v - (-1 + 2 * prof.s))))
    return gamma, 2.0, bool(abs(gamma - 2.0) <= 1e-10 and lin <= 1e-12)


def _shoot_constant():
    gamma, prof = counterex.solve_profile_ode(counterex.DensityDesign.constant(2.0, 3.0))
    lin = float(np.max(np.abs(prof.v - (-2 + 4 * prof.s))))
    return gamma, 12.0, bool(abs(gamma - 12.0) <= 1e-9 and lin <= 1e-12)


def _shoot_contract():
    design = counterex.DensityDesign.constant(1.5, 2.0)
    shot = counterex.solve_profile_ode(design)
    v = shot.profile.v
    ok = v[0] == -1.5 and abs(v[-1] - 1.5) <= shot.gamma_tol and bool(np.all(np.diff(v) > 0))
    return shot.endpoint_residual, 0.0, bool(ok)


def _pushforward_identity():
    design = counterex.DensityDesign.constant(1.0, 1.0)
    return _close(counterex.pushforward_moment(design, 2.0, fs.identity()), 0.0)


def _design_constraints():
    spec = counterex.MomentSpec(1.5)
    d = counterex.design_density(spec)
    worst = max(abs(d.moment1), abs(d.moment2))
    return worst, 1e-10, bool(worst <= 1e-10 and d.min_psi >= 1.0)


def _even_part_irrelevant():
    spec = counterex.MomentSpec(2.5, a=2.0)
    even = counterex.DensityDesign(2.0, "poly", np.array([0.0, 0.0, 3.0, 0.0, 5.0]), 1.0, 0)
    worst = max(abs(counterex.integrate_density(even, m)[0]) for m in (spec.phi1, spec.phi2))
    return _close(worst, 0.0, 1e-12)


def _hilbert_zero():
    v = fs.StepFunction([0, 0.2, 0.5, 1], [1.0, 0.4, -0.64])
    worst = max(abs(defect.bl_defect(1.0, v, 2.0, j)) for j in (1, 2, 5, 32))
    return _close(worst, 0.0)


def _zero_profile():
    zero = fs.StepFunction.constant(0.0)
    u = fs.StepFunction([0, 0.4, 1], [1.0, -2.0])
    worst = max(abs(defect.bl_defect(u, zero, p, j)) for p in (1.5, 2.5, 4.0) for j in (1, 3, 16))
    return _close(worst, 0.0, 0.0)


def _limit_single_level():
    v = fs.StepFunction([0, 0.3, 1], [0.7, -0.3])
    got = defect.defect_limit_theory(1.0, v, 2.5)
    return _close(got, osc.composition_weak_limit(v, fs.bl_residual(2.5)))


def _limit_zero_u():
    return _close(defect.defect_limit_theory(0.0, SIGN, 3.3), 0.0, 0.0)


def _p4_zero_profile():
    rep = defect.p4_identity_check(1.0, fs.StepFunction.constant(0.0))
    return _close(rep.max_deviation + abs(rep.cross_term), 0.0, 0.0)


def _psi_check_zero_profile():
    rep = defect.psi_hypothesis_check(1.0, fs.StepFunction.constant(0.0), 4.0)
    worst = max(map(abs, rep.psi_integrals + rep.D))
    return _close(worst, 0.0, 0.0)


CHECKS = (
    ("funcspace.integrate_composition: two-level, t^2 -> 1", _integrate_square),
    ("funcspace.integrate_composition: two-level, identity -> 0", _integrate_identity),
    ("funcspace.pair: constants -> 1", _pair_constants),
    ("funcspace.pair: mean-zero against 1 -> 0", _pair_mean_zero),
    ("funcspace.lp_norm: two-level -> 1", _norm_two_level),
    ("funcspace.lp_norm: zero -> 0", _norm_zero),
    ("oscillate.rescale: j = 1 is the identity", _rescale_identity),
    ("oscillate.rescale: j = 2 tiles two periods", _rescale_tiling),
    ("oscillate.pair_oscillated: mean-zero against 1 -> 0", _oscillated_against_one),
    ("oscillate.weak_limit_mean: two-level -> 0", _mean_two_level),
    ("oscillate.weak_limit_mean: constant c -> c", _mean_constant),
    ("oscillate.composition_weak_limit: odd map, symmetric levels -> 0", _composition_odd),
    ("oscillate.composition_weak_limit: identity -> mean", _composition_identity),
    ("oscillate.convergence_table: mean-zero against 1 -> all 0", _table_mean_zero),
    ("oscillate.convergence_table: v = psi, j = 1 -> 1", _table_self_pairing),
    ("inequality.eval_residual: g_p(0) = 0", _g_at_zero),
    ("inequality.check_vector_structure: symmetry at t = 0", _symmetry_at_zero),
    ("inequality.check_psi_domination: Psi(s, 0) = 0", _psi_at_t_zero),
    ("counterex.search_step_profile: moments within eps_mom", _witness_moments),
    ("counterex.solve_profile_ode: psi = 1 -> gamma = 2a, linear", _shoot_unit),
    ("counterex.solve_profile_ode: psi = c -> gamma = 2ac, linear", _shoot_constant),
    ("counterex.solve_profile_ode: endpoints and monotonicity", _shoot_contract),
    ("counterex.pushforward_moment: psi = 1, identity -> 0", _pushforward_identity),
    ("counterex.design_density: both moment constraints", _design_constraints),
    ("counterex.design_density: even additions keep the constraints", _even_part_irrelevant),
    ("defect.bl_defect: p = 2, mean-zero v -> 0", _hilbert_zero),
    ("defect.bl_defect: v = 0 -> 0", _zero_profile),
    ("defect.defect_limit_theory: u = 1 -> int F_p(v)", _limit_single_level),
    ("defect.defect_limit_theory: u = 0 -> 0", _limit_zero_u),
    ("defect.p4_identity_check: v = 0 -> both sides 0", _p4_zero_profile),
    ("defect.psi_hypothesis_check: v = 0 -> all 0", _psi_check_zero_profile),
)


def _plain_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    x = float(x)
    return x if math.isfinite(x) else None


def run_selftest():
    """Run every check; return ``(all_ok, rows)``.

    A check that raises counts as failed and records the exception message.
    """
    rows = []
    for name, fn in CHECKS:
        try:
            value, expected, ok = fn()
            row = {"name": name, "value": _plain_value(value), "expected": _plain_value(expected),
                   "ok": bool(ok)}
        except Exception as exc:  # noqa: BLE001  a failing check must not stop the suite
            row = {"name": name, "value": None, "expected": None, "ok": False,
                   "error": f"{type(exc).__name__}: {exc}"}
        rows.append(row)
    return all(r["ok"] for r in rows), rows
