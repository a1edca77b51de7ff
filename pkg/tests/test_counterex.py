import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import projected_profiles
from oracles import brute_force_levels, lp_oracle
from weakbl.counterex import (
    CounterexampleReport,
    DensityDesign,
    MomentSpec,
    default_amplitude,
    design_density,
    eliminate_measures,
    integrate_density,
    ode_counterexample,
    project_moments,
    pushforward_error_bound,
    pushforward_moment,
    search_step_profile,
    solve_profile_ode,
    verify_counterexample,
)
from weakbl.defect import defect_limit_theory
from weakbl.funcspace import (
    StepFunction,
    ValidationError,
    abs_power,
    bl_residual,
    constant,
    identity,
    integrate_composition,
    power_sign,
    signed_power,
)
from weakbl.oscillate import composition_weak_limit


# ---- oracles, frozen ------------------------------------------------------------


def test_brute_force_oracle_p15():
    # atoms +-1 with equal mass give (F(1) + F(-1)) / 2 = sqrt(2) - 2
    assert brute_force_levels(1.5) == pytest.approx(math.sqrt(2) - 2, abs=1e-12)
    assert lp_oracle(1.5, 1.0) == pytest.approx(-0.5857864376, abs=1e-8)


def test_lp_oracle_p25():
    assert lp_oracle(2.5, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert lp_oracle(2.5, 16.0) == pytest.approx(-0.0155088, abs=1e-5)


# ---- MomentSpec ------------------------------------------------------------------


def test_spec_rejects_p2_with_explanation():
    with pytest.raises(ValidationError, match="linearly dependent"):
        MomentSpec(2.0)


@pytest.mark.parametrize("p", [1.0, 0.5, float("nan")])
def test_spec_rejects_small_p(p):
    with pytest.raises(ValidationError):
        MomentSpec(p)


def test_default_amplitude():
    assert MomentSpec(1.5).a == 1.0 and MomentSpec(2.5).a == default_amplitude(2.5) == 16.0
    assert MomentSpec(2.5, a=3).a == 3.0


# ---- step search -----------------------------------------------------------------


def test_elimination_solves_the_moment_system():
    t = np.array([-0.7, 0.2, 0.9])
    m = eliminate_measures(t, np.array([]), 1.5)
    assert m.sum() == pytest.approx(1.0, abs=1e-15)
    assert m @ t == pytest.approx(0, abs=1e-15)
    assert m @ signed_power(t, 0.5) == pytest.approx(0, abs=1e-15)


def test_search_p15_matches_oracles():
    rep = search_step_profile(MomentSpec(1.5))
    assert rep.verdict
    assert abs(rep.moment1) <= 1e-8 and abs(rep.moment2) <= 1e-8
    assert abs(rep.objective - brute_force_levels(1.5)) <= 1e-3
    assert rep.profile.n_cells == 3 and len(set(rep.profile.values)) == 3


def test_search_p25_matches_lp_oracle():
    rep = search_step_profile(MomentSpec(2.5))
    assert rep.verdict and rep.objective <= -1e-3
    assert abs(rep.objective - lp_oracle(2.5, 16.0)) <= 1e-4


def test_search_more_levels():
    rep = search_step_profile(MomentSpec(1.5), levels=5, seed=3)
    assert rep.verdict and len(set(rep.profile.values)) == 5


def test_search_rejects_two_levels():
    with pytest.raises(ValidationError):
        search_step_profile(MomentSpec(1.5), levels=2)


@pytest.mark.parametrize("p", [3.0, 3.5, 4.0])
def test_search_finds_nothing_for_p_at_least_3(p):
    rep = search_step_profile(MomentSpec(p, a=4.0))
    assert not rep.verdict
    if rep.profile is not None:
        assert rep.objective >= -1e-8


def test_search_is_deterministic():
    a = search_step_profile(MomentSpec(2.5), seed=11).to_json()
    b = search_step_profile(MomentSpec(2.5), seed=11).to_json()
    assert a == b


def test_report_round_trip():
    rep = search_step_profile(MomentSpec(1.5))
    back = CounterexampleReport.from_dict(json.loads(rep.to_json()))
    assert back.to_json() == rep.to_json()


# ---- projection --------------------------------------------------------------------


@pytest.mark.parametrize("p", [1.5, 2.5, 3.0, 4.0])
def test_project_moments(p):
    for v in projected_profiles(np.random.default_rng(int(p * 10)), p, 5):
        assert abs(integrate_composition(v, identity())) <= 1e-8
        assert abs(integrate_composition(v, power_sign(p))) <= 1e-8


def test_project_moments_infeasible():
    with pytest.raises(ValidationError):
        project_moments(StepFunction([0, 0.5, 1], [1.0, 2.0]), 3.0)


# ---- ODE route -----------------------------------------------------------------------


def test_shooting_constant_density():
    shot = solve_profile_ode(DensityDesign.constant(1.0))
    assert shot.gamma == pytest.approx(2.0, abs=1e-10)
    assert np.max(np.abs(shot.profile.v - (-1 + 2 * shot.profile.s))) <= 1e-12
    gamma, prof = solve_profile_ode(DensityDesign.constant(2.0, 3.0))
    assert gamma == pytest.approx(12.0, abs=1e-9)
    assert np.max(np.abs(np.diff(prof.v, 2))) <= 1e-12


def test_shooting_contract_on_designed_density():
    d = design_density(MomentSpec(1.5))
    shot = solve_profile_ode(d)
    v = shot.profile.v
    assert v[0] == -1.0 and abs(v[-1] - 1.0) <= shot.gamma_tol
    assert np.all(np.diff(v) > 0)
    assert shot.gamma == pytest.approx(d.mass, rel=1e-6)


def test_pushforward_examples():
    d = DensityDesign.constant(1.0)
    assert pushforward_moment(d, 2.0, identity()) == pytest.approx(0.0, abs=1e-15)
    assert pushforward_moment(d, 2.0, abs_power(2)) == pytest.approx(1 / 3, abs=1e-15)
    dd = design_density(MomentSpec(1.5))
    gamma, _ = solve_profile_ode(dd)
    assert pushforward_moment(dd, gamma, constant(1.0)) == pytest.approx(1.0, abs=1e-6)


CATALOG = [identity(), power_sign(1.5), abs_power(2), abs_power(3.5), bl_residual(1.5)]


@pytest.mark.parametrize("phi", CATALOG, ids=lambda m: m.name)
def test_pushforward_consistency(phi):
    d = design_density(MomentSpec(1.5))
    shot = solve_profile_ode(d)
    direct = integrate_composition(shot.profile, phi)
    push = pushforward_moment(d, shot.gamma, phi)
    assert abs(direct - push) <= pushforward_error_bound(d, shot, phi)


def test_design_constraints_and_independent_quadrature():
    d = design_density(MomentSpec(2.5))
    assert d.success and d.min_psi >= 1.0
    assert abs(d.moment1) <= 1e-10 and abs(d.moment2) <= 1e-10 and d.objective < 0
    pts = np.linspace(-d.a, d.a, 65)
    for fn, want in ((lambda t: t, 0.0), (lambda t: signed_power(t, 1.5), 0.0)):
        got = sum(quad(lambda t: fn(t) * d(t), lo, hi, epsabs=1e-13, limit=200)[0]
                  for lo, hi in zip(pts[:-1], pts[1:]))
        assert abs(got - want) <= 1e-9 * d.mass


def test_even_additions_keep_constraints():
    spec = MomentSpec(2.5, a=2.0)
    even = DensityDesign(2.0, "poly", np.array([0.0, 0.0, 3.0, 0.0, 5.0]), 1.0, 0)
    for m in (spec.phi1, spec.phi2):
        assert abs(integrate_density(even, m)[0]) <= 1e-12


def test_design_poly_basis():
    d = design_density(MomentSpec(1.5), basis="poly", basis_size=4)
    assert d.success and d.min_psi >= 1.0 and d.objective < 0


def test_design_p25_small_amplitude_fails_honestly():
    # no distribution on [-1, 1] has a negative F_p average at p = 2.5 (LP oracle above)
    for basis in ("bspline", "poly"):
        d = design_density(MomentSpec(2.5, a=1.0), basis=basis, basis_size=4 if basis == "poly" else None)
        assert not d.success and "no negative" in d.reason


def test_ode_counterexample_p15():
    rep = ode_counterexample(MomentSpec(1.5))
    assert rep.verdict and rep.route == "ode"
    assert verify_counterexample(rep).verdict
    for key in ("moment1", "moment2", "objective"):
        assert abs(getattr(rep, key) - rep.details["pushforward"][key]) <= rep.errors[f"{key}_bound"]


# ---- verification ------------------------------------------------------------------------


def test_verify_p15_witness():
    rep = search_step_profile(MomentSpec(1.5))
    res = verify_counterexample(rep)
    assert res.verdict
    limit = composition_weak_limit(rep.profile, bl_residual(1.5))
    assert all(abs(d - limit) <= 1e-12 for d in rep.defect_check.D)


def test_positive_side_p35():
    for v in projected_profiles(np.random.default_rng(35), 3.5, 10):
        assert defect_limit_theory(1.0, v, 3.5) >= -1e-8


def test_verify_requires_profile():
    rep = search_step_profile(MomentSpec(3.5, a=1.0))
    if rep.profile is None:
        with pytest.raises(ValidationError):
            verify_counterexample(rep)
