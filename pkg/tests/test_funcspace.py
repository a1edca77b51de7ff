import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import step_functions
from weakbl.funcspace import (
    SampledProfile,
    StepFunction,
    ValidationError,
    abs_power,
    bl_residual,
    elementary_residual,
    function_from_dict,
    identity,
    integrate_composition,
    lp_norm,
    minorant,
    pair,
    polynomial,
    power_sign,
    scalar_map,
)

CATALOG = [
    identity(),
    power_sign(2.0),
    power_sign(1.5),
    abs_power(3.0),
    bl_residual(2.5),
    elementary_residual(3.0),
    minorant(1.7),
    polynomial([1.0, -2.0, 0.5]),
]


def riemann(f, phi, n=1 << 20):
    """Midpoint sum on a uniform grid; exact for step functions with dyadic breakpoints."""
    x = (np.arange(n) + 0.5) / n
    return float(np.mean(phi(f(x))))


# ---- examples ---------------------------------------------------------------


def test_two_level_square(sign):
    assert integrate_composition(sign, abs_power(2)) == pytest.approx(1.0, abs=1e-15)


def test_two_level_fourth_power_of_shift(sign):
    assert integrate_composition(sign, polynomial([1, 4, 6, 4, 1])) == pytest.approx(8.0, abs=1e-14)


def test_two_level_identity(sign):
    assert integrate_composition(sign, identity()) == 0.0


def test_pair_examples(sign):
    one = StepFunction.constant(1.0)
    assert pair(one, one) == 1.0
    assert pair(sign, one) == 0.0
    assert pair(sign, StepFunction.indicator(0, 0.5)) == pytest.approx(0.5, abs=1e-15)


def test_lp_norm_examples(sign):
    for p in (1.1, 2.0, 3.7):
        assert lp_norm(sign, p) == pytest.approx(1.0, abs=1e-15)
    assert lp_norm(StepFunction([0, 0.25, 1], [2.0, 0.0]), 2) == pytest.approx(1.0, abs=1e-15)
    assert lp_norm(StepFunction.constant(0.0), 2.5) == 0.0


def test_lp_norm_rejects_small_p(sign):
    with pytest.raises(ValidationError):
        lp_norm(sign, 1.0)


@pytest.mark.parametrize(
    "bp, vals",
    [([0, 1], []), ([0.1, 1], [1]), ([0, 0.5, 0.5, 1], [1, 2, 3]), ([0, 1.2], [1]), ([0, 1], [np.nan])],
)
def test_invalid_step_functions(bp, vals):
    with pytest.raises(ValidationError):
        StepFunction(bp, vals)


def test_invalid_sampled_profile():
    with pytest.raises(ValidationError):
        SampledProfile([0, 0.5, 1], [0, -0.1, 1], 1.0)
    with pytest.raises(ValidationError):
        SampledProfile([0, 1], [-2, 2], 1.0)


# ---- properties --------------------------------------------------------------


@pytest.mark.parametrize("phi", CATALOG, ids=lambda m: m.name)
def test_dyadic_step_matches_riemann_oracle(phi):
    rng = np.random.default_rng(7)
    for _ in range(5):
        m = int(rng.integers(1, 7))
        cuts = np.unique(rng.integers(1, 256, size=m - 1)) / 256
        f = StepFunction(np.r_[0, cuts, 1], rng.normal(size=cuts.size + 1))
        assert abs(integrate_composition(f, phi) - riemann(f, phi)) <= 1e-12 * max(
            1.0, float(np.max(np.abs(phi(f.values))))
        )


@given(step_functions(), step_functions())
def test_pair_symmetric(f, g):
    assert pair(f, g) == pytest.approx(pair(g, f), abs=1e-13)


@given(step_functions(), step_functions(), step_functions(), st.floats(-3, 3), st.floats(-3, 3))
def test_pair_bilinear(f, g, h, a, b):
    combo = StepFunction(*_merge_linear(f, g, a, b))
    assert pair(combo, h) == pytest.approx(a * pair(f, h) + b * pair(g, h), abs=1e-11)


def _merge_linear(f, g, a, b):
    x = np.union1d(f.breakpoints, g.breakpoints)
    mid = 0.5 * (x[:-1] + x[1:])
    return x, a * f(mid) + b * g(mid)


@given(step_functions(), st.floats(1.05, 6.0))
def test_lp_norm_power_equals_integral(f, p):
    assert lp_norm(f, p) ** p == pytest.approx(integrate_composition(f, abs_power(p)), rel=1e-12, abs=1e-12)


def _tanh_profile(n):
    s = np.linspace(0, 1, n + 1)
    v = np.tanh(4 * (s - 0.4)) / np.tanh(2.4)
    v[0], v[-1] = v[0], 1.0
    return SampledProfile(s, np.clip(v, -1.0, 1.0), 1.0)


@pytest.mark.parametrize("phi", CATALOG, ids=lambda m: m.name)
def test_sampled_refinement_within_error_estimate(phi):
    prof = _tanh_profile(64)
    coarse, err = integrate_composition(prof, phi, full_output=True)
    fine = integrate_composition(prof.refined(), phi)
    assert abs(coarse - fine) <= err


def test_sampled_linear_profile_exact():
    prof = SampledProfile([0.0, 1.0], [-1.0, 1.0], 1.0)
    assert integrate_composition(prof, abs_power(2)) == pytest.approx(1 / 3, abs=1e-15)


def test_json_round_trip(sign):
    prof = _tanh_profile(8)
    for f in (sign, prof):
        back = function_from_dict(json.loads(json.dumps(f.to_dict())))
        assert type(back) is type(f)
        assert integrate_composition(back, abs_power(3)) == integrate_composition(f, abs_power(3))


def test_scalar_map_lookup():
    assert scalar_map("power_sign", q=3)(np.array([-2.0]))[0] == -4.0
    with pytest.raises(ValidationError):
        scalar_map("nope")
