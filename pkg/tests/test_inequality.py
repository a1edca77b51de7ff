import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weakbl.funcspace import ValidationError
from weakbl.inequality import (
    CERTIFIED,
    INCONCLUSIVE,
    VIOLATED,
    F_p,
    Fvec_p,
    Phi_p,
    Psi_p,
    Residual,
    certify_nonneg,
    check_psi_domination,
    check_vector_structure,
    eval_residual,
    find_violation,
    g_p,
    lipschitz_g_p,
    scan_p,
    scan_to_csv,
)

T = np.linspace(-1, 1, 20001)


# ---- evaluation --------------------------------------------------------------


@pytest.mark.parametrize("p", [1.1, 1.5, 2.0, 2.5, 3.0, 4.0, 6.5])
def test_g_vanishes_at_zero(p):
    assert g_p(0.0, p) == 0.0


def test_closed_forms():
    assert g_p(0.5, 4) == pytest.approx(1.5, abs=1e-15)
    assert g_p(-1.0, 3) == pytest.approx(4.0, abs=1e-15)
    assert np.max(np.abs(g_p(T, 4.0) - 6 * T**2)) <= 1e-12
    inner = T[1:-1]
    assert np.max(np.abs(g_p(inner, 2.0) + 2 * inner)) <= 1e-12


def test_residual_object_dispatch():
    r = Residual("g_p", 3)
    assert eval_residual(r, -1.0) == pytest.approx(4.0)
    assert Residual("Fvec_p", 4)(0.5, 1.0) == pytest.approx(1.5, abs=1e-14)
    with pytest.raises(ValidationError):
        Residual("g_p", 1.0)
    with pytest.raises(ValidationError):
        Residual("h_p", 3)


@given(st.floats(-1, 1), st.floats(1.01, 8))
def test_reduction_identity(t, p):
    assert abs(Fvec_p(t, 1.0, p) - g_p(t, p)) <= 1e-12


@given(st.floats(-1, 1), st.floats(1.01, 8))
def test_symmetry(t, p):
    assert abs(Fvec_p(t, -1.0, p) - Fvec_p(-t, 1.0, p)) <= 1e-12


@given(st.floats(0.01, 5), st.floats(-5, 5), st.floats(2, 6))
def test_scaling_identity(s, t, p):
    lhs = abs(s + t) ** p - s**p - abs(t) ** p
    assert lhs == pytest.approx(s**p * F_p(t / s, p), rel=1e-9, abs=1e-9)


def test_phi_branches():
    assert Phi_p(0.5, 3) == pytest.approx(1.5)
    assert Phi_p(-2.0, 3) == pytest.approx(-12.0)


def test_psi_vanishes_at_t_zero():
    s = np.linspace(-3, 3, 61)
    for variant in ("sign_corrected", "as_printed"):
        assert np.all(Psi_p(s, 0.0, 3.0, variant) == 0)


# ---- certification -------------------------------------------------------------


def finer_sweep_min(r, box, h):
    """Independent oracle: plain evaluation on a grid ten times finer."""
    axes = [np.arange(lo, hi + h / 20, h / 10) for lo, hi in box]
    if len(axes) == 1:
        return float(np.min(eval_residual(r, axes[0])))
    tt, qq = np.meshgrid(*axes, indexing="ij")
    return float(np.min(eval_residual(r, tt, qq)))


def test_certify_g3():
    cert = certify_nonneg(Residual("g_p", 3), [(-1, 1)], h=1e-5, tol=1e-9)
    assert cert.verdict == CERTIFIED
    assert cert.certified_lower_bound >= -1e-9
    assert cert.lipschitz_bound <= lipschitz_g_p(3)
    assert finer_sweep_min(Residual("g_p", 3), [(-1, 1)], 1e-5) >= -1e-9


def test_certify_fvec4():
    r = Residual("Fvec_p", 4)
    cert = certify_nonneg(r, [(-1, 1), (-1, 1)], h=1e-3, tol=1e-8)
    assert cert.verdict == CERTIFIED
    assert finer_sweep_min(r, [(-1, 1), (-1, 1)], 1e-2) >= -1e-8


def test_certify_f_minus_phi_p2_equality_at_minus_one():
    cert = certify_nonneg(Residual("F_minus_Phi_p", 2), [(-3, 3)], h=1e-4, tol=1e-9)
    assert cert.verdict == CERTIFIED
    assert eval_residual(Residual("F_minus_Phi_p", 2), -1.0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("p", [1.5, 2.0, 2.5, 2.9])
def test_certify_detects_violation(p):
    cert = certify_nonneg(Residual("g_p", p), [(-1, 1)], h=1e-4)
    assert cert.verdict == VIOLATED and cert.grid_min < -1e-4


def test_certify_psi_is_inconclusive():
    cert = certify_nonneg(Residual("Psi_p", 3), [(-1, 1), (-1, 1)], h=0.1)
    assert cert.verdict == INCONCLUSIVE and cert.reason


@pytest.mark.parametrize("p", [3.0, 3.5, 4.0, 5.0])
def test_soundness_against_finer_grid(p):
    r = Residual("g_p", p)
    cert = certify_nonneg(r, [(-1, 1)], h=1e-3, tol=1e-9)
    assert cert.verdict == CERTIFIED
    assert finer_sweep_min(r, [(-1, 1)], 1e-3) >= -cert.tolerance


def test_certificate_dict_has_all_fields():
    d = certify_nonneg(Residual("g_p", 3), [(-1, 1)], h=1e-3).to_dict()
    for key in ("residual", "box", "grid_step", "lipschitz_bound", "grid_min",
                "certified_lower_bound", "tolerance", "verdict", "witness"):
        assert key in d


# ---- violations and scans --------------------------------------------------------


def test_find_violation_p25():
    t, val = find_violation(Residual("g_p", 2.5), [(-1, 1)])
    assert val < 0 and g_p(t, 2.5) == pytest.approx(val)
    # a point near 0+ is negative as well, as the small-t expansion predicts
    assert g_p(0.01, 2.5) < 0


def test_find_violation_none_for_p3():
    assert find_violation(Residual("g_p", 3), [(-1, 1)]) is None


def test_find_violation_p2_endpoint():
    t, val = find_violation(Residual("g_p", 2), [(-1, 1)])
    assert t == pytest.approx(1.0) and val == pytest.approx(-2.0)


def test_scan_sign_change():
    rows = scan_p([1.5, 2.0, 2.5, 2.9, 3.0, 3.5, 4.0, 5.0], h=1e-4)
    for r in rows:
        if r.p < 3:
            assert r.grid_min < 0 and r.verdict == VIOLATED
        else:
            assert r.grid_min >= -1e-9 and r.verdict == CERTIFIED
    g4 = next(r for r in rows if r.p == 4.0)
    assert g4.grid_min == 0.0 and g4.argmin == (0.0,)
    assert scan_to_csv(rows).splitlines()[0] == "p,grid_min,argmin,verdict"


def test_scan_threads_same_result():
    a = scan_p([2.5, 3.5], h=1e-3, threads=1)
    b = scan_p([2.5, 3.5], h=1e-3, threads=2)
    assert a == b


# ---- structure checks ----------------------------------------------------------------


def test_vector_structure_p3():
    rep = check_vector_structure(3)
    assert rep.convex and rep.min_at_endpoint
    assert rep.max_symmetry_residual <= 1e-12 and rep.max_reduction_residual <= 1e-12
    assert 0.0 in rep.flat_rows


def test_vector_structure_p4():
    rep = check_vector_structure(4)
    assert rep.convex and rep.max_symmetry_residual <= 1e-12
    assert Fvec_p(0.5, 1.0, 4) == pytest.approx(1.5, abs=1e-14)


def test_vector_structure_rejects_small_p():
    with pytest.raises(ValidationError):
        check_vector_structure(2.5)


@pytest.mark.parametrize("p", [2.0, 2.5, 3.0, 4.0])
def test_domination_sign_corrected(p):
    rep = check_psi_domination(p)
    assert rep.min_slack >= -1e-10
    assert rep.scaling_residual <= 1e-9 * 3**p


def test_domination_p2_equality_at_minus_one():
    assert check_psi_domination(2.0).slack_at_lambda_minus_one <= 1e-12


def test_domination_p4_bruteforce():
    """Direct grid oracle, written independently of the module."""
    s, t = 1.0, np.linspace(-3, 3, 6001)
    lhs = np.abs(s + t) ** 4 - 1 - t**4
    psi = np.where(np.abs(t) <= 1, 4 * t, 4 * np.abs(t) ** 2 * t)
    assert np.min(lhs - psi) >= 0
    assert np.min(lhs - Psi_p(s, t, 4.0)) >= -1e-10


def test_domination_as_printed_fails_at_p3():
    assert check_psi_domination(3.0, variant="as_printed").min_slack < -1
