"""Brezis-Lieb defects of oscillating sequences ``u + T_j v``.

``D_j = int |u + T_j v|^p - int |u|^p - int |T_j v|^p``.  When ``u`` is a step
function each of its levels sees the full distribution of ``v`` in the limit,
so ``D_j`` tends to ``sum_i m_i int (|u_i + v|^p - |u_i|^p - |v|^p)``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .funcspace import (
    Function,
    StepFunction,
    ValidationError,
    _check_p,
    abs_power,
    defect_integrand,
    function_from_dict,
    identity,
    integrate_composition,
    merged_levels,
    pair,
    polynomial,
)
from .inequality import PSI_VARIANTS, Psi_p
from .oscillate import _check_j, periodic_antiderivative, rescale, tail_slice

DEFAULT_J = tuple(2**k for k in range(11))
TAIL_FLOOR = 1e-6


def geometric_j(lo=1, hi=1024):
    """Powers of two from ``lo`` to ``hi`` (both powers of two)."""
    lo, hi = _check_j(lo), _check_j(hi)
    if hi < lo:
        raise ValidationError(f"empty j range {lo}:{hi}")
    out, j = [], lo
    while j <= hi:
        out.append(j)
        j *= 2
    return out


def _check_u(u):
    if isinstance(u, (int, float)):
        return StepFunction.constant(u)
    if not isinstance(u, StepFunction):
        raise ValidationError("u must be a step function (or a constant)")
    return u


def _check_j_list(j_list):
    js = [_check_j(j) for j in (DEFAULT_J if j_list is None else j_list)]
    if not js:
        raise ValidationError("j_list must be nonempty")
    if any(b <= a for a, b in zip(js, js[1:])):
        raise ValidationError("j_list must be strictly increasing")
    return js


def _level_antiderivatives(u: StepFunction, v: Function, p: float):
    """Periodic antiderivatives of the pointwise defect at each level of ``u``."""
    return [periodic_antiderivative(v, defect_integrand(c, p)) for c in u.values]


def _sampled_defect(u: StepFunction, Hs, j: int) -> float:
    x = u.breakpoints
    total = 0.0
    for lo, hi, H in zip(x[:-1], x[1:], Hs):
        ends = H(np.array([j * lo, j * hi]))
        total += float(ends[1] - ends[0]) / j
    return total


def bl_defect(u, v: Function, p: float, j: int) -> float:
    """``D_j`` for ``u + T_j v``.

    Exact when ``v`` is a step function: ``u`` and ``T_j v`` are merged onto a
    common partition and the integrand is summed cell by cell.  For a sampled
    ``v`` the integral over each cell of ``u`` goes through the periodic
    antiderivative of the pointwise defect at that level.
    """
    p = _check_p(p)
    j = _check_j(j)
    u = _check_u(u)
    if isinstance(v, StepFunction):
        dx, uu, ww = merged_levels(u, rescale(v, j))
        return float(np.sum(dx * (np.abs(uu + ww) ** p - np.abs(uu) ** p - np.abs(ww) ** p)))
    return _sampled_defect(u, _level_antiderivatives(u, v, p), j)


def defect_limit_theory(u, v: Function, p: float, full_output: bool = False):
    """``lim_j D_j = sum_i m_i int_0^1 (|u_i + v|^p - |u_i|^p - |v|^p) ds``."""
    p = _check_p(p)
    u = _check_u(u)
    value = err = 0.0
    for c, m in zip(u.values, u.measures):
        val, e = integrate_composition(v, defect_integrand(c, p), full_output=True)
        value += float(m) * val
        err += float(m) * e
    return (value, err) if full_output else value


@dataclass(frozen=True, eq=False)
class DefectSeries:
    """``D_j`` over a list of ``j`` with its predicted limit.

    ``rate_constant`` is ``max j |D_j - limit|`` over the first half of the
    series; ``tail_tolerance`` is ``max(1e-6, rate_constant / j_min_tail)``
    (plus the quadrature error of the limit for sampled profiles) and
    ``tail_error`` is the largest deviation over the last half.
    """

    u: StepFunction
    v: Function
    p: float
    j_list: tuple
    D: tuple
    theoretical_limit: float
    tail_error: float
    tail_tolerance: float
    rate_constant: float
    limit_error: float = 0.0

    @property
    def deviations(self):
        return tuple(abs(d - self.theoretical_limit) for d in self.D)

    @property
    def converged(self):
        return self.tail_error <= self.tail_tolerance

    def to_dict(self, include_functions=True):
        d = {
            "p": self.p,
            "j_list": list(self.j_list),
            "D": list(self.D),
            "theoretical_limit": self.theoretical_limit,
            "tail_error": self.tail_error,
            "tail_tolerance": self.tail_tolerance,
            "rate_constant": self.rate_constant,
            "limit_error": self.limit_error,
            "converged": self.converged,
        }
        if include_functions:
            d["u"] = self.u.to_dict()
            d["v"] = self.v.to_dict()
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "D_j", "theoretical_limit", "deviation"])
        for j, d, dev in zip(self.j_list, self.D, self.deviations):
            w.writerow([j, repr(float(d)), repr(float(self.theoretical_limit)), repr(float(dev))])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d):
        return cls(
            u=StepFunction.from_dict(d["u"]),
            v=function_from_dict(d["v"]),
            p=float(d["p"]),
            j_list=tuple(d["j_list"]),
            D=tuple(d["D"]),
            theoretical_limit=float(d["theoretical_limit"]),
            tail_error=float(d["tail_error"]),
            tail_tolerance=float(d["tail_tolerance"]),
            rate_constant=float(d["rate_constant"]),
            limit_error=float(d.get("limit_error", 0.0)),
        )


def two_window(j_list, deviations, extra=0.0):
    """``(C, tolerance, tail_max)`` for the last-half-of-the-series convergence rule.

    ``C`` is ``max j * dev_j`` over the first half; the tolerance is
    ``max(1e-6, C / j_min_tail) + extra``, widened by a relative ``1e-9`` so
    that an exact ``1/j`` law (where equality holds) is not lost to rounding.
    """
    n = len(j_list)
    tail = tail_slice(n)
    head = slice(0, max(1, n // 2))
    C = max(float(j * d) for j, d in zip(j_list[head], deviations[head]))
    tol = max(TAIL_FLOOR, C / j_list[tail][0]) * (1 + 1e-9) + extra
    return C, tol, max(deviations[tail])


def defect_series(u, v: Function, p: float, j_list=None) -> DefectSeries:
    p = _check_p(p)
    u = _check_u(u)
    js = _check_j_list(j_list)
    if isinstance(v, StepFunction):
        D = [bl_defect(u, v, p, j) for j in js]
    else:
        Hs = _level_antiderivatives(u, v, p)
        D = [_sampled_defect(u, Hs, j) for j in js]
    limit, lerr = defect_limit_theory(u, v, p, full_output=True)
    dev = [abs(d - limit) for d in D]
    C, tol, tail = two_window(js, dev, extra=2 * lerr)
    return DefectSeries(u, v, p, tuple(js), tuple(D), limit, tail, tol, C, lerr)


# --------------------------------------------------------------------------
# The p = 4 expansion
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class P4Report:
    """``D_j`` against the cross term ``6 sum_i m_i u_i^2 int v^2``.

    ``exact_in_j`` is set when ``u`` is constant; then every ``D_j`` equals the
    cross term and ``max_deviation`` measures rounding only.
    """

    j_list: tuple
    D: tuple
    cross_term: float
    deviations: tuple
    max_deviation: float
    max_tail_deviation: float
    exact_in_j: bool
    moments: tuple

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def p4_identity_check(u, v: StepFunction, j_list=None, moment_tol=1e-12) -> P4Report:
    """Compare ``D_j`` at ``p = 4`` with ``6 sum_i m_i u_i^2 int v^2``.

    Requires ``int v = int v^3 = 0``; both moments are checked and reported.
    """
    u = _check_u(u)
    if not isinstance(v, StepFunction):
        raise ValidationError("p4_identity_check expects a step profile v")
    js = _check_j_list(j_list)
    m1 = integrate_composition(v, identity())
    m3 = integrate_composition(v, polynomial([0, 0, 0, 1]))
    scale = max(1.0, v.sup_norm() ** 3)
    if abs(m1) > moment_tol * scale or abs(m3) > moment_tol * scale:
        raise ValidationError(
            f"need int v = int v^3 = 0; measured int v = {m1:.3e}, int v^3 = {m3:.3e}"
        )
    cross = 6.0 * float(np.dot(u.measures, u.values**2)) * integrate_composition(v, abs_power(2))
    D = [bl_defect(u, v, 4.0, j) for j in js]
    dev = [abs(d - cross) for d in D]
    return P4Report(
        j_list=tuple(js),
        D=tuple(D),
        cross_term=cross,
        deviations=tuple(dev),
        max_deviation=max(dev),
        max_tail_deviation=max(dev[tail_slice(len(dev))]),
        exact_in_j=u.n_cells == 1 or bool(np.all(u.values == u.values[0])),
        moments=(m1, m3),
    )


# --------------------------------------------------------------------------
# The Psi hypothesis
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PsiHypothesisReport:
    """Outcome of testing ``D_j >= 0`` under ``int Psi(u, T_j v) -> 0``.

    ``conclusion_holds`` is ``None`` when the hypothesis fails (nothing is
    asserted then).  ``pointwise_min_slack`` is the smallest value of
    ``defect integrand - Psi`` over all merged cells and all ``j``.
    """

    p: float
    variant: str
    j_list: tuple
    psi_integrals: tuple
    psi_limit: float
    D: tuple
    defect_limit: float
    hypothesis_holds: bool
    conclusion_holds: bool | None
    pointwise_min_slack: float
    tail_tolerance: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def psi_hypothesis_check(
    u, v: StepFunction, p: float, j_list=None, variant="sign_corrected", hyp_tol=1e-9
) -> PsiHypothesisReport:
    """Evaluate ``int Psi(u, T_j v)`` and ``D_j`` side by side.

    When the ``Psi`` integrals tend to zero (their limit
    ``sum_i m_i int Psi(u_i, v)`` is within ``hyp_tol``) the defects must
    end up nonnegative; the last half of the series is checked against the
    two-window tolerance.
    """
    p = float(p)
    if not p >= 2:
        raise ValidationError(f"the Psi check needs p >= 2, got {p}")
    if variant not in PSI_VARIANTS:
        raise ValidationError(f"unknown Psi variant {variant!r}")
    u = _check_u(u)
    if not isinstance(v, StepFunction):
        raise ValidationError("psi_hypothesis_check expects a step profile v")
    js = _check_j_list(j_list)

    psi_int, D, slack = [], [], np.inf
    for j in js:
        dx, uu, ww = merged_levels(u, rescale(v, j))
        dens = np.abs(uu + ww) ** p - np.abs(uu) ** p - np.abs(ww) ** p
        psi = Psi_p(uu, ww, p, variant)
        psi_int.append(float(np.sum(dx * psi)))
        D.append(float(np.sum(dx * dens)))
        slack = min(slack, float(np.min(dens - psi)))

    psi_limit = float(sum(
        m * float(np.dot(Psi_p(c, v.values, p, variant), v.measures))
        for c, m in zip(u.values, u.measures)
    ))
    limit = defect_limit_theory(u, v, p)
    dev = [abs(d - limit) for d in D]
    _, tol, _ = two_window(js, dev)
    hyp = bool(abs(psi_limit) <= hyp_tol)
    conclusion = None
    if hyp:
        conclusion = all(d >= -tol for d in D[tail_slice(len(D))])
    return PsiHypothesisReport(
        p=p,
        variant=variant,
        j_list=tuple(js),
        psi_integrals=tuple(psi_int),
        psi_limit=psi_limit,
        D=tuple(D),
        defect_limit=limit,
        hypothesis_holds=hyp,
        conclusion_holds=conclusion,
        pointwise_min_slack=slack,
        tail_tolerance=tol,
    )


def hilbert_identity_residuals(u, v: StepFunction, j_list=None):
    """``|D_j - 2 <u, T_j v>|`` at ``p = 2`` for each ``j``."""
    u = _check_u(u)
    js = _check_j_list(j_list)
    return [abs(bl_defect(u, v, 2.0, j) - 2.0 * pair(u, rescale(v, j))) for j in js]


__all__ = [
    "DEFAULT_J",
    "DefectSeries",
    "P4Report",
    "PsiHypothesisReport",
    "bl_defect",
    "defect_limit_theory",
    "defect_series",
    "geometric_j",
    "hilbert_identity_residuals",
    "p4_identity_check",
    "psi_hypothesis_check",
    "two_window",
]
