"""Profiles whose oscillations break the Brezis-Lieb inequality for ``p < 3``.

We look for ``v`` on [0, 1] with

    int v = 0,   int |v|^(p-2) v = 0,   int F_p(v) < 0,

where ``F_p(t) = |1+t|^p - 1 - |t|^p``.  Then ``1 + T_j v`` converges weakly to
1, the duality map of ``T_j v`` converges weakly to 0, and yet the defect
``D_j`` with ``u = 1`` equals ``int F_p(v) < 0`` for every ``j``.

Two independent constructions are provided:

* :func:`search_step_profile` optimizes a step function with a few levels.
  The measures are solved from the moment equations, so the constraints hold
  to rounding and only the level values are searched.
* :func:`ode_counterexample` designs a density ``psi >= 1`` on ``[-a, a]`` that
  is orthogonal to both constraint maps and has negative ``F_p`` average, then
  shoots ``v' = gamma / psi(v)``, ``v(0) = -a``, ``v(1) = a``.  The law of the
  resulting ``v`` is ``psi / gamma``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize

from . import _kernels
from .defect import DefectSeries, defect_series, two_window
from .funcspace import (
    _GL_NODES,
    _GL_WEIGHTS,
    Function,
    SampledProfile,
    ScalarMap,
    StepFunction,
    ValidationError,
    bl_residual,
    constant,
    function_from_dict,
    identity,
    integrate_composition,
    power_sign,
    signed_power,
)
from .oscillate import (
    oscillated_pairing_from,
    pair_oscillated,
    periodic_antiderivative,
    tail_slice,
)

_RHS = np.array([1.0, 0.0, 0.0])
_PENALTY = 1e6


def default_amplitude(p):
    """Range bound used when none is given.

    For ``p < 2`` the levels ``+-1`` already give a negative ``F_p`` average.  For
    ``2 < p < 3`` the best three-atom law supported in ``[-1, 1]`` has
    ``int F_p = 0``; a much wider range is needed and ``a = 16`` leaves a
    comfortable margin (optimum about ``-0.0155`` at ``p = 2.5``).
    """
    return 1.0 if p < 2 else 16.0


@dataclass(frozen=True)
class MomentSpec:
    """Constraint and objective maps for a given ``p``.

    ``p = 2`` is rejected: ``F_2(t) = 2t`` is a multiple of the first
    constraint map, so every admissible ``v`` has ``int F_2(v) = 0`` (the
    Hilbert-space identity).  ``p <= 1`` is rejected because the second
    constraint map ``|t|^(p-2) t`` is not continuous at 0.  Values ``p >= 3``
    are accepted so that searches can confirm that no witness exists there.
    """

    p: float
    a: float | None = None
    eps_mom: float = 1e-8
    delta: float = 1e-3

    def __post_init__(self):
        p = float(self.p)
        if not math.isfinite(p) or p <= 1:
            raise ValidationError(
                f"p must be > 1, got {p!r}: for p <= 1 the map |t|^(p-2) t is discontinuous at 0"
            )
        if p == 2:
            raise ValidationError(
                "p = 2 is excluded: F_2(t) = 2t is linearly dependent on the constraint map t "
                "(and |t|^0 t = t), so int F_2(v) = 0 for every admissible v; in a Hilbert "
                "space the defect vanishes identically"
            )
        a = default_amplitude(p) if self.a is None else float(self.a)
        if not a > 0:
            raise ValidationError(f"a must be positive, got {a!r}")
        if not (self.eps_mom > 0 and self.delta > 0):
            raise ValidationError("eps_mom and delta must be positive")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "eps_mom", float(self.eps_mom))
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def phi1(self) -> ScalarMap:
        return identity()

    @property
    def phi2(self) -> ScalarMap:
        return power_sign(self.p)

    @property
    def objective_map(self) -> ScalarMap:
        return bl_residual(self.p)

    def to_dict(self):
        return {"p": self.p, "a": self.a, "eps_mom": self.eps_mom, "delta": self.delta}


def _plain(x):
    """Recursively convert numpy scalars/arrays to JSON-friendly Python objects."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


@dataclass(frozen=True, eq=False)
class CounterexampleReport:
    """A candidate profile with its moments, objective and defect series.

    ``verdict`` is true exactly when both moments are within ``eps_mom`` of 0
    and the objective is at most ``-delta``.  ``profile`` is ``None`` only
    when the search never produced an admissible profile.
    """

    spec: MomentSpec
    route: str
    profile: Function | None
    moment1: float
    moment2: float
    objective: float
    verdict: bool
    reason: str
    defect_check: DefectSeries | None = None
    errors: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def p(self):
        return self.spec.p

    def to_dict(self):
        return _plain({
            "config": self.spec.to_dict(),
            "route": self.route,
            "profile": None if self.profile is None else self.profile.to_dict(),
            "moment1": self.moment1,
            "moment2": self.moment2,
            "objective": self.objective,
            "verdict": self.verdict,
            "reason": self.reason,
            "errors": self.errors,
            "defect_check": None
            if self.defect_check is None
            else self.defect_check.to_dict(include_functions=False),
            "details": self.details,
        })

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, d):
        try:
            spec = MomentSpec(**d["config"])
            profile = None if d["profile"] is None else function_from_dict(d["profile"])
            dc = d.get("defect_check")
            series = None
            if dc is not None and profile is not None:
                series = DefectSeries.from_dict(
                    dict(dc, u=StepFunction.constant(1.0).to_dict(), v=d["profile"])
                )
            return cls(
                spec=spec,
                route=d["route"],
                profile=profile,
                moment1=d["moment1"],
                moment2=d["moment2"],
                objective=d["objective"],
                verdict=bool(d["verdict"]),
                reason=d["reason"],
                defect_check=series,
                errors=d.get("errors") or {},
                details=d.get("details") or {},
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"not a counterexample report: missing or bad field {exc}") from None


def _finalize(spec: MomentSpec, route, profile, details, extra_errors=None, j_list=None):
    m1, e1 = integrate_composition(profile, spec.phi1, full_output=True)
    m2, e2 = integrate_composition(profile, spec.phi2, full_output=True)
    obj, eo = integrate_composition(profile, spec.objective_map, full_output=True)
    errors = {"moment1": e1, "moment2": e2, "objective": eo}
    errors.update(extra_errors or {})
    ok_mom = abs(m1) <= spec.eps_mom and abs(m2) <= spec.eps_mom
    ok_obj = obj <= -spec.delta
    if ok_mom and ok_obj:
        reason = "witness: both moments vanish and the F_p average is negative"
    elif not ok_mom:
        reason = f"no witness: moments {m1:.3e}, {m2:.3e} exceed eps_mom = {spec.eps_mom:g}"
    else:
        reason = f"no witness: best F_p average {obj:.6g} is above -delta = {-spec.delta:g}"
    series = defect_series(1.0, profile, spec.p, j_list)
    return CounterexampleReport(
        spec, route, profile, m1, m2, obj, ok_mom and ok_obj, reason, series, errors, details
    )


# --------------------------------------------------------------------------
# Step-profile search
# --------------------------------------------------------------------------


def moment_matrix(t, p):
    """Rows ``1, t, |t|^(p-2) t`` evaluated at the levels ``t``."""
    t = np.asarray(t, dtype=float)
    return np.stack([np.ones_like(t), t, signed_power(t, p - 1.0)])


def eliminate_measures(t, free, p):
    """Measures of levels ``t`` meeting all three moment equations.

    ``free`` fixes the measures of ``t[3:]``; the first three are solved.
    Returns ``None`` when the 3x3 system is (numerically) singular.
    """
    A = moment_matrix(t, p)
    rhs = _RHS - A[:, 3:] @ np.asarray(free, dtype=float)
    A3 = A[:, :3]
    # Hadamard ratio |det| / prod(column norms) is 0 for singular systems, 1 for orthogonal ones
    if abs(np.linalg.det(A3)) <= 1e-13 * np.prod(np.linalg.norm(A3, axis=0)):
        return None
    m3 = np.linalg.solve(A3, rhs)
    return np.concatenate([m3, free])


def _grid_triples(spec: MomentSpec, n_grid, m_floor):
    """All feasible level triples from a grid that is denser near 0."""
    u = np.linspace(-1.0, 1.0, n_grid)
    vals = spec.a * np.sign(u) * u**2
    vals = vals[vals != 0.0]
    idx = np.array(list(itertools.combinations(range(vals.size), 3)))
    T = vals[idx]
    A = np.stack([np.ones_like(T), T, signed_power(T, spec.p - 1.0)], axis=1)
    det = np.linalg.det(A)
    ok = np.abs(det) > 1e-12 * np.max(np.abs(T), axis=1) ** 2
    T, A = T[ok], A[ok]
    M = np.linalg.solve(A, np.broadcast_to(_RHS, (A.shape[0], 3))[..., None])[..., 0]
    feas = np.all(M >= m_floor, axis=1)
    T, M = T[feas], M[feas]
    obj = np.sum(M * spec.objective_map(T), axis=1)
    order = np.argsort(obj, kind="stable")
    return T[order], obj[order]


def search_step_profile(
    spec: MomentSpec,
    levels: int = 3,
    seed: int = 0,
    n_grid: int = 41,
    n_starts: int = 6,
    maxiter: int = 1500,
    m_floor: float = 1e-4,
    min_gap: float = 1e-3,
    j_list=None,
) -> CounterexampleReport:
    """Minimize ``int F_p(v)`` over ``levels``-level step profiles under the moment constraints.

    The grid seeding and the local Nelder-Mead refinements are deterministic;
    ``seed`` only drives the extra random starts (and the initial values of
    levels beyond the third).  Each measure is kept above ``m_floor`` and the
    levels stay ``min_gap * a`` apart, so the profile has exactly ``levels``
    distinct values.
    """
    levels = int(levels)
    if levels < 3:
        raise ValidationError(f"levels must be >= 3, got {levels}")
    rng = np.random.default_rng(seed)
    p, a = spec.p, spec.a
    F = spec.objective_map
    L = levels

    def unpack(x):
        return x[:L], x[L:]

    gap = min_gap * a
    iu = np.triu_indices(L, 1)

    def objective(x):
        t, w = unpack(x)
        close = gap - np.min(np.abs(t[:, None] - t[None, :])[iu])
        if close > 0:
            return _PENALTY + close
        m = eliminate_measures(t, w, p)
        if m is None or not np.all(np.isfinite(m)):
            return _PENALTY
        short = m_floor - m.min()
        if short > 0:
            return _PENALTY + short
        return float(np.dot(m, F(t)))

    triples, _ = _grid_triples(spec, n_grid, m_floor)
    starts = []
    for T in triples[:n_starts]:
        extra_t = rng.uniform(-a, a, L - 3)
        starts.append(np.concatenate([T, extra_t, np.full(L - 3, 2 * m_floor)]))
    for _ in range(max(2, n_starts // 4)):
        starts.append(np.concatenate([rng.uniform(-a, a, L), np.full(L - 3, 2 * m_floor)]))

    bounds = [(-a, a)] * L + [(m_floor, 1.0)] * (L - 3)
    best_x, best_f = None, _PENALTY
    for x0 in starts:
        x, fx = x0, objective(x0)
        for _ in range(3):  # restarts shake Nelder-Mead out of collapsed simplices
            res = minimize(
                objective, x, method="Nelder-Mead", bounds=bounds,
                options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": maxiter, "maxfev": 2 * maxiter},
            )
            improved = res.fun < fx - 1e-12 * max(1.0, abs(fx))
            if res.fun < fx:
                x, fx = res.x, res.fun
            if not improved:
                break
        if fx < best_f:
            best_x, best_f = x, fx

    config = {"levels": L, "seed": int(seed), "n_grid": n_grid, "n_starts": n_starts,
              "maxiter": maxiter, "m_floor": m_floor, "min_gap": min_gap}
    if best_x is None or best_f >= _PENALTY:
        return CounterexampleReport(
            spec, "step", None, math.nan, math.nan, math.nan, False,
            "no witness: no admissible level configuration was found", details=config,
        )
    t, w = unpack(best_x)
    m = eliminate_measures(t, w, p)
    order = np.argsort(t, kind="stable")
    profile = StepFunction.from_levels(t[order], m[order] / m.sum())
    return _finalize(spec, "step", profile, config, j_list=j_list)


def project_moments(v: StepFunction, p: float, m_floor: float = 0.0) -> StepFunction:
    """Re-weight the levels of ``v`` so that ``int v = int |v|^(p-2) v = 0``.

    The values are kept and the measures move as little as possible in the
    l1 sense (a linear program); the result is then polished on its support
    by an exact least-norm correction.  Levels whose measure drops to zero
    disappear.  Raises :class:`ValidationError` when no reweighting exists
    (all values of one sign).
    """
    t = np.asarray(v.values, dtype=float)
    m0 = np.asarray(v.measures, dtype=float)
    n = t.size
    A = moment_matrix(t, p)
    # variables: m, s_plus, s_minus with m - m0 = s_plus - s_minus
    c = np.concatenate([np.zeros(n), np.ones(2 * n)])
    A_eq = np.block([[A, np.zeros((3, 2 * n))], [np.eye(n), -np.eye(n), np.eye(n)]])
    b_eq = np.concatenate([_RHS, m0])
    res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=[(m_floor, None)] * n + [(0, None)] * (2 * n),
                  method="highs")
    if res.status != 0:
        raise ValidationError(f"no reweighting of these levels satisfies the moment constraints ({res.message})")
    m = res.x[:n]
    keep = m > 1e-14
    for _ in range(3):
        As = A[:, keep]
        r = _RHS - As @ m[keep]
        m[keep] += As.T @ np.linalg.lstsq(As @ As.T, r, rcond=None)[0]
        keep &= m > 1e-14
    if np.any(m[keep] <= 0):
        raise ValidationError("projection produced a nonpositive measure")
    return StepFunction.from_levels(t[keep], m[keep] / m[keep].sum())


# --------------------------------------------------------------------------
# Densities and the shooting ODE
# --------------------------------------------------------------------------

_KIND = {"bspline": 0, "poly": 1}


@dataclass(frozen=True, eq=False)
class DensityDesign:
    """A density ``psi >= 1`` on ``[-a, a]``.

    ``basis == "bspline"``: ``psi = shift + sum_k c_k B_k`` with uniform cubic
    B-splines on ``n_seg`` segments.  ``basis == "poly"``: ``psi = shift +
    sum_k c_k (t/a)^k`` (``coefficients`` are monomial coefficients).
    """

    a: float
    basis: str
    coefficients: np.ndarray
    shift: float
    n_seg: int
    mass: float = math.nan
    moment1: float = math.nan
    moment2: float = math.nan
    objective: float = math.nan
    min_psi: float = math.nan
    max_psi: float = math.nan
    success: bool = False
    reason: str = ""
    p: float = math.nan
    gamma: float | None = None

    @classmethod
    def constant(cls, a, c=1.0):
        c = float(c)
        if c < 1:
            raise ValidationError(f"a constant density must be >= 1, got {c}")
        d = cls(float(a), "poly", np.zeros(1), c, 0)
        return d._measured(None)

    @property
    def delta(self):
        return 2 * self.a / self.n_seg if self.basis == "bspline" else 0.0

    @property
    def resolution(self):
        """Length scale on which ``psi`` varies."""
        if self.basis == "bspline":
            return self.delta
        if self.coefficients.size <= 1:
            return 2 * self.a
        return self.a / (8 * self.coefficients.size)

    def kernel_args(self):
        return (_KIND[self.basis], np.ascontiguousarray(self.coefficients, dtype=float),
                self.a, self.delta, self.shift)

    def __call__(self, t):
        kind, coef, a, delta, shift = self.kernel_args()
        t = np.asarray(t, dtype=float)
        out = _kernels.density_values(kind, np.ascontiguousarray(t.ravel()), coef, a, delta, shift)
        return out.reshape(t.shape)

    def pieces(self, kinks=()):
        """Breakpoints on which ``psi`` is a polynomial, refined by ``kinks``."""
        if self.basis == "bspline":
            x = np.linspace(-self.a, self.a, self.n_seg + 1)
        else:
            x = np.linspace(-self.a, self.a, 65)
        extra = [k for k in (-1.0, 0.0, 1.0, *kinks) if -self.a < k < self.a]
        return np.unique(np.concatenate([x, extra]))

    def _measured(self, spec: MomentSpec | None):
        grid = np.linspace(-self.a, self.a, 200_001)
        vals = self(grid)
        mass = integrate_density(self, constant(1.0))[0]
        kw = dict(mass=mass, min_psi=float(vals.min()), max_psi=float(vals.max()))
        if spec is not None:
            kw.update(
                p=spec.p,
                moment1=integrate_density(self, spec.phi1)[0],
                moment2=integrate_density(self, spec.phi2)[0],
                objective=integrate_density(self, spec.objective_map)[0],
            )
        return replace(self, **kw)

    def to_dict(self):
        return _plain({k: getattr(self, k) for k in (
            "a", "basis", "coefficients", "shift", "n_seg", "mass", "moment1", "moment2",
            "objective", "min_psi", "max_psi", "success", "reason", "p", "gamma")})


def _gl_on(x0, x1, f):
    half = 0.5 * (x1 - x0)
    mid = 0.5 * (x0 + x1)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return half * (f(nodes) @ _GL_WEIGHTS)


def integrate_density(design: DensityDesign, phi: ScalarMap):
    """``(int_{-a}^{a} phi psi dt, error estimate)`` by Gauss-Legendre on polynomial pieces."""
    x = design.pieces(phi.kinks)

    def f(t):
        return phi(t) * design(t)

    whole = _gl_on(x[:-1], x[1:], f)
    mid = 0.5 * (x[:-1] + x[1:])
    halves = _gl_on(x[:-1], mid, f) + _gl_on(mid, x[1:], f)
    err = float(np.abs(whole - halves).sum() + 1e-15 * np.abs(whole).sum())
    return float(whole.sum()), err


def _bspline_rows(a, n_seg, maps):
    """``R[r, k] = int_{-a}^{a} maps[r](t) B_k(t) dt`` for the uniform cubic basis."""
    delta = 2 * a / n_seg
    kinks = [k for m in maps for k in m.kinks if -a < k < a]
    x = np.unique(np.concatenate([np.linspace(-a, a, n_seg + 1), kinks]))
    x0, x1 = x[:-1], x[1:]
    half = 0.5 * (x1 - x0)
    nodes = 0.5 * (x0 + x1)[:, None] + half[:, None] * _GL_NODES[None, :]
    wts = half[:, None] * _GL_WEIGHTS[None, :]
    seg = np.clip(np.floor((0.5 * (x0 + x1) + a) / delta).astype(int), 0, n_seg - 1)
    f = (nodes + a) / delta - seg[:, None]
    g = 1 - f
    local = np.stack([g**3 / 6, (3 * f**3 - 6 * f**2 + 4) / 6,
                      (-3 * f**3 + 3 * f**2 + 3 * f + 1) / 6, f**3 / 6])
    R = np.zeros((len(maps), n_seg + 3))
    for r, m in enumerate(maps):
        vals = m(nodes) * wts
        for k in range(4):
            np.add.at(R[r], seg + k, np.sum(local[k] * vals, axis=1))
    return R


def _polish(A, b, c):
    """Exact least-norm correction of ``A c = b`` on the support of ``c``."""
    keep = c > 1e-14 * max(1.0, c.max())
    c = np.where(keep, c, 0.0)
    for _ in range(3):
        As = A[:, keep]
        c[keep] += As.T @ np.linalg.lstsq(As @ As.T, b - As @ c[keep], rcond=None)[0]
    return np.maximum(c, 0.0)


def design_density(
    spec: MomentSpec,
    a: float | None = None,
    basis_size: int | None = None,
    basis: str = "bspline",
    target_ratio: float = 0.25,
) -> DensityDesign:
    """Density ``psi >= 1`` with ``int phi_1 psi = int phi_2 psi = 0`` and ``int F_p psi < 0``.

    ``bspline`` (default): a linear program finds the nonnegative spline
    ``w`` of unit mass minimizing ``int F_p w`` under the two constraints;
    then ``psi = 1 + K w`` with ``K`` chosen so that the normalized objective
    ``int F_p psi / int psi`` is ``target_ratio`` times the optimum.  Adding 1
    keeps both constraints because ``phi_1`` and ``phi_2`` are odd.
    ``basis_size`` is the number of spline segments (default ``64 a``).

    ``poly``: ``psi = 1 + g - min g`` with ``g`` a combination of the first
    ``basis_size`` Legendre polynomials in ``t / a`` orthogonal to both
    constraint maps; the free directions are optimized by Nelder-Mead.

    When no negative objective is reachable the returned design has
    ``success = False`` and records the best value found.
    """
    a = spec.a if a is None else float(a)
    spec = replace(spec, a=a)
    if basis == "bspline":
        return _design_bspline(spec, basis_size, target_ratio)
    if basis == "poly":
        return _design_poly(spec, basis_size or 4)
    raise ValidationError(f"unknown basis {basis!r}; use 'bspline' or 'poly'")


def _design_bspline(spec, n_seg, target_ratio):
    a = spec.a
    n_seg = int(n_seg or max(16, round(64 * a)))
    if n_seg < 4:
        raise ValidationError("need at least 4 spline segments")
    maps = [constant(1.0), spec.phi1, spec.phi2, spec.objective_map]
    R = _bspline_rows(a, n_seg, maps)
    A, f = R[:3], R[3]
    res = linprog(f, A_eq=A, b_eq=_RHS, bounds=(0, None), method="highs")
    base = DensityDesign(a, "bspline", np.zeros(n_seg + 3), 1.0, n_seg)
    if res.status != 0:
        return replace(base._measured(spec), reason=f"linear program failed: {res.message}")
    c = _polish(A, _RHS, res.x)
    m_w = float(f @ c)
    if m_w >= -1e-12:
        return replace(
            base._measured(spec),
            reason=f"no negative F_p average reachable with this basis (best {m_w:.3e})",
        )
    I0 = float(f.sum())  # the B-splines sum to 1 on [-a, a]
    tau = target_ratio * m_w
    K = max((I0 - 2 * a * tau) / (tau - m_w), 1.0)
    d = replace(base, coefficients=K * c)._measured(spec)
    ok = abs(d.moment1) <= 1e-10 and abs(d.moment2) <= 1e-10 and d.objective < 0
    msg = "ok" if ok else "constraints or sign not met after scaling"
    return replace(d, success=ok, reason=f"{msg}; unit-mass optimum {m_w:.6g}, K = {K:.6g}")


def _legendre_min(coef):
    """Exact minimum over ``[-1, 1]`` of a Legendre series (endpoints and critical points)."""
    leg = np.polynomial.Legendre(coef)
    crit = leg.deriv().roots() if coef.size > 2 else np.array([])
    crit = crit[np.isreal(crit)].real if crit.size else crit
    x = np.concatenate([[-1.0, 1.0], crit[(crit > -1) & (crit < 1)]])
    return float(leg(x).min())


def _design_poly(spec, n):
    a = spec.a
    n = int(n)
    if n < 3:
        raise ValidationError("basis_size must be >= 3 for the polynomial basis")
    ref = DensityDesign(a, "poly", np.zeros(1), 1.0, 0)
    xq = ref.pieces((-1.0, 0.0))

    def leg(k):
        e = np.zeros(n)
        e[k] = 1.0
        return lambda t: np.polynomial.legendre.legval(t / a, e)

    def quad(fun):
        return float(_gl_on(xq[:-1], xq[1:], fun).sum())

    A = np.array([[quad(lambda t, k=k, m=m: m(t) * leg(k)(t)) for k in range(n)]
                  for m in (spec.phi1, spec.phi2)])
    N = null_space(A)
    dense = np.linspace(-a, a, 2001)  # search only; the final shift uses the exact minimum
    F = spec.objective_map
    Fleg = np.array([quad(lambda t, k=k: F(t) * leg(k)(t)) for k in range(n)])
    I0 = quad(F)

    def shifted(y):
        coef = N @ y
        gmin = float(np.polynomial.legendre.legval(dense / a, coef).min())
        return coef, 1.0 - gmin

    def normalized(y):
        coef, sh = shifted(y)
        mass = 2 * a * (coef[0] + sh)
        return (Fleg @ coef + sh * I0) / mass

    starts = [np.zeros(N.shape[1])]
    for i in range(N.shape[1]):
        for s in (1.0, -1.0, 10.0, -10.0):
            e = np.zeros(N.shape[1])
            e[i] = s
            starts.append(e)
    box = [(-100.0, 100.0)] * N.shape[1]
    best = min((minimize(normalized, y0, method="Nelder-Mead", bounds=box,
                         options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
                for y0 in starts), key=lambda r: r.fun)
    coef = N @ best.x
    sh = 1.0 - _legendre_min(coef) + 1e-12
    mono = np.polynomial.legendre.leg2poly(coef)
    d = replace(ref, coefficients=np.asarray(mono, dtype=float), shift=sh)._measured(spec)
    ok = (abs(d.moment1) <= 1e-10 and abs(d.moment2) <= 1e-10 and d.objective < 0
          and d.min_psi >= 1.0)
    reason = (
        "ok" if ok else
        f"no negative F_p average reachable with {n} Legendre polynomials "
        f"(best normalized value {best.fun:.6g})"
    )
    return replace(d, success=ok, reason=reason)


@dataclass(frozen=True, eq=False)
class ShootingResult:
    """Outcome of :func:`solve_profile_ode`; unpacks as ``(gamma, profile)``.

    ``ode_error`` is the mean (an L1 norm over ``s``) and ``ode_error_sup``
    the maximum of ``|v_n - v_{n/2}|`` between the solution and the
    half-as-many-steps solution; for a fourth-order method this over-estimates
    the error of ``v_n`` by roughly a factor 15.  ``interp_error`` is the
    largest miss of the stored samples' linear interpolant on the RK4 values.
    """

    gamma: float
    profile: SampledProfile
    n_steps: int
    endpoint_residual: float
    ode_error: float
    ode_error_sup: float
    ode_error_end: float
    interp_error: float
    bisection_steps: int
    gamma_tol: float

    def __iter__(self):
        return iter((self.gamma, self.profile))

    @property
    def profile_error(self):
        """L1 (in ``s``) size of the error of the stored profile."""
        return self.ode_error + self.interp_error

    def to_dict(self):
        return _plain({k: getattr(self, k) for k in (
            "gamma", "n_steps", "endpoint_residual", "ode_error", "ode_error_sup", "ode_error_end",
            "interp_error", "bisection_steps", "gamma_tol")} | {"samples": self.profile.s.size})


def _default_steps(design: DensityDesign):
    if design.max_psi - design.min_psi <= 1e-15 * design.max_psi:
        return 1024
    # v crosses one resolution cell in time >= resolution * min_psi / mass
    n = 512 * design.mass / (design.min_psi * design.resolution)
    return int(2 ** math.ceil(math.log2(min(max(n, 1024), 2**22))))


def solve_profile_ode(
    design: DensityDesign,
    a: float | None = None,
    n_steps: int | None = None,
    gamma_tol: float = 1e-10,
    max_samples: int = 2**14,
    interp_tol: float = 1e-9,
    max_bisections: int = 200,
) -> ShootingResult:
    """Shoot ``v' = gamma / psi(v)``, ``v(0) = -a`` to ``v(1) = a``.

    ``gamma`` is found by bisection on the RK4 endpoint, starting from a
    bracket around ``int psi`` (the exact value) and falling back to
    ``[2a min(psi), 2a max(psi)]``; the endpoint map is checked to be
    increasing along the way.  The stored profile starts from ``max_samples``
    evenly spaced steps and adds steps until linear interpolation reproduces
    every RK4 value within ``interp_tol * a``.
    """
    if a is not None and float(a) != design.a:
        raise ValidationError(f"a = {a} does not match the density's range a = {design.a}")
    a = design.a
    if not design.min_psi >= 1.0 - 1e-12:
        raise ValidationError(f"density must satisfy psi >= 1 on [-a, a]; min is {design.min_psi}")
    n = int(n_steps or _default_steps(design))
    if n < 2:
        raise ValidationError("n_steps must be >= 2")
    args = design.kernel_args()

    def endpoint(g):
        return _kernels.rk4_endpoint(*args, g, n)

    # gamma = int psi for the exact flow, so a narrow bracket around the mass
    # usually straddles; the wide bracket [2a min psi, 2a max psi] is the fallback
    for rel in (1e-6, 1e-3, None):
        if rel is None:
            lo = 2 * a * design.min_psi * (1 - 1e-6)
            hi = 2 * a * design.max_psi * (1 + 1e-6)
        else:
            lo, hi = design.mass * (1 - rel), design.mass * (1 + rel)
        f_lo, f_hi = endpoint(lo), endpoint(hi)
        if f_lo < a < f_hi:
            break
    else:
        raise ValidationError(
            f"shooting bracket failure: v(1) = {f_lo:.6g} at gamma = {lo:.6g} and "
            f"{f_hi:.6g} at gamma = {hi:.6g} do not straddle a = {a}"
        )
    gamma, f_mid, steps = 0.5 * (lo + hi), math.nan, 0
    for steps in range(1, max_bisections + 1):
        gamma = 0.5 * (lo + hi)
        f_mid = endpoint(gamma)
        if not f_lo <= f_mid <= f_hi:
            raise ValidationError("endpoint map gamma -> v(1) is not monotone on the bracket")
        if abs(f_mid - a) <= gamma_tol or not lo < gamma < hi:
            break
        if f_mid < a:
            lo, f_lo = gamma, f_mid
        else:
            hi, f_hi = gamma, f_mid

    full = _kernels.rk4_trajectory(*args, gamma, n)
    coarse = _kernels.rk4_trajectory(*args, gamma, n // 2)
    diff = np.abs(full[::2][: coarse.size] - coarse)
    keep = _decimate(full, max(1, n // max_samples), interp_tol * a)
    v = full[keep]
    profile = SampledProfile(keep / n, v, a, range_tol=max(1e-6, 10 * gamma_tol))
    return ShootingResult(
        gamma=gamma,
        profile=profile,
        n_steps=n,
        endpoint_residual=abs(f_mid - a),
        ode_error=float(diff.mean()),
        ode_error_sup=float(diff.max()),
        ode_error_end=float(diff[-1]),
        interp_error=float(np.max(np.abs(np.interp(np.arange(n + 1), keep, v) - full))),
        bisection_steps=steps,
        gamma_tol=gamma_tol,
    )


def _decimate(full, stride, tol):
    """Indices of samples to keep so that linear interpolation stays within ``tol``.

    Starts from every ``stride``-th sample and inserts interval midpoints
    wherever a dropped sample is missed by more than ``tol``.
    """
    n = full.size - 1
    keep = np.zeros(n + 1, dtype=bool)
    keep[::stride] = True
    keep[-1] = True
    grid = np.arange(n + 1)
    while True:
        idx = np.flatnonzero(keep)
        bad = np.flatnonzero(np.abs(np.interp(grid, idx, full[idx]) - full) > tol)
        if bad.size == 0:
            return idx
        right = np.searchsorted(idx, bad)
        keep[(idx[right - 1] + idx[right]) // 2] = True


def pushforward_moment(design: DensityDesign, gamma: float, phi: ScalarMap, full_output=False):
    """``gamma^-1 int_{-a}^{a} phi(t) psi(t) dt``, the law-side value of ``int phi(v)``."""
    val, err = integrate_density(design, phi)
    return (val / gamma, err / gamma) if full_output else val / gamma


def pushforward_error_bound(design: DensityDesign, shot: ShootingResult, phi: ScalarMap):
    """Error estimate for ``|int phi(v) - pushforward_moment|`` after shooting.

    ``int |phi(v) - phi(v_exact)|`` is bounded through the modulus of ``phi``:
    by its chord slope at the largest pointwise error times the L1 error
    (convex moduli) or by the modulus at the L1 error (concave moduli, via
    Jensen); the larger of the two is used.  Both quadrature error estimates
    and the mass that the endpoint mismatch at ``s = 1`` can move are added.
    """
    a = design.a
    e_l1 = shot.profile_error
    e_sup = shot.ode_error_sup + shot.interp_error
    reach = a + e_sup + shot.gamma_tol
    if phi.modulus is None or e_sup == 0:
        mod = 0.0
    else:
        mod = max(phi.modulus(reach, e_sup) / e_sup * e_l1, phi.modulus(reach, e_l1))
    _, q_prof = integrate_composition(shot.profile, phi, full_output=True)
    _, q_push = pushforward_moment(design, shot.gamma, phi, full_output=True)
    sup_phi = float(np.max(np.abs(phi(np.array([-reach, reach, -a, a, 0.0])))))
    psi_end = float(design(np.array([a]))[0])
    end = (shot.endpoint_residual + shot.ode_error_end) * sup_phi * psi_end / shot.gamma
    return float(mod + q_prof + q_push + end)


def ode_counterexample(
    spec: MomentSpec,
    basis_size: int | None = None,
    n_steps: int | None = None,
    gamma_tol: float = 1e-10,
    j_list=None,
) -> CounterexampleReport:
    """Counterexample through a designed density and the shooting ODE."""
    design = design_density(spec, basis_size=basis_size)
    if not design.success:
        return CounterexampleReport(
            spec, "ode", None, math.nan, math.nan, math.nan, False,
            f"no witness: {design.reason}", details={"design": design.to_dict()},
        )
    shot = solve_profile_ode(design, n_steps=n_steps, gamma_tol=gamma_tol)
    design = replace(design, gamma=shot.gamma)
    bounds = {
        name: pushforward_error_bound(design, shot, m)
        for name, m in (("moment1", spec.phi1), ("moment2", spec.phi2), ("objective", spec.objective_map))
    }
    push = {
        name: pushforward_moment(design, shot.gamma, m)
        for name, m in (("moment1", spec.phi1), ("moment2", spec.phi2), ("objective", spec.objective_map))
    }
    details = {
        "design": {k: v for k, v in design.to_dict().items() if k != "coefficients"},
        "shooting": shot.to_dict(),
        "pushforward": push,
    }
    errs = {f"{k}_bound": v for k, v in bounds.items()}
    return _finalize(spec, "ode", shot.profile, details, errs, j_list=j_list)


# --------------------------------------------------------------------------
# Verification
# --------------------------------------------------------------------------

TEST_FUNCTIONS = (
    ("indicator[0,1/3)", StepFunction.indicator(0.0, 1.0 / 3.0)),
    ("indicator[1/4,3/4)", StepFunction.indicator(0.25, 0.75)),
    ("indicator[0.1,0.35)", StepFunction.indicator(0.1, 0.35)),
    ("one", StepFunction.constant(1.0)),
    ("three-level", StepFunction([0.0, 0.2, 0.7, 1.0], [2.0, -1.0, 0.5])),
)


@dataclass(frozen=True)
class VerificationResult:
    """Per-check outcome of :func:`verify_counterexample`."""

    weak_limits: dict
    defect: dict
    verdict: bool

    def to_dict(self):
        return _plain({"weak_limits": self.weak_limits, "defect": self.defect,
                       "verdict": self.verdict})


def defect_scale_map(p):
    """``t -> |1+t|^p + |t|^p``: the size of the terms whose difference is ``F_p``."""
    return ScalarMap("defect_scale", lambda t: np.abs(1 + t) ** p + np.abs(t) ** p, p, 2.0**p + 1, (-1.0, 0.0))


def _zero_tolerance(report: CounterexampleReport, key):
    return max(report.spec.eps_mom, report.errors.get(f"{key}_bound", 0.0))


def verify_counterexample(report: CounterexampleReport, j_list=None) -> VerificationResult:
    """Re-check a report from its profile alone.

    (a) ``<T_j v, psi> -> 0`` and (b) ``<phi_2(T_j v), psi> -> 0`` for every
    test function: the predicted limit ``(int phi(v))(int psi)`` must vanish
    up to the moment tolerance and the pairings must settle on it by the
    two-window rule.  (c) The defect series with ``u = 1`` must converge to
    ``int F_p(v) < 0`` (for a step profile every ``D_j`` equals it).
    """
    if report.profile is None:
        raise ValidationError("report has no profile to verify")
    v, spec = report.profile, report.spec
    js = list(j_list or [2**k for k in range(11)])
    weak = {}
    ok = True
    for key, phi in (("moment1", spec.phi1), ("moment2", spec.phi2)):
        mean, qerr = integrate_composition(v, phi, full_output=True)
        H = None if isinstance(v, StepFunction) else periodic_antiderivative(v, phi)
        zero_tol = _zero_tolerance(report, key)
        for name, psi in TEST_FUNCTIONS:
            limit = mean * integrate_composition(psi, identity())
            if H is None:
                vals = [pair_oscillated(v, psi, j, phi) for j in js]
            else:
                vals = [oscillated_pairing_from(H, psi, j) for j in js]
            dev = [abs(x - limit) for x in vals]
            _, tol, tail = two_window(js, dev, extra=2 * qerr * psi.sup_norm())
            entry_ok = abs(limit) <= zero_tol * psi.sup_norm() and tail <= tol
            weak[f"{key}:{name}"] = {"limit": limit, "tail_deviation": tail, "tolerance": tol,
                                     "ok": entry_ok}
            ok &= entry_ok

    series = defect_series(1.0, v, spec.p, js)
    obj, oerr = integrate_composition(v, spec.objective_map, full_output=True)
    margin = max(oerr, report.errors.get("objective_bound", 0.0))
    # D_j is a difference of integrals of size up to int |1+v|^p; rounding scales with them
    scale = 1.0 + integrate_composition(v, defect_scale_map(spec.p))
    exact = isinstance(v, StepFunction)
    if exact:
        same = all(abs(d - obj) <= 1e-12 * scale for d in series.D)
    else:
        same = all(abs(d - obj) <= series.tail_tolerance for d in series.D[tail_slice(len(js))])
    negative = obj + margin < 0
    defect = {"limit": obj, "limit_error": margin, "theoretical_limit": series.theoretical_limit,
              "max_deviation": max(series.deviations), "matches_limit": same, "negative": negative}
    ok &= same and negative and series.converged
    return VerificationResult(weak, defect, bool(ok))


__all__ = [
    "CounterexampleReport",
    "DensityDesign",
    "MomentSpec",
    "ShootingResult",
    "TEST_FUNCTIONS",
    "VerificationResult",
    "default_amplitude",
    "design_density",
    "defect_scale_map",
    "eliminate_measures",
    "integrate_density",
    "moment_matrix",
    "ode_counterexample",
    "project_moments",
    "pushforward_error_bound",
    "pushforward_moment",
    "search_step_profile",
    "solve_profile_ode",
    "verify_counterexample",
]
