"""Pointwise inequalities behind the weak-convergence Brezis-Lieb bounds.

Residuals (all vectorized):

``g_p(t)``         ``|1+t|^p - 1 - |t|^p - p|t|^(p-2) t - p t``
``F_p(t)``         ``|1+t|^p - 1 - |t|^p``
``Phi_p(t)``       ``p t`` on ``|t| <= 1``, ``p |t|^(p-2) t`` beyond
``F_minus_Phi_p``  ``F_p - Phi_p``
``Fvec_p(t, th)``  ``|1+t^2+2 t th|^(p/2) - 1 - |t|^p - p|t|^(p-2) t th - p t th``
``Psi_p(s, t)``    two-branch minorant of ``|s+t|^p - |s|^p - |t|^p``

``g_p >= 0`` on ``[-1, 1]`` exactly when ``p >= 3``.  Nonnegativity is
certified on a grid: every grid node owns the cell within ``h/2`` of it and
the cell's minimum is bounded below by the better of a first-order bound
(interval bound on the gradient) and a second-order Taylor bound (gradient at
the node plus an interval bound on the Hessian).  Cells whose bound misses
``-tol`` are bisected until they pass, a value below ``-tol`` turns up, or the
refinement budget runs out.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .funcspace import ValidationError, signed_power as _sp

KINDS_1D = ("g_p", "F_p", "Phi_p", "F_minus_Phi_p")
KINDS_2D = ("Fvec_p", "Psi_p")
KINDS = KINDS_1D + KINDS_2D
PSI_VARIANTS = ("sign_corrected", "as_printed")

CERTIFIED = "certified_nonneg_up_to_tol"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"

ROUNDOFF_FLOOR = 1e-12


@dataclass(frozen=True)
class Residual:
    kind: str
    p: float
    variant: str = "sign_corrected"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown residual {self.kind!r}; choose from {KINDS}")
        p = float(self.p)
        if not np.isfinite(p) or p <= 1:
            raise ValidationError(f"p must be > 1, got {self.p!r}")
        if self.variant not in PSI_VARIANTS:
            raise ValidationError(f"unknown Psi variant {self.variant!r}")
        object.__setattr__(self, "p", p)

    @property
    def arity(self):
        return 1 if self.kind in KINDS_1D else 2

    def __call__(self, *point):
        return eval_residual(self, *point)

    def to_dict(self):
        d = {"kind": self.kind, "p": self.p}
        if self.kind == "Psi_p":
            d["variant"] = self.variant
        return d


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


def F_p(t, p):
    t = np.asarray(t, dtype=float)
    return np.abs(1.0 + t) ** p - 1.0 - np.abs(t) ** p


def g_p(t, p):
    t = np.asarray(t, dtype=float)
    return F_p(t, p) - p * _sp(t, p - 1.0) - p * t


def Phi_p(t, p):
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) <= 1.0, p * t, p * _sp(t, p - 1.0))


def Fvec_p(t, theta, p):
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    Q = 1.0 + t * t + 2.0 * t * theta
    return np.abs(Q) ** (p / 2.0) - 1.0 - np.abs(t) ** p - p * _sp(t, p - 1.0) * theta - p * t * theta


def Psi_p(s, t, p, variant="sign_corrected"):
    """Two-branch minorant, split at ``|t| = |s|``.

    ``sign_corrected`` is ``|s|^p Phi_p(t/s)`` written out:
    ``p |s|^(p-2) s t`` for ``|t| <= |s|`` and ``p s |t|^(p-2) t`` otherwise.
    ``as_printed`` is ``|s|^(p-1) t`` and ``|s| |t|^(p-2) t``.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    inner = np.abs(t) <= np.abs(s)
    if variant == "sign_corrected":
        return np.where(inner, p * _sp(s, p - 1.0) * t, p * s * _sp(t, p - 1.0))
    if variant == "as_printed":
        return np.where(inner, np.abs(s) ** (p - 1.0) * t, np.abs(s) * _sp(t, p - 1.0))
    raise ValidationError(f"unknown Psi variant {variant!r}")


def eval_residual(r: Residual, *point):
    """Evaluate ``r`` at a scalar ``t`` or a pair ``(t, theta)`` / ``(s, t)``; arrays broadcast."""
    if len(point) == 1 and r.arity == 2:
        point = tuple(point[0])
    if len(point) != r.arity:
        raise ValidationError(f"{r.kind} takes {r.arity} argument(s), got {len(point)}")
    p = r.p
    if r.kind == "g_p":
        return g_p(point[0], p)
    if r.kind == "F_p":
        return F_p(point[0], p)
    if r.kind == "Phi_p":
        return Phi_p(point[0], p)
    if r.kind == "F_minus_Phi_p":
        return F_p(point[0], p) - Phi_p(point[0], p)
    if r.kind == "Fvec_p":
        return Fvec_p(point[0], point[1], p)
    return Psi_p(point[0], point[1], p, r.variant)


# --------------------------------------------------------------------------
# Derivative bounds on cells
# --------------------------------------------------------------------------


def _sup_pow(lo, hi, alpha):
    """Upper bound of ``|x|**alpha`` over ``x`` in ``[lo, hi]``; ``inf`` when unbounded."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    amax = np.maximum(np.abs(lo), np.abs(hi))
    if alpha > 0:
        return amax**alpha
    if alpha == 0:
        return np.ones_like(amax)
    straddle = (lo <= 0.0) & (hi >= 0.0)
    amin = np.where(straddle, 1.0, np.minimum(np.abs(lo), np.abs(hi)))
    return np.where(straddle, np.inf, amin**alpha)


def _scaled(coef, arr):
    """``coef * arr`` with ``0 * inf`` read as 0."""
    return np.zeros_like(arr) if coef == 0 else coef * arr


def _abs_deriv(t, alpha):
    """``|t|**alpha`` allowing ``alpha < 0`` at ``t = 0`` (gives ``inf``)."""
    with np.errstate(divide="ignore"):
        return np.abs(t) ** alpha


def _parts_F(p, c, lo, hi):
    val = F_p(c, p)
    d = p * _sp(1.0 + c, p - 1.0) - p * _sp(c, p - 1.0)
    L = p * _sup_pow(1.0 + lo, 1.0 + hi, p - 1.0) + p * _sup_pow(lo, hi, p - 1.0)
    M = _scaled(p * (p - 1.0), _sup_pow(1.0 + lo, 1.0 + hi, p - 2.0) + _sup_pow(lo, hi, p - 2.0))
    return val, d, L, M, np.zeros_like(val)


def _parts_g(p, c, lo, hi):
    val, d, L, M, extra = _parts_F(p, c, lo, hi)
    val = val - p * _sp(c, p - 1.0) - p * c
    d = d - _scaled(p * (p - 1.0), _abs_deriv(c, p - 2.0)) - p
    sing = _sup_pow(lo, hi, p - 2.0)
    if p < 2.0:
        # |t|^(p-1) sign(t) is Holder-(p-1) with constant 2^(2-p) where its slope blows up
        straddle = (lo <= 0.0) & (hi >= 0.0)
        r = np.maximum(np.abs(c - lo), np.abs(hi - c))
        extra = np.where(straddle, p * 2.0 ** (2.0 - p) * r ** (p - 1.0), 0.0)
        sing = np.where(straddle, 0.0, sing)
    L = L + _scaled(p * (p - 1.0), sing) + p
    M = M + _scaled(p * (p - 1.0) * abs(p - 2.0), _sup_pow(lo, hi, p - 3.0))
    return val, d, L, M, extra


def _parts_Phi(p, c, lo, hi):
    val = Phi_p(c, p)
    inside = np.abs(c) <= 1.0
    d = np.where(inside, p, _scaled(p * (p - 1.0), _abs_deriv(c, p - 2.0)))
    reaches_out = (hi > 1.0) | (lo < -1.0)
    amax = np.maximum(np.maximum(np.abs(lo), np.abs(hi)), 1.0)
    s_out = amax ** (p - 2.0) if p >= 2.0 else np.ones_like(amax)
    L = np.where(reaches_out, np.maximum(p, p * (p - 1.0) * s_out), p)
    only_inside = (lo >= -1.0) & (hi <= 1.0)
    crosses = ~only_inside & (lo <= 1.0) & (hi >= -1.0)
    if p == 2.0:
        M = np.zeros_like(val)
    else:
        s3 = amax ** (p - 3.0) if p >= 3.0 else np.ones_like(amax)
        M = np.where(only_inside, 0.0, p * (p - 1.0) * abs(p - 2.0) * s3)
        M = np.where(crosses, np.inf, M)
    return val, d, L, M, np.zeros_like(val)


def _parts_F_minus_Phi(p, c, lo, hi):
    a = _parts_F(p, c, lo, hi)
    b = _parts_Phi(p, c, lo, hi)
    return a[0] - b[0], a[1] - b[1], a[2] + b[2], a[3] + b[3], a[4] + b[4]


def _interval_mul(al, ah, bl, bh):
    prods = np.stack([al * bl, al * bh, ah * bl, ah * bh])
    return prods.min(axis=0), prods.max(axis=0)


def _parts_Fvec(p, c, lo, hi):
    """Value, gradient, gradient bounds and Hessian bounds of ``Fvec_p`` on cells.

    ``c``, ``lo``, ``hi`` have shape ``(n, 2)`` (columns t, theta).
    """
    t, th = c[:, 0], c[:, 1]
    tl, tu, ql, qu = lo[:, 0], hi[:, 0], lo[:, 1], hi[:, 1]
    beta = p / 2.0

    Q = 1.0 + t * t + 2.0 * t * th
    val = Fvec_p(t, th, p)
    dQ = beta * _sp(Q, beta - 1.0)
    ft = dQ * (2.0 * t + 2.0 * th) - p * _sp(t, p - 1.0) - _scaled(p * (p - 1.0), _abs_deriv(t, p - 2.0)) * th - p * th
    fth = dQ * 2.0 * t - p * _sp(t, p - 1.0) - p * t
    grad = np.stack([ft, fth], axis=1)

    t2l = np.where((tl <= 0) & (tu >= 0), 0.0, np.minimum(tl * tl, tu * tu))
    t2u = np.maximum(tl * tl, tu * tu)
    pl, pu = _interval_mul(tl, tu, ql, qu)
    Ql, Qu = 1.0 + t2l + 2.0 * pl, 1.0 + t2u + 2.0 * pu
    Qt = 2.0 * np.maximum(np.abs(tl + ql), np.abs(tu + qu))
    Qth = 2.0 * np.maximum(np.abs(tl), np.abs(tu))
    tmax = np.maximum(np.abs(tl), np.abs(tu))
    thmax = np.maximum(np.abs(ql), np.abs(qu))

    S1 = _sup_pow(Ql, Qu, beta - 1.0)
    St1 = _sup_pow(tl, tu, p - 1.0)
    St2 = _sup_pow(tl, tu, p - 2.0)
    Lt = beta * S1 * Qt + p * St1 + _scaled(p * (p - 1.0), St2) * thmax + p * thmax
    Lth = beta * S1 * Qth + p * St1 + p * tmax
    L = np.stack([Lt, Lth], axis=1)

    S2 = _scaled(beta * (beta - 1.0), _sup_pow(Ql, Qu, beta - 2.0))
    S2 = np.abs(S2)
    M_tt = S2 * Qt**2 + 2 * beta * S1 + _scaled(p * (p - 1.0), St2) + _scaled(
        p * (p - 1.0) * abs(p - 2.0), _sup_pow(tl, tu, p - 3.0)
    ) * thmax
    M_tth = S2 * Qt * Qth + 2 * beta * S1 + _scaled(p * (p - 1.0), St2) + p
    M_thth = S2 * Qth**2
    M = np.stack([np.stack([M_tt, M_tth], 1), np.stack([M_tth, M_thth], 1)], 1)
    return val, grad, L, M, np.zeros_like(val)


_PARTS = {
    "g_p": _parts_g,
    "F_p": _parts_F,
    "Phi_p": _parts_Phi,
    "F_minus_Phi_p": _parts_F_minus_Phi,
    "Fvec_p": _parts_Fvec,
}


def _cell_lower_bounds(r: Residual, centers, radius, box_lo, box_hi):
    """Lower bounds of ``r`` on the cells ``|x - center|_inf <= radius`` (clipped to the box)."""
    lo = np.maximum(centers - radius, box_lo)
    hi = np.minimum(centers + radius, box_hi)
    parts = _PARTS[r.kind]
    if r.arity == 1:
        val, d, L, M, extra = parts(r.p, centers[:, 0], lo[:, 0], hi[:, 0])
        rad = radius[0]
        first = val - L * rad - extra
        second = val - np.abs(d) * rad - 0.5 * M * rad * rad
    else:
        val, d, L, M, extra = parts(r.p, centers, lo, hi)
        first = val - L @ radius - extra
        second = val - np.abs(d) @ radius - 0.5 * np.einsum("nij,i,j->n", M, radius, radius)
    with np.errstate(invalid="ignore"):
        bound = np.fmax(np.nan_to_num(first, nan=-np.inf), np.nan_to_num(second, nan=-np.inf))
    return val, bound


def _global_bounds(r: Residual, box_lo, box_hi):
    """(sum of gradient bounds, sum of Hessian bounds) over the whole box."""
    c = 0.5 * (box_lo + box_hi)[None, :]
    lo, hi = box_lo[None, :], box_hi[None, :]
    if r.arity == 1:
        _, _, L, M, _ = _PARTS[r.kind](r.p, c[:, 0], lo[:, 0], hi[:, 0])
        return float(L[0]), float(M[0])
    _, _, L, M, _ = _PARTS[r.kind](r.p, c, lo, hi)
    return float(L[0].sum()), float(M[0].sum())


# --------------------------------------------------------------------------
# Certification
# --------------------------------------------------------------------------


def _finite_or_none(x):
    return float(x) if x is not None and math.isfinite(x) else None


@dataclass(frozen=True)
class InequalityCertificate:
    """Outcome of a grid certification of ``residual >= -tolerance`` on ``box``.

    ``certified_lower_bound`` is the smallest lower bound over the final cell
    cover.  ``lipschitz_lower_bound`` is the plain ``grid_min - L h / 2`` with
    the global gradient bound ``L``; it is reported for reference and is
    usually far more pessimistic near equality points.  ``grid_min`` is the
    smallest value seen at any evaluated point (grid nodes and refinement
    centers).
    """

    residual: Residual
    box: tuple
    grid_step: float
    lipschitz_bound: float
    curvature_bound: float
    grid_min: float
    lipschitz_lower_bound: float
    certified_lower_bound: float
    tolerance: float
    verdict: str
    witness: tuple
    cells_evaluated: int = 0
    refinement_depth: int = 0
    reason: str = ""
    local_checks: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "residual": self.residual.to_dict(),
            "box": [list(b) for b in self.box],
            "grid_step": self.grid_step,
            "lipschitz_bound": _finite_or_none(self.lipschitz_bound),
            "curvature_bound": _finite_or_none(self.curvature_bound),
            "grid_min": self.grid_min,
            "lipschitz_lower_bound": _finite_or_none(self.lipschitz_lower_bound),
            "certified_lower_bound": _finite_or_none(self.certified_lower_bound),
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "witness": list(self.witness),
            "cells_evaluated": self.cells_evaluated,
            "refinement_depth": self.refinement_depth,
            "reason": self.reason,
            "local_checks": self.local_checks,
        }


def _normalize_box(box, arity):
    b = np.asarray(box, dtype=float)
    if b.ndim == 1:
        b = b[None, :]
    if b.shape == (1, 2) and arity == 2:
        b = np.repeat(b, 2, axis=0)
    if b.shape != (arity, 2) or np.any(b[:, 1] <= b[:, 0]):
        raise ValidationError(f"box must be {arity} interval(s) lo < hi, got {box!r}")
    return b


def _grid_axes(b, h):
    axes = []
    for lo, hi in b:
        n = max(2, int(round((hi - lo) / h)) + 1)
        axes.append(np.linspace(lo, hi, n))
    return axes


def _grid_chunks(axes, chunk):
    """Yield node arrays of shape (k, d) covering the tensor grid."""
    if len(axes) == 1:
        x = axes[0]
        for i in range(0, x.size, chunk):
            yield x[i : i + chunk, None]
        return
    t, th = axes
    rows = max(1, chunk // th.size)
    for i in range(0, t.size, rows):
        tt, qq = np.meshgrid(t[i : i + rows], th, indexing="ij")
        yield np.column_stack([tt.ravel(), qq.ravel()])


def certify_nonneg(
    r: Residual,
    box,
    h: float = 1e-4,
    tol: float = 1e-9,
    max_depth: int = 24,
    max_cells: int = 20_000_000,
    chunk: int = 1 << 18,
) -> InequalityCertificate:
    """Certify ``min_box r >= -tol`` or exhibit a violation.

    Sound up to floating-point rounding of the evaluations themselves.
    """
    b = _normalize_box(box, r.arity)
    if h <= 0:
        raise ValidationError("grid step h must be positive")
    box_t = tuple(tuple(map(float, row)) for row in b)
    if r.kind not in _PARTS:
        return InequalityCertificate(
            r, box_t, h, math.inf, math.inf, math.nan, -math.inf, -math.inf, tol,
            INCONCLUSIVE, (), reason=f"no derivative bounds implemented for {r.kind}",
        )
    box_lo, box_hi = b[:, 0], b[:, 1]
    axes = _grid_axes(b, h)
    steps = np.array([ax[1] - ax[0] for ax in axes])
    L_glob, M_glob = _global_bounds(r, box_lo, box_hi)

    grid_min, witness = math.inf, None
    lowest_bound = math.inf
    pending = []
    n_eval = 0
    radius0 = steps / 2.0
    for nodes in _grid_chunks(axes, chunk):
        val, bound = _cell_lower_bounds(r, nodes, radius0, box_lo, box_hi)
        n_eval += val.size
        k = int(np.argmin(val))
        if val[k] < grid_min:
            grid_min, witness = float(val[k]), nodes[k].copy()
        ok = bound >= -tol
        if ok.any():
            lowest_bound = min(lowest_bound, float(bound[ok].min()))
        if (~ok).any():
            pending.append(nodes[~ok])
    node_min = grid_min

    depth = 0
    radius = radius0
    centers = np.concatenate(pending) if pending else np.empty((0, r.arity))
    reason = ""
    signs = np.array(np.meshgrid(*[[-0.5, 0.5]] * r.arity, indexing="ij")).reshape(r.arity, -1).T
    while centers.size and grid_min >= -tol:
        if depth >= max_depth or n_eval + centers.shape[0] * len(signs) > max_cells:
            reason = f"refinement budget exhausted with {centers.shape[0]} open cells"
            break
        depth += 1
        children = (centers[:, None, :] + signs[None, :, :] * radius[None, None, :]).reshape(-1, r.arity)
        children = np.clip(children, box_lo, box_hi)
        radius = radius / 2.0
        nxt = []
        for i in range(0, children.shape[0], chunk):
            ch = children[i : i + chunk]
            val, bound = _cell_lower_bounds(r, ch, radius, box_lo, box_hi)
            n_eval += val.size
            k = int(np.argmin(val))
            if val[k] < grid_min:
                grid_min, witness = float(val[k]), ch[k].copy()
            ok = bound >= -tol
            if ok.any():
                lowest_bound = min(lowest_bound, float(bound[ok].min()))
            if (~ok).any():
                nxt.append(ch[~ok])
        centers = np.concatenate(nxt) if nxt else np.empty((0, r.arity))

    if centers.size:
        if grid_min < -tol:
            lowest_bound = -math.inf
        else:
            _, bd = _cell_lower_bounds(r, centers, radius, box_lo, box_hi)
            lowest_bound = min(lowest_bound, float(bd.min()))
    lowest_bound = min(lowest_bound, grid_min)

    if grid_min < -tol:
        verdict = VIOLATED
        reason = reason or "grid value below -tol"
    elif lowest_bound >= -tol:
        verdict = CERTIFIED
    else:
        verdict = INCONCLUSIVE
        if not math.isfinite(lowest_bound):
            reason = reason or "derivative bounds unbounded near a singular point"

    lip_lb = node_min - L_glob * float(steps.max()) / 2.0 if math.isfinite(L_glob) else -math.inf
    checks = {}
    if r.kind == "g_p" and box_lo[0] <= 0.0 <= box_hi[0]:
        checks = {"g_p(-h)": float(g_p(-h, r.p)), "g_p(0)": float(g_p(0.0, r.p)), "g_p(+h)": float(g_p(h, r.p))}
    return InequalityCertificate(
        residual=r,
        box=box_t,
        grid_step=float(h),
        lipschitz_bound=L_glob,
        curvature_bound=M_glob,
        grid_min=grid_min,
        lipschitz_lower_bound=lip_lb,
        certified_lower_bound=lowest_bound,
        tolerance=float(tol),
        verdict=verdict,
        witness=tuple(float(x) for x in witness),
        cells_evaluated=n_eval,
        refinement_depth=depth,
        reason=reason,
        local_checks=checks,
    )


# --------------------------------------------------------------------------
# Violation search
# --------------------------------------------------------------------------

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a, b, tol=1e-12, max_iter=200):
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def find_violation(r: Residual, box, resolution: float = 1e-4, atol: float = ROUNDOFF_FLOOR):
    """Grid argmin refined by golden-section descent.

    Returns ``(point, value)`` when the minimum is below ``-atol`` (values
    within ``atol`` of zero are treated as rounding), otherwise ``None``.
    """
    b = _normalize_box(box, r.arity)
    axes = _grid_axes(b, resolution)
    steps = [ax[1] - ax[0] for ax in axes]
    if r.arity == 1:
        x = axes[0]
        vals = eval_residual(r, x)
        k = int(np.argmin(vals))
        best = (np.array([x[k]]), float(vals[k]))
    else:
        tt, qq = np.meshgrid(*axes, indexing="ij")
        vals = eval_residual(r, tt, qq)
        k = np.unravel_index(int(np.argmin(vals)), vals.shape)
        best = (np.array([tt[k], qq[k]]), float(vals[k]))
    if best[1] >= -atol:
        return None
    point = best[0].copy()
    for _ in range(3 if r.arity == 2 else 1):
        for i in range(r.arity):
            lo = max(b[i, 0], point[i] - steps[i])
            hi = min(b[i, 1], point[i] + steps[i])

            def f1(z, i=i):
                q = point.copy()
                q[i] = z
                return float(eval_residual(r, *q))

            z, fz = golden_section(f1, lo, hi)
            if fz < best[1]:
                point[i] = z
                best = (point.copy(), fz)
    pt = float(best[0][0]) if r.arity == 1 else tuple(float(x) for x in best[0])
    return pt, best[1]


# --------------------------------------------------------------------------
# p scans and structural checks
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScanRow:
    p: float
    grid_min: float
    argmin: tuple
    verdict: str


def _scan_one(kind, p, box, h, tol):
    r = Residual(kind, p)
    cert = certify_nonneg(r, box, h=h, tol=tol)
    b = _normalize_box(box, r.arity)
    axes = _grid_axes(b, h)
    if r.arity == 1:
        vals = eval_residual(r, axes[0])
        k = int(np.argmin(vals))
        gmin, arg = float(vals[k]), (float(axes[0][k]),)
    else:
        tt, qq = np.meshgrid(*axes, indexing="ij")
        vals = eval_residual(r, tt, qq)
        k = np.unravel_index(int(np.argmin(vals)), vals.shape)
        gmin, arg = float(vals[k]), (float(tt[k]), float(qq[k]))
    return ScanRow(p, gmin, arg, cert.verdict)


def scan_p(p_list, residual_kind="g_p", box=(-1.0, 1.0), h=1e-5, tol=1e-9, threads=1):
    """Grid minimum and certification verdict of a residual for each ``p``."""
    p_list = [float(p) for p in p_list]
    for p in p_list:
        if p <= 1:
            raise ValidationError(f"p must be > 1, got {p}")
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(lambda p: _scan_one(residual_kind, p, box, h, tol), p_list))
    return [_scan_one(residual_kind, p, box, h, tol) for p in p_list]


def scan_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "grid_min", "argmin", "verdict"])
    for row in rows:
        w.writerow([repr(row.p), repr(row.grid_min), " ".join(repr(a) for a in row.argmin), row.verdict])
    return buf.getvalue()


@dataclass(frozen=True)
class VectorStructureReport:
    """Checks on ``theta -> Fvec_p(t, theta)`` over a grid.

    ``min_at_endpoint`` is False as soon as one row attains its minimum at an
    interior theta by more than ``1e-12``; such rows are listed (t values) in
    ``interior_min_t``.  Rows that are constant in theta (``t = 0``) are
    counted as ``flat_rows``.
    """

    p: float
    max_symmetry_residual: float
    max_reduction_residual: float
    min_second_difference: float
    convex: bool
    min_at_endpoint: bool
    interior_min_t: tuple
    flat_rows: tuple

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def check_vector_structure(p, t_grid=None, theta_grid=None, convexity_tol=1e-10):
    """Convexity in theta, the symmetry ``F(t,-1) = F(-t,1)``, and where the theta-minimum sits."""
    p = float(p)
    if p < 3:
        raise ValidationError(f"structure check needs p >= 3, got {p}")
    t = np.linspace(-1, 1, 2001) if t_grid is None else np.asarray(t_grid, dtype=float)
    th = np.linspace(-1, 1, 2001) if theta_grid is None else np.asarray(theta_grid, dtype=float)
    sym = float(np.max(np.abs(Fvec_p(t, -1.0, p) - Fvec_p(-t, 1.0, p))))
    red = float(np.max(np.abs(Fvec_p(t, 1.0, p) - g_p(t, p))))
    F = Fvec_p(t[:, None], th[None, :], p)
    d2 = F[:, 2:] - 2 * F[:, 1:-1] + F[:, :-2]
    min_d2 = float(d2.min()) if d2.size else 0.0
    row_min = F.min(axis=1)
    end_min = np.minimum(F[:, 0], F[:, -1])
    flat = np.ptp(F, axis=1) <= 1e-12
    interior = (~flat) & (row_min < end_min - 1e-12)
    return VectorStructureReport(
        p=p,
        max_symmetry_residual=sym,
        max_reduction_residual=red,
        min_second_difference=min_d2,
        convex=min_d2 >= -convexity_tol,
        min_at_endpoint=not bool(interior.any()),
        interior_min_t=tuple(float(x) for x in t[interior]),
        flat_rows=tuple(float(x) for x in t[flat]),
    )


@dataclass(frozen=True)
class DominationReport:
    p: float
    variant: str
    min_slack: float
    argmin: tuple
    scaling_residual: float
    slack_at_lambda_minus_one: float

    def to_dict(self):
        return dict(self.__dict__, argmin=list(self.argmin))


def check_psi_domination(p, s_grid=None, t_grid=None, variant="sign_corrected"):
    """Slack of ``|s+t|^p - |s|^p - |t|^p >= Psi_p(s, t)`` on a grid.

    ``scaling_residual`` compares ``|s|^p (F_p(t/s) - Phi_p(t/s))`` with the
    direct slack for ``s != 0`` (zero up to rounding for the sign-corrected
    variant).  ``slack_at_lambda_minus_one`` is the smallest ``|slack|`` on the
    diagonal ``t = -s``.
    """
    p = float(p)
    if p < 2:
        raise ValidationError(f"domination check needs p >= 2, got {p}")
    if variant not in PSI_VARIANTS:
        raise ValidationError(f"unknown Psi variant {variant!r}")
    s = np.linspace(-3, 3, 601) if s_grid is None else np.asarray(s_grid, dtype=float)
    t = np.linspace(-3, 3, 601) if t_grid is None else np.asarray(t_grid, dtype=float)
    S, T = np.meshgrid(s, t, indexing="ij")
    lhs = np.abs(S + T) ** p - np.abs(S) ** p - np.abs(T) ** p
    slack = lhs - Psi_p(S, T, p, variant)
    k = np.unravel_index(int(np.argmin(slack)), slack.shape)
    nz = S != 0
    lam = np.where(nz, T / np.where(nz, S, 1.0), 0.0)
    scaled = np.abs(S) ** p * (F_p(lam, p) - Phi_p(lam, p))
    scale_res = float(np.max(np.abs(scaled - slack)[nz])) if nz.any() else 0.0
    diag = s[s != 0]
    diag_slack = (np.abs(diag - diag) ** p - 2 * np.abs(diag) ** p) - Psi_p(diag, -diag, p, variant)
    return DominationReport(
        p=p,
        variant=variant,
        min_slack=float(slack[k]),
        argmin=(float(S[k]), float(T[k])),
        scaling_residual=scale_res,
        slack_at_lambda_minus_one=float(np.min(np.abs(diag_slack))) if diag.size else math.nan,
    )


def lipschitz_g_p(p):
    """Global slope bound for ``g_p`` on ``[-1, 1]`` when ``p >= 3``: ``p 2^(p-1) + p(p-1) + 2p``."""
    return p * 2.0 ** (p - 1.0) + p * (p - 1.0) + 2.0 * p


__all__ = [
    "CERTIFIED",
    "INCONCLUSIVE",
    "KINDS",
    "VIOLATED",
    "DominationReport",
    "F_p",
    "Fvec_p",
    "InequalityCertificate",
    "Phi_p",
    "Psi_p",
    "Residual",
    "ScanRow",
    "VectorStructureReport",
    "certify_nonneg",
    "check_psi_domination",
    "check_vector_structure",
    "eval_residual",
    "find_violation",
    "g_p",
    "golden_section",
    "lipschitz_g_p",
    "scan_p",
    "scan_to_csv",
]
