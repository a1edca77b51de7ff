"""Periodic rescaling ``T_j v(x) = v(j x mod 1)`` and the weak limits it produces.

``T_j`` preserves the distribution of values of ``v`` (``x -> j x mod 1``
preserves Lebesgue measure), so every integral of a composition is the same
for all ``j``.  Pairings against a fixed test function approach
``(int v)(int psi)`` at rate ``1/j``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .funcspace import (
    Function,
    ScalarMap,
    StepFunction,
    ValidationError,
    antiderivative,
    identity,
    integrate_composition,
    pair,
)


def _check_j(j):
    if isinstance(j, bool) or int(j) != j or j < 1:
        raise ValidationError(f"j must be a positive integer, got {j!r}")
    return int(j)


def rescale(v: StepFunction, j: int) -> StepFunction:
    """Exact step representation of ``T_j v`` (``j * M`` cells)."""
    j = _check_j(j)
    if not isinstance(v, StepFunction):
        raise ValidationError("rescale works on step functions; use pair_oscillated for profiles")
    if j == 1:
        return v
    x = v.breakpoints[:-1]
    k = np.arange(j, dtype=float)[:, None]
    bp = np.concatenate([((k + x[None, :]) / j).ravel(), [1.0]])
    return StepFunction(bp, np.tile(v.values, j))


def periodic_antiderivative(v: Function, phi: ScalarMap | None = None):
    """``H(y) = int_0^y phi(v(x mod 1)) dx`` for ``y >= 0`` (vectorized).

    Build it once and reuse it for many test functions and many ``j`` with
    :func:`oscillated_pairing_from`.
    """
    G = antiderivative(v, phi or identity())
    period = float(np.atleast_1d(G(np.array([1.0])))[0])

    def H(y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        n = np.floor(y)
        return n * period + G(y - n)

    return H


def oscillated_pairing_from(H, psi: StepFunction, j: int) -> float:
    """``int_0^1 h(j x mod 1) psi(x) dx`` given the periodic antiderivative ``H`` of ``h``."""
    return float(np.sum(psi.values * np.diff(H(j * psi.breakpoints))) / j)


def pair_oscillated(v: Function, psi: StepFunction, j: int, phi: ScalarMap | None = None) -> float:
    """``int_0^1 phi(T_j v)(x) psi(x) dx``; ``phi`` defaults to the identity.

    For step ``v`` this is the exact pairing of ``rescale(phi(v), j)`` with
    ``psi``.  For a sampled profile each cell of ``psi`` is handled through the
    periodic antiderivative of ``phi(v)``, so no ``j``-fold tiling is formed.
    """
    j = _check_j(j)
    if not isinstance(psi, StepFunction):
        raise ValidationError("test function psi must be a step function")
    if isinstance(v, StepFunction):
        w = v if phi is None else v.compose(phi)
        return pair(rescale(w, j), psi)
    return oscillated_pairing_by_antiderivative(v, psi, j, phi)


def oscillated_pairing_by_antiderivative(v: Function, psi: StepFunction, j: int, phi=None) -> float:
    """Same quantity as :func:`pair_oscillated`, computed cell by cell of ``psi``.

    ``int_alpha^beta h(j x mod 1) dx = (H(j beta) - H(j alpha)) / j`` with ``H``
    the periodic antiderivative of ``h = phi(v)``.
    """
    j = _check_j(j)
    return oscillated_pairing_from(periodic_antiderivative(v, phi), psi, j)


def weak_limit_mean(v: Function) -> float:
    """``int_0^1 v``: the weak limit of ``T_j v``."""
    return integrate_composition(v, identity())


def composition_weak_limit(v: Function, phi: ScalarMap) -> float:
    """``int_0^1 phi(v(s)) ds``: the weak limit of ``phi(T_j v)``."""
    return integrate_composition(v, phi)


def decay_constant(v: StepFunction, psi: StepFunction) -> float:
    """``||v||_inf ||psi||_inf (M_v + M_psi)``, bounding ``j * |<T_j v, psi> - (int v)(int psi)|``."""
    return v.sup_norm() * psi.sup_norm() * (v.n_cells + psi.n_cells)


@dataclass(frozen=True)
class WeakLimitEstimate:
    j_list: tuple
    pairings: tuple
    predicted_limit: float
    max_deviation_tail: float

    @property
    def deviations(self):
        return tuple(abs(p - self.predicted_limit) for p in self.pairings)

    def to_dict(self):
        return {
            "j_list": list(self.j_list),
            "pairings": list(self.pairings),
            "predicted_limit": self.predicted_limit,
            "max_deviation_tail": self.max_deviation_tail,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "pairing", "deviation"])
        for j, p, d in zip(self.j_list, self.pairings, self.deviations):
            w.writerow([j, repr(p), repr(d)])
        return buf.getvalue()


def tail_slice(n):
    """Indices of the last half of a length-``n`` series."""
    return slice(n // 2, n)


def convergence_table(v: Function, psi: StepFunction, j_list, phi: ScalarMap | None = None) -> WeakLimitEstimate:
    """Pairings ``<phi(T_j v), psi>`` for each ``j`` against ``(int phi(v))(int psi)``."""
    j_list = [_check_j(j) for j in j_list]
    if not j_list:
        raise ValidationError("j_list must be nonempty")
    if any(b <= a for a, b in zip(j_list, j_list[1:])):
        raise ValidationError("j_list must be strictly increasing")
    if isinstance(v, StepFunction):
        pairings = [pair_oscillated(v, psi, j, phi) for j in j_list]
    else:
        H = periodic_antiderivative(v, phi)
        pairings = [oscillated_pairing_from(H, psi, j) for j in j_list]
    limit = composition_weak_limit(v, phi or identity()) * weak_limit_mean(psi)
    dev = [abs(p - limit) for p in pairings]
    tail = max(dev[tail_slice(len(dev))])
    return WeakLimitEstimate(tuple(j_list), tuple(pairings), limit, tail)


__all__ = [
    "WeakLimitEstimate",
    "composition_weak_limit",
    "convergence_table",
    "decay_constant",
    "oscillated_pairing_by_antiderivative",
    "oscillated_pairing_from",
    "pair_oscillated",
    "periodic_antiderivative",
    "rescale",
    "tail_slice",
    "weak_limit_mean",
]
