"""Compiled inner loops for the profile ODE ``v' = gamma / psi(v)``.

``kind`` selects the density family: 0 for uniform cubic B-splines on
``[-a, a]`` (``delta`` is the knot spacing), 1 for a polynomial in ``t / a``
given by monomial coefficients (``delta`` unused).  Arguments outside
``[-a, a]`` are clamped.
"""

import numba as nb
import numpy as np


@nb.njit(cache=True)
def _bspline(t, coef, a, inv_delta, shift):
    if t < -a:
        t = -a
    elif t > a:
        t = a
    u = (t + a) * inv_delta
    i = int(u)
    last = coef.size - 4
    if i > last:
        i = last
    f = u - i
    g = 1.0 - f
    f2 = f * f
    f3 = f2 * f
    acc = (
        coef[i] * g * g * g
        + coef[i + 1] * (3.0 * f3 - 6.0 * f2 + 4.0)
        + coef[i + 2] * (-3.0 * f3 + 3.0 * f2 + 3.0 * f + 1.0)
        + coef[i + 3] * f3
    )
    return shift + acc * (1.0 / 6.0)


@nb.njit(cache=True)
def _poly(t, mono, a, shift):
    if t < -a:
        t = -a
    elif t > a:
        t = a
    x = t / a
    acc = 0.0
    for k in range(mono.size - 1, -1, -1):
        acc = acc * x + mono[k]
    return shift + acc


@nb.njit(cache=True)
def _psi(kind, t, coef, a, inv_delta, shift):
    if kind == 0:
        return _bspline(t, coef, a, inv_delta, shift)
    return _poly(t, coef, a, shift)


@nb.njit(cache=True)
def _integrate(kind, coef, a, delta, shift, gamma, n_steps, out):
    inv_delta = 1.0 / delta if delta > 0 else 0.0
    hg = gamma / n_steps
    v = -a
    comp = 0.0
    if out.size:
        out[0] = v
    for i in range(n_steps):
        k1 = 1.0 / _psi(kind, v, coef, a, inv_delta, shift)
        k2 = 1.0 / _psi(kind, v + 0.5 * hg * k1, coef, a, inv_delta, shift)
        k3 = 1.0 / _psi(kind, v + 0.5 * hg * k2, coef, a, inv_delta, shift)
        k4 = 1.0 / _psi(kind, v + hg * k3, coef, a, inv_delta, shift)
        # compensated summation keeps round-off O(eps) over millions of steps
        y = hg * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0 - comp
        t = v + y
        comp = (t - v) - y
        v = t
        if out.size:
            out[i + 1] = v
    return v


def rk4_endpoint(kind, coef, a, delta, shift, gamma, n_steps):
    """``v(1)`` for ``v(0) = -a`` with classical RK4 on ``n_steps`` equal steps."""
    return _integrate(kind, coef, a, delta, shift, gamma, n_steps, np.empty(0))


def rk4_trajectory(kind, coef, a, delta, shift, gamma, n_steps):
    """All ``n_steps + 1`` values of the RK4 solution."""
    out = np.empty(n_steps + 1)
    _integrate(kind, coef, a, delta, shift, gamma, n_steps, out)
    return out


@nb.njit(cache=True)
def density_values(kind, ts, coef, a, delta, shift):
    inv_delta = 1.0 / delta if delta > 0 else 0.0
    out = np.empty(ts.size)
    for i in range(ts.size):
        out[i] = _psi(kind, ts[i], coef, a, inv_delta, shift)
    return out
