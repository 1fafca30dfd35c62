"""Compiled inner loop for explicit stepping of radial flows.

The driver calls :func:`advance` in chunks; state and trace bookkeeping stay
in Python.  Falls back to a pure-Python loop when numba is unavailable.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


STATUS_STEADY = 0
STATUS_CHUNK = 1
STATUS_HORIZON = 2
STATUS_FAIL = 3


@njit(cache=True, fastmath=True)
def advance(u, r, h, n, a, gvals, b, t, sigma, det_floor, steady_tol, t_end, max_steps):
    """Run at most ``max_steps`` explicit Euler steps in place.

    Returns (t, steps_done, status, sup_udot, last_dt).  Interior nodes are
    0 .. N-2; the boundary value u[N-1] is never touched.
    """
    N = u.shape[0]
    rhs = np.empty(N - 1)
    invh2 = 1.0 / (h * h)
    inv2h = 1.0 / (2.0 * h)
    steps = 0
    last_dt = 0.0
    sup = 0.0
    while True:
        trmax = 0.0
        sup = 0.0
        lam0 = (u[1] - u[0]) * invh2
        if lam0 <= 0.0:
            return t, steps, STATUS_FAIL, sup, last_dt
        det0 = lam0 if n == 1 else lam0 * lam0
        if det0 < det_floor:
            return t, steps, STATUS_FAIL, sup, last_dt
        rhs[0] = math.log(det0) + a * u[0] + gvals[0] + b * t
        if abs(rhs[0]) > sup:
            sup = abs(rhs[0])
        tr = n / lam0
        if tr > trmax:
            trmax = tr
        for i in range(1, N - 1):
            d1 = (u[i + 1] - u[i - 1]) * inv2h
            d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * invh2
            lr = 0.25 * (d2 + d1 / r[i])
            if lr <= 0.0:
                return t, steps, STATUS_FAIL, sup, last_dt
            if n == 1:
                det = lr
                tr = 1.0 / lr
            else:
                lt = d1 / (2.0 * r[i])
                if lt <= 0.0:
                    return t, steps, STATUS_FAIL, sup, last_dt
                det = lt * lr
                tr = 1.0 / lt + 1.0 / lr
            if det < det_floor:
                return t, steps, STATUS_FAIL, sup, last_dt
            rhs[i] = math.log(det) + a * u[i] + gvals[i] + b * t
            if abs(rhs[i]) > sup:
                sup = abs(rhs[i])
            if tr > trmax:
                trmax = tr
        if sup <= steady_tol:
            return t, steps, STATUS_STEADY, sup, last_dt
        if steps >= max_steps:
            return t, steps, STATUS_CHUNK, sup, last_dt
        dt = sigma * h * h * 0.25 / trmax
        if t_end - t <= dt:
            dt = t_end - t
            if dt <= 0.0:
                return t, steps, STATUS_HORIZON, sup, last_dt
            for i in range(N - 1):
                u[i] += dt * rhs[i]
            return t_end, steps + 1, STATUS_HORIZON, sup, dt
        for i in range(N - 1):
            u[i] += dt * rhs[i]
        t += dt
        steps += 1
        last_dt = dt
