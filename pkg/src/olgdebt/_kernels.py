"""Compiled inner loops for the no-transfer capital recurrence.

The saving rule without old-age claims is exact (K_t = beta (W_t + X)), so
steady-state simulation reduces to a scalar recurrence per lane.  numba
keeps the 30k-draw sweeps fast; math stays IEEE-strict (no fastmath) so
results are bit-identical across processes and worker counts.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:      # pragma: no cover - numba is a hard dependency
    def njit(*args, **kwargs):
        def wrap(f):
            return f
        return wrap


@njit(cache=True)
def cd_path_means(a_draws, beta, x, b, burn_in):
    """Time means of (K, W, K^(b-1)) for the Cobb-Douglas no-transfer economy."""
    n = a_draws.shape[0]
    lanes = beta.shape[0]
    k = np.ones(lanes)
    s_k = np.zeros(lanes)
    s_w = np.zeros(lanes)
    s_kb = np.zeros(lanes)
    count = 0
    for t in range(n):
        a = a_draws[t]
        for j in range(lanes):
            w = (1.0 - b) * a * k[j] ** b
            k[j] = beta[j] * (w + x[j])
            if t >= burn_in:
                s_k[j] += k[j]
                s_w[j] += w
                s_kb[j] += k[j] ** (b - 1.0)
        if t >= burn_in:
            count += 1
    return s_k / count, s_w / count, s_kb / count


@njit(cache=True)
def cd_capital_path(a_draws, beta, x, b, k0):
    """Full K_t path (n, lanes) for the Cobb-Douglas branch."""
    n = a_draws.shape[0]
    lanes = beta.shape[0]
    k = np.full(lanes, k0)
    path = np.empty((n, lanes))
    for t in range(n):
        a = a_draws[t]
        for j in range(lanes):
            w = (1.0 - b) * a * k[j] ** b
            k[j] = beta[j] * (w + x[j])
            path[t, j] = k[j]
    return path


@njit(cache=True)
def ces_capital_path(a_draws, beta, x, b, rho, k0):
    """Full K_t path (n, lanes) for a general CES branch (rho not 0 or 1)."""
    n = a_draws.shape[0]
    lanes = beta.shape[0]
    k = np.full(lanes, k0)
    path = np.empty((n, lanes))
    for t in range(n):
        a = a_draws[t]
        for j in range(lanes):
            y_over_a = (b * k[j] ** rho + (1.0 - b)) ** (1.0 / rho)
            w = a * (1.0 - b) * y_over_a ** (1.0 - rho)
            k[j] = beta[j] * (w + x[j])
            path[t, j] = k[j]
    return path
