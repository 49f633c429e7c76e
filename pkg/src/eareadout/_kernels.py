"""Hot numeric kernels: RK4 trajectory stepping and noise-kernel quadrature.

Both kernels exist in two flavours: a numba ``@njit`` build (default) and a
vectorised pure-numpy implementation. Set the environment variable
``EAREADOUT_DISABLE_NUMBA=1`` before import to force the numpy path, e.g. when
debugging or on platforms without a working numba install. The two paths agree
to floating-point associativity and are timed against each other in
``benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import math
import os

import numpy as np

NUMBA_ENABLED = os.environ.get("EAREADOUT_DISABLE_NUMBA", "0") != "1"
if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

_JIT_OPTS = dict(cache=True, fastmath=False)


def _store_count(n_steps: int, store_every: int) -> int:
    n = n_steps // store_every + 1
    if n_steps % store_every != 0:
        n += 1
    return n


# ---------------------------------------------------------------------------
# RK4 over a piecewise-pulsed generator
#
# Instantaneous drift: base_drift + sum_b env[row, b] * block_drifts[b]
# Instantaneous drive:              sum_b env[row, b] * block_drives[b]
# env is sampled on the RK4 half-grid (2 * n_steps + 1 rows); noise is the
# constant covariance source term (decay / 2). Means follow
# dmu/dt = A mu + d, the covariance the Lyapunov equation
# dV/dt = A V + V A^T + noise. Output sampled every store_every steps,
# final point always included.
# ---------------------------------------------------------------------------

def _rk4_protocol_numba(mu0, cov0, base_drift, noise, block_drifts, block_drives,
                        env, dt, n_steps, store_every):
    dim = mu0.shape[0]
    n_blocks = block_drifts.shape[0]

    n_store = _store_count(n_steps, store_every)
    times = np.empty(n_store)
    mus = np.empty((n_store, dim))
    covs = np.empty((n_store, dim, dim))

    mu = mu0.copy()
    cov = cov0.copy()

    a1 = np.empty((dim, dim))
    a2 = np.empty((dim, dim))
    a3 = np.empty((dim, dim))
    d1 = np.empty(dim)
    d2 = np.empty(dim)
    d3 = np.empty(dim)

    out = 0
    times[out] = 0.0
    mus[out] = mu
    covs[out] = cov
    out += 1

    for i in range(n_steps):
        for sub in range(3):
            row = 2 * i + sub
            if sub == 0:
                a, d = a1, d1
            elif sub == 1:
                a, d = a2, d2
            else:
                a, d = a3, d3
            for r in range(dim):
                d[r] = 0.0
                for c in range(dim):
                    a[r, c] = base_drift[r, c]
            for b in range(n_blocks):
                e = env[row, b]
                if e != 0.0:
                    for r in range(dim):
                        d[r] += e * block_drives[b, r]
                        for c in range(dim):
                            a[r, c] += e * block_drifts[b, r, c]

        k1m = a1 @ mu + d1
        k1v = a1 @ cov + cov @ a1.T + noise
        m2 = mu + 0.5 * dt * k1m
        v2 = cov + 0.5 * dt * k1v
        k2m = a2 @ m2 + d2
        k2v = a2 @ v2 + v2 @ a2.T + noise
        m3 = mu + 0.5 * dt * k2m
        v3 = cov + 0.5 * dt * k2v
        k3m = a2 @ m3 + d2
        k3v = a2 @ v3 + v3 @ a2.T + noise
        m4 = mu + dt * k3m
        v4 = cov + dt * k3v
        k4m = a3 @ m4 + d3
        k4v = a3 @ v4 + v4 @ a3.T + noise

        mu = mu + (dt / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
        cov = cov + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        cov = 0.5 * (cov + cov.T)

        if (i + 1) % store_every == 0 or i == n_steps - 1:
            times[out] = (i + 1) * dt
            mus[out] = mu
            covs[out] = cov
            out += 1

    return times[:out], mus[:out], covs[:out]


def _rk4_protocol_numpy(mu0, cov0, base_drift, noise, block_drifts, block_drives,
                        env, dt, n_steps, store_every):
    dim = mu0.shape[0]
    n_store = _store_count(n_steps, store_every)
    times = np.empty(n_store)
    mus = np.empty((n_store, dim))
    covs = np.empty((n_store, dim, dim))

    mu = mu0.copy()
    cov = cov0.copy()

    out = 0
    times[out] = 0.0
    mus[out] = mu
    covs[out] = cov
    out += 1

    for i in range(n_steps):
        row = 2 * i
        a1 = base_drift + np.tensordot(env[row], block_drifts, axes=1)
        a2 = base_drift + np.tensordot(env[row + 1], block_drifts, axes=1)
        a3 = base_drift + np.tensordot(env[row + 2], block_drifts, axes=1)
        d1 = env[row] @ block_drives
        d2 = env[row + 1] @ block_drives
        d3 = env[row + 2] @ block_drives

        k1m = a1 @ mu + d1
        k1v = a1 @ cov + cov @ a1.T + noise
        m = mu + 0.5 * dt * k1m
        v = cov + 0.5 * dt * k1v
        k2m = a2 @ m + d2
        k2v = a2 @ v + v @ a2.T + noise
        m = mu + 0.5 * dt * k2m
        v = cov + 0.5 * dt * k2v
        k3m = a2 @ m + d2
        k3v = a2 @ v + v @ a2.T + noise
        m = mu + dt * k3m
        v = cov + dt * k3v
        k4m = a3 @ m + d3
        k4v = a3 @ v + v @ a3.T + noise

        mu = mu + (dt / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
        cov = cov + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        cov = 0.5 * (cov + cov.T)

        if (i + 1) % store_every == 0 or i == n_steps - 1:
            times[out] = (i + 1) * dt
            mus[out] = mu
            covs[out] = cov
            out += 1

    return times[:out], mus[:out], covs[:out]


# ---------------------------------------------------------------------------
# Double quadrature of the intracavity noise kernel
#
# Accumulates sum_ij gw_i gw_j Gamma_XX(t_i, t_j) where gw already folds the
# trapezoid weights into the filter samples. Gamma_XX is the symmetrised
# two-time quadrature correlation of a decaying, detuned cavity; its
# equal-time value reproduces the Lyapunov-evolved variance (vacuum 1/2).
# ---------------------------------------------------------------------------

def _kernel_xx_scalar(t1, t2, vxx, vpp, cxp, gamma, delta):
    if t2 > t1:
        t1, t2 = t2, t1
    tau = t1 - t2
    tsum = t1 + t2
    normal = 0.5 * math.exp(-0.5 * gamma * tau) * math.cos(delta * tau) * (
        1.0 + math.exp(-gamma * t2) * (vxx + vpp - 1.0))
    anomalous = 0.5 * math.exp(-0.5 * gamma * tsum) * (
        (vxx - vpp) * math.cos(delta * tsum) + 2.0 * cxp * math.sin(delta * tsum))
    return normal + anomalous


def _double_quad_numba(tgrid, gw, vxx, vpp, cxp, gamma, delta):
    m = tgrid.shape[0]
    acc = 0.0
    for i in range(m):
        acc += gw[i] * gw[i] * _kernel_xx_scalar(tgrid[i], tgrid[i], vxx, vpp, cxp, gamma, delta)
        for j in range(i):
            acc += 2.0 * gw[i] * gw[j] * _kernel_xx_scalar(tgrid[i], tgrid[j], vxx, vpp, cxp, gamma, delta)
    return acc


def kernel_xx_grid(t1, t2, vxx, vpp, cxp, gamma, delta):
    """Vectorised Gamma_XX over broadcastable time arrays."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    lo = np.minimum(t1, t2)
    tau = np.abs(t1 - t2)
    tsum = t1 + t2
    normal = 0.5 * np.exp(-0.5 * gamma * tau) * np.cos(delta * tau) * (
        1.0 + np.exp(-gamma * lo) * (vxx + vpp - 1.0))
    anomalous = 0.5 * np.exp(-0.5 * gamma * tsum) * (
        (vxx - vpp) * np.cos(delta * tsum) + 2.0 * cxp * np.sin(delta * tsum))
    return normal + anomalous


def _double_quad_numpy(tgrid, gw, vxx, vpp, cxp, gamma, delta, chunk=512):
    m = tgrid.shape[0]
    acc = 0.0
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        block = kernel_xx_grid(tgrid[start:stop, None], tgrid[None, :],
                               vxx, vpp, cxp, gamma, delta)
        acc += gw[start:stop] @ block @ gw
    return acc


if NUMBA_ENABLED:
    _store_count = njit(**_JIT_OPTS)(_store_count)  # noqa: F811
    _kernel_xx_scalar = njit(**_JIT_OPTS)(_kernel_xx_scalar)  # noqa: F811
    rk4_protocol = njit(**_JIT_OPTS)(_rk4_protocol_numba)
    kernel_double_quad = njit(**_JIT_OPTS)(_double_quad_numba)
else:
    rk4_protocol = _rk4_protocol_numpy
    kernel_double_quad = _double_quad_numpy
