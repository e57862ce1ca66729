"""Pure-numpy implementations of the hot integration kernels.

Same contracts as the compiled extension in _core.pyx; qdcascade.kernels picks
whichever is importable.  All kernels integrate the linear master equation
d(vec rho)/dt = (L0 + Omega(t) L1) vec(rho) with classical RK4 on a uniform
step; Omega is supplied pre-sampled on the half-step grid.
"""
from __future__ import annotations

import numpy as np


def rk4_run(l0, l1, omega_half, dt, y0):
    """Propagate one 16-vector, returning all n+1 grid samples.

    omega_half holds 2n+1 drive samples at t0, t0+dt/2, t0+dt, ...
    """
    n = (len(omega_half) - 1) // 2
    traj = np.empty((n + 1, 16), dtype=complex)
    traj[0] = y0
    y = np.array(y0, dtype=complex)
    for k in range(n):
        ma = l0 + omega_half[2 * k] * l1
        mb = l0 + omega_half[2 * k + 1] * l1
        mc = l0 + omega_half[2 * k + 2] * l1
        k1 = ma @ y
        k2 = mb @ (y + (0.5 * dt) * k1)
        k3 = mb @ (y + (0.5 * dt) * k2)
        k4 = mc @ (y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        traj[k + 1] = y
    return traj


def rk4_step_matrices(l0, l1, omega_half, dt):
    """One-step RK4 propagator matrices U_k mapping sample k to sample k+1.

    For a linear generator the classical RK4 update is itself a matrix:
    U = 1 + dt/6 (K1 + 2 K2 + 2 K3 + K4) with K1 = Ma, K2 = Mb (1 + dt/2 K1),
    K3 = Mb (1 + dt/2 K2), K4 = Mc (1 + dt K3).  Built in step blocks with
    batched matmuls; blocks bound the scratch memory on long grids.
    """
    n = (len(omega_half) - 1) // 2
    eye = np.eye(16, dtype=complex)
    out = np.empty((n, 16, 16), dtype=complex)
    for a in range(0, n, 2048):
        b = min(a + 2048, n)
        sl = slice(2 * a, 2 * b + 1)
        om = omega_half[sl]
        ma = l0 + om[0:-1:2, None, None] * l1
        mb = l0 + om[1::2, None, None] * l1
        mc = l0 + om[2::2, None, None] * l1
        k1 = ma
        k2 = mb @ (eye + (0.5 * dt) * k1)
        k3 = mb @ (eye + (0.5 * dt) * k2)
        k4 = mc @ (eye + dt * k3)
        out[a:b] = eye + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return out


def two_time_sweep(step_mats, chi0, start, stop, comp_idx, dt):
    """Batched propagation with per-element trapezoidal accumulation.

    Element b is seeded with chi0[b] at grid sample start[b], evolved through
    sample stop[b], and acc[b, c] collects the trapezoid over its samples of
    component comp_idx[c].  start and stop must be non-decreasing so the
    active set is a contiguous, forward-moving window.

    Returns (acc, chi_final) where chi_final[b] is the state at sample stop[b].
    """
    n = step_mats.shape[0]
    nb = chi0.shape[0]
    acc = np.zeros((nb, len(comp_idx)), dtype=complex)
    chif = np.empty_like(chi0)
    z = np.empty_like(chi0)
    lo = hi = 0
    for k in range(n + 1):
        hi2 = int(np.searchsorted(start, k, side="right"))
        if hi2 > hi:
            z[hi:hi2] = chi0[hi:hi2]
            w0 = np.where(stop[hi:hi2] > k, 0.5 * dt, 0.0)
            acc[hi:hi2] += w0[:, None] * z[hi:hi2][:, comp_idx]
            hi = hi2
        lo2 = int(np.searchsorted(stop, k, side="right"))
        if lo2 > lo:
            chif[lo:lo2] = z[lo:lo2]
            lo = lo2
        if k == n or hi == lo:
            continue
        z[lo:hi] = z[lo:hi] @ step_mats[k].T
        w = np.where(stop[lo:hi] == k + 1, 0.5 * dt, dt)
        acc[lo:hi] += w[:, None] * z[lo:hi][:, comp_idx]
    return acc, chif
