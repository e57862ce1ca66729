"""Time stepping through the pulse and exact spectral handling of free decay.

The drive makes the generator time dependent only inside the pulse window, so
evolution is split into RK4 stepping (fine step inside the window, coarse step
outside) and, once the drive is gone, an exact exp(L tau) built from the
eigendecomposition of the constant Liouvillian.  Everything is deterministic:
fixed steps, fixed summation order.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .model import QdParams, PulseSpec, envelope, free_liouvillian, liouvillian_apply, liouvillian_split

MAX_STEPS = 10**8
EIG_ZERO_TOL = 1e-10  # |lambda| below this counts as a stationary mode
COND_LIMIT = 1e12


class StepOverflowError(RuntimeError):
    """The requested grid implies more steps than MAX_STEPS."""


class DivergentIntegralError(RuntimeError):
    """A stationary mode carries weight in an infinite-horizon integral."""


@dataclass(frozen=True)
class TimeGrid:
    """Step-size policy: dt_pulse while |t - t0| <= window * fwhm, dt_free outside."""

    t_start: float
    t_end: float
    dt_pulse: float = 0.02
    dt_free: float = 0.5
    window: float = 3.0

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ValueError("t_start must be below t_end")
        if not 0 < self.dt_pulse <= self.dt_free:
            raise ValueError("need 0 < dt_pulse <= dt_free")
        if self.window <= 0:
            raise ValueError("window must be positive")


def step_rk4(p: QdParams, pulse: PulseSpec, rho: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One classical RK4 step of the master equation (reference path).

    The production kernels integrate the vectorised equation; this direct
    4x4 form is kept as the independent cross-check.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    k1 = liouvillian_apply(p, pulse, t, rho)
    k2 = liouvillian_apply(p, pulse, t + dt / 2, rho + (dt / 2) * k1)
    k3 = liouvillian_apply(p, pulse, t + dt / 2, rho + (dt / 2) * k2)
    k4 = liouvillian_apply(p, pulse, t + dt, rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


class Trajectory:
    """Grid-sampled density-matrix trajectory; queries snap to the nearest node."""

    def __init__(self, times: np.ndarray, states_vec: np.ndarray):
        self.times = times
        self.states_vec = states_vec

    def __call__(self, t: float) -> np.ndarray:
        i = int(np.searchsorted(self.times, t))
        if i >= len(self.times):
            i = len(self.times) - 1
        elif i > 0 and abs(self.times[i - 1] - t) <= abs(self.times[i] - t):
            i -= 1
        return self.states_vec[i].reshape(4, 4).copy()

    @property
    def final(self) -> np.ndarray:
        return self.states_vec[-1].reshape(4, 4).copy()


def _segments(grid: TimeGrid, pulse: PulseSpec):
    t_lo = pulse.t0 - grid.window * pulse.fwhm
    t_hi = pulse.t0 + grid.window * pulse.fwhm
    cuts = sorted({grid.t_start, grid.t_end,
                   min(max(t_lo, grid.t_start), grid.t_end),
                   min(max(t_hi, grid.t_start), grid.t_end)})
    segs = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 0:
            continue
        mid = 0.5 * (a + b)
        dt = grid.dt_pulse if t_lo <= mid <= t_hi else grid.dt_free
        segs.append((a, b, dt))
    return segs


def evolve(p: QdParams, pulse: PulseSpec, rho0: np.ndarray, grid: TimeGrid):
    """RK4-evolve rho0 over the grid; returns (Trajectory, final state)."""
    segs = _segments(grid, pulse)
    total = sum(math.ceil((b - a) / dt - 1e-12) for a, b, dt in segs)
    if total > MAX_STEPS:
        raise StepOverflowError(f"grid implies {total} steps (limit {MAX_STEPS})")
    l0, l1 = liouvillian_split(p, pulse.alpha_h)
    y = np.asarray(rho0, dtype=complex).reshape(16)
    times = [np.array([grid.t_start])]
    states = [y[None, :].copy()]
    for a, b, dt in segs:
        n = max(1, math.ceil((b - a) / dt - 1e-12))
        dt_eff = (b - a) / n
        t_half = a + np.arange(2 * n + 1) * (dt_eff / 2.0)
        traj = kernels.rk4_run(l0, l1, envelope(pulse, t_half), dt_eff, y)
        times.append(a + np.arange(1, n + 1) * dt_eff)
        states.append(traj[1:])
        y = traj[-1]
    trajectory = Trajectory(np.concatenate(times), np.concatenate(states, axis=0))
    return trajectory, trajectory.final


@dataclass
class SuperPropagator:
    """Eigendecomposition of a constant Liouvillian (16x16).

    right holds right eigenvectors as columns, left = inv(right) so its rows
    are the matching left eigenvectors; diagonalizable records whether the
    reconstruction check passed and the eigenbasis is well conditioned.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    diagonalizable: bool
    condition: float
    matrix: np.ndarray

    @classmethod
    def from_liouvillian(cls, l0: np.ndarray) -> "SuperPropagator":
        lam, right = np.linalg.eig(l0)
        scale = max(1.0, float(np.max(np.abs(lam))))
        if np.max(lam.real) > 1e-10 * scale:
            raise ValueError("generator has growing modes; not a dissipative Liouvillian")
        cond = float(np.linalg.cond(right))
        ok = cond < COND_LIMIT
        if ok:
            left = np.linalg.inv(right)
            recon = np.max(np.abs((right * lam) @ left - l0))
            ok = bool(recon < 1e-9 * scale)
        else:
            left = np.full_like(right, np.nan)
        return cls(lam, right, left, ok, cond, np.array(l0))

    def zero_modes(self) -> np.ndarray:
        scale = max(1.0, float(np.max(np.abs(self.eigenvalues))))
        return np.abs(self.eigenvalues) < EIG_ZERO_TOL * scale

    def expm(self, tau: float) -> np.ndarray:
        if not self.diagonalizable:
            return scipy.linalg.expm(self.matrix * tau)
        return (self.right * np.exp(self.eigenvalues * tau)) @ self.left

    def integral_coeffs(self, tau_max: float) -> np.ndarray:
        """Per-mode values of integral_0^tau_max exp(lambda tau) dtau.

        Stationary modes get tau_max for a finite horizon and 0 for an
        infinite one; callers must verify they carry no weight before
        trusting the infinite-horizon value.
        """
        lam = self.eigenvalues
        zero = self.zero_modes()
        out = np.empty(16, dtype=complex)
        if math.isinf(tau_max):
            out[~zero] = -1.0 / lam[~zero]
            out[zero] = 0.0
        else:
            out[~zero] = (np.exp(lam[~zero] * tau_max) - 1.0) / lam[~zero]
            out[zero] = tau_max
        return out


@functools.lru_cache(maxsize=64)
def free_spectral(p: QdParams) -> SuperPropagator:
    """Cached eigendecomposition of the drive-off Liouvillian of p."""
    return SuperPropagator.from_liouvillian(free_liouvillian(p))


class FreeMap:
    """Exact free propagator over a fixed delay; metadata records the route."""

    def __init__(self, matrix: np.ndarray, tau: float, method: str):
        self.matrix = matrix
        self.tau = tau
        self.method = method  # 'spectral' or 'expm' (ill-conditioned fallback)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return (self.matrix @ np.asarray(rho, dtype=complex).reshape(16)).reshape(4, 4)


def free_propagator(p: QdParams, tau: float) -> FreeMap:
    """exp(L tau) for the drive-off generator; spectral route when possible."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    sp = free_spectral(p)
    if sp.diagonalizable:
        return FreeMap(sp.expm(tau), tau, "spectral")
    return FreeMap(scipy.linalg.expm(sp.matrix * tau), tau, "expm")


def observable_weights(sp: SuperPropagator, w: np.ndarray) -> np.ndarray:
    """Per-mode weights Tr[W R_m] of an observable W over the eigenbasis."""
    return np.asarray(w, dtype=complex).T.reshape(16) @ sp.right


def integrated_free_observable(p: QdParams, w: np.ndarray, chi0: np.ndarray,
                               tau_max: float = math.inf) -> complex:
    """integral_0^tau_max Tr[W exp(L tau) chi0] dtau, closed per eigenmode."""
    if tau_max < 0:
        raise ValueError("tau_max must be non-negative")
    sp = free_spectral(p)
    if not sp.diagonalizable:
        raise DivergentIntegralError(
            "free Liouvillian eigenbasis is ill conditioned; spectral integral unavailable")
    a = sp.left @ np.asarray(chi0, dtype=complex).reshape(16)
    wv = observable_weights(sp, w)
    if math.isinf(tau_max):
        zero = sp.zero_modes()
        bad = np.abs(wv * a)[zero]
        if bad.size and np.max(bad) > 1e-10:
            raise DivergentIntegralError(
                "stationary mode carries nonzero weight; infinite-horizon integral diverges")
    return complex(np.sum(wv * sp.integral_coeffs(tau_max) * a))
