"""Time-integrated two-photon density matrix from two-time correlators.

The matrix element convention is

    rho[(j,k), (l,m)] = int dt int dtau
        Tr[ P+_{X,k} P_{X,m} Lambda_{t -> t+tau}( P_{B,l} rho(t) P+_{B,j} ) ]

with P_{B,j} = |X_j><B| (biexciton photon of polarisation j) and
P_{X,k} = |G><X_k| (exciton photon).  Row index = (j, k), first letter the
biexciton photon; basis order HH, HV, VH, VV.

Because P_{B,l} rho P+_{B,j} = rho_BB |X_l><X_j|, every conditional matrix is
the biexciton population times one of three unit dyads (HH, VV, HV; VH follows
by conjugation).  Those dyads are propagated over the delay time tau with the
same generator as the state itself (quantum regression).  Inside the pulse
window the propagation is numerical on the RK4 grid; once t + tau leaves the
window the generator is constant and the remaining tau integral is closed per
eigenmode of the free Liouvillian.  The t integral past the window closes the
same way (double resolvent), so only the window costs numerics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .model import (
    IDX_BB, IDX_X_BLOCK, XH, XV,
    QdParams, PulseSpec, biexciton_state, envelope, ground_state, liouvillian_split,
)
from .propagator import SuperPropagator, free_spectral

# seed dyads |X_l><X_j| for (l, j) = (H,H), (V,V), (H,V); photon H = 0, V = 1
_SEED_LJ = ((0, 0), (1, 1), (0, 1))
_PHOTON_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))  # basis order HH, HV, VH, VV
_COMP_IDX = np.array(IDX_X_BLOCK, dtype=np.int64)  # chi components <X_m| chi |X_k>, c = 2m + k

# relative biexciton population below which a quadrature node cannot contribute
_BB_CUT = 1e-13


class ConvergenceError(RuntimeError):
    """The integration horizons do not cover the emission dynamics."""


@dataclass
class TwoPhotonMatrix:
    """4x4 two-photon polarisation matrix in the (HH, HV, VH, VV) basis."""

    entries: np.ndarray
    normalized: bool = False

    def validate(self, tol: float = 1e-8):
        m = self.entries
        scale = max(abs(np.trace(m).real), 1e-300)
        if np.max(np.abs(m - m.conj().T)) > 1e-10 * max(scale, 1.0):
            raise ValueError("two-photon matrix is not Hermitian within tolerance")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() < -tol * scale:
            raise ValueError("two-photon matrix is not positive semidefinite within tolerance")
        if self.normalized and abs(np.trace(m).real - 1.0) > 1e-10:
            raise ValueError("normalized matrix must have unit trace")

    def normalize(self) -> "TwoPhotonMatrix":
        tr = np.trace(self.entries).real
        if tr <= 0:
            raise ValueError("cannot normalize a matrix with non-positive trace")
        return TwoPhotonMatrix(self.entries / tr, normalized=True)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)


@dataclass(frozen=True)
class TomographyConfig:
    """Integration horizons and method selection.

    t_max    real-time horizon in ps; None picks pulse.t0 + 3 fwhm + 800 for
             the driven problem and infinity for the initial-value problem
    tau_max  delay-time horizon in ps (math.inf = no delay filtering)
    method   'spectral_fast' closes post-window integrals per eigenmode;
             'brute_force' steps them out numerically for cross-validation
    verify_t_max  in spectral mode, rebuild the closed-form tail with twice
             the horizon and flag normalized changes above 1e-4
    """

    t_max: float | None = None
    tau_max: float = math.inf
    dt_pulse: float = 0.02
    dt_free: float = 0.5
    window: float = 3.0
    method: str = "spectral_fast"
    verify_t_max: bool = True

    def __post_init__(self):
        if self.method not in ("spectral_fast", "brute_force"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0 < self.dt_pulse <= self.dt_free:
            raise ValueError("need 0 < dt_pulse <= dt_free")
        if self.tau_max < 0:
            raise ValueError("tau_max must be non-negative")


def _seed_vecs() -> np.ndarray:
    seeds = np.zeros((3, 16), dtype=complex)
    for s, (l, j) in enumerate(_SEED_LJ):
        seeds[s, 4 * (1 + l) + (1 + j)] = 1.0  # |X_l><X_j|
    return seeds


def _matrix_from_functionals(u: np.ndarray) -> np.ndarray:
    """Assemble the 4x4 matrix from per-seed, per-component functional values.

    u[s, c]: seed s in _SEED_LJ order, component c = 2m + k for the observable
    <X_m| . |X_k>.  The (l, j) = (V, H) seed follows from chi_VH = chi_HV+.
    """
    rho = np.empty((4, 4), dtype=complex)
    for r, (j, k) in enumerate(_PHOTON_PAIRS):
        for c, (l, m) in enumerate(_PHOTON_PAIRS):
            if (l, j) == (0, 0):
                rho[r, c] = u[0, 2 * m + k]
            elif (l, j) == (1, 1):
                rho[r, c] = u[1, 2 * m + k]
            elif (l, j) == (0, 1):
                rho[r, c] = u[2, 2 * m + k]
            else:
                rho[r, c] = np.conj(u[2, 2 * k + m])
    return rho


def _mode_weights(sp: SuperPropagator):
    """Observable weights right[comp, m] for the four exciton-block components."""
    return sp.right[_COMP_IDX, :]  # (4, 16)


def _tau_coeffs(sp: SuperPropagator, rem, guard_products=None) -> np.ndarray:
    """Per-mode integral coefficients for remaining tau windows.

    rem: scalar or (B,) array of remaining horizons (may be inf).
    guard_products: (..., 16) amplitudes whose stationary-mode part must vanish
    when the horizon is infinite.
    """
    lam = sp.eigenvalues
    zero = sp.zero_modes()
    rem = np.atleast_1d(np.asarray(rem, dtype=float))
    out = np.empty((rem.size, 16), dtype=complex)
    inf_rows = np.isinf(rem)
    if np.any(inf_rows):
        if guard_products is not None:
            bad = np.abs(np.asarray(guard_products).reshape(-1, 16)[:, zero])
            if bad.size and np.max(bad) > 1e-10:
                raise ConvergenceError(
                    "stationary mode carries weight in an infinite-horizon integral")
        row = np.zeros(16, dtype=complex)
        row[~zero] = -1.0 / lam[~zero]
        out[inf_rows] = row
    fin = ~inf_rows
    if np.any(fin):
        r = rem[fin, None]
        with np.errstate(invalid="ignore"):
            vals = (np.exp(lam[None, :] * r) - 1.0) / lam[None, :]
        vals[:, zero] = r
        out[fin] = vals
    return out


def _unit_tau_functionals(sp: SuperPropagator, tau_max: float) -> np.ndarray:
    """K[s, c] = int_0^tau_max <comp_c| exp(L tau) |seed_s> dtau (free decay)."""
    seeds = _seed_vecs()
    a = seeds @ sp.left.T                      # (3, 16) eigen-coefficients
    w = _mode_weights(sp)                      # (4, 16)
    f = _tau_coeffs(sp, tau_max, guard_products=a[:, None, :] * w[None, :, :])
    return np.einsum("sm,cm,m->sc", a, w, f[0])


def _window_grid(pulse: PulseSpec, cfg: TomographyConfig):
    t_lo = pulse.t0 - cfg.window * pulse.fwhm
    t_hi = pulse.t0 + cfg.window * pulse.fwhm
    if t_lo < -1e-9:
        raise ValueError(
            "pulse window starts before t = 0; shift t0 to at least window * fwhm")
    t_lo = max(t_lo, 0.0)
    peak = float(np.max(np.abs(envelope(pulse, np.linspace(t_lo, t_hi, 257)))))
    edge = max(abs(float(envelope(pulse, t_lo))), abs(float(envelope(pulse, t_hi))))
    if peak > 0 and edge > 1e-8 * peak:
        raise ValueError(
            "drive is not negligible at the pulse-window edges; increase window")
    n = max(1, math.ceil((t_hi - t_lo) / cfg.dt_pulse - 1e-12))
    dt = (t_hi - t_lo) / n
    return t_lo, t_hi, n, dt


def _resolve_t_max(pulse: PulseSpec, p: QdParams, cfg: TomographyConfig) -> float:
    if cfg.t_max is not None:
        t_max = cfg.t_max
    else:
        t_max = pulse.t0 + 3.0 * pulse.fwhm + 800.0
    s_hi = pulse.t0 + cfg.window * pulse.fwhm
    if not math.isinf(t_max) and t_max < s_hi + 8.0 / p.gamma_b - 1e-9:
        raise ValueError("t_max must cover the pulse window plus at least 8 / gamma_b")
    return t_max


def _check_rates(p: QdParams):
    if p.gamma_x <= 0 or p.gamma_b <= 0:
        raise ValueError("tomography requires strictly positive decay rates")


def _raw_checks(raw: np.ndarray):
    scale = max(abs(np.trace(raw).real), 1e-300)
    herm = np.max(np.abs(raw - raw.conj().T))
    if herm > 1e-10 * max(scale, 1.0):
        raise RuntimeError(f"raw two-photon matrix lost Hermitian symmetry ({herm:.2e})")


def two_photon_density_matrix(p: QdParams, pulse: PulseSpec,
                              cfg: TomographyConfig | None = None) -> TwoPhotonMatrix:
    """Normalized two-photon density matrix for the driven (TPE) problem."""
    cfg = cfg or TomographyConfig()
    _check_rates(p)
    t_max = _resolve_t_max(pulse, p, cfg)
    t_lo, t_hi, n, dt = _window_grid(pulse, cfg)

    l0, l1 = liouvillian_split(p, pulse.alpha_h)
    t_half = t_lo + np.arange(2 * n + 1) * (dt / 2.0)
    omega = envelope(pulse, t_half)
    traj = kernels.rk4_run(l0, l1, omega, dt, ground_state().reshape(16))
    bb = traj[:, IDX_BB].real
    bb_max = float(np.max(bb))
    if bb_max <= 0:
        raise ValueError("biexciton is never occupied; two-photon matrix vanishes")

    # nodes with negligible biexciton population cannot contribute to any
    # element (every term is weighted by bb); skip them
    active = np.nonzero(bb > _BB_CUT * bb_max)[0]
    i0 = int(active[0])
    nodes = np.arange(i0, n + 1)
    cap = None if math.isinf(cfg.tau_max) else int(round(cfg.tau_max / dt))

    seeds = _seed_vecs()
    nb = nodes.size * 3
    chi0 = np.tile(seeds, (nodes.size, 1))
    start = np.repeat(nodes, 3)
    stop = np.full(nb, n, dtype=np.int64) if cap is None else np.minimum(start + cap, n)

    step_mats = kernels.rk4_step_matrices(l0, l1, omega, dt)
    acc, chif = kernels.two_time_sweep(step_mats, chi0, start, stop, _COMP_IDX, dt)

    sp = free_spectral(p)
    if cfg.method == "brute_force":
        raw = _assemble_brute(p, cfg, t_max, t_hi, dt, nodes, bb, traj[-1],
                              acc, chif, start, stop, n, l0, l1)
        _raw_checks(raw)
        return TwoPhotonMatrix(raw, normalized=False).normalize()

    raw = _assemble_spectral(sp, t_max, t_hi, dt, nodes, bb, traj[-1],
                             acc, chif, start, stop, n, cfg.tau_max)
    _raw_checks(raw)
    if cfg.verify_t_max and not math.isinf(t_max):
        raw2 = _assemble_spectral(sp, 2 * t_max, t_hi, dt, nodes, bb, traj[-1],
                                  acc, chif, start, stop, n, cfg.tau_max)
        m1 = raw / np.trace(raw).real
        m2 = raw2 / np.trace(raw2).real
        if np.max(np.abs(m1 - m2)) > 1e-4:
            raise ConvergenceError(
                "doubling t_max changes the normalized matrix by more than 1e-4")
    return TwoPhotonMatrix(raw, normalized=False).normalize()


def _assemble_spectral(sp, t_max, t_hi, dt, nodes, bb, rho_end_vec,
                       acc, chif, start, stop, n, tau_max) -> np.ndarray:
    """Window trapezoid plus eigenmode-closed tau and t tails."""
    w_modes = _mode_weights(sp)                       # (4, 16)
    a = chif @ sp.left.T                              # (B, 16)
    # remaining tau horizon per element: zero if the element retired at its
    # delay cap inside the window, tau_max - tau_covered otherwise
    covered = (stop - start) * dt
    if math.isinf(tau_max):
        rem = np.where(stop == n, math.inf, 0.0)
    else:
        rem = np.where(stop == n, np.maximum(tau_max - covered, 0.0), 0.0)
    guard = np.abs(a)[:, None, :] * np.abs(w_modes)[None, :, :]
    f = _tau_coeffs(sp, rem, guard_products=guard)    # (B, 16)
    tails = np.einsum("bm,cm->bc", a * f, w_modes)    # (B, 4)

    per_node = (acc + tails).reshape(nodes.size, 3, 4)
    tw = np.full(nodes.size, dt)
    tw[0] = tw[-1] = 0.5 * dt
    in_part = np.einsum("i,isc->sc", tw * bb[nodes], per_node)

    # post-window t integral: rho_BB(t_hi + u) expanded over eigenmodes
    a_end = sp.left @ rho_end_vec
    horizon = math.inf if math.isinf(t_max) else max(t_max - t_hi, 0.0)
    f_t = _tau_coeffs(sp, horizon, guard_products=a_end * sp.right[IDX_BB, :])[0]
    i_bb = np.real(np.sum(a_end * sp.right[IDX_BB, :] * f_t))
    tail_part = i_bb * _unit_tau_functionals(sp, tau_max)

    return _matrix_from_functionals(in_part + tail_part)


def _assemble_brute(p, cfg, t_max, t_hi, dt, nodes, bb, rho_end_vec,
                    acc_a, chif_a, start_a, stop_a, n, l0, l1) -> np.ndarray:
    """Stepping cross-validation path: tau and t tails integrated numerically.

    Horizons: tau out to min(tau_max, 12 / gamma_x), t out to t_max, both on
    the coarse step.  Truncation is far below the 1e-4 agreement target.
    """
    if math.isinf(t_max):
        raise ValueError("brute_force needs a finite t_max")
    tau_h = min(cfg.tau_max, 12.0 / p.gamma_x)
    dtf = cfg.dt_free
    n_t = max(1, int(round((t_max - t_hi) / dtf)))
    cap_b = max(1, int(round(tau_h / dtf)))
    n_sweep = n_t + cap_b

    # forward state past the window on the coarse grid (drive is off)
    zeros = np.zeros(2 * n_t + 1)
    traj_tail = kernels.rk4_run(l0, l1, zeros, dtf, rho_end_vec)
    bb_tail = traj_tail[:, IDX_BB].real

    # resume window survivors: remaining tau budget on the coarse grid
    covered = (stop_a - start_a) * dt
    alive = stop_a == n
    rem_steps = np.zeros(start_a.size, dtype=np.int64)
    rem_steps[alive] = np.maximum(
        np.round((np.minimum(tau_h, cfg.tau_max) - covered[alive]) / dtf).astype(np.int64), 0)
    chi0_res = chif_a[alive]
    start_res = np.zeros(int(np.sum(alive)), dtype=np.int64)
    stop_res = rem_steps[alive]

    # fresh nodes on the coarse t grid (node j sits at t_hi + j dtf)
    new_nodes = np.arange(1, n_t + 1)
    seeds = _seed_vecs()
    chi0_new = np.tile(seeds, (new_nodes.size, 1))
    start_new = np.repeat(new_nodes, 3)
    stop_new = np.minimum(start_new + cap_b, n_sweep)

    chi0 = np.concatenate([chi0_res, chi0_new])
    start = np.concatenate([start_res, start_new])
    stop = np.concatenate([stop_res, stop_new])

    omega_b = np.zeros(2 * n_sweep + 1)
    step_mats = kernels.rk4_step_matrices(l0, l1, omega_b, dtf)
    acc_b, _ = kernels.two_time_sweep(step_mats, chi0, start, stop, _COMP_IDX, dtf)

    # per-node functionals: window nodes get their window part plus the
    # resumed coarse part; coarse nodes are purely coarse
    per_node_a = acc_a.copy()
    per_node_a[alive] += acc_b[: chi0_res.shape[0]]
    per_node_a = per_node_a.reshape(nodes.size, 3, 4)
    per_node_b = acc_b[chi0_res.shape[0]:].reshape(new_nodes.size, 3, 4)

    tw_a = np.full(nodes.size, dt)
    tw_a[0] = 0.5 * dt
    tw_a[-1] = 0.5 * (dt + dtf)  # junction node belongs to both t segments
    tw_b = np.full(new_nodes.size, dtf)
    tw_b[-1] = 0.5 * dtf

    u = np.einsum("i,isc->sc", tw_a * bb[nodes], per_node_a)
    u += np.einsum("i,isc->sc", tw_b * bb_tail[new_nodes], per_node_b)
    return _matrix_from_functionals(u)


def initial_value_density_matrix(p: QdParams,
                                 cfg: TomographyConfig | None = None) -> TwoPhotonMatrix:
    """Matrix for a biexciton prepared at t = 0 with the drive off.

    Both integrals close on the spectral path: the t integral of rho_BB(t)
    times the unit-seed tau functionals.
    """
    cfg = cfg or TomographyConfig()
    _check_rates(p)
    sp = free_spectral(p)
    t_max = math.inf if cfg.t_max is None else cfg.t_max
    a0 = sp.left @ biexciton_state().reshape(16)
    f_t = _tau_coeffs(sp, t_max, guard_products=a0 * sp.right[IDX_BB, :])[0]
    i_bb = np.real(np.sum(a0 * sp.right[IDX_BB, :] * f_t))
    raw = _matrix_from_functionals(i_bb * _unit_tau_functionals(sp, cfg.tau_max))
    _raw_checks(raw)
    return TwoPhotonMatrix(raw, normalized=False).normalize()


def pair_yield(p: QdParams, pulse: PulseSpec | None,
               cfg: TomographyConfig | None = None) -> tuple[float, float]:
    """(gamma_b int <B> dt, gamma_x int <XH> + <XV> dt) over [0, t_max].

    pulse = None evaluates the initial-value problem (prepared biexciton).
    """
    cfg = cfg or TomographyConfig()
    _check_rates(p)
    sp = free_spectral(p)
    w_b = sp.right[IDX_BB, :]
    w_x = sp.right[4 * XH + XH, :] + sp.right[4 * XV + XV, :]

    if pulse is None:
        t_max = math.inf if cfg.t_max is None else cfg.t_max
        a0 = sp.left @ biexciton_state().reshape(16)
        f_t = _tau_coeffs(sp, t_max, guard_products=np.stack([a0 * w_b, a0 * w_x]))[0]
        n_b = p.gamma_b * np.real(np.sum(a0 * w_b * f_t))
        n_x = p.gamma_x * np.real(np.sum(a0 * w_x * f_t))
        return float(n_b), float(n_x)

    t_max = _resolve_t_max(pulse, p, cfg)
    t_lo, t_hi, n, dt = _window_grid(pulse, cfg)
    l0, l1 = liouvillian_split(p, pulse.alpha_h)
    t_half = t_lo + np.arange(2 * n + 1) * (dt / 2.0)
    traj = kernels.rk4_run(l0, l1, envelope(pulse, t_half), dt, ground_state().reshape(16))

    def trapz(v):
        return float(dt * (np.sum(v) - 0.5 * (v[0] + v[-1])))

    int_b = trapz(traj[:, IDX_BB].real)
    int_x = trapz(traj[:, 4 * XH + XH].real + traj[:, 4 * XV + XV].real)

    a_end = sp.left @ traj[-1]
    horizon = math.inf if math.isinf(t_max) else max(t_max - t_hi, 0.0)
    f_t = _tau_coeffs(sp, horizon, guard_products=np.stack([a_end * w_b, a_end * w_x]))[0]
    int_b += np.real(np.sum(a_end * w_b * f_t))
    int_x += np.real(np.sum(a_end * w_x * f_t))
    return float(p.gamma_b * int_b), float(p.gamma_x * int_x)
