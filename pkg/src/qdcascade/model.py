"""Four-level emitter model: parameters, pulse envelopes, Hamiltonian, dissipator.

Level scheme (basis order used everywhere):

    0  |G>    ground state
    1  |XH>   exciton with horizontal transition dipole (upper exciton)
    2  |XV>   exciton with vertical transition dipole (lower exciton)
    3  |B>    biexciton

The Hamiltonian is written in the frame rotating at the laser frequency, set
to the two-photon resonance (half the G-to-B transition energy), so both |G>
and |B> sit at zero energy and the excitons sit at the exciton-laser detuning
delta_xl, split by the fine-structure splitting fss.

Density matrices are plain (4, 4) complex numpy arrays.  The row-major
vectorisation vec(rho)[4*a + b] = rho[a, b] is used for superoperators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import HBAR, MEV_PER_UEV

G, XH, XV, B = 0, 1, 2, 3
BASIS_LABELS = ("G", "XH", "XV", "B")

# vec indices of the biexciton population and the exciton 2x2 block
IDX_BB = 4 * B + B
IDX_X_BLOCK = tuple(4 * a + b for a in (XH, XV) for b in (XH, XV))


@dataclass(frozen=True)
class QdParams:
    """Static emitter parameters (Table-style defaults for a GaAs dot).

    e_b      biexciton binding energy in meV
    fss      exciton fine-structure splitting in ueV; |XH> lies above |XV>
    gamma_x  radiative decay rate of each exciton in 1/ps
    gamma_b  radiative decay rate of the biexciton in 1/ps
    delta_xl exciton-laser detuning in meV; defaults to e_b / 2
    """

    e_b: float = 4.0
    fss: float = 0.0
    gamma_x: float = 0.005
    gamma_b: float = 0.010
    delta_xl: float | None = None

    def __post_init__(self):
        if self.e_b <= 0:
            raise ValueError("e_b must be positive")
        # gamma = 0 is admitted so decay can be switched off in calibration
        # studies; tomography requires strictly positive rates and checks that
        # separately.
        if self.gamma_x < 0 or self.gamma_b < 0:
            raise ValueError("decay rates must be non-negative")
        if self.fss < 0:
            raise ValueError("fss must be non-negative")
        if self.delta_xl is None:
            object.__setattr__(self, "delta_xl", self.e_b / 2.0)

    @property
    def fss_mev(self) -> float:
        return self.fss * MEV_PER_UEV


@dataclass(frozen=True)
class PulseSpec:
    """Drive definition.

    shape      'gaussian' or 'smoothed_rectangular'
    fwhm       FWHM of the amplitude envelope in ps
    area       pulse area (time integral of the envelope) in rad
    alpha_h    H component of the linear laser polarisation, in [0, 1];
               the V component is sqrt(1 - alpha_h**2)
    t0         envelope centre in ps; defaults to 3 * fwhm so the pulse
               window starts at t = 0
    edge_rise  tanh edge time constant of the flat-top shape in ps;
               defaults to 0.1 * fwhm
    """

    fwhm: float
    area: float
    shape: str = "gaussian"
    alpha_h: float = 1.0
    t0: float | None = None
    edge_rise: float | None = None

    def __post_init__(self):
        if self.shape not in ("gaussian", "smoothed_rectangular"):
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if self.fwhm <= 0:
            raise ValueError("fwhm must be positive")
        if self.area < 0:
            raise ValueError("area must be non-negative")
        if not 0.0 <= self.alpha_h <= 1.0:
            raise ValueError("alpha_h must lie in [0, 1]")
        if self.t0 is None:
            object.__setattr__(self, "t0", 3.0 * self.fwhm)
        if self.edge_rise is None:
            object.__setattr__(self, "edge_rise", 0.1 * self.fwhm)
        if self.edge_rise <= 0:
            raise ValueError("edge_rise must be positive")

    @property
    def alpha_v(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.alpha_h**2))


def envelope(pulse: PulseSpec, t):
    """Instantaneous Rabi amplitude Omega(t) in rad/ps.

    Gaussian: peak sqrt(4 ln2 / pi) * area / fwhm, amplitude FWHM = fwhm.
    Smoothed rectangular: flat top of width fwhm with tanh edges; for tanh
    edges the time integral equals amplitude * fwhm exactly, so the plateau
    amplitude is area / fwhm.  Both shapes integrate to `area`.
    """
    t = np.asarray(t, dtype=float)
    x = t - pulse.t0
    if pulse.shape == "gaussian":
        peak = math.sqrt(4.0 * math.log(2.0) / math.pi) * pulse.area / pulse.fwhm
        out = peak * np.exp(-4.0 * math.log(2.0) * (x / pulse.fwhm) ** 2)
    else:
        amp = pulse.area / pulse.fwhm
        a = pulse.edge_rise
        half = 0.5 * pulse.fwhm
        out = 0.5 * amp * (np.tanh((x + half) / a) - np.tanh((x - half) / a))
    return out if out.ndim else float(out)


def ground_state() -> np.ndarray:
    rho = np.zeros((4, 4), dtype=complex)
    rho[G, G] = 1.0
    return rho


def biexciton_state() -> np.ndarray:
    rho = np.zeros((4, 4), dtype=complex)
    rho[B, B] = 1.0
    return rho


def drive_pattern(alpha_h: float) -> np.ndarray:
    """Drive Hamiltonian per unit Rabi amplitude (meV per rad/ps).

    <XH|H|G> = <B|H|XH> = -(hbar/2) alpha_h and the V analogue, plus h.c.
    The same polarisation component couples both legs of the cascade.
    """
    alpha_v = math.sqrt(max(0.0, 1.0 - alpha_h**2))
    h = np.zeros((4, 4), dtype=complex)
    h[XH, G] = h[B, XH] = -0.5 * HBAR * alpha_h
    h[XV, G] = h[B, XV] = -0.5 * HBAR * alpha_v
    return h + h.conj().T


def bare_hamiltonian(p: QdParams) -> np.ndarray:
    """Rotating-frame level Hamiltonian (meV): diag(0, dxl + d/2, dxl - d/2, 0)."""
    d = p.fss_mev
    return np.diag([0.0, p.delta_xl + d / 2.0, p.delta_xl - d / 2.0, 0.0]).astype(complex)


def hamiltonian(p: QdParams, pulse: PulseSpec, t: float) -> np.ndarray:
    """Full rotating-frame Hamiltonian at time t (meV)."""
    return bare_hamiltonian(p) + envelope(pulse, t) * drive_pattern(pulse.alpha_h)


def collapse_channels(p: QdParams) -> list[tuple[np.ndarray, float]]:
    """Radiative jump operators with rates.

    Each biexciton-to-exciton arm carries gamma_b / 2 so the total biexciton
    population decay is gamma_b and the exciton coherence rho_{XH,XV} decays
    at gamma_x, consistent with the analytic initial-value concurrence.
    """
    ch = []
    for x in (XH, XV):
        op = np.zeros((4, 4), dtype=complex)
        op[x, B] = 1.0
        ch.append((op, p.gamma_b / 2.0))
    for x in (XH, XV):
        op = np.zeros((4, 4), dtype=complex)
        op[G, x] = 1.0
        ch.append((op, p.gamma_x))
    return ch


def lindblad_rhs(h: np.ndarray, channels, rho: np.ndarray) -> np.ndarray:
    """d(rho)/dt = -(i/hbar)[H, rho] + sum_c r_c (L rho L+ - {L+L, rho}/2)."""
    out = (-1j / HBAR) * (h @ rho - rho @ h)
    for op, rate in channels:
        ld = op.conj().T
        ldl = ld @ op
        out += rate * (op @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl))
    return out


def liouvillian_apply(p: QdParams, pulse: PulseSpec, t: float, rho: np.ndarray) -> np.ndarray:
    """Generator of the master equation applied to rho (result in 1/ps)."""
    return lindblad_rhs(hamiltonian(p, pulse, t), collapse_channels(p), rho)


def liouvillian_matrix(h: np.ndarray, channels) -> np.ndarray:
    """16x16 superoperator matrix of the generator in row-major vectorisation."""
    eye = np.eye(4, dtype=complex)
    m = (-1j / HBAR) * (np.kron(h, eye) - np.kron(eye, h.T))
    for op, rate in channels:
        ldl = op.conj().T @ op
        m += rate * (
            np.kron(op, op.conj())
            - 0.5 * (np.kron(ldl, eye) + np.kron(eye, ldl.T))
        )
    return m


def liouvillian_split(p: QdParams, alpha_h: float) -> tuple[np.ndarray, np.ndarray]:
    """Constant and drive parts of the superoperator.

    The full generator at time t is L0 + Omega(t) * L1; this affine structure
    is what the integration kernels rely on.
    """
    l0 = liouvillian_matrix(bare_hamiltonian(p), collapse_channels(p))
    l1 = liouvillian_matrix(drive_pattern(alpha_h), [])
    return l0, l1


def free_liouvillian(p: QdParams) -> np.ndarray:
    """Superoperator with the drive off (constant after the pulse)."""
    return liouvillian_matrix(bare_hamiltonian(p), collapse_channels(p))


def hermiticity_defect(rho: np.ndarray) -> float:
    return float(np.max(np.abs(rho - rho.conj().T)))


def min_eigenvalue(rho: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
