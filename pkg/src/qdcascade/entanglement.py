"""Scalar entanglement measures on two-photon polarisation density matrices.

Matrices are 4x4, Hermitian, unit trace, in the basis (HH, HV, VH, VV).
"""
from __future__ import annotations

import numpy as np

_SY_SY = np.zeros((4, 4))  # sigma_y (x) sigma_y, real antidiagonal form
_SY_SY[0, 3] = _SY_SY[3, 0] = -1.0
_SY_SY[1, 2] = _SY_SY[2, 1] = 1.0

PHI_PLUS = np.zeros(4, dtype=complex)
PHI_PLUS[0] = PHI_PLUS[3] = 1.0 / np.sqrt(2.0)


def _as_matrix(m) -> np.ndarray:
    entries = getattr(m, "entries", m)
    return np.asarray(entries, dtype=complex)


def _check_state(rho: np.ndarray, tol: float = 1e-7):
    if rho.shape != (4, 4):
        raise ValueError("expected a 4x4 matrix")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("matrix is not Hermitian within tolerance")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValueError("matrix is not normalized to unit trace")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -1e-7:
        raise ValueError("matrix is not positive semidefinite within tolerance")


def concurrence(m) -> float:
    """Wootters concurrence.

    Uses the Hermitian similarity form sqrt(rho) (yy) rho* (yy) sqrt(rho):
    it has the same spectrum as rho (yy) rho* (yy) but eigvalsh guarantees a
    real non-negative spectrum, which keeps the result stable near C = 0.
    """
    rho = _as_matrix(m)
    _check_state(rho)
    rho = 0.5 * (rho + rho.conj().T)
    vals, vecs = np.linalg.eigh(rho)
    sqrt_rho = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T
    core = sqrt_rho @ _SY_SY @ rho.conj() @ _SY_SY @ sqrt_rho
    lam = np.sqrt(np.clip(np.linalg.eigvalsh(core), 0.0, None))[::-1]
    c = lam[0] - lam[1] - lam[2] - lam[3]
    if c > 1.0 + 1e-9:
        raise ValueError(f"concurrence {c} exceeds 1 beyond tolerance")
    return float(min(max(c, 0.0), 1.0))


def concurrence_x_oracle(m, leak_tol: float = 1e-10) -> float:
    """Closed form for X-shaped matrices (diagonal plus antidiagonal corners).

    2 max(0, |rho_14| - sqrt(rho_22 rho_33), |rho_23| - sqrt(rho_11 rho_44)).
    Used as the independent cross-check of the Wootters route.
    """
    rho = _as_matrix(m)
    off = rho.copy()
    for i, j in ((0, 0), (1, 1), (2, 2), (3, 3), (0, 3), (3, 0), (1, 2), (2, 1)):
        off[i, j] = 0.0
    if np.max(np.abs(off)) > leak_tol:
        raise ValueError("matrix is not X-shaped within tolerance")
    a = abs(rho[0, 3]) - np.sqrt(max(0.0, rho[1, 1].real * rho[2, 2].real))
    b = abs(rho[1, 2]) - np.sqrt(max(0.0, rho[0, 0].real * rho[3, 3].real))
    return float(2.0 * max(0.0, a, b))


def x_leakage(m) -> float:
    """Largest matrix element outside the X pattern (diagnostic)."""
    rho = _as_matrix(m)
    off = rho.copy()
    for i, j in ((0, 0), (1, 1), (2, 2), (3, 3), (0, 3), (3, 0), (1, 2), (2, 1)):
        off[i, j] = 0.0
    return float(np.max(np.abs(off)))


def fidelity_phi_plus(m) -> float:
    """Overlap with the Bell state (|HH> + |VV>)/sqrt(2).

    Equals (rho_HHHH + rho_VVVV)/2 + Re rho_HHVV.
    """
    rho = _as_matrix(m)
    _check_state(rho)
    return float(np.real(PHI_PLUS.conj() @ rho @ PHI_PLUS))
