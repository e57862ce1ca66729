"""Kernel backend selection: compiled Cython core with a numpy fallback.

Set QDCASCADE_PURE_PYTHON=1 to force the numpy implementation (used by the
benchmark and the backend-equivalence tests).
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

if os.environ.get("QDCASCADE_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

# step-matrix construction is cheap per step and stays in numpy
rk4_step_matrices = _kernels_py.rk4_step_matrices


def backend_name() -> str:
    return "compiled" if _impl is not _kernels_py else "python"


def _c16(a):
    return np.ascontiguousarray(a, dtype=complex)


def rk4_run(l0, l1, omega_half, dt, y0):
    omega_half = np.ascontiguousarray(omega_half, dtype=float)
    if len(omega_half) % 2 != 1:
        raise ValueError("omega_half needs 2n+1 samples")
    if dt <= 0:
        raise ValueError("dt must be positive")
    return _impl.rk4_run(_c16(l0), _c16(l1), omega_half, float(dt), _c16(y0))


def two_time_sweep(step_mats, chi0, start, stop, comp_idx, dt):
    step_mats = _c16(step_mats)
    chi0 = _c16(chi0)
    start = np.ascontiguousarray(start, dtype=np.int64)
    stop = np.ascontiguousarray(stop, dtype=np.int64)
    comp_idx = np.ascontiguousarray(comp_idx, dtype=np.int64)
    n = step_mats.shape[0]
    if np.any(start[1:] < start[:-1]) or np.any(stop[1:] < stop[:-1]):
        raise ValueError("start and stop must be non-decreasing")
    if np.any(stop < start) or np.any(start < 0) or np.any(stop > n):
        raise ValueError("element activity range outside the sweep grid")
    return _impl.two_time_sweep(step_mats, chi0, start, stop, comp_idx, float(dt))
