# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration kernels; contracts match _kernels_py exactly.

rk4_run does scalar 16x16 stage matvecs (wins big at batch size one, where
numpy call overhead dominates).  two_time_sweep advances the whole active
batch with one BLAS zgemm per step against the precomputed one-step RK4
propagator and fuses the trapezoid accumulation, avoiding the temporaries of
the numpy route.
"""
import numpy as np

cimport cython
from scipy.linalg.cython_blas cimport zgemm


cdef inline void _build_m(double complex[:, ::1] out,
                          double complex[:, ::1] l0,
                          double complex[:, ::1] l1,
                          double om) noexcept nogil:
    cdef int i, j
    for i in range(16):
        for j in range(16):
            out[i, j] = l0[i, j] + om * l1[i, j]


cdef inline void _matvec(double complex[:, ::1] m,
                         double complex* x,
                         double complex* out) noexcept nogil:
    cdef int i, j
    cdef double complex s
    for i in range(16):
        s = 0
        for j in range(16):
            s = s + m[i, j] * x[j]
        out[i] = s


def rk4_run(double complex[:, ::1] l0, double complex[:, ::1] l1,
            double[::1] omega_half, double dt, double complex[::1] y0):
    cdef Py_ssize_t n = (omega_half.shape[0] - 1) // 2
    traj_arr = np.empty((n + 1, 16), dtype=complex)
    cdef double complex[:, ::1] traj = traj_arr
    m_arr = np.empty((3, 16, 16), dtype=complex)
    cdef double complex[:, :, ::1] mm = m_arr
    cdef double complex y[16]
    cdef double complex k1[16]
    cdef double complex k2[16]
    cdef double complex k3[16]
    cdef double complex k4[16]
    cdef double complex tmp[16]
    cdef Py_ssize_t k, i
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0
    with nogil:
        for i in range(16):
            y[i] = y0[i]
            traj[0, i] = y[i]
        for k in range(n):
            _build_m(mm[0], l0, l1, omega_half[2 * k])
            _build_m(mm[1], l0, l1, omega_half[2 * k + 1])
            _build_m(mm[2], l0, l1, omega_half[2 * k + 2])
            _matvec(mm[0], y, k1)
            for i in range(16):
                tmp[i] = y[i] + h2 * k1[i]
            _matvec(mm[1], tmp, k2)
            for i in range(16):
                tmp[i] = y[i] + h2 * k2[i]
            _matvec(mm[1], tmp, k3)
            for i in range(16):
                tmp[i] = y[i] + dt * k3[i]
            _matvec(mm[2], tmp, k4)
            for i in range(16):
                y[i] = y[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                traj[k + 1, i] = y[i]
    return traj_arr


def two_time_sweep(double complex[:, :, ::1] step_mats,
                   double complex[:, ::1] chi0,
                   long[::1] start, long[::1] stop,
                   long[::1] comp_idx, double dt):
    cdef Py_ssize_t n = step_mats.shape[0]
    cdef Py_ssize_t nb = chi0.shape[0]
    cdef Py_ssize_t nc = comp_idx.shape[0]
    acc_arr = np.zeros((nb, nc), dtype=complex)
    chif_arr = np.empty((nb, 16), dtype=complex)
    za_arr = np.empty((nb, 16), dtype=complex)
    zb_arr = np.empty((nb, 16), dtype=complex)
    cdef double complex[:, ::1] acc = acc_arr
    cdef double complex[:, ::1] chif = chif_arr
    cdef double complex[:, ::1] za = za_arr
    cdef double complex[:, ::1] zb = zb_arr
    cdef double complex[:, ::1] cur, nxt, swp
    cdef Py_ssize_t lo = 0, hi = 0, k, b, c, i
    cdef int gm = 16, gn, gk = 16
    cdef double complex one = 1.0, zero = 0.0
    cdef double w, half = 0.5 * dt
    cur = za
    nxt = zb
    for k in range(n + 1):
        # activate elements seeded at sample k (start is non-decreasing)
        while hi < nb and start[hi] == k:
            for i in range(16):
                cur[hi, i] = chi0[hi, i]
            if stop[hi] > k:
                for c in range(nc):
                    acc[hi, c] = acc[hi, c] + half * cur[hi, comp_idx[c]]
            hi += 1
        # retire elements whose range ends at sample k (stop non-decreasing)
        while lo < hi and stop[lo] == k:
            for i in range(16):
                chif[lo, i] = cur[lo, i]
            lo += 1
        if k == n or hi == lo:
            continue
        gn = <int> (hi - lo)
        with nogil:
            # C-order (rows, 16) buffers are Fortran-order (16, rows), so
            # out_F = U @ z_F with op(A) = transpose of the F-view of U's
            # C-order buffer
            zgemm(b"T", b"N", &gm, &gn, &gk, &one,
                  &step_mats[k, 0, 0], &gm,
                  &cur[lo, 0], &gm, &zero, &nxt[lo, 0], &gm)
            for b in range(lo, hi):
                w = half if stop[b] == k + 1 else dt
                for c in range(nc):
                    acc[b, c] = acc[b, c] + w * nxt[b, comp_idx[c]]
        swp = cur
        cur = nxt
        nxt = swp
    return acc_arr, chif_arr
