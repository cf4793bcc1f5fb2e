# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled backend for the equations of motion and the RK4 loop.

Pairwise phase sums are reduced to O(N) per evaluation with prefix/suffix
sums over the position-sorted order (exp(i|z_j - z_i|) factorizes into
exp(+-i z_j) exp(-+i z_i) once the ordering is known).  The ordering array
persists across steps, so the insertion sort is O(N) for the nearly-sorted
states produced by small time steps.
"""

import numpy as np

from libc.math cimport fabs

cdef extern from "math.h" nogil:
    void sincos(double x, double *sin_out, double *cos_out)

ctypedef double complex zcomplex

COMPILED = True
NAME = "cython"

COORD_BOUND = 1.0e6
SATURATION = 0.5

cdef double _BOUND = 1.0e6
cdef double _SAT2 = 0.25  # squared |sigma| guard


cdef inline void _sort_order(Py_ssize_t n, double* z, Py_ssize_t* order) noexcept nogil:
    cdef Py_ssize_t i, j, key
    for i in range(1, n):
        key = order[i]
        j = i - 1
        while j >= 0 and z[order[j]] > z[key]:
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = key


cdef void _rhs(Py_ssize_t n, double* z, double* p, zcomplex* sig,
               double gl, double chi, double delta, double omega,
               double gamma_p, double omega_r,
               double* dz, double* dp, zcomplex* dsig,
               Py_ssize_t* order, zcomplex* u,
               zcomplex* lsum, zcomplex* rsum, zcomplex* tsum) noexcept nogil:
    cdef Py_ssize_t r, s, g0, g1, a
    cdef zcomplex pref, suf, gsum, incoming, signed_sum, full, sj
    cdef double re, im, sn, cs

    _sort_order(n, z, order)
    for r in range(n):
        a = order[r]
        sincos(z[a], &sn, &cs)
        u[a] = cs + 1j * sn

    # Forward: lsum = sum over strictly smaller z of sigma_i conj(u_i);
    # tsum = sum over equal-z partners (ties couple through the symmetric
    # exchange only: phase 1, zero chiral weight, sgn 0).
    pref = 0
    g0 = 0
    while g0 < n:
        g1 = g0 + 1
        while g1 < n and z[order[g1]] == z[order[g0]]:
            g1 += 1
        gsum = 0
        for s in range(g0, g1):
            gsum = gsum + sig[order[s]]
        for s in range(g0, g1):
            a = order[s]
            lsum[a] = pref
            tsum[a] = gsum - sig[a]
        for s in range(g0, g1):
            a = order[s]
            pref = pref + sig[a] * u[a].conjugate()
        g0 = g1

    # Backward: rsum = sum over strictly larger z of sigma_i u_i.
    suf = 0
    g1 = n
    while g1 > 0:
        g0 = g1 - 1
        while g0 > 0 and z[order[g0 - 1]] == z[order[g1 - 1]]:
            g0 -= 1
        for s in range(g0, g1):
            rsum[order[s]] = suf
        for s in range(g0, g1):
            a = order[s]
            suf = suf + sig[a] * u[a]
        g1 = g0

    for a in range(n):
        incoming = u[a] * lsum[a]                       # atoms left of a
        signed_sum = incoming - u[a].conjugate() * rsum[a]
        full = incoming + u[a].conjugate() * rsum[a] + tsum[a]
        sj = sig[a]
        dsig[a] = (1j * delta - 0.5) * sj + 1j * omega - gl * full - chi * incoming
        re = sj.real
        im = sj.imag
        dp[a] = (-chi * (re * re + im * im)
                 - 2.0 * chi * (sj.conjugate() * incoming).real
                 - 2.0 * gl * (sj.conjugate() * signed_sum).real
                 - gamma_p * p[a])
        dz[a] = 2.0 * omega_r * p[a]


def rhs(z, p, sigma, double gl, double chi, double delta, double omega,
        double gamma_p, double omega_r):
    """Single derivative evaluation; returns (dz, dp, dsigma)."""
    cdef double[::1] zv = np.array(z, dtype=np.float64)
    cdef double[::1] pv = np.array(p, dtype=np.float64)
    cdef zcomplex[::1] sv = np.array(sigma, dtype=np.complex128)
    cdef Py_ssize_t n = zv.shape[0]

    dz_arr = np.empty(n, dtype=np.float64)
    dp_arr = np.empty(n, dtype=np.float64)
    ds_arr = np.empty(n, dtype=np.complex128)
    cdef double[::1] dz = dz_arr
    cdef double[::1] dp = dp_arr
    cdef zcomplex[::1] ds = ds_arr

    cdef Py_ssize_t[::1] order = np.arange(n, dtype=np.intp)
    work_arr = np.empty((4, n), dtype=np.complex128)
    cdef zcomplex[:, ::1] work = work_arr

    if n > 0:
        with nogil:
            _rhs(n, &zv[0], &pv[0], &sv[0], gl, chi, delta, omega, gamma_p,
                 omega_r, &dz[0], &dp[0], &ds[0], &order[0],
                 &work[0, 0], &work[1, 0], &work[2, 0], &work[3, 0])
    return dz_arr, dp_arr, ds_arr


def integrate_rk4(z0, p0, s0, double gl, double chi, double delta,
                  double omega, double gamma_p, double omega_r,
                  double dt, long n_steps, long stride,
                  double[:, ::1] z_out, double[:, ::1] p_out,
                  zcomplex[:, ::1] s_out):
    """Fixed-step classical RK4; samples every ``stride`` steps.

    Row 0 of the output arrays receives the initial state.  Returns
    (status, steps_done, saturated); status 1 flags a coordinate leaving
    [-1e6, 1e6] at step ``steps_done``.
    """
    cdef Py_ssize_t n = len(z0)
    state_z = np.array(z0, dtype=np.float64)
    state_p = np.array(p0, dtype=np.float64)
    state_s = np.array(s0, dtype=np.complex128)
    cdef double[::1] z = state_z
    cdef double[::1] p = state_p
    cdef zcomplex[::1] sig = state_s

    cdef double[::1] zt = np.empty(n, dtype=np.float64)
    cdef double[::1] pt = np.empty(n, dtype=np.float64)
    cdef zcomplex[::1] st = np.empty(n, dtype=np.complex128)
    cdef double[::1] kz = np.empty(n, dtype=np.float64)
    cdef double[::1] kp = np.empty(n, dtype=np.float64)
    cdef zcomplex[::1] ks = np.empty(n, dtype=np.complex128)
    cdef double[::1] az = np.empty(n, dtype=np.float64)
    cdef double[::1] ap = np.empty(n, dtype=np.float64)
    cdef zcomplex[::1] asig = np.empty(n, dtype=np.complex128)

    cdef Py_ssize_t[::1] order = np.arange(n, dtype=np.intp)
    cdef zcomplex[:, ::1] work = np.empty((4, n), dtype=np.complex128)

    cdef Py_ssize_t i, row
    cdef long step, steps_done
    cdef int status = 0, saturated = 0
    cdef double half = 0.5 * dt, sixth = dt / 6.0
    cdef double m2

    for i in range(n):
        m2 = sig[i].real * sig[i].real + sig[i].imag * sig[i].imag
        if m2 > _SAT2:
            saturated = 1
        z_out[0, i] = z[i]
        p_out[0, i] = p[i]
        s_out[0, i] = sig[i]

    row = 1
    steps_done = 0
    with nogil:
        for step in range(1, n_steps + 1):
            _rhs(n, &z[0], &p[0], &sig[0], gl, chi, delta, omega, gamma_p,
                 omega_r, &kz[0], &kp[0], &ks[0], &order[0],
                 &work[0, 0], &work[1, 0], &work[2, 0], &work[3, 0])
            for i in range(n):
                az[i] = kz[i]
                ap[i] = kp[i]
                asig[i] = ks[i]
                zt[i] = z[i] + half * kz[i]
                pt[i] = p[i] + half * kp[i]
                st[i] = sig[i] + half * ks[i]
            _rhs(n, &zt[0], &pt[0], &st[0], gl, chi, delta, omega, gamma_p,
                 omega_r, &kz[0], &kp[0], &ks[0], &order[0],
                 &work[0, 0], &work[1, 0], &work[2, 0], &work[3, 0])
            for i in range(n):
                az[i] = az[i] + 2.0 * kz[i]
                ap[i] = ap[i] + 2.0 * kp[i]
                asig[i] = asig[i] + 2.0 * ks[i]
                zt[i] = z[i] + half * kz[i]
                pt[i] = p[i] + half * kp[i]
                st[i] = sig[i] + half * ks[i]
            _rhs(n, &zt[0], &pt[0], &st[0], gl, chi, delta, omega, gamma_p,
                 omega_r, &kz[0], &kp[0], &ks[0], &order[0],
                 &work[0, 0], &work[1, 0], &work[2, 0], &work[3, 0])
            for i in range(n):
                az[i] = az[i] + 2.0 * kz[i]
                ap[i] = ap[i] + 2.0 * kp[i]
                asig[i] = asig[i] + 2.0 * ks[i]
                zt[i] = z[i] + dt * kz[i]
                pt[i] = p[i] + dt * kp[i]
                st[i] = sig[i] + dt * ks[i]
            _rhs(n, &zt[0], &pt[0], &st[0], gl, chi, delta, omega, gamma_p,
                 omega_r, &kz[0], &kp[0], &ks[0], &order[0],
                 &work[0, 0], &work[1, 0], &work[2, 0], &work[3, 0])
            for i in range(n):
                z[i] = z[i] + sixth * (az[i] + kz[i])
                p[i] = p[i] + sixth * (ap[i] + kp[i])
                sig[i] = sig[i] + sixth * (asig[i] + ks[i])

            for i in range(n):
                if not (fabs(z[i]) <= _BOUND and fabs(p[i]) <= _BOUND):
                    status = 1
                    break
                m2 = sig[i].real * sig[i].real + sig[i].imag * sig[i].imag
                if not (m2 <= _BOUND * _BOUND):
                    status = 1
                    break
                if m2 > _SAT2:
                    saturated = 1
            steps_done = step
            if status != 0:
                break
            if step % stride == 0:
                for i in range(n):
                    z_out[row, i] = z[i]
                    p_out[row, i] = p[i]
                    s_out[row, i] = sig[i]
                row += 1

    return status, steps_done, saturated
