"""Pure-numpy backend for the equations of motion and the RK4 loop.

Reference implementation: O(N^2) pairwise phase matrices per evaluation and
a Python-level step loop.  Semantics match the compiled backend; see
``benchmarks/bench_kernels.py`` for the speed gap.
"""

import numpy as np

COMPILED = False
NAME = "python"

COORD_BOUND = 1.0e6
SATURATION = 0.5


def rhs(z, p, sigma, gl, chi, delta, omega, gamma_p, omega_r):
    """Time derivatives (dz, dp, dsigma) of the coupled atom-field system.

    Phases enter through exp(i k |z_j - z_i|); atoms strictly to the left
    feed the chiral terms (positional ordering, ties carry zero weight and
    sgn(0) = 0).
    """
    z = np.asarray(z, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.complex128)

    seps = z[:, None] - z[None, :]  # row j, column i: z_j - z_i
    u = np.exp(1j * np.abs(seps))
    np.fill_diagonal(u, 0.0)
    left_of = seps > 0.0
    signs = np.sign(seps)

    full = u @ sigma                 # sum over i != j
    incoming = (u * left_of) @ sigma  # sum over atoms left of j
    signed = (u * signs) @ sigma

    dsigma = (1j * delta - 0.5) * sigma + 1j * omega - gl * full - chi * incoming
    dp = (
        -chi * (sigma.real**2 + sigma.imag**2)
        - 2.0 * chi * np.real(np.conj(sigma) * incoming)
        - 2.0 * gl * np.real(np.conj(sigma) * signed)
        - gamma_p * p
    )
    dz = (2.0 * omega_r) * p
    return dz, dp, dsigma


def integrate_rk4(z, p, sigma, gl, chi, delta, omega, gamma_p, omega_r,
                  dt, n_steps, stride, z_out, p_out, s_out):
    """Fixed-step classical RK4; samples every ``stride`` steps into the
    ``*_out`` arrays (row 0 is the initial state).

    Returns (status, steps_done, saturated): status 0 on completion, 1 when
    any coordinate left [-1e6, 1e6] (steps_done is then the offending step,
    counting from 1).
    """
    z = np.array(z, dtype=np.float64)
    p = np.array(p, dtype=np.float64)
    sigma = np.array(sigma, dtype=np.complex128)

    args = (gl, chi, delta, omega, gamma_p, omega_r)
    saturated = bool((np.abs(sigma) > SATURATION).any())
    z_out[0], p_out[0], s_out[0] = z, p, sigma

    row = 1
    for step in range(1, n_steps + 1):
        kz1, kp1, ks1 = rhs(z, p, sigma, *args)
        kz2, kp2, ks2 = rhs(z + 0.5 * dt * kz1, p + 0.5 * dt * kp1, sigma + 0.5 * dt * ks1, *args)
        kz3, kp3, ks3 = rhs(z + 0.5 * dt * kz2, p + 0.5 * dt * kp2, sigma + 0.5 * dt * ks2, *args)
        kz4, kp4, ks4 = rhs(z + dt * kz3, p + dt * kp3, sigma + dt * ks3, *args)
        sixth = dt / 6.0
        z = z + sixth * (kz1 + 2.0 * kz2 + 2.0 * kz3 + kz4)
        p = p + sixth * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4)
        sigma = sigma + sixth * (ks1 + 2.0 * ks2 + 2.0 * ks3 + ks4)

        abs_sig = np.abs(sigma)
        if not (
            (np.abs(z) <= COORD_BOUND).all()
            and (np.abs(p) <= COORD_BOUND).all()
            and (abs_sig <= COORD_BOUND).all()
        ):
            return 1, step, saturated
        if not saturated and (abs_sig > SATURATION).any():
            saturated = True
        if step % stride == 0:
            z_out[row], p_out[row], s_out[row] = z, p, sigma
            row += 1
    return 0, n_steps, saturated
