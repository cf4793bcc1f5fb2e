"""Equations of motion, fixed-step integration, frozen-position coherence
solve, and linearization.

All quantities are in internal units (see :mod:`chiralsim.core`).  The
dimensionless system integrated here is

    dz_j/dt     = 2 omega_r p_j
    dsigma_j/dt = (i delta - 1/2) sigma_j + i Omega
                  - Gamma_L sum_{i != j} sigma_i e^{i|z_j - z_i|}
                  - chi sum_{i left of j} sigma_i e^{i|z_j - z_i|}
    dp_j/dt     = - chi |sigma_j|^2
                  - 2 chi Re sum_{i left of j} sigma_j* sigma_i e^{i(z_j - z_i)}
                  - 2 Gamma_L Re sum_i sigma_j* sigma_i e^{i|z_j - z_i|} sgn(z_j - z_i)
                  - gamma_p p_j

with "left of" meaning strictly smaller current position (atoms may cross
during transients; coincident atoms carry zero chiral weight and sgn 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import EnsembleState
from .errors import DivergenceError, SingularSystemError, UsageError

CONDITION_LIMIT = 1.0e12


def dt_max(delta):
    """Step-size ceiling 0.02 / max(1, |delta|): resolve the fastest
    coherence rotation with generous margin."""
    return 0.02 / max(1.0, abs(delta))


def default_dt(delta):
    """Default step 5e-3, shrunk once the detuning rotation gets fast."""
    return min(5.0e-3, dt_max(delta))


@dataclass(frozen=True)
class Derivatives:
    """Time derivatives of an ensemble state, same units per unit time."""

    dz: np.ndarray
    dp: np.ndarray
    dsigma: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """States sampled along one integration, plus model-validity flags."""

    times: np.ndarray
    z: np.ndarray       # (samples, atoms)
    p: np.ndarray
    sigma: np.ndarray
    saturated: bool     # some |sigma| exceeded 0.5 at some step
    params: object
    rates: object

    @property
    def n_samples(self):
        return self.times.shape[0]

    def state(self, index):
        return EnsembleState(self.z[index], self.p[index], self.sigma[index],
                             t=self.times[index])

    @property
    def final_state(self):
        return self.state(-1)


def _kernel_args(rates, params):
    return (rates.gamma_l, rates.chi, params.delta, params.omega,
            params.gamma_p, params.omega_r)


def eom_rhs(state, rates, params):
    """Evaluate the equations of motion at ``state``."""
    dz, dp, dsigma = _kernels.rhs(state.z, state.p, state.sigma,
                                  *_kernel_args(rates, params))
    return Derivatives(dz=dz, dp=dp, dsigma=dsigma)


def integrate(state, rates, params, duration, dt=None, stride=1,
              max_dt=None):
    """Evolve ``state`` for ``duration`` with fixed-step classical RK4.

    Samples every ``stride`` steps (sample 0 is the initial state; the last
    sample is the final state).  Deterministic given identical inputs.
    Raises :class:`DivergenceError` when any coordinate leaves [-1e6, 1e6].
    """
    if duration <= 0.0:
        raise UsageError(f"duration must be positive, got {duration!r}")
    if dt is None:
        dt = default_dt(params.delta)
    ceiling = dt_max(params.delta) if max_dt is None else max_dt
    if dt <= 0.0:
        raise UsageError(f"dt must be positive, got {dt!r}")
    if dt > ceiling:
        raise UsageError(f"dt = {dt!r} exceeds the stability ceiling {ceiling!r} "
                         f"at delta = {params.delta!r}")
    stride = int(stride)
    if stride < 1:
        raise UsageError(f"stride must be >= 1, got {stride!r}")

    n_steps = max(1, math.ceil(round(duration / dt, 9)))
    n_steps = ((n_steps + stride - 1) // stride) * stride
    n_samples = n_steps // stride + 1
    n = state.n_atoms

    z_out = np.empty((n_samples, n), dtype=np.float64)
    p_out = np.empty((n_samples, n), dtype=np.float64)
    s_out = np.empty((n_samples, n), dtype=np.complex128)

    status, steps_done, saturated = _kernels.integrate_rk4(
        state.z, state.p, state.sigma, *_kernel_args(rates, params),
        dt, n_steps, stride, z_out, p_out, s_out)
    if status != 0:
        raise DivergenceError(state.t + steps_done * dt)

    times = state.t + dt * stride * np.arange(n_samples, dtype=np.float64)
    return Trajectory(times=times, z=z_out, p=p_out, sigma=s_out,
                      saturated=bool(saturated), params=params, rates=rates)


def _coupling_matrices(z):
    """Pairwise phase/ordering matrices for positions ``z`` (row j, col i)."""
    z = np.asarray(z, dtype=np.float64)
    seps = z[:, None] - z[None, :]
    u = np.exp(1j * np.abs(seps))
    np.fill_diagonal(u, 0.0)
    left_of = (seps > 0.0).astype(np.float64)
    signs = np.sign(seps)
    return u, left_of, signs


def coherence_matrix(positions, rates, params):
    """Matrix M of the frozen-position steady system M sigma = -i Omega."""
    u, left_of, _ = _coupling_matrices(positions)
    n = len(positions)
    m = -(rates.gamma_l + rates.chi * left_of) * u
    m[np.diag_indices(n)] = 1j * params.delta - 0.5
    return m


def steady_coherences(positions, rates, params, with_residual=False):
    """Steady coherences for atoms frozen at ``positions``.

    Direct partial-pivoted solve of the N x N complex linear system obtained
    from the coherence equation with dsigma/dt = 0.  Raises
    :class:`SingularSystemError` when the condition estimate exceeds 1e12
    (the caller may perturb the positions).
    """
    positions = np.asarray(positions, dtype=np.float64)
    if not np.isfinite(positions).all():
        raise UsageError("positions must be finite")
    m = coherence_matrix(positions, rates, params)
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularSystemError(
            f"steady-coherence system condition estimate {cond:.3e} exceeds "
            f"{CONDITION_LIMIT:.0e}")
    b = np.full(len(positions), -1j * params.omega)
    sigma = np.linalg.solve(m, b)
    if with_residual:
        residual = float(np.max(np.abs(m @ sigma - b))) if len(positions) else 0.0
        return sigma, residual
    return sigma


@dataclass(frozen=True)
class Jacobian:
    """Dense real Jacobian over the coordinates (z, p, Re sigma, Im sigma)."""

    matrix: np.ndarray
    state: EnsembleState

    @property
    def n_atoms(self):
        return self.state.n_atoms


def jacobian(state, rates, params):
    """Analytic linearization of :func:`eom_rhs` about ``state``.

    Coordinate order is [z, p, Re sigma, Im sigma], giving a 4N x 4N real
    matrix.  The ordering weights Theta and sgn are held fixed (their jumps
    at atom crossings have measure zero).
    """
    n = state.n_atoms
    z, sigma = state.z, state.sigma
    gl, chi = rates.gamma_l, rates.chi
    u, left_of, signs = _coupling_matrices(z)
    crossing = signs * signs  # 1 away from ties, 0 on them

    jac = np.zeros((4 * n, 4 * n))
    sl_z = slice(0, n)
    sl_p = slice(n, 2 * n)
    sl_a = slice(2 * n, 3 * n)
    sl_b = slice(3 * n, 4 * n)
    eye = np.eye(n)

    # dz rows: linear in p only.
    jac[sl_z, sl_p] = 2.0 * params.omega_r * eye

    # dsigma rows (complex, embedded as Re/Im blocks).
    coef = -(gl + chi * left_of) * u              # multiplies sigma_i
    m_sig = coef + (1j * params.delta - 0.5) * eye
    g = 1j * signs * coef * sigma[None, :]        # d(coef_ji sigma_i)/dz_j
    z_sig = np.diag(g.sum(axis=1)) - g            # and the -d/dz_i part
    jac[sl_a, sl_z] = z_sig.real
    jac[sl_b, sl_z] = z_sig.imag
    jac[sl_a, sl_a] = m_sig.real
    jac[sl_a, sl_b] = -m_sig.imag
    jac[sl_b, sl_a] = m_sig.imag
    jac[sl_b, sl_b] = m_sig.real

    # dp rows.
    jac[sl_p, sl_p] = -params.gamma_p * eye
    w_drive = chi * left_of * u + gl * signs * u  # multiplies sigma_i in the force
    c_field = w_drive @ sigma
    h = np.conj(sigma)[:, None] * w_drive
    jp_a = -2.0 * h.real
    jp_b = 2.0 * h.imag
    jp_a[np.diag_indices(n)] = -2.0 * chi * sigma.real - 2.0 * c_field.real
    jp_b[np.diag_indices(n)] = -2.0 * chi * sigma.imag - 2.0 * c_field.imag
    jac[sl_p, sl_a] = jp_a
    jac[sl_p, sl_b] = jp_b
    q = (np.conj(sigma)[:, None] * (chi * left_of + gl * crossing)
         * u * sigma[None, :])
    jac[sl_p, sl_z] = 2.0 * (np.diag(q.sum(axis=1)) - q).imag

    return Jacobian(matrix=jac, state=state)
