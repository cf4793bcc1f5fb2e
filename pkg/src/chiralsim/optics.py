"""Transfer-matrix optical response of an atomic configuration.

The probe is always symmetric (equal left/right coupling Gamma_probe,
default half the guided fraction): the configuration, not the coupling,
carries the directional information.  Matrices relate field amplitudes on
the left of an element to those on its right, so the ensemble matrix is the
product m(z_0) P(z_1 - z_0) m(z_1) ... m(z_{N-1}) with atoms ordered left to
right and the rightmost factor acting first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError

TWO_PI = 2.0 * np.pi


def atom_matrix(delta_probe, gamma_probe, gamma_loss):
    """2x2 transfer matrix of a single atom for probe detuning ``delta_probe``.

    r = -2 Gamma / (2 Gamma + gamma - 2 i Delta), t = 1 + r,
    m = (1/t) [[t^2 - r^2, r], [-r, 1]]; unimodular by construction.
    """
    if gamma_probe <= 0.0:
        raise UsageError(f"gamma_probe must be > 0, got {gamma_probe!r}")
    if gamma_loss < 0.0:
        raise UsageError(f"gamma_loss must be >= 0, got {gamma_loss!r}")
    r = -2.0 * gamma_probe / (2.0 * gamma_probe + gamma_loss - 2.0j * delta_probe)
    t = 1.0 + r
    if t == 0.0:
        raise UsageError(
            "singular atom matrix (t = 0 at exact lossless resonance); "
            "offset the probe detuning by >= 1e-6")
    return np.array([[(t * t - r * r) / t, r / t], [-r / t, 1.0 / t]],
                    dtype=np.complex128)


def propagation_matrix(distance):
    """Free propagation over ``distance`` (units of 1/k): diag(e^{ikd}, e^{-ikd})."""
    phase = np.exp(1j * distance)
    return np.array([[phase, 0.0], [0.0, np.conj(phase)]], dtype=np.complex128)


@dataclass(frozen=True)
class OpticalResponse:
    """Direction-resolved response at one probe detuning."""

    delta: float
    t_r: complex
    r_l: complex
    r_r: complex
    t_l: complex


def ensemble_matrix(positions, delta_probe, gamma_probe, gamma_loss):
    """Transfer matrix of the whole array (positions sorted ascending)."""
    positions = np.asarray(positions, dtype=np.float64)
    if positions.size and (np.diff(positions) < 0.0).any():
        raise UsageError("positions must be sorted ascending")
    m = np.eye(2, dtype=np.complex128)
    atom = atom_matrix(delta_probe, gamma_probe, gamma_loss)
    prev = None
    for z in positions:
        if prev is not None:
            m = m @ propagation_matrix(z - prev)
        m = m @ atom
        prev = z
    return m


def ensemble_response(positions, delta_probe, gamma_probe, gamma_loss):
    """Reflection/transmission amplitudes extracted from the ensemble matrix.

    T_R = 1/M22, R_L = -M21/M22, R_R = M12/M22, T_L = M11 - M12 M21 / M22;
    T_L equals T_R whenever det M = 1.  R_L is the reflection seen by
    left-propagating light (incident on the right end of the array).
    """
    m = ensemble_matrix(positions, delta_probe, gamma_probe, gamma_loss)
    m22 = m[1, 1]
    if m22 == 0.0:
        raise UsageError("singular ensemble matrix (M22 = 0)")
    return OpticalResponse(
        delta=float(delta_probe),
        t_r=complex(1.0 / m22),
        r_l=complex(-m[1, 0] / m22),
        r_r=complex(m[0, 1] / m22),
        t_l=complex(m[0, 0] - m[0, 1] * m[1, 0] / m22),
    )


@dataclass(frozen=True)
class SpectrumResult:
    """Responses across a probe-detuning grid, plus the |R_L| peak width."""

    delta: np.ndarray
    t_r: np.ndarray
    r_l: np.ndarray
    r_r: np.ndarray
    t_l: np.ndarray
    fwhm_r_l: float

    def response(self, index):
        return OpticalResponse(
            delta=float(self.delta[index]), t_r=complex(self.t_r[index]),
            r_l=complex(self.r_l[index]), r_r=complex(self.r_r[index]),
            t_l=complex(self.t_l[index]))


def full_width_half_max(x, y):
    """FWHM of the tallest peak of ``y`` on the grid ``x``, by linear
    interpolation of the half-maximum crossings; NaN when a crossing is
    outside the grid."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    k = int(np.argmax(y))
    half = 0.5 * y[k]

    left = np.nan
    for i in range(k, 0, -1):
        if y[i - 1] <= half <= y[i]:
            frac = (half - y[i - 1]) / (y[i] - y[i - 1])
            left = x[i - 1] + frac * (x[i] - x[i - 1])
            break
    right = np.nan
    for i in range(k, x.size - 1):
        if y[i + 1] <= half <= y[i]:
            frac = (y[i] - half) / (y[i] - y[i + 1])
            right = x[i] + frac * (x[i + 1] - x[i])
            break
    return float(right - left)


def spectrum(positions, delta_grid, gamma_probe, gamma_loss):
    """Sweep the probe detuning over ``delta_grid`` (sorted, non-empty)."""
    delta_grid = np.asarray(delta_grid, dtype=np.float64)
    if delta_grid.size == 0:
        raise UsageError("delta_grid must be non-empty")
    if (np.diff(delta_grid) <= 0.0).any():
        raise UsageError("delta_grid must be strictly increasing")
    n = delta_grid.size
    t_r = np.empty(n, dtype=np.complex128)
    r_l = np.empty(n, dtype=np.complex128)
    r_r = np.empty(n, dtype=np.complex128)
    t_l = np.empty(n, dtype=np.complex128)
    for i, d in enumerate(delta_grid):
        resp = ensemble_response(positions, d, gamma_probe, gamma_loss)
        t_r[i], r_l[i], r_r[i], t_l[i] = resp.t_r, resp.r_l, resp.r_r, resp.t_l
    return SpectrumResult(delta=delta_grid, t_r=t_r, r_l=r_l, r_r=r_r, t_l=t_l,
                          fwhm_r_l=full_width_half_max(delta_grid, np.abs(r_l)))


def probe_settings(params, rates):
    """(gamma_probe, gamma_loss) for a parameter set's symmetric probe."""
    gamma_probe = params.probe_gamma_frac
    return gamma_probe, rates.gamma_free
