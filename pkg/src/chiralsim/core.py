"""Parameterization, internal units, and the shared ensemble state.

Internal unit system: time in 1/Gamma_tot, length in 1/k (positions are
phases), momentum in hbar*k, energy in hbar*Gamma_tot.  All rates are
dimensionless fractions of the total single-atom decay rate, so a single
knob omega_r = recoil frequency / Gamma_tot closes the equations of motion:
dz/dt = 2 * omega_r * p.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import atomic_mass, hbar
from scipy.constants import k as k_boltzmann

from .errors import NonFiniteStateError, ParameterError

TWO_PI = 2.0 * math.pi

# Cesium D2 constants: vacuum wavenumber 11727 1/cm (the transition
# wavelength is its inverse, ~852.7 nm) and a free-space decay rate of
# 2*pi * 5.2 MHz.  These only matter through the recoil-to-decay ratio
# and through the SI temperature conversion.
CESIUM_WAVENUMBER_M = 11727.0e2          # 1/m
CESIUM_MASS_KG = 132.905451961 * atomic_mass
CESIUM_GAMMA_FREE_SI = TWO_PI * 5.2e6    # rad/s
CESIUM_K = TWO_PI * CESIUM_WAVENUMBER_M  # 1/m
CESIUM_OMEGA_R_SI = hbar * CESIUM_K**2 / (2.0 * CESIUM_MASS_KG)  # rad/s


def cesium_gamma_tot_si(gamma_1d_frac=0.25, free_space_reading=True):
    """Total decay rate in SI units under either reading of the 5.2 MHz figure.

    ``free_space_reading=True`` (the default) treats 5.2 MHz as the decay
    rate into free space only, so Gamma_tot = gamma / (1 - Gamma_1D/Gamma_tot).
    The alternative treats it as the total linewidth.  The recoil ratio
    shifts by ~25% between the two; both are supported because the source
    material is ambiguous.
    """
    if free_space_reading:
        return CESIUM_GAMMA_FREE_SI / (1.0 - gamma_1d_frac)
    return CESIUM_GAMMA_FREE_SI


def cesium_omega_r_ratio(gamma_1d_frac=0.25, free_space_reading=True):
    """Recoil frequency in units of Gamma_tot for the cesium D2 defaults."""
    return CESIUM_OMEGA_R_SI / cesium_gamma_tot_si(gamma_1d_frac, free_space_reading)


#: Default recoil ratio, ~2.978e-4 (cesium D2, free-space reading at
#: Gamma_1D = 0.25 Gamma_tot).  Overridable through PhysicalParams.omega_r.
DEFAULT_OMEGA_R = cesium_omega_r_ratio()


def default_pump(delta):
    """Rabi frequency enforcing a constant saturation amplitude s0 = 0.1.

    Omega = 0.1 * sqrt(delta**2 + 1/4) in Gamma_tot units, so that
    |s0|**2 = Omega**2 / (delta**2 + 1/4) = 0.01 at every detuning.
    """
    return 0.1 * math.sqrt(delta * delta + 0.25)


@dataclass(frozen=True)
class PhysicalParams:
    """All rates and ratios defining one physical scenario.

    Everything is expressed in units of the total decay rate Gamma_tot.
    ``omega=None`` resolves to :func:`default_pump` and keeps tracking the
    detuning through :meth:`replace`; ``probe_gamma_frac=None`` resolves to
    half the guided fraction (an even split of Gamma_1D for the symmetric
    probe).
    """

    n_atoms: int = 50
    gamma_1d_frac: float = 0.25
    chi_r: float = 1.0
    delta: float = 20.0
    omega: float | None = None
    gamma_p: float = 0.1
    omega_r: float = DEFAULT_OMEGA_R
    probe_gamma_frac: float | None = None
    omega_auto: bool = dataclasses.field(init=False, default=True)
    probe_auto: bool = dataclasses.field(init=False, default=True)

    def __post_init__(self):
        if not isinstance(self.n_atoms, (int, np.integer)) or self.n_atoms < 1:
            raise ParameterError("n_atoms", f"must be a positive integer, got {self.n_atoms!r}")
        if not (0.0 <= self.gamma_1d_frac <= 1.0):
            raise ParameterError("gamma_1d_frac", f"must lie in [0, 1], got {self.gamma_1d_frac!r}")
        if not abs(self.chi_r) <= 1.0:
            raise ParameterError("chi_r", f"must lie in [-1, 1], got {self.chi_r!r}")
        if not math.isfinite(self.delta):
            raise ParameterError("delta", f"must be finite, got {self.delta!r}")
        object.__setattr__(self, "omega_auto", self.omega is None)
        if self.omega is None:
            object.__setattr__(self, "omega", default_pump(self.delta))
        if not (math.isfinite(self.omega) and self.omega >= 0.0):
            raise ParameterError("omega", f"must be real and >= 0, got {self.omega!r}")
        if not (math.isfinite(self.gamma_p) and self.gamma_p >= 0.0):
            raise ParameterError("gamma_p", f"must be >= 0, got {self.gamma_p!r}")
        if not (math.isfinite(self.omega_r) and self.omega_r > 0.0):
            raise ParameterError("omega_r", f"must be > 0, got {self.omega_r!r}")
        object.__setattr__(self, "probe_auto", self.probe_gamma_frac is None)
        if self.probe_gamma_frac is None:
            object.__setattr__(self, "probe_gamma_frac", 0.5 * self.gamma_1d_frac)
        if not (math.isfinite(self.probe_gamma_frac) and self.probe_gamma_frac >= 0.0):
            raise ParameterError(
                "probe_gamma_frac", f"must be >= 0, got {self.probe_gamma_frac!r}"
            )

    @property
    def s0(self):
        """Weak-scattering coherence amplitude |s0| = Omega/sqrt(delta^2 + 1/4)."""
        return self.omega / math.sqrt(self.delta * self.delta + 0.25)

    def replace(self, **changes):
        """Copy with fields changed; derived defaults keep tracking.

        An auto pump re-derives Omega from the (possibly new) detuning and
        an auto probe coupling re-derives from the guided fraction, unless
        the call pins them explicitly.
        """
        if "omega" not in changes and self.omega_auto:
            changes["omega"] = None
        if "probe_gamma_frac" not in changes and self.probe_auto:
            changes["probe_gamma_frac"] = None
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class DerivedRates:
    """Directional decomposition of the decay rate, in Gamma_tot units.

    gamma_l + gamma_r + gamma_free == 1 exactly (guaranteed by the
    construction in :func:`derive_rates`), and chi = gamma_r - gamma_l.
    """

    gamma_l: float
    gamma_r: float
    chi: float
    gamma_free: float


def derive_rates(params):
    """Split the unit total decay rate into left/right guided and free parts.

    chi = chi_r * gamma_1d_frac, gamma_{r,l} = (gamma_1d_frac +- chi)/2.
    The larger directional rate is computed first and the smaller as the
    exact complement so the three parts sum to 1 in floating point.
    """
    g1d = float(params.gamma_1d_frac)
    chi = params.chi_r * g1d
    if params.chi_r >= 0.0:
        gamma_r = 0.5 * (g1d + chi)
        gamma_l = g1d - gamma_r
    else:
        gamma_l = 0.5 * (g1d - chi)
        gamma_r = g1d - gamma_l
    return DerivedRates(gamma_l=gamma_l, gamma_r=gamma_r, chi=chi, gamma_free=1.0 - g1d)


class EnsembleState:
    """Positions (1/k), momenta (hbar*k), coherences, and time for N atoms.

    Arrays are copied in and frozen; states are safe to share between
    workers.  ``|sigma| > 0.5`` signals that the linear (unsaturated)
    model is being stretched -- that is reported as a flag downstream,
    never as an error here.  Non-finite entries are rejected.
    """

    __slots__ = ("z", "p", "sigma", "t")

    def __init__(self, z, p, sigma, t=0.0):
        z = np.array(z, dtype=np.float64)
        p = np.array(p, dtype=np.float64)
        sigma = np.array(sigma, dtype=np.complex128)
        if not (z.shape == p.shape == sigma.shape) or z.ndim != 1:
            raise ValueError(f"mismatched state shapes: {z.shape}, {p.shape}, {sigma.shape}")
        for name, arr in (("z", z), ("p", p), ("sigma", sigma)):
            bad = ~np.isfinite(arr) if arr.dtype != np.complex128 else ~(
                np.isfinite(arr.real) & np.isfinite(arr.imag)
            )
            if bad.any():
                raise NonFiniteStateError(int(np.flatnonzero(bad)[0]), what=name)
        for arr in (z, p, sigma):
            arr.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "t", float(t))

    def __setattr__(self, name, value):
        raise AttributeError("EnsembleState is immutable")

    @property
    def n_atoms(self):
        return self.z.shape[0]

    @property
    def saturated(self):
        """True when any coherence exceeds the linear-regime guard 0.5."""
        return bool((np.abs(self.sigma) > 0.5).any())

    def with_values(self, z=None, p=None, sigma=None, t=None):
        return EnsembleState(
            self.z if z is None else z,
            self.p if p is None else p,
            self.sigma if sigma is None else sigma,
            self.t if t is None else t,
        )

    def __repr__(self):
        return f"EnsembleState(n_atoms={self.n_atoms}, t={self.t:g})"


def zero_state(n_atoms, z=None):
    """State with zero momenta and coherences; positions default to a
    one-per-wavelength ladder (phase 1 each)."""
    if z is None:
        z = TWO_PI * (1.0 + np.arange(n_atoms, dtype=np.float64))
    return EnsembleState(z, np.zeros(n_atoms), np.zeros(n_atoms, dtype=np.complex128))


def fractional_positions(z):
    """Positions modulo the wavelength, mapped into (0, 1].

    f = (k z / 2 pi) mod 1, with exact multiples of the wavelength sent to 1
    rather than 0 (the leftmost-atom convention f0 = 1).
    """
    z = np.asarray(z, dtype=np.float64)
    f = np.mod(z / TWO_PI, 1.0)
    if f.ndim == 0:
        return 1.0 if f == 0.0 else float(f)
    f[f == 0.0] = 1.0
    return f


def fractional_offsets(z):
    """Fractional positions relative to the leftmost atom, sorted by position.

    The leftmost atom maps to 1 by convention; this is the quantity the
    analytic lattice solutions predict, invariant under global translation
    and integer-wavelength shifts.
    """
    zs = np.sort(np.asarray(z, dtype=np.float64))
    return fractional_positions(zs - zs[0])


def positions_from_fractions(f):
    """Unwrapped positions realizing the fractional pattern ``f``.

    Atom j is placed in wavelength cell j: z_j = 2 pi (j + f_j).  Phases and
    ordering -- the only ingredients of the dynamics -- match any other
    unwrapping; literal spacings differ by integer wavelengths.
    """
    f = np.asarray(f, dtype=np.float64)
    return TWO_PI * (np.arange(f.shape[0]) + f)


def circular_distance(f1, f2):
    """Distance between fractional positions on the unit circle."""
    d = np.abs(np.asarray(f1, dtype=np.float64) - np.asarray(f2, dtype=np.float64))
    return np.minimum(d, 1.0 - d)


def si_units(params, free_space_reading=True):
    """SI conversion factors for a parameter set under the cesium defaults.

    Returns a dict with Gamma_tot (rad/s), k (1/m), the recoil frequency
    (rad/s), and the Boltzmann constant, enough to turn internal results
    into laboratory numbers.
    """
    gamma_tot = cesium_gamma_tot_si(params.gamma_1d_frac, free_space_reading)
    return {
        "gamma_tot_si": gamma_tot,
        "k_si": CESIUM_K,
        "omega_r_si": params.omega_r * gamma_tot,
        "hbar": hbar,
        "k_boltzmann": k_boltzmann,
    }
