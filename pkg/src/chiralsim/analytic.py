"""Closed-form and semi-closed-form solutions used as oracles and outputs.

Covers the weak-scattering lattice recursions (chiral and symmetric), the
iterative pure-chiral steady state at arbitrary detuning, vibrational mode
frequencies, and the Einstein-relation temperature estimates.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import circular_distance, si_units
from .errors import InfiniteTemperatureError, NoSolutionError, UsageError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WsSolution:
    """Weak-scattering pure-chiral lattice.

    Fractional positions follow the left-to-right recursion (each atom
    minimizes the sinusoidal potential of its left partners); energies are
    in units of hbar Gamma_tot s0^2 and are computed from the accumulated
    phase-sum modulus, which the recursion drives to sqrt(j).
    """

    f: np.ndarray
    energies: np.ndarray
    total_energy: float
    chi: float


def ws_chiral_positions(n_atoms, chi=0.25):
    """Weak-scattering positions and single-particle energies, chi_r = 1.

    f_0 = 1; for j >= 1 the phase that minimizes atom j's potential is
    delta_j = atan2(sum sin 2 pi f_i, sum cos 2 pi f_i) - pi/2 over i < j,
    and f_j = delta_j / 2 pi wrapped into (0, 1].  Two-argument atan2 keeps
    the branch that preserves the sqrt(j) chain.
    """
    if n_atoms < 1:
        raise UsageError(f"n_atoms must be >= 1, got {n_atoms!r}")
    f = np.empty(n_atoms)
    energies = np.zeros(n_atoms)
    f[0] = 1.0
    phase_sum = 0.0 + 0.0j
    for j in range(1, n_atoms):
        phase_sum += cmath.exp(1j * TWO_PI * f[j - 1])
        delta_j = math.atan2(phase_sum.imag, phase_sum.real) - 0.5 * math.pi
        fj = math.fmod(delta_j / TWO_PI, 1.0)
        if fj <= 0.0:
            fj += 1.0
        f[j] = fj
        energies[j] = -2.0 * chi * abs(phase_sum)
    return WsSolution(f=f, energies=energies, total_energy=float(energies.sum()),
                      chi=chi)


def ws_symmetric_positions(n_atoms):
    """Uniform weak-scattering lattice of the symmetric case.

    Consecutive spacing (1 - 1/2N) lambda anchored at f_0 = 1; for j < N the
    fractions 1 - j/2N never wrap.
    """
    if n_atoms < 2:
        raise UsageError(f"n_atoms must be >= 2, got {n_atoms!r}")
    return 1.0 - np.arange(n_atoms) / (2.0 * n_atoms)


def ws_energy_scaling(n_list, chi=0.25):
    """Fitted exponent of log |total energy| against log N.

    The chiral chain total sums -2 chi sqrt(j), so the slope approaches 3/2
    for large N.  (The symmetric-case energy scales as N^2; that exponent is
    quoted from the literature, not computed here.)
    """
    n_list = sorted(int(n) for n in n_list)
    if len(n_list) < 3:
        raise UsageError("need at least 3 ensemble sizes to fit an exponent")
    if n_list[-1] < 2 * n_list[0]:
        raise UsageError("ensemble sizes must span at least a factor of 2")
    totals = [abs(ws_chiral_positions(n, chi=chi).total_energy) for n in n_list]
    slope, _ = np.polyfit(np.log(n_list), np.log(totals), 1)
    return float(slope)


@dataclass(frozen=True)
class ChiralSteadySolution:
    """Iterative pure-chiral steady state at one detuning."""

    f: np.ndarray
    sigma: np.ndarray
    drift_momentum: float       # hbar k units, common to all atoms
    residuals: np.ndarray       # |momentum-equality defect| per atom
    delta: float


def _root_functions(w_sum, denom, omega, chi, target):
    """G(f) and G'(f) for the momentum-equality condition of one atom.

    S(f) = e^{2 pi i f} * w_sum is the incoming chiral field;
    sigma(f) = (-i Omega + chi S)/denom;
    G = |sigma|^2 + 2 Re(sigma* S) - target, zero at force balance.
    """

    def g_and_slope(fvals):
        s = np.exp(1j * TWO_PI * np.asarray(fvals)) * w_sum
        sig = (-1j * omega + chi * s) / denom
        g = (np.abs(sig) ** 2 + 2.0 * np.real(np.conj(sig) * s) - target)
        dsig = chi * (TWO_PI * 1j) * s / denom
        ds = (TWO_PI * 1j) * s
        gp = (2.0 * np.real(np.conj(sig) * dsig)
              + 2.0 * np.real(np.conj(dsig) * s + np.conj(sig) * ds))
        return g, gp

    return g_and_slope


def _stable_roots(g_and_slope, scan_points):
    """All roots of G on (0, 1] with G' > 0 (restoring for chi > 0),
    located by dense scan plus bisection to 1e-10."""
    grid = (np.arange(scan_points + 1)) / scan_points  # [0, 1], periodic ends
    g, gp = g_and_slope(grid)
    roots = []
    for k in range(scan_points):
        a, b = grid[k], grid[k + 1]
        ga, gb = g[k], g[k + 1]
        if ga == 0.0:
            if gp[k] > 0.0:
                roots.append(a if a > 0.0 else 1.0)
            continue
        if ga * gb < 0.0:
            lo, hi, glo = a, b, ga
            while hi - lo > 1.0e-10:
                mid = 0.5 * (lo + hi)
                gm = g_and_slope(mid)[0]
                if gm == 0.0:
                    lo = hi = mid
                    break
                if glo * gm < 0.0:
                    hi = mid
                else:
                    lo, glo = mid, gm
            root = 0.5 * (lo + hi)
            if g_and_slope(root)[1] > 0.0:
                roots.append(root if root > 0.0 else 1.0)
    return roots, grid, g


def _effective_energy(grid, g, froot):
    """chi-scaled single-particle energy integral of G up to the root."""
    idx = min(len(grid) - 1, int(round(froot * (len(grid) - 1))))
    return np.trapezoid(g[: idx + 1], grid[: idx + 1])


def _solve_stage(n_atoms, delta, omega, chi, scan_points, f_anchor):
    denom = 1j * delta - 0.5
    sigma0 = -1j * omega / denom
    target = abs(sigma0) ** 2
    f = np.empty(n_atoms)
    sigma = np.empty(n_atoms, dtype=np.complex128)
    residuals = np.zeros(n_atoms)
    f[0] = 1.0
    sigma[0] = sigma0
    w_sum = sigma0 * cmath.exp(-1j * TWO_PI * 1.0)
    for j in range(1, n_atoms):
        g_and_slope = _root_functions(w_sum, denom, omega, chi, target)
        roots, grid, g = _stable_roots(g_and_slope, scan_points)
        if not roots:
            raise NoSolutionError(j, delta)
        if f_anchor is not None:
            pick = min(roots, key=lambda r: circular_distance(r, f_anchor[j]))
        else:
            pick = min(roots, key=lambda r: _effective_energy(grid, g, r))
        f[j] = pick
        s_in = cmath.exp(1j * TWO_PI * pick) * w_sum
        sigma[j] = (-1j * omega + chi * s_in) / denom
        residuals[j] = abs(abs(sigma[j]) ** 2
                           + 2.0 * (np.conj(sigma[j]) * s_in).real - target)
        w_sum += sigma[j] * cmath.exp(-1j * TWO_PI * pick)
    return ChiralSteadySolution(f=f, sigma=sigma, drift_momentum=0.0,
                                residuals=residuals, delta=delta)


def chiral_steady_any_detuning(n_atoms, params, scan_points=4096,
                               continuation_step=0.5):
    """Exact iterative steady state for a purely chiral chain at any detuning.

    Atom 0 takes the single-atom coherence and sets the common drift
    momentum -(chi/gamma_p)|sigma_0|^2; each later atom is placed at a
    dynamically stable force-balance root of the momentum-equality
    condition.  Near resonance the stable branch is selected by continuity:
    the solver internally steps the detuning down from +-20 (mirroring the
    time-domain annealing protocol), anchoring each stage's roots to the
    previous stage.  Beyond |20| the lowest-effective-energy stable root is
    taken directly.  Raises :class:`NoSolutionError` (carrying the atom
    index) when an atom has no stable root on its period.
    """
    if params.chi_r != 1.0:
        raise UsageError("the iterative solution requires a purely chiral "
                         f"coupling (chi_r = 1), got chi_r = {params.chi_r!r}")
    if params.gamma_1d_frac <= 0.0:
        raise UsageError("gamma_1d_frac must be positive for a chiral chain")
    chi = params.chi_r * params.gamma_1d_frac
    target_delta = float(params.delta)

    if abs(target_delta) >= 20.0:
        deltas = [target_delta]
    else:
        sign = 1.0 if target_delta >= 0.0 else -1.0
        deltas = []
        d = 20.0 * sign
        while abs(d) > abs(target_delta) + 1e-12:
            deltas.append(d)
            d -= sign * continuation_step
        deltas.append(target_delta)

    f_anchor = None
    solution = None
    for d in deltas:
        omega = params.replace(delta=d).omega
        solution = _solve_stage(n_atoms, d, omega, chi, scan_points, f_anchor)
        f_anchor = solution.f

    if params.gamma_p > 0.0:
        sigma0 = solution.sigma[0]
        drift = -chi * abs(sigma0) ** 2 / params.gamma_p
    else:
        drift = math.nan
    return ChiralSteadySolution(f=solution.f, sigma=solution.sigma,
                                drift_momentum=drift,
                                residuals=solution.residuals,
                                delta=target_delta)


def mode_frequencies(n_atoms, params):
    """Vibrational frequencies omega_j = sqrt(4 chi s0^2 omega_r sqrt(j)).

    Pure-chiral weak-scattering result, j = 1 .. N-1; the leftmost atom
    feels no potential and has no natural frequency.  Independent of N for
    fixed j.
    """
    if params.chi_r != 1.0:
        raise UsageError("mode frequencies assume a purely chiral coupling "
                         f"(chi_r = 1), got chi_r = {params.chi_r!r}")
    chi = params.chi_r * params.gamma_1d_frac
    s0_sq = params.s0 ** 2
    j = np.arange(1, n_atoms)
    return np.sqrt(4.0 * chi * s0_sq * params.omega_r * np.sqrt(j))


@dataclass(frozen=True)
class TemperatureResult:
    """Einstein-relation temperature of the damped, pumped ensemble."""

    kbt_hbar_gamma: float       # k_B T in units of hbar Gamma_tot
    t_kelvin: float             # SI, under the cesium unit context
    t_nk: float                 # same, in nanokelvin
    t_nk_normalized: float      # T * (gamma_p / Gamma_tot) in nK


def temperature(params, free_space_reading=True):
    """Steady-state temperature from m gamma_p k_B T = D.

    The weak-scattering momentum diffusion D = (hbar k)^2 s0^2 Gamma_tot / 2
    gives k_B T = hbar omega_r Gamma_tot s0^2 / gamma_p.  The normalized
    product T (gamma_p/Gamma_tot) depends only on the recoil energy and s0
    (about 0.99 nK for cesium at s0 = 0.1), so it is independent of how the
    5.2 MHz figure is read; the absolute temperature is not.
    """
    if params.gamma_p <= 0.0:
        raise InfiniteTemperatureError(
            "temperature diverges without external damping (gamma_p = 0)")
    s0_sq = params.s0 ** 2
    kbt = params.omega_r * s0_sq / params.gamma_p
    units = si_units(params, free_space_reading)
    t_kelvin = kbt * units["hbar"] * units["gamma_tot_si"] / units["k_boltzmann"]
    return TemperatureResult(
        kbt_hbar_gamma=kbt,
        t_kelvin=t_kelvin,
        t_nk=t_kelvin * 1e9,
        t_nk_normalized=t_kelvin * 1e9 * params.gamma_p,
    )


def stability_ratio(params):
    """Trap depth over thermal energy, E_1 / k_B T = 2 (Gamma_1D/Gamma_tot)
    (gamma_p/omega_r).

    Uses the pure-chiral first trapping energy E_1 = 2 hbar chi s0^2 with
    chi = Gamma_1D; a ratio well above 1 is required for stable
    self-organization.
    """
    return 2.0 * params.gamma_1d_frac * params.gamma_p / params.omega_r
