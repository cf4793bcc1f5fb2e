"""Scripted experiment pipelines: mode spectroscopy, effective-potential
scans, chirality quenches, slip transplants, equilibration statistics, and
parameter sweeps.

Each operation consumes converged states (usually from the annealing
protocol) and produces plain data structures that the shell serializes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace as dc_replace

import numpy as np
from scipy.signal import find_peaks

from .core import TWO_PI, EnsembleState, derive_rates, fractional_offsets
from .dynamics import default_dt, eom_rhs, integrate, steady_coherences
from .errors import DivergenceError, UsageError
from .steady import (Classification, SlipReport, Tolerances, anneal_detuning,
                     detect_phase_slips, find_steady, make_rng)


# ---------------------------------------------------------------------------
# Mode spectroscopy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeSpectrum:
    """Per-atom motional power spectra after an undamped kick."""

    frequencies: np.ndarray     # angular, in Gamma_tot units
    power: np.ndarray           # (atoms, frequencies), arbitrary units
    peaks: list                 # per atom: array of detected peak frequencies
    bin_width: float            # angular frequency resolution 2*pi / t_sample


def mode_spectroscopy(steady, kick=1.0e-3, t_sample=3.0e4, dt=None,
                      max_dt=None, noise_floor=10.0):
    """Kick a converged configuration with damping off and Fourier-analyze
    the relative motion.

    Every atom is displaced by ``kick`` wavelengths with alternating sign
    (a uniform displacement is a pure translation and excites nothing).
    The leftmost atom's trajectory is the accelerating reference and is
    subtracted before the Hann-windowed FFT; peaks must clear
    ``noise_floor`` times the median power.
    """
    if steady.classification is not Classification.STEADY:
        raise UsageError("mode spectroscopy requires a Steady input")
    params = steady.params.replace(gamma_p=0.0)
    rates = derive_rates(params)
    state = steady.state
    order = np.argsort(state.z)
    signs = np.where(np.arange(state.n_atoms) % 2 == 0, 1.0, -1.0)
    kicked = np.array(state.z)
    kicked[order] += TWO_PI * kick * signs
    if dt is None:
        dt = default_dt(params.delta)
    stride = max(1, int(round(0.1 / dt)))
    traj = integrate(EnsembleState(kicked, state.p, state.sigma), rates, params,
                     duration=t_sample, dt=dt, stride=stride, max_dt=max_dt)

    z_rel = traj.z[:, order] - traj.z[:, order[0]][:, None]
    z_rel = z_rel - z_rel.mean(axis=0)
    n_t = z_rel.shape[0]
    window = np.hanning(n_t)
    spec = np.abs(np.fft.rfft(z_rel * window[:, None], axis=0)) ** 2
    sample_dt = traj.times[1] - traj.times[0]
    freqs = TWO_PI * np.fft.rfftfreq(n_t, d=sample_dt)
    span = traj.times[-1] - traj.times[0]
    bin_width = TWO_PI / span

    peaks = []
    for j in range(z_rel.shape[1]):
        power = spec[:, j]
        floor = noise_floor * np.median(power)
        idx, _ = find_peaks(power, height=max(floor, 0.0))
        idx = idx[power[idx] > floor]
        peaks.append(freqs[idx])
    return ModeSpectrum(frequencies=freqs, power=spec.T, peaks=peaks,
                        bin_width=bin_width)


# ---------------------------------------------------------------------------
# Effective potential
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialCurve:
    """Effective potential for one atom scanned over a wavelength.

    Defined up to an additive constant (anchored to zero at the scan start);
    includes nonconservative content by construction, evaluated with all
    momenta zero so the damping force drops out.
    """

    positions: np.ndarray       # trial positions, units of 1/k
    potential: np.ndarray       # hbar Gamma_tot
    atom_index: int             # index into the state arrays

    def local_minima(self):
        """Indices of strict interior local minima."""
        v = self.potential
        return [i for i in range(1, v.size - 1) if v[i] < v[i - 1] and v[i] < v[i + 1]]


def effective_potential(steady, atom_index, grid_points=256):
    """Scan atom ``atom_index`` over one wavelength about its equilibrium.

    Other atoms stay frozen; the coherences are re-solved at every trial
    position; the force on the atom (momenta zero) is integrated with the
    trapezoidal rule into a potential anchored at the scan start.
    """
    n = steady.state.n_atoms
    if not (0 <= atom_index < n):
        raise UsageError(f"atom_index {atom_index} outside 0..{n - 1}")
    params = steady.params
    rates = derive_rates(params)
    z_eq = np.array(steady.state.z)
    center = z_eq[atom_index]
    scan = center + np.linspace(-math.pi, math.pi, grid_points)
    zeros = np.zeros(n)
    force = np.empty(grid_points)
    for k, trial in enumerate(scan):
        z = z_eq.copy()
        z[atom_index] = trial
        sigma = steady_coherences(z, rates, params)
        d = eom_rhs(EnsembleState(z, zeros, sigma), rates, params)
        force[k] = d.dp[atom_index]
    potential = np.concatenate(
        ([0.0], np.cumsum(0.5 * (-force[1:] - force[:-1]) * np.diff(scan))))
    return PotentialCurve(positions=scan, potential=potential,
                          atom_index=atom_index)


def slip_adjacent_atom(state, report, side="left"):
    """State-array index of the atom bordering the first slip.

    ``side='left'`` gives the rightmost atom of the left group (the one the
    collapse analysis targets); ``side='right'`` its neighbor across the gap.
    """
    if report.n_slips == 0:
        raise UsageError("configuration has no phase slip")
    order = np.argsort(state.z)
    rank = report.boundaries[0] if side == "left" else report.boundaries[0] + 1
    return int(order[rank])


# ---------------------------------------------------------------------------
# Chirality quench
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuenchResult:
    """Slip structure versus time after a chirality quench."""

    times: np.ndarray
    slip_counts: np.ndarray
    reports: list               # SlipReport per sample
    crossings: list             # (time, atom label) in crossing order
    collapsed: bool
    collapse_time: float        # nan when no collapse happened
    final_state: EnsembleState


def chirality_quench(steady, chi_r_new, duration=2.0e4, dt=None,
                     max_dt=None, sample_every=10.0, slip_window=(0.55, 0.95)):
    """Continue a converged run with a new chirality and track the slips.

    Records the slip count over time, the order in which atoms cross the
    (first) slip, and whether the configuration collapsed to a single
    lattice.
    """
    params = steady.params.replace(chi_r=chi_r_new)
    rates = derive_rates(params)
    if dt is None:
        dt = default_dt(params.delta)
    stride = max(1, int(round(sample_every / dt)))
    traj = integrate(steady.state.with_values(t=0.0), rates, params,
                     duration=duration, dt=dt, stride=stride, max_dt=max_dt)

    initial_order = np.argsort(traj.z[0])
    initial_report = detect_phase_slips(traj.z[0][initial_order], slip_window)
    left_labels = None
    if initial_report.n_slips:
        boundary = initial_report.boundaries[0]
        left_labels = set(int(a) for a in initial_order[: boundary + 1])

    times = traj.times
    counts = np.empty(traj.n_samples, dtype=int)
    reports = []
    crossings = []
    collapse_time = math.nan
    for k in range(traj.n_samples):
        z = traj.z[k]
        order = np.argsort(z)
        report = detect_phase_slips(z[order], slip_window)
        reports.append(report)
        counts[k] = report.n_slips
        if report.n_slips and left_labels is not None:
            boundary = report.boundaries[0]
            now_left = set(int(a) for a in order[: boundary + 1])
            for label in sorted(left_labels - now_left):
                crossings.append((float(times[k]), label))
            left_labels = now_left
        if report.n_slips == 0 and math.isnan(collapse_time) and initial_report.n_slips:
            collapse_time = float(times[k])
    collapsed = bool(initial_report.n_slips and counts[-1] == 0)
    return QuenchResult(times=times, slip_counts=counts, reports=reports,
                        crossings=crossings, collapsed=collapsed,
                        collapse_time=collapse_time, final_state=traj.final_state)


# ---------------------------------------------------------------------------
# Transplant across a slip
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransplantOutcome:
    result: object              # SteadyStateResult of the re-run
    stable_slip: bool           # converged to a (different) slip configuration
    groups_before: list
    groups_after: list


def transplant_across_slip(steady, atom_index=None, budget=1.0e4,
                           offset=1.0e-6, tolerances=Tolerances(),
                           window=200.0, dt=None, max_dt=None):
    """Move an atom across the phase slip and test the modified configuration.

    Sets the chosen atom's position to its right neighbor's (plus a tiny
    offset so the pair is not exactly coincident), re-runs the steady-state
    search, and reports whether a stable slip configuration with the new
    group split survives.
    """
    z = np.array(steady.state.z)
    order = np.argsort(z)
    report = detect_phase_slips(z[order])
    if report.n_slips == 0:
        raise UsageError("configuration has no phase slip to transplant across")
    if atom_index is None:
        atom_index = slip_adjacent_atom(steady.state, report)
    rank = int(np.flatnonzero(order == atom_index)[0])
    if rank + 1 >= z.size:
        raise UsageError("atom is the rightmost; nothing to transplant onto")
    z[atom_index] = z[order[rank + 1]] + TWO_PI * offset
    moved = EnsembleState(z, steady.state.p, steady.state.sigma)
    result = find_steady(moved, steady.params, budget=budget,
                         tolerances=tolerances, window=window, dt=dt,
                         max_dt=max_dt)
    z_new = np.sort(result.state.z)
    report_after = detect_phase_slips(z_new)
    stable = (result.classification is Classification.STEADY
              and report_after.n_slips > 0)
    return TransplantOutcome(result=result, stable_slip=bool(stable),
                             groups_before=list(report.group_sizes),
                             groups_after=list(report_after.group_sizes))


# ---------------------------------------------------------------------------
# Equilibration-time statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquilibrationStats:
    """Per-atom convergence-time distributions over seeded trials.

    Times are 'latest moment the momentum is more than 1% away from its
    final value', referenced to the first (leftmost) atom of each trial.
    """

    times: np.ndarray           # (trials_used, atoms), reference-subtracted
    medians: np.ndarray
    n_excluded: int


def equilibration_times(params, trials=20, seed=0, budget=2.0e4,
                        threshold=0.01, tolerances=Tolerances(),
                        window=200.0, dt=None, max_dt=None, spread=1.0):
    """Distribution of per-atom equilibration times in the cascaded regime."""
    if params.chi_r != 1.0:
        raise UsageError("equilibration statistics assume chi_r = 1")
    if trials < 1:
        raise UsageError(f"trials must be >= 1, got {trials!r}")
    rates = derive_rates(params)
    if dt is None:
        dt = default_dt(params.delta)
    stride = max(1, int(round(1.0 / dt)))
    rows = []
    excluded = 0
    for trial in range(trials):
        rng = make_rng(seed, trial)
        n = params.n_atoms
        z0 = TWO_PI * (np.arange(n) + spread * rng.random(n))
        state = EnsembleState(z0, np.zeros(n), np.zeros(n, dtype=np.complex128))
        try:
            result = find_steady(state, params, budget=budget,
                                 tolerances=tolerances, window=window, dt=dt,
                                 max_dt=max_dt)
        except DivergenceError:
            excluded += 1
            continue
        if result.classification is not Classification.STEADY:
            excluded += 1
            continue
        traj = integrate(state, rates, params, duration=result.state.t,
                         dt=dt, stride=stride, max_dt=max_dt)
        order = np.argsort(traj.z[-1])
        p_final = traj.p[-1][order]
        scale = np.maximum(np.abs(p_final), 1e-30)
        dev = np.abs(traj.p[:, order] - p_final[None, :]) > threshold * scale[None, :]
        t_conv = np.zeros(n)
        for j in range(n):
            bad = np.flatnonzero(dev[:, j])
            t_conv[j] = traj.times[bad[-1]] if bad.size else traj.times[0]
        rows.append(t_conv - t_conv[0])
    if not rows:
        raise UsageError("no trial converged; nothing to aggregate")
    times = np.array(rows)
    return EquilibrationStats(times=times, medians=np.median(times, axis=0),
                              n_excluded=excluded)


# ---------------------------------------------------------------------------
# Parameter sweeps
# ---------------------------------------------------------------------------

SWEEP_AXES = ("chi_r", "delta", "gamma_1d_frac", "n_atoms", "gamma_p")


@dataclass(frozen=True)
class SweepPoint:
    axis: str
    value: float
    seed: int
    result: object              # AnnealResult or SteadyStateResult
    fractional: np.ndarray | None
    error: str | None


def sweep(params, axis, values, seeds=(0,), anneal=None, budget=1.0e4,
          step=0.5, tolerances=Tolerances(), window=200.0, dt=None,
          max_dt=None, initial=None, spread=1.0):
    """Run the steady-state protocol across a parameter grid.

    Each grid point anneals toward its detuning when the target lies inside
    the +-20 continuation range (or when ``anneal=True`` forces it); far
    targets run a direct seeded search.  Failures are recorded and the sweep
    continues.  Points are deterministic in (seed, value).
    """
    if axis not in SWEEP_AXES:
        raise UsageError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")
    points = []
    for value in values:
        for seed in seeds:
            kw = {axis: int(value) if axis == "n_atoms" else float(value)}
            params_v = params.replace(**kw)
            use_anneal = anneal if anneal is not None else abs(params_v.delta) < 20.0
            try:
                if use_anneal:
                    res = anneal_detuning(params_v, seed=seed, step=step,
                                          budget_per_step=budget,
                                          tolerances=tolerances, window=window,
                                          dt=dt, max_dt=max_dt, initial=initial,
                                          spread=spread)
                    final = res.final
                    frac = final.fractional if final is not None else None
                    err = None if res.converged else (
                        f"not converged at delta = {res.failed_delta:g}")
                else:
                    from .steady import random_initial_state
                    state = random_initial_state(params_v, seed=seed,
                                                 spread=spread)
                    res = find_steady(state, params_v, budget=budget,
                                      tolerances=tolerances, window=window, dt=dt,
                                      max_dt=max_dt)
                    frac = res.fractional
                    err = None if res.classification is Classification.STEADY \
                        else res.classification.value
            except DivergenceError as exc:
                res, frac, err = None, None, str(exc)
            points.append(SweepPoint(axis=axis, value=value, seed=seed,
                                     result=res, fractional=frac, error=err))
    return points
