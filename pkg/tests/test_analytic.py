import math

import numpy as np
import pytest

from chiralsim.analytic import (ChiralSteadySolution, chiral_steady_any_detuning,
                                mode_frequencies, stability_ratio, temperature,
                                ws_chiral_positions, ws_energy_scaling,
                                ws_symmetric_positions)
from chiralsim.core import PhysicalParams, circular_distance
from chiralsim.errors import InfiniteTemperatureError, UsageError

TWO_PI = 2.0 * math.pi


class TestWsChiralPositions:
    def test_golden_first_fractions(self):
        # f1 exact by symmetry; f2 and f3 frozen from hand evaluation of the
        # recursion (atan2(-1, 1) - pi/2 -> 5/8; the next step gives 0.52704...).
        ws = ws_chiral_positions(4)
        assert ws.f[0] == 1.0
        assert ws.f[1] == 0.75
        assert abs(ws.f[2] - 0.625) < 1e-12
        assert abs(ws.f[3] - 0.5270433619923478) < 1e-9

    def test_fractions_in_half_open_interval(self):
        ws = ws_chiral_positions(200)
        assert (ws.f > 0.0).all() and (ws.f <= 1.0).all()

    def test_stationarity_residual_vanishes(self):
        ws = ws_chiral_positions(64)
        for j in range(1, 64):
            resid = np.real(np.sum(np.exp(1j * TWO_PI * (ws.f[j] - ws.f[:j]))))
            assert abs(resid) < 1e-10

    def test_sqrt_chain(self):
        ws = ws_chiral_positions(64)
        phases = np.exp(1j * TWO_PI * ws.f)
        for j in range(1, 64):
            assert abs(abs(phases[:j].sum()) - math.sqrt(j)) < 1e-10

    def test_energies_follow_sqrt_law(self):
        ws = ws_chiral_positions(32, chi=0.25)
        expected = -2.0 * 0.25 * np.sqrt(np.arange(32))
        assert np.allclose(ws.energies, expected, atol=1e-12)

    def test_single_atom_has_zero_energy(self):
        assert ws_chiral_positions(1).total_energy == 0.0


class TestWsSymmetricPositions:
    def test_n2_spacing(self):
        f = ws_symmetric_positions(2)
        assert math.isclose(f[0] - f[1], 0.25)  # spacing 0.75 lambda

    def test_n50_spacing(self):
        f = ws_symmetric_positions(50)
        spacing = 1.0 + np.diff(f)  # next wavelength cell
        assert np.allclose(spacing, 0.99)

    def test_large_n_limit(self):
        f = ws_symmetric_positions(10000)
        assert math.isclose(1.0 + (f[1] - f[0]), 1.0, abs_tol=1e-4)

    def test_rejects_single_atom(self):
        with pytest.raises(UsageError):
            ws_symmetric_positions(1)


class TestEnergyScaling:
    def test_exponent_three_halves(self):
        # Independent oracle: the partial sums of sqrt(j) approach (2/3) N^(3/2).
        n_list = list(range(50, 201, 25))
        totals = [2.0 * 0.25 * np.sqrt(np.arange(n)).sum() for n in n_list]
        slope_oracle = np.polyfit(np.log(n_list), np.log(totals), 1)[0]
        slope = ws_energy_scaling(n_list)
        assert abs(slope - slope_oracle) < 1e-9
        assert abs(slope - 1.5) < 0.02

    def test_too_few_points(self):
        with pytest.raises(UsageError):
            ws_energy_scaling([50, 100])


class TestChiralSteadyAnyDetuning:
    def test_single_atom_drift(self):
        params = PhysicalParams(n_atoms=1, chi_r=1.0, delta=3.0, gamma_p=0.1)
        sol = chiral_steady_any_detuning(1, params)
        s0_sq = params.omega**2 / (params.delta**2 + 0.25)
        assert math.isclose(abs(sol.sigma[0])**2, s0_sq, rel_tol=1e-12)
        assert math.isclose(sol.drift_momentum, -0.25 * s0_sq / 0.1, rel_tol=1e-12)

    def test_matches_weak_scattering_far_detuned(self):
        params = PhysicalParams(n_atoms=10, chi_r=1.0, delta=20.0)
        sol = chiral_steady_any_detuning(10, params)
        ws = ws_chiral_positions(10)
        assert circular_distance(sol.f, ws.f).max() < 0.02

    def test_monotone_approach_to_weak_scattering(self):
        ws = ws_chiral_positions(10)
        devs = []
        for delta in (20.0, 50.0, 100.0):
            sol = chiral_steady_any_detuning(
                10, PhysicalParams(n_atoms=10, chi_r=1.0, delta=delta))
            devs.append(circular_distance(sol.f, ws.f).max())
        assert devs[0] > devs[1] > devs[2]

    def test_residuals_small(self):
        params = PhysicalParams(n_atoms=20, chi_r=1.0, delta=-2.0)
        sol = chiral_steady_any_detuning(20, params)
        assert sol.residuals.max() < 1e-8

    def test_requires_pure_chirality(self):
        with pytest.raises(UsageError):
            chiral_steady_any_detuning(
                5, PhysicalParams(n_atoms=5, chi_r=0.5, delta=5.0))


class TestModeFrequencies:
    def test_fourth_root_scaling(self):
        params = PhysicalParams(n_atoms=5, chi_r=1.0, delta=20.0, omega_r=3e-4)
        w = mode_frequencies(5, params)
        assert math.isclose(w[3] / w[0], math.sqrt(2.0), rel_tol=1e-12)

    def test_first_frequency_value(self):
        params = PhysicalParams(n_atoms=2, gamma_1d_frac=0.25, chi_r=1.0,
                                delta=20.0, omega_r=3.0e-4)
        w = mode_frequencies(2, params)
        # sqrt(4 * 0.25 * 0.01 * 3e-4) = sqrt(3e-6)
        assert math.isclose(w[0], math.sqrt(3.0e-6), rel_tol=1e-6)
        assert math.isclose(w[0], 1.73e-3, rel_tol=2e-3)

    def test_independent_of_n(self):
        params = PhysicalParams(n_atoms=8, chi_r=1.0, delta=20.0, omega_r=3e-4)
        w_small = mode_frequencies(4, params)
        w_large = mode_frequencies(8, params)
        assert np.allclose(w_small, w_large[:3])


class TestThermodynamics:
    def test_cesium_headline_number(self):
        params = PhysicalParams(n_atoms=1, delta=20.0, gamma_p=0.37)
        t = temperature(params)
        assert abs(t.t_nk_normalized - 0.98) / 0.98 < 0.05

    def test_inverse_proportionality_in_damping(self):
        p1 = PhysicalParams(n_atoms=1, delta=20.0, gamma_p=0.1)
        p2 = p1.replace(gamma_p=0.2)
        assert math.isclose(temperature(p1).t_nk, 2.0 * temperature(p2).t_nk,
                            rel_tol=1e-12)

    def test_zero_pump_is_zero_temperature(self):
        params = PhysicalParams(n_atoms=1, delta=20.0, omega=0.0, gamma_p=0.1)
        assert temperature(params).t_nk == 0.0

    def test_zero_damping_raises(self):
        with pytest.raises(InfiniteTemperatureError):
            temperature(PhysicalParams(n_atoms=1, gamma_p=0.0))

    def test_stability_ratio_values(self):
        base = PhysicalParams(n_atoms=1, gamma_1d_frac=0.25, omega_r=1e-3)
        assert math.isclose(stability_ratio(base.replace(gamma_p=1e-3)), 0.5)
        assert math.isclose(stability_ratio(base.replace(gamma_p=1e-2)), 5.0)
        assert stability_ratio(base.replace(gamma_1d_frac=0.0)) == 0.0

    def test_identity_with_temperature(self):
        # E1/(kB T) = 2 chi gamma_p / (omega_r Gamma_tot) at chi = Gamma_1D
        params = PhysicalParams(n_atoms=1, gamma_1d_frac=0.25, chi_r=1.0,
                                delta=7.0, gamma_p=0.05, omega_r=4e-4)
        e1 = 2.0 * 0.25 * params.s0**2
        kbt = temperature(params).kbt_hbar_gamma
        assert math.isclose(e1 / kbt, stability_ratio(params), rel_tol=1e-12)
