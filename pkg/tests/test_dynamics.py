import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chiralsim.core import EnsembleState, PhysicalParams, derive_rates
from chiralsim.dynamics import (Jacobian, default_dt, dt_max, eom_rhs,
                                integrate, jacobian, steady_coherences)
from chiralsim.errors import DivergenceError, SingularSystemError, UsageError


def random_state(n, seed=0, span=30.0):
    rng = np.random.default_rng(seed)
    z = np.sort(rng.uniform(0.0, span, n))
    p = 0.1 * rng.normal(size=n)
    sigma = 0.1 * (rng.normal(size=n) + 1j * rng.normal(size=n))
    return EnsembleState(z, p, sigma)


def params_for(n, **kw):
    defaults = dict(n_atoms=n, gamma_1d_frac=0.25, chi_r=0.6, delta=2.0,
                    gamma_p=0.1, omega_r=3.0e-4)
    defaults.update(kw)
    return PhysicalParams(**defaults)


class TestEomRhs:
    def test_pure_damping(self):
        params = params_for(2, chi_r=0.5, delta=0.0, omega=0.0)
        rates = derive_rates(params)
        state = EnsembleState([1.0, 4.0], [1.0, -1.0], [0.0, 0.0])
        d = eom_rhs(state, rates, params)
        assert np.allclose(d.dp, [-0.1, 0.1])
        assert np.allclose(d.dsigma, 0.0)
        assert np.allclose(d.dz, 2.0 * params.omega_r * state.p)

    def test_single_atom_recoil(self):
        params = params_for(1, chi_r=1.0, delta=0.0, omega=0.0, gamma_p=0.0)
        rates = derive_rates(params)
        d = eom_rhs(EnsembleState([0.0], [0.0], [0.1j]), rates, params)
        assert np.allclose(d.dp, [-2.5e-3])

    def test_single_atom_pump(self):
        params = params_for(1, chi_r=1.0, delta=0.0, omega=0.05)
        rates = derive_rates(params)
        d = eom_rhs(EnsembleState([0.0], [0.0], [0.0]), rates, params)
        assert np.allclose(d.dsigma, [0.05j])

    def test_symmetric_limit_matches_reference(self):
        # Independent O(N^2) reference for chi_r = 0: only the Gamma_L terms.
        params = params_for(6, chi_r=0.0)
        rates = derive_rates(params)
        state = random_state(6, seed=3)
        d = eom_rhs(state, rates, params)
        z, sig = state.z, state.sigma
        gl = rates.gamma_l
        dsig_ref = np.empty(6, dtype=complex)
        dp_ref = np.empty(6)
        for j in range(6):
            exch = sum(sig[i] * np.exp(1j * abs(z[j] - z[i]))
                       for i in range(6) if i != j)
            dsig_ref[j] = (1j * params.delta - 0.5) * sig[j] \
                + 1j * params.omega - gl * exch
            force = sum((sig[i] * np.conj(sig[j]) * np.exp(1j * abs(z[j] - z[i]))
                         * np.sign(z[j] - z[i])).real for i in range(6) if i != j)
            dp_ref[j] = -2.0 * gl * force - params.gamma_p * state.p[j]
        assert np.allclose(d.dsigma, dsig_ref, atol=1e-13)
        assert np.allclose(d.dp, dp_ref, atol=1e-13)

    def test_cascade_has_no_upstream_influence(self):
        # chi_r = 1: the leftmost atom's derivatives ignore everyone else.
        params = params_for(4, chi_r=1.0)
        rates = derive_rates(params)
        state = random_state(4, seed=5)
        d_full = eom_rhs(state, rates, params)
        lone = EnsembleState(state.z[:1], state.p[:1], state.sigma[:1])
        d_lone = eom_rhs(lone, rates, params)
        assert np.isclose(d_full.dsigma[0], d_lone.dsigma[0])
        assert np.isclose(d_full.dp[0], d_lone.dp[0])

    @given(st.floats(-40.0, 40.0))
    @settings(max_examples=25, deadline=None)
    def test_translation_invariance(self, shift):
        params = params_for(5)
        rates = derive_rates(params)
        state = random_state(5, seed=2)
        moved = state.with_values(z=state.z + shift)
        a = eom_rhs(state, rates, params)
        b = eom_rhs(moved, rates, params)
        assert np.allclose(a.dp, b.dp, atol=1e-12)
        assert np.allclose(a.dsigma, b.dsigma, atol=1e-12)

    def test_coincident_atoms_have_no_ordered_coupling(self):
        # Ties: zero chiral weight and sgn 0, but full symmetric exchange.
        params = params_for(2, chi_r=1.0, omega=0.0, gamma_p=0.0)
        rates = derive_rates(params)
        state = EnsembleState([5.0, 5.0], [0.0, 0.0], [0.1, 0.1j])
        d = eom_rhs(state, rates, params)
        # gamma_l = 0 at chi_r = 1, so coincident atoms decouple entirely
        assert np.allclose(d.dsigma, (1j * params.delta - 0.5) * state.sigma)
        assert np.allclose(d.dp, [-0.25 * 0.01, -0.25 * 0.01])


class TestIntegrate:
    def test_exponential_momentum_decay(self):
        params = params_for(2, chi_r=0.5, delta=0.0, omega=0.0, gamma_p=0.5)
        rates = derive_rates(params)
        state = EnsembleState([0.0, 7.0], [1.0, -2.0], [0.0, 0.0])
        traj = integrate(state, rates, params, duration=10.0, dt=5e-3)
        expected = state.p * math.exp(-params.gamma_p * 10.0)
        assert np.allclose(traj.p[-1], expected, rtol=1e-6)

    def test_single_atom_coherence_fixed_point(self):
        params = params_for(1, delta=0.0, omega=0.05)
        rates = derive_rates(params)
        traj = integrate(EnsembleState([0.0], [0.0], [0.0]), rates, params,
                         duration=40.0, dt=5e-3, stride=100)
        assert abs(traj.sigma[-1, 0] - 0.1j) < 1e-8

    def test_rk4_order(self):
        # Richardson comparison: halving dt must cut the error vs a dt/16
        # reference by at least 12x (ideal 16x for a 4th-order method).
        params = params_for(3, chi_r=0.5, delta=2.0, gamma_p=0.2, omega_r=0.01)
        rates = derive_rates(params)
        state = random_state(3, seed=9, span=15.0)

        def final(dt):
            traj = integrate(state, rates, params, duration=2.0, dt=dt)
            return np.concatenate([traj.z[-1], traj.p[-1],
                                   traj.sigma[-1].real, traj.sigma[-1].imag])

        ref = final(2.0e-3 / 16.0)
        err1 = np.max(np.abs(final(2.0e-3) - ref))
        err2 = np.max(np.abs(final(1.0e-3) - ref))
        assert err1 / err2 >= 12.0

    def test_bitwise_deterministic(self):
        params = params_for(4)
        rates = derive_rates(params)
        state = random_state(4, seed=1)
        t1 = integrate(state, rates, params, duration=5.0, dt=5e-3, stride=10)
        t2 = integrate(state, rates, params, duration=5.0, dt=5e-3, stride=10)
        assert (t1.z == t2.z).all() and (t1.p == t2.p).all() \
            and (t1.sigma == t2.sigma).all()

    def test_divergence_raises_with_time(self):
        # Undamped runaway under a huge artificial kick.
        params = params_for(1, chi_r=1.0, omega=0.0, gamma_p=0.0, omega_r=0.01)
        rates = derive_rates(params)
        state = EnsembleState([0.0], [9.9e5], [0.0])
        with pytest.raises(DivergenceError) as err:
            integrate(state, rates, params, duration=2000.0, dt=5e-3)
        assert err.value.t > 0.0

    def test_dt_ceiling_enforced(self):
        params = params_for(1, delta=20.0)
        rates = derive_rates(params)
        state = EnsembleState([0.0], [0.0], [0.0])
        assert dt_max(20.0) == pytest.approx(1e-3)
        with pytest.raises(UsageError):
            integrate(state, rates, params, duration=1.0, dt=5e-3)
        integrate(state, rates, params, duration=1.0, dt=5e-3, max_dt=5e-3)

    def test_default_dt_shrinks_off_resonance(self):
        assert default_dt(1.0) == 5e-3
        assert default_dt(20.0) == pytest.approx(1e-3)

    def test_saturation_flag_set(self):
        params = params_for(1, delta=0.0, omega=0.4)
        rates = derive_rates(params)
        traj = integrate(EnsembleState([0.0], [0.0], [0.0]), rates, params,
                         duration=20.0, dt=5e-3)
        assert traj.saturated  # sigma -> 0.8i, beyond the 0.5 guard


class TestSteadyCoherences:
    def test_single_atom(self):
        params = params_for(1, delta=0.0, omega=0.05)
        rates = derive_rates(params)
        sigma = steady_coherences(np.array([0.0]), rates, params)
        assert np.allclose(sigma, [0.1j])

    def test_cascade_leftmost_is_single_atom(self):
        params = params_for(2, chi_r=1.0, delta=3.0)
        rates = derive_rates(params)
        lone = steady_coherences(np.array([0.0]), rates, params)
        for z1 in (1.0, 2.5, 6.0):
            pair = steady_coherences(np.array([0.0, z1]), rates, params)
            assert np.isclose(pair[0], lone[0])

    def test_far_detuned_uniform(self):
        params = params_for(10, chi_r=1.0, delta=1.0e3)
        rates = derive_rates(params)
        rng = np.random.default_rng(0)
        z = np.sort(rng.uniform(0.0, 60.0, 10))
        sigma = steady_coherences(z, rates, params)
        s0 = params.omega / math.sqrt(params.delta**2 + 0.25)
        assert (np.abs(np.abs(sigma) - s0) / s0 < 0.01).all()

    def test_rhs_residual_consistency(self):
        params = params_for(8)
        rates = derive_rates(params)
        rng = np.random.default_rng(4)
        z = np.sort(rng.uniform(0.0, 50.0, 8))
        sigma, residual = steady_coherences(z, rates, params, with_residual=True)
        assert residual < 1e-12
        state = EnsembleState(z, np.zeros(8), sigma)
        d = eom_rhs(state, rates, params)
        assert np.max(np.abs(d.dsigma)) < 1e-10


class TestJacobian:
    def pack(self, state):
        return np.concatenate([state.z, state.p, state.sigma.real,
                               state.sigma.imag])

    def rhs_vector(self, x, n, rates, params):
        state = EnsembleState(x[:n], x[n:2 * n],
                              x[2 * n:3 * n] + 1j * x[3 * n:])
        d = eom_rhs(state, rates, params)
        return np.concatenate([d.dz, d.dp, d.dsigma.real, d.dsigma.imag])

    def test_position_rows_linear_in_momentum(self):
        params = params_for(4)
        rates = derive_rates(params)
        jac = jacobian(random_state(4, seed=6), rates, params).matrix
        n = 4
        assert np.allclose(jac[:n, n:2 * n], 2.0 * params.omega_r * np.eye(n))
        assert np.allclose(jac[:n, :n], 0.0)
        assert np.allclose(jac[:n, 2 * n:], 0.0)

    def test_matches_finite_differences(self):
        n = 5
        params = params_for(n)
        rates = derive_rates(params)
        state = random_state(n, seed=7)
        jac = jacobian(state, rates, params).matrix
        x0 = self.pack(state)
        h = 1e-6
        fd = np.empty((4 * n, 4 * n))
        for k in range(4 * n):
            e = np.zeros(4 * n)
            e[k] = h
            fd[:, k] = (self.rhs_vector(x0 + e, n, rates, params)
                        - self.rhs_vector(x0 - e, n, rates, params)) / (2 * h)
        scale = np.abs(fd).max()
        assert np.abs(jac - fd).max() / scale < 1e-5

    def test_translation_zero_mode(self):
        # The dynamics are invariant under a global shift, so the uniform
        # translation vector is an exact null direction of the Jacobian.
        n = 5
        params = params_for(n, chi_r=0.0, delta=20.0)
        rates = derive_rates(params)
        state = random_state(n, seed=8)
        jac = jacobian(state, rates, params).matrix
        v = np.zeros(4 * n)
        v[:n] = 1.0
        assert np.abs(jac @ v).max() < 1e-12
