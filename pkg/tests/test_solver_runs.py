"""End-to-end solver behavior: descent, convergence, pruning, traces."""

import numpy as np
import pytest

from sure_ir.bench import match_frequencies
from sure_ir.model import TWO_PI, circular_distance, random_instance, uniform_grid
from sure_ir.solver import (
    SolverConfig,
    SolverState,
    descent_theta,
    f_theta,
    prune,
    run_sure_ir,
    weight_matrix,
)

FAST = SolverConfig(max_outer_iters=120)


class TestDescentTheta:
    def test_never_increases_reduced_objective(self):
        rng = np.random.default_rng(0)
        cfg = SolverConfig(grad_inner_iters=1)
        for _ in range(50):
            m = int(rng.integers(5, 12))
            n = int(rng.integers(2, 6))
            idx = np.sort(rng.choice(4 * m, size=m, replace=False) + 1)
            y = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            z = 0.5 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
            state = SolverState(
                z_hat=z,
                theta_hat=rng.uniform(0, TWO_PI, size=n),
                lam=10.0 ** rng.uniform(-1, 2),
                epsilon=10.0 ** rng.uniform(-6, 0),
            )
            w = weight_matrix(state.z_hat, state.epsilon)
            before = f_theta(state.theta_hat, w, state.lam, y, idx)
            theta_new = descent_theta(state, cfg, y, idx)
            after = f_theta(theta_new, w, state.lam, y, idx)
            assert after <= before + 1e-12

    def test_zero_observation_leaves_theta_unchanged(self):
        state = SolverState(
            z_hat=np.zeros(3, dtype=complex),
            theta_hat=np.array([0.1, 0.5, 2.0]),
            lam=1.0,
            epsilon=0.5,
        )
        out = descent_theta(state, SolverConfig(), np.zeros(4), [1, 2, 3, 5])
        np.testing.assert_allclose(out, state.theta_hat)

    def test_recovers_single_tone_from_grid_offset(self):
        # one atom initialized one grid cell away converges to the tone
        rng = np.random.default_rng(7)
        idx = np.sort(rng.choice(64, size=16, replace=False) + 1)
        omega_true = 1.234
        y = np.exp(-1j * omega_true * idx.astype(float))
        theta = np.array([omega_true + TWO_PI / 64])
        cfg = SolverConfig()
        state = SolverState(
            z_hat=np.array([1.0 + 0j]), theta_hat=theta, lam=100.0, epsilon=1e-4
        )
        for _ in range(50):
            theta = descent_theta(state, cfg, y, idx)
            state = SolverState(
                z_hat=state.z_hat, theta_hat=theta, lam=100.0, epsilon=1e-4
            )
        assert circular_distance(theta[0], omega_true) <= 1e-4


class TestRunSureIr:
    def test_single_tone_noiseless(self):
        inst = random_instance(1, 64, 8, None, 0)
        est = run_sure_ir(inst.observations, inst.sample_indices, FAST)
        assert est.k_est == 1
        _, err = match_frequencies(inst.true_freqs, est.freqs)
        assert err <= 1e-6

    def test_three_tones_noisy(self):
        inst = random_instance(3, 64, 30, 25.0, 1)
        est = run_sure_ir(inst.observations, inst.sample_indices, FAST)
        assert est.k_est == 3
        _, err = match_frequencies(inst.true_freqs, est.freqs)
        assert err <= 1e-3

    def test_trace_non_increasing(self):
        for seed in range(5):
            inst = random_instance(3, 64, 30, 25.0, seed)
            est = run_sure_ir(inst.observations, inst.sample_indices, FAST)
            steps = np.diff(est.objective_trace)
            assert np.max(steps) <= 1e-9

    def test_trace_non_increasing_noiseless(self):
        inst = random_instance(2, 64, 12, None, 3)
        est = run_sure_ir(inst.observations, inst.sample_indices, FAST)
        assert np.max(np.diff(est.objective_trace)) <= 1e-9

    def test_fixed_lambda_variant_trace(self):
        # adaptive_lambda=False runs with lambda frozen at lambda0
        cfg = SolverConfig(adaptive_lambda=False, lambda0=50.0, max_outer_iters=60)
        inst = random_instance(2, 64, 20, 25.0, 4)
        est = run_sure_ir(inst.observations, inst.sample_indices, cfg)
        assert est.final_lambda == pytest.approx(50.0)
        assert np.max(np.diff(est.objective_trace)) <= 1e-9

    def test_deterministic(self):
        inst = random_instance(3, 64, 30, 25.0, 9)
        a = run_sure_ir(inst.observations, inst.sample_indices, FAST)
        b = run_sure_ir(inst.observations, inst.sample_indices, FAST)
        np.testing.assert_array_equal(a.freqs, b.freqs)
        np.testing.assert_array_equal(a.amps, b.amps)
        np.testing.assert_array_equal(a.objective_trace, b.objective_trace)

    def test_estimates_sorted_by_frequency(self):
        inst = random_instance(3, 64, 30, 25.0, 11)
        est = run_sure_ir(inst.observations, inst.sample_indices, FAST)
        assert np.all(np.diff(est.freqs) >= 0)


class TestPruningSafety:
    def test_true_tones_never_stripped_by_pruning(self):
        # on noiseless K=3 instances with M >= 2K+2, a removal event may
        # take a component near a true frequency only when another
        # retained component stays within the same distance of that
        # frequency (near-duplicate collapse); pruning never removes the
        # last component covering a true tone
        radius = TWO_PI / (4 * 64)
        cfg = SolverConfig(max_outer_iters=120)
        for seed in range(100):
            inst = random_instance(3, 64, 8, None, seed)
            est = run_sure_ir(inst.observations, inst.sample_indices, cfg)
            for _, removed, kept in est.prune_events:
                for omega in inst.true_freqs:
                    if circular_distance(removed, omega).min() <= radius:
                        assert circular_distance(kept, omega).min() <= radius
