"""Unit tests for the signal model and the parametric dictionary."""

import numpy as np
import pytest

from sure_ir.model import (
    TWO_PI,
    atom,
    atom_derivative,
    atoms_matrix,
    build_dictionary,
    circular_distance,
    instance_from_freqs,
    random_instance,
    synthesize,
    uniform_grid,
    wrap_frequency,
)


class TestAtom:
    def test_zero_frequency_is_all_ones(self):
        np.testing.assert_allclose(atom(0.0, [1, 2, 3]), np.ones(3), atol=1e-15)

    def test_pi_values(self):
        np.testing.assert_allclose(atom(np.pi, [1, 2]), [-1.0, 1.0], atol=1e-12)

    def test_direct_evaluation(self):
        got = atom(0.7, [1, 5])
        expect = np.exp(-1j * np.array([0.7, 3.5]))
        np.testing.assert_allclose(got, expect, rtol=1e-15)

    def test_unit_modulus(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            omega = rng.uniform(0, TWO_PI)
            a = atom(omega, [1, 3, 8, 21])
            np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-12)

    def test_empty_indices_rejected(self):
        with pytest.raises(ValueError):
            atom(0.3, [])


class TestAtomDerivative:
    def test_zero_frequency(self):
        np.testing.assert_allclose(
            atom_derivative(0.0, [1, 2]), [-1j, -2j], atol=1e-15
        )

    def test_at_pi_single_index(self):
        np.testing.assert_allclose(atom_derivative(np.pi, [1]), [1j], atol=1e-12)

    def test_matches_finite_difference(self):
        rng = np.random.default_rng(1)
        idx = [1, 2, 5, 11]
        h = 1e-6
        for _ in range(100):
            omega = rng.uniform(0, TWO_PI)
            numeric = (atom(omega + h, idx) - atom(omega - h, idx)) / (2 * h)
            analytic = atom_derivative(omega, idx)
            err = np.max(np.abs(numeric - analytic)) / np.max(np.abs(analytic))
            assert err <= 1e-6


class TestUniformGrid:
    def test_n4(self):
        np.testing.assert_allclose(
            uniform_grid(4), [0.0, np.pi / 2, np.pi, 3 * np.pi / 2]
        )

    def test_n1(self):
        np.testing.assert_allclose(uniform_grid(1), [0.0])

    def test_spacing_n64(self):
        g = uniform_grid(64)
        np.testing.assert_allclose(np.diff(g), TWO_PI / 64)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            uniform_grid(0)


class TestBuildDictionary:
    def test_all_ones_column(self):
        d = build_dictionary([0.0], range(1, 5))
        np.testing.assert_allclose(d.matrix(), np.ones((4, 1)), atol=1e-15)

    def test_full_grid_orthogonal_columns(self):
        d = build_dictionary(uniform_grid(4), range(1, 5))
        gram = d.matrix().conj().T @ d.matrix()
        off = gram - np.diag(np.diag(gram))
        assert np.max(np.abs(off)) <= 1e-10 * 4

    def test_repeated_frequency_duplicates_column(self):
        d = build_dictionary([0.5, 0.5], [1, 2, 3])
        mat = d.matrix()
        np.testing.assert_array_equal(mat[:, 0], mat[:, 1])

    def test_duplicate_indices_rejected(self):
        with pytest.raises(ValueError):
            build_dictionary([0.1], [1, 1, 2])

    def test_shapes(self):
        d = build_dictionary(uniform_grid(8), [1, 4, 9], t=16)
        assert d.matrix().shape == (3, 8)
        assert d.derivative_matrix().shape == (3, 8)
        assert d.t == 16


class TestSynthesize:
    def test_single_dc_tone(self):
        np.testing.assert_allclose(synthesize([0.0], [1.0], 3), np.ones(3))

    def test_two_tone_cancellation(self):
        got = synthesize([0.0, np.pi], [1.0, 1.0], 2)
        np.testing.assert_allclose(got, [0.0, 2.0], atol=1e-12)

    def test_round_trip_identity(self):
        inst = random_instance(3, 40, 40, None, 5)
        recon = synthesize(inst.true_freqs, inst.true_amps, inst.t)
        assert np.max(np.abs(recon - inst.full_signal)) <= 1e-12

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            synthesize([0.1, 0.2], [1.0], 8)


class TestRandomInstance:
    def test_noiseless_observations_on_mixture(self):
        inst = random_instance(2, 32, 8, None, 3)
        assert inst.noise_variance == 0.0
        clean = synthesize(inst.true_freqs, inst.true_amps, inst.t)
        np.testing.assert_allclose(
            inst.observations, clean[inst.sample_indices - 1], atol=1e-12
        )

    def test_psnr_definition(self):
        inst = random_instance(1, 64, 16, 25.0, 0)
        assert inst.noise_variance == pytest.approx(10 ** (-2.5))

    def test_same_seed_is_bit_identical(self):
        a = random_instance(3, 64, 30, 25.0, 42)
        b = random_instance(3, 64, 30, 25.0, 42)
        np.testing.assert_array_equal(a.full_signal, b.full_signal)
        np.testing.assert_array_equal(a.sample_indices, b.sample_indices)
        np.testing.assert_array_equal(a.true_freqs, b.true_freqs)

    def test_observation_restriction_invariant(self):
        inst = random_instance(4, 50, 20, 10.0, 9)
        np.testing.assert_array_equal(
            inst.observations, inst.full_signal[inst.sample_indices - 1]
        )
        assert inst.m == 20 and inst.k == 4
        assert np.all(np.diff(inst.sample_indices) > 0)

    def test_unit_modulus_amplitudes(self):
        inst = random_instance(5, 64, 10, 25.0, 11)
        np.testing.assert_allclose(np.abs(inst.true_amps), 1.0, atol=1e-12)
        assert np.all(inst.true_freqs >= 0) and np.all(inst.true_freqs < TWO_PI)

    def test_m_larger_than_t_rejected(self):
        with pytest.raises(ValueError):
            random_instance(1, 8, 9, None, 0)

    def test_fixed_freq_instance(self):
        inst = instance_from_freqs([0.3, 0.5], 32, 10, None, 4)
        np.testing.assert_allclose(inst.true_freqs, [0.3, 0.5])


class TestWrapping:
    def test_wrap_range(self):
        assert wrap_frequency(TWO_PI + 0.1) == pytest.approx(0.1)
        assert wrap_frequency(-0.1) == pytest.approx(TWO_PI - 0.1)

    def test_circular_distance_wraps(self):
        assert circular_distance(0.01, TWO_PI - 0.01) == pytest.approx(0.02)

    def test_atoms_matrix_matches_atom(self):
        th = [0.2, 1.1]
        idx = [2, 5, 7]
        mat = atoms_matrix(th, idx)
        np.testing.assert_array_equal(mat[:, 0], atom(0.2, idx))
        np.testing.assert_array_equal(mat[:, 1], atom(1.1, idx))
