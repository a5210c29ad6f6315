"""Analytic gradients against central finite differences."""

import numpy as np
import pytest

from sure_ir.mmv import f_theta_mmv, grad_f_mmv
from sure_ir.model import TWO_PI, random_instance
from sure_ir.oracle import fd_gradient, sweep_f_theta_1d
from sure_ir.solver import WeightMatrix, f_theta, grad_f, weight_matrix


def _case(rng, ell=None):
    m = int(rng.integers(4, 12))
    n = int(rng.integers(2, 8))
    idx = np.sort(rng.choice(4 * m, size=m, replace=False) + 1)
    theta = rng.uniform(0, TWO_PI, size=n)
    z = 0.5 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    w = weight_matrix(z, 10.0 ** rng.uniform(-4, 0))
    lam = 10.0 ** rng.uniform(-1, 2)
    if ell is None:
        y = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    else:
        y = rng.standard_normal((m, ell)) + 1j * rng.standard_normal((m, ell))
    return idx, theta, y, w, lam


class TestGradF:
    def test_zero_observation_gives_zero_gradient(self):
        rng = np.random.default_rng(0)
        idx, theta, _, w, lam = _case(rng)
        g = grad_f(theta, w, lam, np.zeros(idx.size), idx)
        np.testing.assert_allclose(g, 0.0, atol=1e-14)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            idx, theta, y, w, lam = _case(rng)
            ana = grad_f(theta, w, lam, y, idx)
            num = fd_gradient(lambda th: f_theta(th, w, lam, y, idx), theta, 1e-6)
            scale = max(np.max(np.abs(num)), 1e-10)
            assert np.max(np.abs(ana - num)) / scale <= 1e-5

    def test_stationary_at_sweep_minimizer(self):
        inst = random_instance(1, 64, 16, None, 3)
        w = WeightMatrix(diag=np.array([1.0]))
        lam = 50.0
        omega, _ = sweep_f_theta_1d(
            inst.observations, inst.sample_indices, w, lam, 1 << 20
        )
        g = grad_f([omega], w, lam, inst.observations, inst.sample_indices)
        y2 = float(np.vdot(inst.observations, inst.observations).real)
        assert abs(g[0]) <= 1e-4 * y2


class TestGradFMmv:
    def test_zero_observation(self):
        rng = np.random.default_rng(4)
        idx, theta, _, w, lam = _case(rng, ell=3)
        g = grad_f_mmv(theta, w, lam, np.zeros((idx.size, 3)), idx)
        np.testing.assert_allclose(g, 0.0, atol=1e-14)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            ell = int(rng.integers(1, 5))
            idx, theta, y, w, lam = _case(rng, ell=ell)
            ana = grad_f_mmv(theta, w, lam, y, idx)
            num = fd_gradient(
                lambda th: f_theta_mmv(th, w, lam, y, idx), theta, 1e-6
            )
            scale = max(np.max(np.abs(num)), 1e-10)
            assert np.max(np.abs(ana - num)) / scale <= 1e-5

    def test_equals_sum_of_per_column_gradients(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            idx, theta, y, w, lam = _case(rng, ell=4)
            joint = grad_f_mmv(theta, w, lam, y, idx)
            split = sum(grad_f(theta, w, lam, y[:, j], idx) for j in range(4))
            np.testing.assert_allclose(joint, split, rtol=1e-10, atol=1e-12)
