import numpy as np
import pytest

from utils.exceptions import ValidationError
from utils.noise import (BrownianPath, MultFactor, NoiseSpec, apply_B, hs0_sq, hs_norm_sq,
                         sample_increment)
from utils.triple import SpectralDomain, h_norm, random_field


class TestMultFactor:
    def test_bounds(self):
        rho = MultFactor(0.5, 2.0, 3.0)
        x = np.linspace(0.0, 100.0, 11)
        assert rho(0.0) == pytest.approx(2.0)
        assert np.all((rho(x) >= 0.5) & (rho(x) <= 2.0))

    def test_lipschitz(self):
        assert MultFactor(0.5, 2.0, 3.0).lipschitz == pytest.approx(4.5)
        assert MultFactor.constant(0.7).lipschitz == 0.0

    def test_rejects_inverted_bounds(self):
        with pytest.raises(ValidationError):
            MultFactor(2.0, 1.0)

    def test_hilbert_schmidt_lipschitz(self, dom32, rng):
        mult = MultFactor(0.5, 2.0, 3.0)
        spec = NoiseSpec.from_decay(1.0, 1.0, 5, mult)
        bound = mult.lipschitz * np.sqrt(hs0_sq(spec, dom32))
        for _ in range(200):
            u = random_field(dom32, rng, amplitude=10 ** rng.uniform(-2, 1))
            v = random_field(dom32, rng, amplitude=10 ** rng.uniform(-2, 1))
            # ‖B(u) − B(v)‖²_HS sumado sobre la base canónica de los modos de ruido
            hs_diff = sum(h_norm(dom32, apply_B(spec, dom32, u, e) - apply_B(spec, dom32, v, e)) ** 2
                          for e in np.eye(spec.n_modes))
            assert np.sqrt(hs_diff) <= bound * h_norm(dom32, u - v) * (1 + 1e-9)


class TestNoiseSpec:
    def test_decay_rule(self):
        spec = NoiseSpec.from_decay(0.1, 2.0, 4)
        np.testing.assert_allclose(spec.sigma, 0.1 * np.arange(1, 5) ** -2.0)
        assert spec.is_additive and not spec.is_zero

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValidationError):
            NoiseSpec(np.array([0.1, -0.1]))

    def test_too_many_modes_for_grid(self):
        spec = NoiseSpec.from_decay(1.0, 1.0, 10)
        with pytest.raises(ValidationError):
            spec.check_domain(SpectralDomain(8))

    def test_hilbert_schmidt_norm(self, dom32):
        spec = NoiseSpec.from_decay(0.5, 1.0, 3, MultFactor(0.5, 1.0, 1.0))
        expected = np.sum(spec.sigma ** 2 / dom32.eigenvalues[:3])
        assert hs0_sq(spec, dom32) == pytest.approx(expected)
        X = dom32.basis_field(1)
        rho = spec.mult(h_norm(dom32, X))
        assert hs_norm_sq(spec, dom32, X) == pytest.approx(rho ** 2 * expected)

    def test_apply_B(self, dom32):
        spec = NoiseSpec.from_decay(2.0, 0.0, 3)
        out = apply_B(spec, dom32, dom32.zeros(), np.array([1.0, -1.0, 0.5]))
        np.testing.assert_allclose(out.coefficients[:4], [2.0, -2.0, 1.0, 0.0])

    def test_apply_B_checks_dimension(self, dom32):
        spec = NoiseSpec.from_decay(1.0, 1.0, 3)
        with pytest.raises(ValidationError):
            apply_B(spec, dom32, dom32.zeros(), np.ones(4))

    def test_zero_step_increment(self, rng):
        spec = NoiseSpec.from_decay(1.0, 1.0, 3)
        assert np.all(sample_increment(spec, 0.0, rng) == 0.0)

    def test_increment_moments(self, rng):
        spec = NoiseSpec.from_decay(1.0, 1.0, 3)
        dt, n = 0.01, 100_000
        dW = np.array([sample_increment(spec, dt, rng) for _ in range(n)])
        assert np.all(np.abs(dW.mean(axis=0)) < 4.0 * np.sqrt(dt / n))
        np.testing.assert_allclose(dW.var(axis=0), dt, rtol=0.05)

    @pytest.mark.parametrize("mult", [MultFactor.constant(1.5), MultFactor(0.5, 2.0, 3.0)])
    def test_ito_isometry(self, dom32, mult):
        spec = NoiseSpec.from_decay(1.0, 0.5, 4, mult)
        dt, n_steps, n_paths = 0.01, 20, 2000
        X0 = dom32.basis_field(1)
        sq, quad = np.empty(n_paths), np.empty(n_paths)
        for i in range(n_paths):
            dW = BrownianPath(3, i, spec.n_modes, dt).increments(n_steps)
            X, q = X0, 0.0
            for k in range(n_steps):
                q += hs_norm_sq(spec, dom32, X) * dt
                X = X + apply_B(spec, dom32, X, dW[k])
            sq[i], quad[i] = h_norm(dom32, X - X0) ** 2, q
        if mult.is_constant:
            np.testing.assert_allclose(quad, n_steps * dt * hs0_sq(spec, dom32) * 1.5 ** 2)
        gap = sq - quad
        assert abs(gap.mean()) < 3.0 * gap.std(ddof=1) / np.sqrt(n_paths)


class TestBrownianPath:
    def test_deterministic(self):
        a = BrownianPath(7, 3, 4, 0.01).increments(10)
        b = BrownianPath(7, 3, 4, 0.01).increments(10)
        np.testing.assert_array_equal(a, b)

    def test_paths_differ(self):
        a = BrownianPath(7, 0, 4, 0.01).increments(10)
        b = BrownianPath(7, 1, 4, 0.01).increments(10)
        assert not np.allclose(a, b)

    @pytest.mark.parametrize("level", [1, 2, 3])
    def test_refinement_sums_to_root(self, level):
        root = BrownianPath(5, 2, 3, 0.02).increments(25)
        fine = BrownianPath(5, 2, 3, 0.02, level).increments(25)
        assert fine.shape == (25 * 2 ** level, 3)
        summed = fine.reshape(25, 2 ** level, 3).sum(axis=1)
        np.testing.assert_allclose(summed, root, atol=1e-13)

    def test_refined_variance(self):
        path = BrownianPath(1, 0, 1, 0.04, level=2)
        dW = path.increments(20000).ravel()
        se = path.dt * np.sqrt(2.0 / dW.size)
        assert abs(dW.var() - path.dt) < 3.0 * se
        assert path.dt == pytest.approx(0.01)
