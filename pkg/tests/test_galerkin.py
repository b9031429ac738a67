import logging

import numpy as np
import pytest

from utils.drift import DriftSpec, PsiSpec
from utils.exceptions import (ConvergenceError, StabilityError, UnsupportedSchemeError,
                              ValidationError)
from utils.galerkin import (GalerkinEngine, StepperConfig, monte_carlo, observable, run_ensemble,
                            simulate, simulate_pair, step_explicit, step_semi_implicit)
from utils.noise import NoiseSpec
from utils.triple import SpectralDomain, bump_field, eigenmode_field, h_norm
from utils.verify import max_distance_increase


class TestStepperConfig:
    def test_horizon_must_be_multiple_of_dt(self):
        with pytest.raises(ValidationError):
            StepperConfig(dt=0.3, T=1.0, n_modes=2)

    def test_save_indices_keep_final_step(self):
        cfg = StepperConfig(dt=0.1, T=1.0, n_modes=2, save_every=3)
        np.testing.assert_array_equal(cfg.save_indices, [0, 3, 6, 9, 10])

    def test_unknown_scheme(self):
        with pytest.raises(ValidationError):
            StepperConfig(dt=0.1, T=1.0, n_modes=2, scheme="rk4")


class TestDeterministicSteps:
    def test_zero_horizon_single_state(self, dom32, pme, additive_noise, bump32):
        traj = simulate(StepperConfig(dt=1e-3, T=0.0, n_modes=6), dom32, pme, additive_noise, bump32, 0)
        assert traj.times.tolist() == [0.0]
        assert len(traj.to_frame()) == 1

    def test_zero_drift_and_noise_is_constant(self, dom32, no_noise, bump32):
        zero = DriftSpec(psi=PsiSpec(terms=()))
        cfg = StepperConfig(dt=1e-3, T=0.05, n_modes=32)
        traj = simulate(cfg, dom32, zero, no_noise, bump32, 0)
        np.testing.assert_allclose(traj.coefficients, np.repeat(bump32.coefficients[None], 51, axis=0),
                                   atol=1e-14)

    def test_explicit_linear_single_mode(self, dom32, linear, no_noise):
        X0 = eigenmode_field(dom32, 1)
        cfg = StepperConfig(dt=1e-3, T=0.1, n_modes=1)
        traj = simulate(cfg, dom32, linear, no_noise, X0, 0)
        lam = dom32.eigenvalues[0]
        np.testing.assert_allclose(traj.coefficients[:, 0], (1 - lam * 1e-3) ** np.arange(101), rtol=1e-12)

    def test_semi_implicit_linear_is_implicit_euler(self, dom32, linear, no_noise):
        X0 = eigenmode_field(dom32, 2)
        cfg = StepperConfig(dt=1e-2, T=0.1, n_modes=32, scheme="semi_implicit")
        traj = simulate(cfg, dom32, linear, no_noise, X0, 0)
        lam = dom32.eigenvalues[1]
        np.testing.assert_allclose(traj.coefficients[:, 1], (1 + lam * 1e-2) ** -np.arange(11.0), rtol=1e-9)

    def test_stability_guard(self, dom32, pme, no_noise, bump32):
        cfg = StepperConfig(dt=1e-2, T=0.1, n_modes=32)
        with pytest.raises(StabilityError) as info:
            simulate(cfg, dom32, pme, no_noise, bump32, 0)
        assert info.value.step == 1

    def test_newton_iteration_limit(self, dom32, pme, no_noise, bump32):
        cfg = StepperConfig(dt=1e-2, T=0.1, n_modes=32, scheme="semi_implicit", implicit_max_iter=1)
        with pytest.raises(ConvergenceError):
            simulate(cfg, dom32, pme, no_noise, bump32, 0)

    def test_single_steps_agree_with_engine(self, dom32, pme, additive_noise, bump32):
        dW = np.array([0.01, -0.02, 0.0, 0.03, 0.0, 0.01])
        a = step_explicit(dom32, pme, additive_noise, 0.0, bump32, dW, 1e-4, n_modes=6)
        b = step_explicit(dom32, pme, additive_noise, 0.0, bump32, dW, 1e-4, n_modes=6)
        np.testing.assert_array_equal(a.values, b.values)
        assert np.all(a.coefficients[6:] == 0.0)

    def test_semi_implicit_refuses_fractional_operator(self, pme, bump32):
        dom = SpectralDomain(32, alpha=0.5)
        with pytest.raises(UnsupportedSchemeError):
            step_semi_implicit(dom, pme, NoiseSpec.from_decay(0.0, 1.0, 1), 0.0,
                               dom.field(bump32.values), np.zeros(1), 1e-3)

    def test_fractional_falls_back_to_explicit(self, pme, caplog):
        dom = SpectralDomain(16, alpha=0.5)
        cfg = StepperConfig(dt=1e-3, T=1e-2, n_modes=4, scheme="semi_implicit")
        with caplog.at_level(logging.WARNING):
            engine = GalerkinEngine(cfg, dom, pme, NoiseSpec.from_decay(0.0, 1.0, 1))
        assert engine.scheme == "explicit"
        assert "explícito" in caplog.text

    def test_fast_diffusion_guard_names_semi_implicit(self, dom32, fast_diffusion, no_noise):
        cfg = StepperConfig(dt=1e-3, T=1e-2, n_modes=8)
        with pytest.raises(StabilityError, match="requiere el esquema semi-implícito"):
            simulate(cfg, dom32, fast_diffusion, no_noise, dom32.zeros(), 0)

    def test_fractional_fast_diffusion_is_unsupported(self, fast_diffusion, no_noise):
        dom = SpectralDomain(16, alpha=0.5)
        cfg = StepperConfig(dt=1e-3, T=1e-2, n_modes=4, scheme="semi_implicit")
        with pytest.raises(StabilityError, match="fraccionaria no está soportada") as info:
            simulate(cfg, dom, fast_diffusion, no_noise, dom.zeros(), 0)
        assert info.value.step == 1

    def test_schemes_agree_to_second_order(self, pme, no_noise):
        dom = SpectralDomain(16)
        X0 = bump_field(dom, 0.5, 0.3, 1.0)
        gaps = []
        for dt in (2e-5, 1e-5, 5e-6):
            a = step_explicit(dom, pme, no_noise, 0.0, X0, np.zeros(1), dt)
            b = step_semi_implicit(dom, pme, no_noise, 0.0, X0, np.zeros(1), dt, tol=1e-13)
            gaps.append(h_norm(dom, a - b))
        assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.15)
        assert gaps[1] / gaps[2] == pytest.approx(4.0, rel=0.15)


class TestDissipation:
    def test_porous_medium_norm_decreases(self, dom32, pme, no_noise, bump32):
        cfg = StepperConfig(dt=1e-3, T=0.2, n_modes=32, scheme="semi_implicit")
        traj = simulate(cfg, dom32, pme, no_noise, bump32, 0)
        norms = [h_norm(dom32, s) for s in traj.states]
        assert np.all(np.diff(norms) < 0)

    def test_fast_diffusion_semi_implicit_runs(self, dom32, fast_diffusion, no_noise, bump32):
        cfg = StepperConfig(dt=1e-3, T=0.02, n_modes=32, scheme="semi_implicit")
        traj = simulate(cfg, dom32, fast_diffusion, no_noise, bump32, 0)
        assert np.all(np.isfinite(traj.coefficients))
        assert traj.state(-1).max_norm() < bump32.max_norm()

    def test_pathwise_non_expansive_semi_implicit(self, dom32, pme, additive_noise, bump32):
        Y0 = bump_field(dom32, 0.4, 0.2, 0.5)
        cfg = StepperConfig(dt=1e-3, T=0.05, n_modes=32, scheme="semi_implicit")
        x, y = simulate_pair(cfg, dom32, pme, additive_noise, bump32, Y0, seed=4)
        assert max_distance_increase(x, y) <= 1e-12

    def test_strong_error_decreases_with_dt(self, dom32, pme, additive_noise, bump32):
        # todos los niveles comparten el movimiento browniano de paso 2e-3
        def terminal(level, path):
            cfg = StepperConfig(dt=2e-3 / 2 ** level, T=0.1, n_modes=6)
            return simulate(cfg, dom32, pme, additive_noise, bump32, 21, path, level).state(-1)

        errors = []
        for level in (0, 1, 2):
            errors.append(np.mean([h_norm(dom32, terminal(level, p) - terminal(4, p)) for p in range(4)]))
        assert errors[0] > errors[1] > errors[2] > 0.0


class TestReproducibility:
    def test_same_seed_same_path(self, dom32, pme, additive_noise, bump32):
        cfg = StepperConfig(dt=2e-3, T=0.02, n_modes=6)
        a = simulate(cfg, dom32, pme, additive_noise, bump32, 9, path_idx=3)
        b = simulate(cfg, dom32, pme, additive_noise, bump32, 9, path_idx=3)
        np.testing.assert_array_equal(a.coefficients, b.coefficients)

    def test_identical_starts_stay_identical(self, dom32, pme, additive_noise, bump32):
        cfg = StepperConfig(dt=2e-3, T=0.02, n_modes=6)
        x, y = simulate_pair(cfg, dom32, pme, additive_noise, bump32, bump32, seed=1)
        np.testing.assert_array_equal(x.coefficients, y.coefficients)

    def test_thread_count_does_not_change_result(self, linear):
        dom = SpectralDomain(8)
        noise = NoiseSpec.from_decay(0.5, 0.0, 2)
        cfg = StepperConfig(dt=1e-3, T=0.01, n_modes=2)
        X0 = eigenmode_field(dom, 1)
        one = run_ensemble(cfg, dom, linear, noise, X0, 5, 300, ("mode_1",), threads=1)
        many = run_ensemble(cfg, dom, linear, noise, X0, 5, 300, ("mode_1",), threads=3)
        np.testing.assert_array_equal(one.values["mode_1"], many.values["mode_1"])

    def test_ensemble_path_matches_single_simulation(self, linear):
        dom = SpectralDomain(8)
        noise = NoiseSpec.from_decay(0.5, 0.0, 2)
        cfg = StepperConfig(dt=1e-3, T=0.01, n_modes=2)
        X0 = eigenmode_field(dom, 1)
        ens = run_ensemble(cfg, dom, linear, noise, X0, 5, 4, ("mode_1",), first_path=10)
        traj = simulate(cfg, dom, linear, noise, X0, 5, path_idx=12)
        np.testing.assert_allclose(ens.values["mode_1"][2], traj.coefficients[:, 0], rtol=1e-12)


class TestEnsembles:
    def test_monte_carlo_table(self, dom32, pme, additive_noise, bump32):
        cfg = StepperConfig(dt=2e-3, T=0.02, n_modes=6, save_every=5)
        table = monte_carlo(cfg, 20, ("h_norm_sq", "R", "max_norm"), dom32, pme, additive_noise, bump32, 3)
        assert list(table["t"]) == pytest.approx([0.0, 0.01, 0.02])
        assert {"h_norm_sq_mean", "h_norm_sq_var", "h_norm_sq_se", "R_mean"} <= set(table.columns)
        assert table["h_norm_sq_var"].iloc[0] == 0.0

    def test_ensemble_needs_two_paths(self, dom32, pme, additive_noise, bump32):
        with pytest.raises(ValidationError):
            run_ensemble(StepperConfig(dt=1e-3, T=0.01, n_modes=6), dom32, pme, additive_noise,
                         bump32, 0, 1, ("h_norm_sq",))

    def test_pair_observable_needs_pairs(self, dom32, pme, additive_noise, bump32):
        with pytest.raises(ValidationError):
            run_ensemble(StepperConfig(dt=1e-3, T=0.01, n_modes=6), dom32, pme, additive_noise,
                         bump32, 0, 2, ("diff_h_norm_sq",))

    def test_observable_registry(self, dom32):
        coefs = np.zeros((1, 32))
        coefs[0, 2] = 3.0
        assert observable("mode_3")(dom32, None, coefs, None)[0] == 3.0
        assert observable("h_coord_3")(dom32, None, coefs, None)[0] == pytest.approx(
            3.0 / np.sqrt(dom32.eigenvalues[2]))
        with pytest.raises(ValidationError):
            observable("energy")

    def test_additive_linear_mean_decays(self, linear):
        dom = SpectralDomain(8)
        noise = NoiseSpec.from_decay(0.5, 0.0, 1)
        cfg = StepperConfig(dt=1e-3, T=0.1, n_modes=1, save_every=100)
        ens = run_ensemble(cfg, dom, linear, noise, eigenmode_field(dom, 1), 2, 2000, ("mode_1",))
        expected = (1 - dom.eigenvalues[0] * 1e-3) ** 100
        assert abs(ens.mean("mode_1")[-1] - expected) < 3.0 * ens.se("mode_1")[-1]

    def test_doubling_paths_halves_variance_of_mean(self, linear):
        dom = SpectralDomain(8)
        noise = NoiseSpec.from_decay(0.5, 0.0, 1)
        cfg = StepperConfig(dt=1e-3, T=0.1, n_modes=1, save_every=100)
        a = 1 - dom.eigenvalues[0] * 1e-3
        exact_var = 0.25 * 1e-3 * np.sum(a ** (2 * np.arange(100)))
        se_sq = []
        for n in (2000, 4000):
            ens = run_ensemble(cfg, dom, linear, noise, eigenmode_field(dom, 1), 8, n, ("mode_1",))
            se_sq.append(ens.se("mode_1")[-1] ** 2)
            assert se_sq[-1] == pytest.approx(exact_var / n, rel=0.1)
        assert se_sq[0] / se_sq[1] == pytest.approx(2.0, rel=0.15)
