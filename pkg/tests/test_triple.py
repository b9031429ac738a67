import numpy as np
import pytest

from utils.exceptions import ValidationError
from utils.orlicz import PowerSum
from utils.triple import (SpectralDomain, apply_L, apply_Linv, bump_field, eigenmode_field, h_inner,
                          h_norm, l2_inner, pairing_via_h, pairing_vstar_v, project, random_field,
                          v_norm)


class TestSpectralDomain:
    def test_grid(self):
        dom = SpectralDomain(9)
        assert dom.h == pytest.approx(0.1)
        np.testing.assert_allclose(dom.x, np.arange(1, 10) / 10)

    def test_fractional_eigenvalues(self):
        dom = SpectralDomain(16, alpha=0.5)
        np.testing.assert_allclose(dom.eigenvalues, np.sqrt(dom.fd_eigenvalues))

    def test_first_eigenvalue_close_to_continuum(self):
        dom = SpectralDomain(255)
        assert dom.eigenvalues[0] == pytest.approx(np.pi ** 2, rel=1e-4)

    def test_basis_is_orthonormal(self, dom32):
        gram = dom32.h * dom32.basis @ dom32.basis.T
        np.testing.assert_allclose(gram, np.eye(32), atol=1e-12)

    def test_spectral_round_trip(self, dom32, rng):
        values = rng.standard_normal(32)
        np.testing.assert_allclose(dom32.from_spectral(dom32.to_spectral(values)), values, atol=1e-12)

    def test_operator_matrix_is_three_point_laplacian(self):
        dom = SpectralDomain(12)
        lap = (np.diag(-2.0 * np.ones(12)) + np.diag(np.ones(11), 1) + np.diag(np.ones(11), -1)) / dom.h ** 2
        np.testing.assert_allclose(dom.operator_matrix(), lap, atol=1e-8)

    @pytest.mark.parametrize("bad", [0, -3, 2.5])
    def test_rejects_bad_grid(self, bad):
        with pytest.raises(ValidationError):
            SpectralDomain(bad)

    def test_rejects_alpha_out_of_range(self):
        with pytest.raises(ValidationError):
            SpectralDomain(8, alpha=1.5)

    def test_arrays_are_read_only(self, dom32):
        with pytest.raises(ValueError):
            dom32.eigenvalues[0] = 0.0


class TestInnerProducts:
    def test_h_orthonormal_basis(self, dom32):
        e = [dom32.h_orthonormal_field(k) for k in (1, 2, 5)]
        gram = np.array([[h_inner(dom32, a, b) for b in e] for a in e])
        np.testing.assert_allclose(gram, np.eye(3), atol=1e-12)

    def test_h_inner_is_l2_of_inverse(self, dom32, rng):
        u, v = random_field(dom32, rng), random_field(dom32, rng)
        assert h_inner(dom32, u, v) == pytest.approx(-l2_inner(dom32, apply_Linv(dom32, u), v), rel=1e-10)

    def test_L_and_Linv_are_inverse(self, dom32, rng):
        u = random_field(dom32, rng)
        np.testing.assert_allclose(apply_Linv(dom32, apply_L(dom32, u)).values, u.values, atol=1e-12)

    @pytest.mark.parametrize("alpha", [1.0, 0.5])
    def test_pairing_routes_agree(self, alpha, rng):
        dom = SpectralDomain(128, alpha)
        for _ in range(1000):
            v = random_field(dom, rng, amplitude=10 ** rng.uniform(-1, 1))
            u = random_field(dom, rng)
            psi = dom.field(v.values * np.abs(v.values))
            a, b = pairing_vstar_v(dom, psi, u), pairing_via_h(dom, psi, u)
            assert a == pytest.approx(b, rel=1e-9, abs=1e-12)

    def test_pme_pairing_is_dissipative(self, dom32, rng):
        u = random_field(dom32, rng)
        psi = dom32.field(u.values * np.abs(u.values))
        assert pairing_vstar_v(dom32, psi, u) <= 0.0

    def test_v_norm_combines_both_parts(self, dom32, bump32):
        N = PowerSum([1.0], [3.0])
        assert v_norm(dom32, N, None, bump32) > h_norm(dom32, bump32) > 0.0

    @pytest.mark.parametrize("alpha", [1.0, 0.5])
    def test_h_norm_bounded_by_l2(self, alpha, rng):
        dom = SpectralDomain(32, alpha)
        lam1 = dom.eigenvalues[0]
        for _ in range(100):
            u = random_field(dom, rng, decay=rng.uniform(0.0, 2.0))
            assert h_norm(dom, u) <= np.sqrt(l2_inner(dom, u, u) / lam1) * (1 + 1e-12)


class TestFields:
    def test_arithmetic(self, dom32, rng):
        u, v = random_field(dom32, rng), random_field(dom32, rng)
        np.testing.assert_allclose((u + v - v).values, u.values, atol=1e-12)
        np.testing.assert_allclose((2.0 * u).values, 2.0 * u.values)
        np.testing.assert_allclose((-u).coefficients, -u.coefficients)

    def test_project(self, dom32, rng):
        u = random_field(dom32, rng)
        p = project(dom32, 4, u)
        assert np.all(p.coefficients[4:] == 0.0)
        np.testing.assert_allclose(p.coefficients[:4], u.coefficients[:4])

    def test_project_is_idempotent_contraction(self, dom32, rng):
        for _ in range(100):
            u = random_field(dom32, rng, decay=rng.uniform(0.0, 2.0))
            n = int(rng.integers(1, 33))
            p = project(dom32, n, u)
            np.testing.assert_array_equal(project(dom32, n, p).coefficients, p.coefficients)
            assert h_norm(dom32, p) <= h_norm(dom32, u) * (1 + 1e-12)

    @pytest.mark.parametrize("n", [0, 33])
    def test_project_out_of_range(self, dom32, n):
        with pytest.raises(ValidationError):
            project(dom32, n, dom32.zeros())

    def test_bump_peak(self):
        dom = SpectralDomain(31)
        f = bump_field(dom, 0.5, 0.25, 2.0)
        assert f.max_norm() == pytest.approx(2.0)
        assert f.values[0] == 0.0

    def test_eigenmode(self, dom32):
        f = eigenmode_field(dom32, 3, 0.5)
        expected = np.zeros(32)
        expected[2] = 0.5
        np.testing.assert_allclose(f.coefficients, expected)

    def test_eigenmode_out_of_range(self, dom32):
        with pytest.raises(ValidationError):
            eigenmode_field(dom32, 40)

    def test_field_shape_checked(self, dom32):
        with pytest.raises(ValidationError):
            dom32.field(np.zeros(5))
