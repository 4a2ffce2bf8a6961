"""
Tests for the equilibrium magnetization models
"""
import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from smkit.exceptions import ConfigError
from smkit.models import CalibrationSpec, FluidMobility, ParticleSpec
from smkit.services.magnetization import (
    ConstantAnisotropy,
    SelectionFieldAnisotropy,
    SphereQuadrature,
    anisotropy_field,
    derive_params,
    get_sphere_quadrature,
    langevin,
    langevin_derivative,
    langevin_jacobian,
    langevin_moment,
    log_partition_function,
    mean_moment,
    moment_jacobian,
    partition_function,
)
from smkit.services.paramspace import fwhm_resolution


def random_directions(rng, count):
    v = rng.standard_normal((count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@pytest.fixture
def params(particle):
    return derive_params(particle)


@pytest.mark.unit
class TestSphereQuadrature:
    """Test the product quadrature"""

    def test_weights_sum_to_sphere_area(self):
        """Test that the weights integrate 1 to 4π"""
        quad = SphereQuadrature(16)

        assert quad.weights.sum() == pytest.approx(4 * np.pi, rel=1e-12)
        assert quad.size == 16 * 32

    def test_nodes_on_unit_sphere(self):
        quad = get_sphere_quadrature(12)

        assert np.allclose(np.linalg.norm(quad.nodes, axis=1), 1.0)

    def test_second_moments(self):
        """Test ∫ m mᵀ dm = 4π/3 I"""
        quad = SphereQuadrature(16)
        second = np.einsum("q,qa,qb->ab", quad.weights, quad.nodes, quad.nodes)

        assert np.allclose(second, 4 * np.pi / 3 * np.eye(3))

    def test_low_order_rejected(self):
        with pytest.raises(ConfigError):
            SphereQuadrature(4)

    def test_isotropic_partition_function(self):
        """Test Z = 4π sinh(x)/x for a field along x without anisotropy"""
        z = partition_function(np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]), 0.0, [0.0, 0.0, 1.0], quad_order=16)

        assert z[0] == pytest.approx(4 * np.pi, rel=1e-12)
        assert z[1] == pytest.approx(4 * np.pi * np.sinh(2.0) / 2.0, rel=1e-10)


@pytest.mark.unit
class TestDerivedParams:
    """Test particle-derived constants"""

    def test_20nm_particle(self, params):
        """Test m0 = π d³ M_S / 6 and the β of a 20 nm core"""
        m0 = np.pi * (20e-9) ** 3 / 6 * 474000.0

        assert params.m0 == pytest.approx(m0)
        assert params.beta == pytest.approx(4 * np.pi * 1e-7 * m0 / (1.380649e-23 * 293.0))
        assert params.alpha_max == 0.0

    def test_anisotropy_scales_with_volume(self):
        """Test α = K V / (k_B T)"""
        spec = ParticleSpec(core_diameter=20e-9, anisotropy_constant=3000.0)
        volume = np.pi * (20e-9) ** 3 / 6

        assert derive_params(spec).alpha_max == pytest.approx(3000.0 * volume / (1.380649e-23 * 293.0))


@pytest.mark.unit
class TestLangevin:
    """Test the closed-form isotropic model"""

    def test_origin(self):
        assert langevin(0.0) == 0.0
        assert langevin_derivative(0.0) == pytest.approx(1.0 / 3.0)

    def test_series_is_continuous(self):
        """Test that the small-argument series joins the closed form"""
        below, above = langevin([0.0099999, 0.0100001])

        assert above - below == pytest.approx(0.0000002 / 3, rel=1e-3)

    def test_saturation(self):
        """Test L(ξ) -> 1 - 1/ξ for large ξ"""
        assert langevin(1e3) == pytest.approx(1 - 1e-3)
        assert langevin(-1e3) == pytest.approx(-(1 - 1e-3))

    def test_derivative_matches_finite_difference(self):
        xi = np.linspace(0.05, 20, 40)
        h = 1e-6
        numeric = (langevin(xi + h) - langevin(xi - h)) / (2 * h)

        assert np.allclose(langevin_derivative(xi), numeric, rtol=1e-6)

    def test_jacobian_matches_finite_difference(self, params, rng):
        """Test the closed-form ∂m̄/∂H"""
        h = random_directions(rng, 5) * rng.uniform(100, 20000, size=(5, 1))
        delta = 1e-3
        numeric = np.stack(
            [
                (langevin_moment(params, h + delta * e) - langevin_moment(params, h - delta * e))
                / (2 * delta)
                for e in np.eye(3)
            ],
            axis=-1,
        )

        assert np.allclose(
            langevin_jacobian(params, h), numeric, rtol=1e-5, atol=1e-6 * params.m0 * params.beta
        )

    def test_jacobian_at_zero_field(self, params):
        """Test the finite isotropic susceptibility at H = 0"""
        jacobian = langevin_jacobian(params, np.zeros(3))

        assert np.allclose(jacobian, params.m0 * params.beta / 3 * np.eye(3))

    def test_fwhm_of_20nm_particle(self, params):
        """Test that the 1D kernel FWHM is about 8.48 mm at 1 T/m/μ0"""
        gradient = 1.0 / (4 * np.pi * 1e-7)
        x = np.linspace(-0.03, 0.03, 60001)
        h = np.zeros((x.size, 3))
        h[:, 0] = gradient * x
        kernel = langevin_jacobian(params, h)[:, 0, 0]
        above = x[kernel >= kernel.max() / 2]
        width = above[-1] - above[0]

        assert width == pytest.approx(8.48e-3, rel=0.05)
        assert fwhm_resolution(params, gradient) == pytest.approx(width, rel=0.05)


@pytest.mark.unit
class TestAnisotropicMoment:
    """Test the quadrature-based Gibbs average"""

    def test_reduces_to_langevin_without_anisotropy(self, params, rng):
        """Test α_K = 0 against the closed form"""
        magnitudes = np.geomspace(1e-3, 50, 25) / params.beta
        h = random_directions(rng, 25) * magnitudes[:, None]
        n = random_directions(rng, 25)

        quadrature = mean_moment(params, h, 0.0, n, quad_order=48)

        assert np.allclose(quadrature, langevin_moment(params, h), rtol=1e-8, atol=1e-12 * params.m0)

    def test_rotation_equivariance(self, params, rng):
        """Test m̄(RH; Rn) = R m̄(H; n) for random rotations"""
        rotations = Rotation.from_rotvec(rng.normal(size=(6, 3))).as_matrix()
        h = random_directions(rng, 6) * rng.uniform(0.5, 20, size=(6, 1)) / params.beta
        n = random_directions(rng, 6)
        alpha = rng.uniform(0, 10, size=6)

        base = mean_moment(params, h, alpha, n, quad_order=48)
        rotated = mean_moment(
            params,
            np.einsum("mab,mb->ma", rotations, h),
            alpha,
            np.einsum("mab,mb->ma", rotations, n),
            quad_order=48,
        )

        assert np.allclose(rotated, np.einsum("mab,mb->ma", rotations, base), rtol=0, atol=1e-9 * params.m0)

    def test_moment_bounded_by_m0(self, params, rng):
        h = random_directions(rng, 50) * rng.uniform(0, 50, size=(50, 1)) / params.beta
        alpha = rng.uniform(0, 25, size=50)
        n = random_directions(rng, 50)

        moment = mean_moment(params, h, alpha, n, quad_order=24)

        assert np.all(np.linalg.norm(moment, axis=1) <= params.m0 * (1 + 1e-12))

    def test_moment_is_odd_in_field(self, params, rng):
        """Test m̄(-H) = -m̄(H) on the symmetric grid"""
        h = random_directions(rng, 10) * 5 / params.beta
        n = random_directions(rng, 10)

        plus = mean_moment(params, h, 5.0, n, quad_order=16)
        minus = mean_moment(params, -h, 5.0, n, quad_order=16)

        assert np.allclose(plus, -minus, rtol=1e-10, atol=1e-14 * params.m0)

    def test_moment_is_gradient_of_log_partition(self, params, rng):
        """Test ⟨m⟩ = ∇ ln Z by central differences in βH"""
        beta_h = random_directions(rng, 8) * rng.uniform(0.5, 30, size=(8, 1))
        alpha = rng.uniform(0, 25, size=8)
        n = random_directions(rng, 8)
        step = 1e-5

        gradient = np.stack(
            [
                (
                    log_partition_function(beta_h + step * e, alpha, n, quad_order=24)
                    - log_partition_function(beta_h - step * e, alpha, n, quad_order=24)
                )
                / (2 * step)
                for e in np.eye(3)
            ],
            axis=-1,
        )
        moment = mean_moment(params, beta_h / params.beta, alpha, n, quad_order=24) / params.m0

        error = np.linalg.norm(gradient - moment, axis=1)
        assert np.all(error <= 1e-4 * np.linalg.norm(moment, axis=1) + 1e-7)

    def test_jacobian_matches_finite_difference(self, params, rng):
        h = random_directions(rng, 4) * 3 / params.beta
        n = random_directions(rng, 4)
        delta = 1e-4 / params.beta

        numeric = np.stack(
            [
                (
                    mean_moment(params, h + delta * e, 8.0, n, quad_order=16)
                    - mean_moment(params, h - delta * e, 8.0, n, quad_order=16)
                )
                / (2 * delta)
                for e in np.eye(3)
            ],
            axis=-1,
        )
        jacobian = moment_jacobian(params, h, 8.0, n, quad_order=16)

        assert np.allclose(jacobian, numeric, rtol=1e-5, atol=1e-7 * params.m0 * params.beta)

    def test_jacobian_is_symmetric_psd(self, params, rng):
        """Test that ∂m̄/∂H is a scaled covariance"""
        h = random_directions(rng, 6) * 2 / params.beta
        n = random_directions(rng, 6)
        jacobian = moment_jacobian(params, h, 12.0, n, quad_order=16)

        assert np.allclose(jacobian, np.swapaxes(jacobian, -1, -2))
        assert np.all(np.linalg.eigvalsh(jacobian) >= -1e-12 * params.m0 * params.beta)

    def test_large_fields_do_not_overflow(self, params):
        """Test the shifted exponent at β|H| far beyond float range of exp"""
        h = np.array([[2000.0, 0.0, 0.0]]) / params.beta

        moment = mean_moment(params, h, 50.0, np.array([0.0, 0.0, 1.0]), quad_order=48)

        assert np.all(np.isfinite(moment))
        assert moment[0, 0] == pytest.approx(params.m0, rel=1e-2)


@pytest.mark.unit
class TestAnisotropyField:
    """Test the spatial anisotropy laws"""

    def test_immobilized_is_constant(self, scanner_2d):
        spec = ParticleSpec(core_diameter=20e-9, anisotropy_constant=3000.0)
        field = anisotropy_field(spec, scanner_2d)
        alpha, axis = field(np.zeros((4, 3)))

        assert isinstance(field, ConstantAnisotropy)
        assert np.all(alpha == derive_params(spec).alpha_max)
        assert np.allclose(axis, [0.0, 0.0, 1.0])

    def test_fluid_vanishes_at_ffp(self, scanner_2d):
        """Test α = 0 and the fallback axis at the field-free point"""
        spec = ParticleSpec(
            core_diameter=20e-9, anisotropy_constant=3000.0, mobility=FluidMobility(q=1.0)
        )
        alpha, axis = anisotropy_field(spec, scanner_2d)(np.zeros(3))

        assert alpha == 0.0
        assert np.allclose(axis, [0.0, 0.0, 1.0])

    def test_fluid_reaches_maximum_at_corner(self, scanner_2d):
        """Test α = α_max at the calibration corner, axis along H_SF"""
        spec = ParticleSpec(
            core_diameter=20e-9, anisotropy_constant=3000.0, mobility=FluidMobility(q=0.7)
        )
        calibration = CalibrationSpec(fov=(0.03, 0.02, 0.0), grid_size=(5, 5, 1))
        field = anisotropy_field(spec, scanner_2d, calibration)
        alpha, axis = field(np.array([0.015, 0.01, 0.0]))

        assert isinstance(field, SelectionFieldAnisotropy)
        assert alpha == pytest.approx(derive_params(spec).alpha_max)
        assert np.allclose(axis, -np.array([0.015, 0.01, 0.0]) / np.hypot(0.015, 0.01))
