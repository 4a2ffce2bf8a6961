"""
Equilibrium magnetization with uniaxial anisotropy.

The mean moment is the Gibbs average of the unit moment direction m over the
sphere, with exponent βHᵀm + α_K(nᵀm)². Sphere integrals use a product grid:
Gauss-Legendre nodes in cos θ times a uniform (periodic trapezoid) grid in φ.
The grid is symmetric under m -> -m, so the moment is exactly odd in H.
"""
import logging
from abc import ABC, abstractmethod
from enum import Enum
from functools import lru_cache

import numpy as np

from smkit.config import settings
from smkit.exceptions import ConfigError
from smkit.models.calibration import CalibrationSpec
from smkit.models.particle import (
    DerivedParticleParams,
    FluidMobility,
    ImmobilizedMobility,
    ParticleSpec,
)
from smkit.models.scanner import ScannerSpec
from smkit.services.fieldsim import df_fov, selection_field
from smkit.utils.constants import KB, MU0

logger = logging.getLogger(__name__)

MIN_QUAD_ORDER = 8


class MagnetizationModel(str, Enum):
    ANISOTROPIC = "anisotropic"
    LANGEVIN = "langevin"


class SphereQuadrature:
    """Product quadrature on the unit sphere; weights sum to 4π"""

    def __init__(self, order: int):
        if order < MIN_QUAD_ORDER:
            raise ConfigError(f"quad_order must be >= {MIN_QUAD_ORDER}, got {order}")
        x, w_x = np.polynomial.legendre.leggauss(order)
        n_phi = 2 * order
        phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
        cos_t, phi_grid = np.meshgrid(x, phi, indexing="ij")
        sin_t = np.sqrt(1.0 - cos_t**2)
        self.order = order
        self.nodes = np.stack(
            [sin_t * np.cos(phi_grid), sin_t * np.sin(phi_grid), cos_t], axis=-1
        ).reshape(-1, 3)
        self.weights = np.repeat(w_x, n_phi) * (2.0 * np.pi / n_phi)

    @property
    def size(self) -> int:
        return self.weights.size


@lru_cache(maxsize=8)
def get_sphere_quadrature(order: int) -> SphereQuadrature:
    """Cached quadrature grid"""
    return SphereQuadrature(order)


def _broadcast_inputs(beta_h, alpha, n):
    beta_h = np.asarray(beta_h, dtype=float)
    lead = beta_h.shape[:-1]
    flat_h = beta_h.reshape(-1, 3)
    flat_alpha = np.broadcast_to(np.asarray(alpha, dtype=float), lead).reshape(-1)
    flat_n = np.broadcast_to(np.asarray(n, dtype=float), lead + (3,)).reshape(-1, 3)
    return lead, flat_h, flat_alpha, flat_n


def _shifted_weights(beta_h, alpha, n, quad: SphereQuadrature):
    """
    Gibbs weights w_q·exp(E_q - max E) for flat inputs.

    Returns:
        (shift, weights) with shapes (M,) and (M, nodes)
    """
    exponent = beta_h @ quad.nodes.T
    exponent += alpha[:, None] * (n @ quad.nodes.T) ** 2
    shift = exponent.max(axis=1)
    weights = quad.weights * np.exp(exponent - shift[:, None])
    return shift, weights


def _chunks(total: int, chunk: int):
    for start in range(0, total, chunk):
        yield slice(start, min(start + chunk, total))


def log_partition_function(
    beta_h, alpha_k, n, quad_order: int | None = None, chunk: int | None = None
) -> np.ndarray:
    """ln Z(βH; α_K, n), assembled as shift + ln(sum) so it never overflows"""
    quad = get_sphere_quadrature(quad_order or settings.quad_order)
    chunk = chunk or settings.time_chunk
    lead, flat_h, flat_alpha, flat_n = _broadcast_inputs(beta_h, alpha_k, n)
    out = np.empty(flat_h.shape[0])
    for part in _chunks(flat_h.shape[0], chunk):
        shift, weights = _shifted_weights(flat_h[part], flat_alpha[part], flat_n[part], quad)
        out[part] = shift + np.log(weights.sum(axis=1))
    return out.reshape(lead)


def partition_function(beta_h, alpha_k, n, quad_order: int | None = None) -> np.ndarray:
    """
    Z(βH; α_K, n) = ∫_{S²} exp(βHᵀm + α_K(nᵀm)²) dm.

    A non-finite result means the partition function itself overflows float64;
    use log_partition_function in that regime.
    """
    return np.exp(log_partition_function(beta_h, alpha_k, n, quad_order))


def mean_moment(
    params: DerivedParticleParams,
    h,
    alpha_k,
    n,
    quad_order: int | None = None,
    chunk: int | None = None,
) -> np.ndarray:
    """
    Mean magnetic moment m0·⟨m⟩ for fields H (A/m) of shape (..., 3).

    alpha_k broadcasts against H's leading dims and n against H.
    """
    quad = get_sphere_quadrature(quad_order or settings.quad_order)
    chunk = chunk or settings.time_chunk
    beta_h = params.beta * np.asarray(h, dtype=float)
    lead, flat_h, flat_alpha, flat_n = _broadcast_inputs(beta_h, alpha_k, n)
    out = np.empty_like(flat_h)
    for part in _chunks(flat_h.shape[0], chunk):
        _, weights = _shifted_weights(flat_h[part], flat_alpha[part], flat_n[part], quad)
        out[part] = (weights @ quad.nodes) / weights.sum(axis=1)[:, None]
    return params.m0 * out.reshape(lead + (3,))


def moment_jacobian(
    params: DerivedParticleParams,
    h,
    alpha_k,
    n,
    quad_order: int | None = None,
    chunk: int | None = None,
) -> np.ndarray:
    """∂m̄/∂H = m0·β·Cov(m) under the Gibbs weight, shape (..., 3, 3)"""
    quad = get_sphere_quadrature(quad_order or settings.quad_order)
    chunk = chunk or settings.time_chunk
    beta_h = params.beta * np.asarray(h, dtype=float)
    lead, flat_h, flat_alpha, flat_n = _broadcast_inputs(beta_h, alpha_k, n)
    outer = quad.nodes[:, :, None] * quad.nodes[:, None, :]
    out = np.empty((flat_h.shape[0], 3, 3))
    for part in _chunks(flat_h.shape[0], chunk):
        _, weights = _shifted_weights(flat_h[part], flat_alpha[part], flat_n[part], quad)
        norm = weights.sum(axis=1)
        first = (weights @ quad.nodes) / norm[:, None]
        second = np.einsum("mq,qab->mab", weights, outer) / norm[:, None, None]
        out[part] = second - first[:, :, None] * first[:, None, :]
    return params.m0 * params.beta * out.reshape(lead + (3, 3))


def langevin(xi) -> np.ndarray:
    """L(ξ) = coth ξ - 1/ξ, with a series near zero"""
    xi = np.asarray(xi, dtype=float)
    small = np.abs(xi) < 1e-2
    safe = np.where(small, 1.0, xi)
    with np.errstate(over="ignore"):
        exact = 1.0 / np.tanh(safe) - 1.0 / safe
    series = xi / 3.0 - xi**3 / 45.0 + 2.0 * xi**5 / 945.0
    return np.where(small, series, exact)


def langevin_derivative(xi) -> np.ndarray:
    """L'(ξ) = 1/ξ² - 1/sinh² ξ, with a series near zero"""
    xi = np.asarray(xi, dtype=float)
    small = np.abs(xi) < 1e-2
    safe = np.where(small, 1.0, xi)
    with np.errstate(over="ignore"):
        exact = 1.0 / safe**2 - 1.0 / np.sinh(safe) ** 2
    series = 1.0 / 3.0 - xi**2 / 15.0 + 2.0 * xi**4 / 189.0
    return np.where(small, series, exact)


def langevin_moment(params: DerivedParticleParams, h) -> np.ndarray:
    """Closed-form isotropic mean moment m0·L(β|H|)·Ĥ"""
    h = np.asarray(h, dtype=float)
    magnitude = np.linalg.norm(h, axis=-1)
    xi = params.beta * magnitude
    safe = np.where(magnitude > 0, magnitude, 1.0)
    direction = np.where(magnitude[..., None] > 0, h / safe[..., None], 0.0)
    return params.m0 * langevin(xi)[..., None] * direction


def langevin_jacobian(params: DerivedParticleParams, h) -> np.ndarray:
    """Closed-form ∂m̄/∂H of the isotropic model"""
    h = np.asarray(h, dtype=float)
    magnitude = np.linalg.norm(h, axis=-1)
    xi = params.beta * magnitude
    safe = np.where(magnitude > 0, magnitude, 1.0)
    direction = h / safe[..., None]
    parallel = direction[..., :, None] * direction[..., None, :]
    eye = np.eye(3)
    small = xi < 1e-2
    # L(ξ)/ξ, finite at ξ = 0
    ratio = np.where(
        small,
        1.0 / 3.0 - xi**2 / 45.0 + 2.0 * xi**4 / 945.0,
        langevin(xi) / np.where(small, 1.0, xi),
    )
    longitudinal = langevin_derivative(xi)[..., None, None] * parallel
    transverse = ratio[..., None, None] * (eye - parallel)
    return params.m0 * params.beta * (longitudinal + transverse)


def derive_params(spec: ParticleSpec) -> DerivedParticleParams:
    """m0 = π d³ M_S / 6, β = μ0 m0 / (k_B T), α = K V / (k_B T)"""
    if spec.core_diameter <= 0:
        raise ConfigError("core diameter must be positive")
    volume = np.pi * spec.core_diameter**3 / 6.0
    thermal = KB * spec.temperature
    m0 = volume * spec.saturation_magnetization
    return DerivedParticleParams(
        m0=m0,
        beta=MU0 * m0 / thermal,
        alpha_max=spec.anisotropy_constant * volume / thermal,
    )


class AnisotropyField(ABC):
    """Maps positions (..., 3) to (α_K of shape (...), n of shape (..., 3))"""

    @abstractmethod
    def __call__(self, r) -> tuple[np.ndarray, np.ndarray]: ...


class ConstantAnisotropy(AnisotropyField):
    """Immobilized particles: fixed easy axis and anisotropy"""

    def __init__(self, alpha: float, axis):
        self.alpha = float(alpha)
        self.axis = np.asarray(axis, dtype=float)

    def __call__(self, r):
        lead = np.shape(r)[:-1]
        return np.full(lead, self.alpha), np.broadcast_to(self.axis, lead + (3,)).copy()


class SelectionFieldAnisotropy(AnisotropyField):
    """
    Fluid particles: easy axis along the selection field,
    α_K(r) = α_max·(|H_SF(r)| / H_max)^q.
    """

    def __init__(self, scanner: ScannerSpec, alpha_max: float, q: float, h_max: float):
        if h_max <= 0:
            raise ConfigError("normalization field of the anisotropy law must be positive")
        self.scanner = scanner
        self.alpha_max = float(alpha_max)
        self.q = float(q)
        self.h_max = float(h_max)

    def __call__(self, r):
        h_sf = selection_field(self.scanner, r)
        magnitude = np.linalg.norm(h_sf, axis=-1)
        at_ffp = magnitude == 0
        safe = np.where(at_ffp, 1.0, magnitude)
        axis = np.where(at_ffp[..., None], np.array([0.0, 0.0, 1.0]), h_sf / safe[..., None])
        alpha = np.where(at_ffp, 0.0, self.alpha_max * (magnitude / self.h_max) ** self.q)
        return alpha, axis


def anisotropy_field(
    spec: ParticleSpec,
    scanner: ScannerSpec,
    calibration: CalibrationSpec | None = None,
) -> AnisotropyField:
    """
    Spatial anisotropy of the particle system.

    Fluid particles normalize the modulation law at the corner of the
    calibration FOV farthest from the FFP, or at the drive-field FOV corner
    when no calibration is given.
    """
    params = derive_params(spec)
    mobility = spec.mobility
    if isinstance(mobility, ImmobilizedMobility):
        return ConstantAnisotropy(params.alpha_max, mobility.easy_axis)
    if isinstance(mobility, FluidMobility):
        if calibration is not None:
            corner = np.abs(np.asarray(calibration.center)) + np.asarray(calibration.fov) / 2.0
        else:
            corner = df_fov(scanner) / 2.0
        h_max = float(np.linalg.norm(selection_field(scanner, corner)))
        return SelectionFieldAnisotropy(scanner, params.alpha_max, mobility.q, h_max)
    raise ConfigError(f"unknown mobility {mobility!r}")
