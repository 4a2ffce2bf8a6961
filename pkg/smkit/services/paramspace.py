"""
Randomized simulation parameters and dataset manifests.

Each manifest entry draws from its own Philox stream keyed by (seed, id), so
an entry can be regenerated alone and removing entries never shifts others.
"""
import logging

import numpy as np

from smkit.models.calibration import CalibrationSpec
from smkit.models.particle import (
    DerivedParticleParams,
    FluidMobility,
    ImmobilizedMobility,
    ParticleSpec,
)
from smkit.models.sampling import SPLITS, DatasetManifest, ManifestEntry, SamplingConfig
from smkit.models.scanner import ScannerSpec
from smkit.services.fieldsim import df_fov
from smkit.services.magnetization import derive_params
from smkit.utils.rng import derive_seed, make_rng

logger = logging.getLogger(__name__)

# FWHM of the 1D Langevin kernel derivative in units of 1/(β|G|)
FWHM_CONSTANT = 4.16

DEFAULT_CONFIG = SamplingConfig()


def fwhm_resolution(params: DerivedParticleParams, gradient_si: float) -> float:
    """R = 4.16 / (β|G|) in meters, G in A/m²"""
    return FWHM_CONSTANT / (params.beta * abs(gradient_si))


def sample_particle(
    rng: np.random.Generator, config: SamplingConfig = DEFAULT_CONFIG
) -> ParticleSpec:
    """Core diameter uniform in d³, log-uniform anisotropy, fluid or immobilized"""
    lo, hi = config.diameter_range
    diameter = rng.uniform(lo**3, hi**3) ** (1.0 / 3.0)
    anisotropy = 10.0 ** rng.uniform(*config.log10_anisotropy_range)
    if rng.random() < config.fluid_probability:
        mobility = FluidMobility(q=rng.uniform(*config.q_range))
    else:
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        mobility = ImmobilizedMobility(easy_axis=tuple(float(v) for v in direction))
    return ParticleSpec(
        core_diameter=float(diameter),
        saturation_magnetization=config.saturation_magnetization,
        temperature=config.temperature,
        anisotropy_constant=float(anisotropy),
        mobility=mobility,
    )


def sample_scanner(
    rng: np.random.Generator, dims: int = 2, config: SamplingConfig = DEFAULT_CONFIG
) -> ScannerSpec:
    """G_x, G_y uniform with G_z = -(G_x + G_y); amplitudes uniform, A_z = 0 in 2D"""
    gx, gy = rng.uniform(*config.gradient_range, size=2)
    amplitudes = rng.uniform(*config.amplitude_range, size=3)
    if dims == 2:
        amplitudes[2] = 0.0
    return ScannerSpec(
        gradients=(float(gx), float(gy), float(-(gx + gy))),
        df_amplitudes=tuple(float(a) for a in amplitudes),
        df_dividers=config.df_dividers,
        base_frequency=config.base_frequency,
        sampling_rate=config.sampling_rate,
    )


def sample_calibration(
    rng: np.random.Generator,
    scanner: ScannerSpec,
    particle: ParticleSpec,
    config: SamplingConfig = DEFAULT_CONFIG,
) -> CalibrationSpec:
    """
    Calibration FOV, center and grid size per axis.

    FOV^calib = FOV^DF·U(1, 2), center uniform within the margins and
    N = round_half_even(FOV^calib / R^FWHM · U(6.24, 8.32)), clamped to
    [2, max_grid_size] on active axes.
    """
    params = derive_params(particle)
    fov_df = df_fov(scanner)
    gradients = scanner.gradients_si

    fov = [0.0, 0.0, 0.0]
    center = [0.0, 0.0, 0.0]
    grid = [1, 1, 1]
    for axis in scanner.active_axes:
        fov[axis] = float(fov_df[axis] * rng.uniform(*config.fov_factor_range))
        margin = (fov[axis] - fov_df[axis]) / 2.0
        center[axis] = float(rng.uniform(-margin, margin))
        resolution = fwhm_resolution(params, gradients[axis])
        density = rng.uniform(*config.density_range)
        size = int(np.rint(fov[axis] / resolution * density * config.grid_scale))
        grid[axis] = int(np.clip(size, 2, config.max_grid_size))
    return CalibrationSpec(fov=tuple(fov), center=tuple(center), grid_size=tuple(grid))


def entry_id(split: str, index: int) -> str:
    return f"{split}-{index:05d}"


def sample_entry(config: SamplingConfig, split: str, index: int) -> ManifestEntry:
    """Draw one entry from its own stream; identical on every replay"""
    identifier = entry_id(split, index)
    rng = make_rng(config.seed, identifier)
    particle = sample_particle(rng, config)
    scanner = sample_scanner(rng, config.dims, config)
    calibration = sample_calibration(rng, scanner, particle, config)
    return ManifestEntry(
        id=identifier,
        split=split,
        index=index,
        seed=derive_seed(config.seed, identifier),
        particle=particle,
        scanner=scanner,
        calibration=calibration,
    )


def build_manifest(config: SamplingConfig) -> DatasetManifest:
    """All entries of all splits"""
    entries = []
    for split in SPLITS:
        count = config.split_counts[split]
        entries.extend(sample_entry(config, split, index) for index in range(count))
    logger.info(
        "Built %dD manifest: %s",
        config.dims,
        ", ".join(f"{s}={config.split_counts[s]}" for s in SPLITS),
    )
    return DatasetManifest(config=config, entries=entries)
