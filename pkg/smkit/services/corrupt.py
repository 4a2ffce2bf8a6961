"""
Corruption of ground-truth system matrices: S_corrupt = A(S_GT) + N.

Every (channel, frequency) component is handled on its own: normalized to
unit maximum magnitude, optionally rotated and scaled, degraded by the task
operator A, given additive noise and renormalized by the maximum magnitude
of the result.
"""
import logging
import math
from functools import lru_cache

import numpy as np

from smkit.exceptions import ConfigError, DataError, SmkError
from smkit.models.calibration import CalibrationSpec
from smkit.models.corruption import (
    BackgroundNoise,
    CorruptionTask,
    DenoiseTask,
    DownsampleTask,
    InpaintingMask,
    InpaintTask,
    NoiseConfig,
    SyntheticNoise,
)
from smkit.models.system_matrix import ProvenanceStep, SystemMatrix
from smkit.services import storage
from smkit.utils.parallel import ordered_map
from smkit.utils.rng import make_rng

logger = logging.getLogger(__name__)

MAX_BLOCK_RETRIES = 100


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------


def _part_rms(x: np.ndarray) -> float:
    """RMS of the real and imaginary parts pooled"""
    return math.sqrt(float(np.mean(np.abs(x) ** 2)) / 2.0)


def _unit(x: np.ndarray) -> np.ndarray:
    rms = _part_rms(x)
    return x / rms if rms > 0 else x


def _complex_white(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def synthetic_noise(source: SyntheticNoise, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Unit-std mixture of white, drift and burst noise along a flattened index.

    Drift is a complex random walk with its mean removed; burst is amplified
    white noise restricted to one contiguous block. Every part is normalized
    to unit std before weighting and the mixture is normalized again.
    """
    w_white, w_drift, w_burst = source.weights
    white = _complex_white(rng, n)

    drift = np.cumsum(_complex_white(rng, n))
    drift = _unit(drift - drift.mean())

    burst = np.zeros(n, dtype=complex)
    length = min(n, max(1, int(round(source.burst_fraction * n))))
    start = int(rng.integers(0, n - length + 1))
    burst[start : start + length] = source.burst_gain * _complex_white(rng, length)
    burst = _unit(burst)

    return _unit(w_white * white + w_drift * drift + w_burst * burst)


@lru_cache(maxsize=4)
def _background_frames(path: str) -> np.ndarray:
    frames = storage.read_background(path)
    logger.info("Loaded %d background frames from %s", frames.shape[0], path)
    return frames


def background_noise(
    source: BackgroundNoise,
    shape: tuple[int, ...],
    rng: np.random.Generator,
    component: tuple[int, int] | None = None,
    offset: int | None = None,
) -> np.ndarray:
    """
    A contiguous block of background frames reshaped to `shape`, unit std.

    With `component=(l, k)` the block is taken along the frame axis of that
    channel and frequency; without it whole (L, K) frames are used and `shape`
    must end in (L, K).
    """
    frames = _background_frames(str(source.path))
    n_frames, n_channels, n_freq = frames.shape
    size = int(np.prod(shape))

    if component is None:
        if tuple(shape[-2:]) != (n_channels, n_freq):
            raise DataError(
                f"noise shape {shape} does not end in the background frame shape "
                f"({n_channels}, {n_freq})"
            )
        count = size // (n_channels * n_freq)
    else:
        count = size
        l, k = component
        if l >= n_channels or k >= n_freq:
            raise DataError(
                f"component {component} outside background frames ({n_channels}, {n_freq})"
            )

    if count > n_frames:
        raise DataError(
            f"background file has {n_frames} frames, {count} needed for shape {shape}"
        )
    if offset is None:
        offset = int(rng.integers(0, n_frames - count + 1))
    elif offset + count > n_frames:
        raise DataError(f"frame offset {offset} + {count} exceeds {n_frames} frames")

    if component is None:
        block = frames[offset : offset + count]
    else:
        block = frames[offset : offset + count, component[0], component[1]]
    block = block.astype(complex).reshape(shape)

    spread = _part_rms(block - block.mean())
    if spread == 0:
        raise DataError("background block has zero variance")
    return block / spread


def sample_noise(
    cfg: NoiseConfig,
    shape: tuple[int, ...],
    rng: np.random.Generator | None = None,
    component: tuple[int, int] | None = None,
    offset: int | None = None,
) -> np.ndarray:
    """
    Additive complex noise with per-part standard deviation `cfg.sigma`.

    Args:
        cfg: Noise source and level
        shape: Output shape
        rng: Random stream; defaults to a stream seeded by the source seed
        component: (l, k) for background frames
        offset: Fixed background frame offset instead of a seeded one

    Returns:
        Complex array of `shape`
    """
    shape = tuple(int(s) for s in shape)
    if cfg.sigma == 0:
        return np.zeros(shape, dtype=complex)
    source = cfg.source
    if rng is None:
        rng = make_rng(source.seed, "noise")

    if isinstance(source, SyntheticNoise):
        unit = synthetic_noise(source, int(np.prod(shape)), rng).reshape(shape)
    else:
        unit = background_noise(source, shape, rng, component, offset)
    return cfg.sigma * unit


# ---------------------------------------------------------------------------
# Inpainting masks
# ---------------------------------------------------------------------------


def flattened_block(
    shape: tuple[int, ...],
    permutation: tuple[int, ...],
    reverse: bool,
    start: int,
    length: int,
) -> np.ndarray:
    """
    Row-major flat indices of a contiguous block in a permuted traversal.

    The grid is traversed with its axes in `permutation` order and, when
    `reverse` is set, the fastest axis backwards. Indexing the traversal
    with original flat indices makes the inverse mapping implicit.
    """
    order = np.arange(int(np.prod(shape))).reshape(shape).transpose(permutation)
    if reverse:
        order = order[..., ::-1]
    return order.reshape(-1)[start : start + length]


def _block_lengths(target: int, n_blocks: int) -> list[int]:
    base, extra = divmod(target, n_blocks)
    return [base + 1 if i < extra else base for i in range(n_blocks)]


def generate_mask(
    shape: tuple[int, ...],
    ratio: float,
    n_blocks: int,
    rng: np.random.Generator,
) -> InpaintingMask:
    """
    Union of contiguous blocks drawn in randomly permuted flattenings.

    Args:
        shape: Grid shape (N_z, N_y, N_x)
        ratio: Fraction of missing positions, in (0, 1)
        n_blocks: Number of blocks
        rng: Random stream

    Returns:
        InpaintingMask with round(ratio * total) missing positions unless a
        block could not be placed without overlap
    """
    if not 0 < ratio < 1:
        raise ConfigError(f"mask ratio must lie in (0, 1), got {ratio}")
    if n_blocks < 1:
        raise ConfigError("n_blocks must be >= 1")
    shape = tuple(int(s) for s in shape)
    total = int(np.prod(shape))
    target = int(round(ratio * total))
    if ratio * total < n_blocks or target < n_blocks:
        raise ConfigError(
            f"ratio {ratio} of {total} positions is too small for {n_blocks} blocks"
        )

    missing = np.zeros(total, dtype=bool)
    for length in _block_lengths(target, n_blocks):
        for attempt in range(MAX_BLOCK_RETRIES):
            permutation = tuple(int(a) for a in rng.permutation(len(shape)))
            reverse = bool(rng.random() < 0.5)
            start = int(rng.integers(0, total - length + 1))
            block = flattened_block(shape, permutation, reverse, start, length)
            if not missing[block].any():
                break
        else:
            logger.warning(
                "Mask block of length %d overlaps after %d retries, keeping overlap",
                length,
                MAX_BLOCK_RETRIES,
            )
        missing[block] = True

    return InpaintingMask(missing=missing.reshape(shape), ratio=ratio)


# ---------------------------------------------------------------------------
# Degradation operators
# ---------------------------------------------------------------------------


def downsample_slices(task: DownsampleTask, grid_shape: tuple[int, int, int]) -> tuple:
    """Slices over (N_z, N_y, N_x) keeping every factor-th position from the phase"""
    factors = task.factors[::-1]  # (z, y, x) like the array
    slices = []
    for axis, (n, f) in enumerate(zip(grid_shape, factors)):
        if f > n:
            raise ConfigError(
                f"downsampling factor {f} exceeds grid size {n} on axis {'zyx'[axis]}"
            )
        phase = task.phase if f > 1 else 0
        slices.append(slice(phase, None, f))
    return tuple(slices)


def downsampled_calibration(
    task: DownsampleTask, calibration: CalibrationSpec
) -> CalibrationSpec:
    """Calibration whose cell centers are the kept positions of the source grid"""
    fov, center, grid = [], [], []
    for axis in range(3):
        n = calibration.grid_size[axis]
        f = task.factors[axis]
        phase = task.phase if f > 1 else 0
        kept = len(range(phase, n, f))
        spacing = calibration.fov[axis] / n
        first = calibration.axis_coordinates(axis)[phase]
        new_fov = kept * f * spacing
        fov.append(float(new_fov))
        center.append(float(first + new_fov / 2.0 - f * spacing / 2.0))
        grid.append(kept)
    return CalibrationSpec(fov=tuple(fov), center=tuple(center), grid_size=tuple(grid))


def apply_operator(
    kind: DenoiseTask | DownsampleTask | InpaintTask,
    data: np.ndarray,
    missing: np.ndarray | None = None,
) -> np.ndarray:
    """
    The linear degradation A on arrays whose last three dims are the grid.

    Inpainting zeroes the positions where `missing` is True; `missing`
    broadcasts against `data`.
    """
    if isinstance(kind, DenoiseTask):
        return data.copy()
    if isinstance(kind, DownsampleTask):
        slices = downsample_slices(kind, data.shape[-3:])
        return data[(Ellipsis,) + slices].copy()
    if missing is None:
        raise ConfigError("inpainting requires a mask")
    return np.where(missing, 0, data)


# ---------------------------------------------------------------------------
# Corruption of a system matrix
# ---------------------------------------------------------------------------


class SystemMatrixCorruptor:
    """Applies one corruption task component by component"""

    def __init__(self, task: CorruptionTask, sm: SystemMatrix, seed: int):
        self.task = task
        self.sm = sm
        self.seed = seed
        self.shared_missing = self._shared_mask()
        if isinstance(task.kind, DownsampleTask):
            downsample_slices(task.kind, sm.grid_shape)

    def _shared_mask(self) -> np.ndarray | None:
        kind = self.task.kind
        if not isinstance(kind, InpaintTask):
            return None
        if kind.mask_path is not None:
            missing = storage.read_mask(kind.mask_path)
            if missing.shape != self.sm.grid_shape:
                raise DataError(
                    f"mask dims {missing.shape} do not match grid {self.sm.grid_shape}"
                )
            return missing
        if kind.per_component:
            return None
        rng = make_rng(self.seed, "mask")
        return generate_mask(self.sm.grid_shape, kind.ratio, kind.n_blocks, rng).missing

    def _component_mask(self, rng: np.random.Generator) -> np.ndarray | None:
        kind = self.task.kind
        if not isinstance(kind, InpaintTask) or self.shared_missing is not None:
            return self.shared_missing
        return generate_mask(self.sm.grid_shape, kind.ratio, kind.n_blocks, rng).missing

    def corrupt_component(self, component: tuple[int, int]):
        """Returns (corrupted image, restore factor, noise std, missing mask)"""
        l, k = component
        rng = make_rng(self.seed, l, k)
        x = self.sm.data[l, k]

        peak = float(np.max(np.abs(x)))
        peak = peak if peak > 0 else 1.0
        phase = rng.uniform(0.0, 2.0 * np.pi) if self.task.random_phase else 0.0
        scale = rng.uniform(*self.task.random_scale) if self.task.random_scale else 1.0
        z = x / peak * np.exp(1j * phase) * scale

        missing = self._component_mask(rng)
        y = apply_operator(self.task.kind, z, missing)
        y = y + sample_noise(self.task.noise, y.shape, rng, component=(l, k))

        norm = float(np.max(np.abs(y)))
        norm = norm if norm > 0 else 1.0
        factor = norm * peak * np.exp(-1j * phase) / scale
        return y / norm, factor, self.task.noise.sigma / norm, missing

    def run(self, threads: int | None = None) -> SystemMatrix:
        sm = self.sm
        components = [(l, k) for l in range(sm.n_channels) for k in range(sm.n_freq)]
        results, failures = ordered_map(self.corrupt_component, components, threads)
        if failures:
            index, error = failures[0]
            logger.error("Corruption failed for %d components", len(failures))
            if isinstance(error, SmkError):
                raise error
            raise DataError(f"corruption failed at component {components[index]}: {error}")

        calibration = sm.calibration
        if isinstance(self.task.kind, DownsampleTask):
            calibration = downsampled_calibration(self.task.kind, calibration)
        grid = calibration.shape

        shape = (sm.n_channels, sm.n_freq)
        data = np.stack([r[0] for r in results]).reshape(shape + grid)
        factor = np.array([r[1] for r in results], dtype=complex).reshape(shape)
        noise_std = np.array([r[2] for r in results], dtype=float).reshape(shape)
        mask = None
        if isinstance(self.task.kind, InpaintTask):
            mask = np.stack([r[3] for r in results]).reshape(shape + grid)

        # compose with any earlier normalization so restore_factor maps to source units
        if sm.restore_factor is not None:
            factor = factor * sm.restore_factor

        step = ProvenanceStep(
            kind="corrupted", seed=self.seed, descriptor=self.task.model_dump(mode="json")
        )
        return sm.with_data(
            data,
            step,
            calibration=calibration,
            restore_factor=factor,
            noise_std=noise_std,
            mask=mask,
        )


def apply(
    task: CorruptionTask,
    sm: SystemMatrix,
    rng: np.random.Generator | None = None,
    threads: int | None = None,
) -> SystemMatrix:
    """
    Corrupt every component of a system matrix.

    Args:
        task: Degradation operator, noise and augmentations
        sm: Ground-truth system matrix
        rng: Random stream; one seed is drawn from it and every component gets
            its own stream derived from that seed
        threads: Worker count

    Returns:
        Corrupted SystemMatrix with restore_factor, noise_std and, for
        inpainting, the (L, K, N_z, N_y, N_x) missing mask
    """
    if rng is None:
        rng = make_rng(task.noise.source.seed, "corrupt")
    seed = int(rng.integers(0, 2**63))
    logger.info(
        "Corrupting %d components (%s, sigma=%g)",
        sm.n_channels * sm.n_freq,
        task.kind.kind,
        task.noise.sigma,
    )
    return SystemMatrixCorruptor(task, sm, seed).run(threads)
