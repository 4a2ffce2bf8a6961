"""
Training pairs for learned restoration.

Each (channel, frequency) component becomes one sample: the corrupted image
as input and the ground truth as target, both as (Re, Im) channels and
zero-padded into a fixed patch at the same random offset.
"""
import logging
from pathlib import Path

import numpy as np

from smkit.exceptions import DataError
from smkit.models.system_matrix import SystemMatrix
from smkit.services.restore import cubic_interp

logger = logging.getLogger(__name__)


def pad_to_patch(
    image: np.ndarray,
    patch_shape: tuple[int, ...],
    rng: np.random.Generator | None = None,
    offset: tuple[int, ...] | None = None,
) -> tuple[np.ndarray, np.ndarray, tuple[int, ...]]:
    """
    Zero-pad an image into a patch at a random (or given) offset.

    Returns:
        (padded image, boolean mask of the valid region, offset per axis)
    """
    image = np.asarray(image)
    if image.ndim != len(patch_shape):
        raise DataError(f"image {image.shape} and patch {patch_shape} differ in rank")
    if any(n > p for n, p in zip(image.shape, patch_shape)):
        raise DataError(f"image {image.shape} does not fit into patch {patch_shape}")
    if offset is None:
        rng = rng or np.random.default_rng(0)
        offset = tuple(int(rng.integers(0, p - n + 1)) for n, p in zip(image.shape, patch_shape))

    region = tuple(slice(o, o + n) for o, n in zip(offset, image.shape))
    padded = np.zeros(patch_shape, dtype=image.dtype)
    valid = np.zeros(patch_shape, dtype=bool)
    padded[region] = image
    valid[region] = True
    return padded, valid, tuple(offset)


def to_two_channel(image: np.ndarray) -> np.ndarray:
    """Complex image to float32 with a leading (Re, Im) axis"""
    image = np.asarray(image)
    return np.stack([image.real, image.imag]).astype(np.float32)


def _unit_max(image: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(image))
    return image / peak if peak > 0 else image


def build_training_pairs(
    gt: SystemMatrix,
    corrupted: SystemMatrix,
    patch_shape: tuple[int, int, int],
    rng: np.random.Generator,
    components: list[tuple[int, int]] | None = None,
) -> dict[str, np.ndarray]:
    """
    Stack input/target patches for selected components.

    The target is the ground truth expressed in the corrupted matrix's units
    (so a random phase of the corruption is shared) and normalized to unit
    maximum; the input is normalized by its own maximum. Downsampled inputs
    are first brought to the ground-truth grid with cubic splines. All-zero
    ground-truth components are skipped.

    Returns:
        Dict with inputs and targets (n, 2, *patch_shape) float32, valid
        (n, *patch_shape) bool and components (n, 2) int
    """
    if (gt.n_channels, gt.n_freq) != (corrupted.n_channels, corrupted.n_freq):
        raise DataError("ground truth and corrupted matrices have different components")
    if components is None:
        components = [(l, k) for l in range(gt.n_channels) for k in range(gt.n_freq)]
    gt_data = gt.denormalized()
    factor = corrupted.restore_factor

    inputs, targets, valid, kept = [], [], [], []
    for l, k in components:
        target = gt_data[l, k]
        if not np.any(target):
            continue
        if factor is not None:
            target = target / factor[l, k]
        source = corrupted.data[l, k]
        if source.shape != target.shape:
            source = cubic_interp(source, corrupted.calibration, gt.calibration)

        padded_target, region, offset = pad_to_patch(_unit_max(target), patch_shape, rng)
        padded_input, _, _ = pad_to_patch(_unit_max(source), patch_shape, offset=offset)
        inputs.append(to_two_channel(padded_input))
        targets.append(to_two_channel(padded_target))
        valid.append(region)
        kept.append((l, k))

    logger.info("Built %d training pairs of patch %s", len(kept), patch_shape)
    empty = (0, 2) + tuple(patch_shape)
    return {
        "inputs": np.stack(inputs) if inputs else np.zeros(empty, dtype=np.float32),
        "targets": np.stack(targets) if targets else np.zeros(empty, dtype=np.float32),
        "valid": np.stack(valid) if valid else np.zeros((0,) + tuple(patch_shape), dtype=bool),
        "components": np.asarray(kept, dtype=int).reshape(-1, 2),
    }


def save_training_pairs(path: str | Path, pairs: dict[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, **pairs)
    return path
