"""
Grayscale magnitude images as binary PGM (P5, maxval 255)
"""
import logging
from pathlib import Path

import numpy as np

from smkit.exceptions import DataError
from smkit.models.system_matrix import SystemMatrix

logger = logging.getLogger(__name__)


def to_gray(image: np.ndarray) -> np.ndarray:
    """Min-max scaled magnitude as uint8; a constant image maps to 0"""
    magnitude = np.abs(np.asarray(image)).astype(float)
    low = magnitude.min()
    span = magnitude.max() - low
    if span == 0:
        return np.zeros(magnitude.shape, dtype=np.uint8)
    return np.rint(255.0 * (magnitude - low) / span).astype(np.uint8)


def emit_plot(image: np.ndarray, path: str | Path) -> Path:
    """Write a 2D (after dropping singleton axes) image as PGM"""
    image = np.squeeze(np.asarray(image))
    if image.ndim == 1:
        image = image[None, :]
    if image.ndim != 2:
        raise DataError(f"can only plot 2D images, got shape {image.shape}")
    gray = to_gray(image)
    height, width = gray.shape

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(gray.tobytes(order="C"))
    logger.debug("Wrote %dx%d plot to %s", width, height, path)
    return path


def component_image(sm: SystemMatrix, channel: int, frequency: int) -> np.ndarray:
    """One (N_z, N_y, N_x) frequency component; 3D grids give their central z slice"""
    if not (0 <= channel < sm.n_channels and 0 <= frequency < sm.n_freq):
        raise DataError(
            f"component ({channel}, {frequency}) outside ({sm.n_channels}, {sm.n_freq})"
        )
    component = sm.data[channel, frequency]
    if component.shape[0] > 1:
        return component[component.shape[0] // 2]
    return component


def volume_slice(volume: np.ndarray, axis: int, index: int) -> np.ndarray:
    """Slice of an (N_z, N_y, N_x) volume; axis 0 = x, 1 = y, 2 = z"""
    volume = np.asarray(volume)
    if volume.ndim != 3 or axis not in (0, 1, 2):
        raise DataError(f"need a 3D volume and axis in 0..2, got {volume.shape}, {axis}")
    array_axis = 2 - axis
    if not 0 <= index < volume.shape[array_axis]:
        raise DataError(f"slice {index} outside axis of size {volume.shape[array_axis]}")
    return np.take(volume, index, axis=array_axis)
