"""
Concentration phantoms on a calibration grid.

All phantoms are binary (N_z, N_y, N_x) arrays. The planar shapes are drawn
in the x-y plane and repeated along z.
"""
import numpy as np

from smkit.exceptions import ConfigError
from smkit.models.calibration import CalibrationSpec


def _plane(calibration: CalibrationSpec) -> tuple[int, int]:
    nz, ny, nx = calibration.shape
    return ny, nx


def _extrude(calibration: CalibrationSpec, plane: np.ndarray) -> np.ndarray:
    nz = calibration.shape[0]
    return np.repeat(plane[None, :, :], nz, axis=0).astype(float)


def _draw_polyline(plane: np.ndarray, points: np.ndarray):
    """Mark the pixels nearest to densely sampled points (x, y in [0, 1])"""
    ny, nx = plane.shape
    ix = np.clip(np.rint(points[:, 0] * (nx - 1)).astype(int), 0, nx - 1)
    iy = np.clip(np.rint(points[:, 1] * (ny - 1)).astype(int), 0, ny - 1)
    plane[iy, ix] = True


def impulse(calibration: CalibrationSpec, index: tuple[int, int, int]) -> np.ndarray:
    """Delta sample at grid index (i_z, i_y, i_x)"""
    phantom = np.zeros(calibration.shape)
    try:
        phantom[tuple(index)] = 1.0
    except IndexError as e:
        raise ConfigError(f"index {index} outside grid {calibration.shape}") from e
    return phantom


def snake(calibration: CalibrationSpec, spacing: int = 3) -> np.ndarray:
    """Meandering rod: horizontal runs every `spacing` rows joined at alternate ends"""
    ny, nx = _plane(calibration)
    if ny < spacing + 1 or nx < 3:
        raise ConfigError(f"grid {calibration.shape} too small for a snake phantom")
    plane = np.zeros((ny, nx), dtype=bool)
    margin = 1 if nx > 4 else 0
    rows = list(range(1 if ny > spacing + 1 else 0, ny - 1, spacing)) or [0]
    left, right = margin, nx - 1 - margin
    for i, row in enumerate(rows):
        plane[row, left : right + 1] = True
        if i + 1 < len(rows):
            column = right if i % 2 == 0 else left
            plane[row : rows[i + 1] + 1, column] = True
    return _extrude(calibration, plane)


def spiral(calibration: CalibrationSpec, turns: float = 2.0) -> np.ndarray:
    """Archimedean spiral around the grid center"""
    ny, nx = _plane(calibration)
    theta = np.linspace(0.0, 2.0 * np.pi * turns, 40 * max(nx, ny) * int(np.ceil(turns)))
    radius = 0.45 * theta / theta[-1]
    points = np.stack([0.5 + radius * np.cos(theta), 0.5 + radius * np.sin(theta)], axis=1)
    plane = np.zeros((ny, nx), dtype=bool)
    _draw_polyline(plane, points)
    return _extrude(calibration, plane)


def resolution(calibration: CalibrationSpec, n_tubes: int = 5) -> np.ndarray:
    """Straight tubes fanning out from a common point near one corner"""
    ny, nx = _plane(calibration)
    plane = np.zeros((ny, nx), dtype=bool)
    origin = np.array([0.05, 0.05])
    samples = np.linspace(0.0, 1.0, 8 * max(nx, ny))
    for angle in np.linspace(np.pi / 16, np.pi / 2 - np.pi / 16, n_tubes):
        direction = np.array([np.cos(angle), np.sin(angle)])
        points = origin + 0.9 * samples[:, None] * direction
        _draw_polyline(plane, points)
    return _extrude(calibration, plane)


def nested_rectangles(calibration: CalibrationSpec, count: int = 3) -> np.ndarray:
    """Concentric rectangle outlines, two pixels apart"""
    ny, nx = _plane(calibration)
    plane = np.zeros((ny, nx), dtype=bool)
    for i in range(count):
        top, left = 2 * i + 1, 2 * i + 1
        bottom, right = ny - 2 - 2 * i, nx - 2 - 2 * i
        if bottom < top or right < left:
            break
        plane[top, left : right + 1] = True
        plane[bottom, left : right + 1] = True
        plane[top : bottom + 1, left] = True
        plane[top : bottom + 1, right] = True
    return _extrude(calibration, plane)


PHANTOMS = {
    "snake": snake,
    "spiral": spiral,
    "resolution": resolution,
    "rectangular": nested_rectangles,
}


def make_phantom(name: str, calibration: CalibrationSpec) -> np.ndarray:
    """Phantom by name; names match the reconstruction presets"""
    if name not in PHANTOMS:
        raise ConfigError(f"unknown phantom {name!r}; choose from {sorted(PHANTOMS)}")
    return PHANTOMS[name](calibration)
