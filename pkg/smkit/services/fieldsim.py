"""
Applied magnetic field of an FFP scanner and Lissajous trajectory timing
"""
import numpy as np

from smkit.exceptions import ConfigError
from smkit.models.scanner import ScannerSpec, TrajectoryTiming


def selection_field(spec: ScannerSpec, r) -> np.ndarray:
    """
    Static gradient field G ⊙ r.

    Args:
        spec: Scanner
        r: Positions in meters, shape (..., 3)

    Returns:
        Field in A/m, same shape as r
    """
    return spec.gradients_si * np.asarray(r, dtype=float)


def drive_field(spec: ScannerSpec, t) -> np.ndarray:
    """Homogeneous sinusoidal drive field, shape t.shape + (3,), A/m"""
    t = np.asarray(t, dtype=float)[..., None]
    return spec.amplitudes_si * np.sin(2.0 * np.pi * spec.df_frequencies * t)


def drive_field_rate(spec: ScannerSpec, t) -> np.ndarray:
    """Time derivative of the drive field, A/(m·s)"""
    t = np.asarray(t, dtype=float)[..., None]
    omega = 2.0 * np.pi * spec.df_frequencies
    return spec.amplitudes_si * omega * np.cos(omega * t)


def total_field(spec: ScannerSpec, r, t) -> np.ndarray:
    """
    Selection plus drive field.

    r of shape (3,) with t of shape (n,) gives (n, 3); r and t broadcast
    as r[..., :] against t[..., None].
    """
    return selection_field(spec, r) + drive_field(spec, t)


def ffp_position(spec: ScannerSpec, t) -> np.ndarray:
    """Field-free point -H_D(t)/G on active axes, zero elsewhere"""
    h_drive = drive_field(spec, t)
    gradients = spec.gradients_si
    position = np.zeros_like(h_drive)
    for axis in spec.active_axes:
        position[..., axis] = -h_drive[..., axis] / gradients[axis]
    return position


def trajectory_timing(spec: ScannerSpec) -> TrajectoryTiming:
    """Period, time samples and one-sided spectrum length of one cycle"""
    period = spec.period
    samples = spec.sampling_rate * period
    n_samples = int(round(samples))
    if abs(samples - n_samples) > 1e-9 * max(samples, 1.0) or n_samples % 2:
        raise ConfigError(
            f"sampling_rate * period = {samples} is not an even integer; "
            "adjust the sampling rate or dividers"
        )
    return TrajectoryTiming(
        period=period, n_samples=n_samples, n_freq=n_samples // 2 + 1
    )


def sample_times(spec: ScannerSpec) -> np.ndarray:
    """Uniform sample times j/f_s over one period"""
    timing = trajectory_timing(spec)
    return np.arange(timing.n_samples) / spec.sampling_rate


def df_fov(spec: ScannerSpec) -> np.ndarray:
    """Drive-field FOV 2A/|G| per axis in meters, 0 on inactive axes"""
    fov = np.zeros(3)
    gradients = spec.gradients_si
    amplitudes = spec.amplitudes_si
    for axis in spec.active_axes:
        if gradients[axis] == 0:
            raise ConfigError(f"zero gradient on active axis {'xyz'[axis]}")
        fov[axis] = 2.0 * amplitudes[axis] / abs(gradients[axis])
    return fov
