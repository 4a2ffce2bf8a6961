import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from smkit.utils.constants import millitesla_to_si, tesla_per_meter_to_si

Vector3 = tuple[float, float, float]


class TrajectoryTiming(BaseModel):
    """Period and sample counts of one Lissajous cycle"""

    model_config = ConfigDict(frozen=True)

    period: float  # seconds
    n_samples: int
    n_freq: int


class ScannerSpec(BaseModel):
    """
    FFP scanner with a diagonal selection-field gradient and sinusoidal drive fields.

    Gradients are given in T·m⁻¹·μ₀⁻¹ and drive amplitudes in mT·μ₀⁻¹ (the
    units scanners are specified in); the `*_si` properties return A/m² and A/m.
    An axis with zero amplitude is inactive.
    """

    model_config = ConfigDict(frozen=True)

    gradients: Vector3
    df_amplitudes: Vector3
    df_dividers: tuple[int, int, int] = (102, 96, 99)
    base_frequency: float = Field(2.5e6, gt=0)  # Hz
    sampling_rate: float = Field(5.0e6, gt=0)  # Hz

    @model_validator(mode="after")
    def check_invariants(self):
        scale = max(abs(g) for g in self.gradients)
        if abs(sum(self.gradients)) > 1e-12 * max(scale, 1e-300):
            raise ValueError(
                f"gradients must sum to zero (Gauss's law), got {self.gradients}"
            )
        if any(a < 0 for a in self.df_amplitudes):
            raise ValueError("drive-field amplitudes must be non-negative")
        if not any(a > 0 for a in self.df_amplitudes):
            raise ValueError("at least one drive-field axis must be active")
        if any(d <= 0 for d in self.df_dividers):
            raise ValueError("frequency dividers must be positive")
        for axis in self.active_axes:
            if self.gradients[axis] == 0:
                raise ValueError(f"gradient on active axis {'xyz'[axis]} is zero")
        samples = self.sampling_rate * self.period
        if abs(samples - round(samples)) > 1e-9 * max(samples, 1.0) or round(samples) % 2:
            raise ValueError(
                f"sampling_rate * period = {samples} is not an even integer"
            )
        return self

    @property
    def active_axes(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.df_amplitudes) if a > 0)

    @property
    def dimensionality(self) -> int:
        return len(self.active_axes)

    @property
    def df_frequencies(self) -> np.ndarray:
        """Per-axis drive frequencies in Hz (inactive axes included)"""
        return self.base_frequency / np.asarray(self.df_dividers, dtype=float)

    @property
    def gradients_si(self) -> np.ndarray:
        return tesla_per_meter_to_si(np.asarray(self.gradients, dtype=float))

    @property
    def amplitudes_si(self) -> np.ndarray:
        return millitesla_to_si(np.asarray(self.df_amplitudes, dtype=float))

    @property
    def period(self) -> float:
        """Least common period of the active drive frequencies, seconds"""
        dividers = [self.df_dividers[i] for i in self.active_axes]
        return math.lcm(*dividers) / self.base_frequency


def open_mpi_scanner(dims: int = 2, sampling_rate: float = 5.0e6) -> ScannerSpec:
    """Preclinical reference geometry: A = 12 mT/μ₀, G = (-1, -1, 2) T/m/μ₀"""
    amplitudes = (12.0, 12.0, 12.0 if dims == 3 else 0.0)
    if dims == 1:
        amplitudes = (12.0, 0.0, 0.0)
    return ScannerSpec(
        gradients=(-1.0, -1.0, 2.0),
        df_amplitudes=amplitudes,
        sampling_rate=sampling_rate,
    )
