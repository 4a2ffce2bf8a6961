from dataclasses import dataclass, field, replace
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from smkit.models.calibration import CalibrationSpec, ReceiveChain
from smkit.models.particle import ParticleSpec
from smkit.models.scanner import ScannerSpec


class ProvenanceStep(BaseModel):
    """One step of the chain that produced a system matrix"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["simulated", "corrupted", "restored"]
    seed: int | None = None
    descriptor: dict[str, Any] = {}


@dataclass
class SystemMatrix:
    """
    Complex system matrix with the specs that produced it.

    data has dims (L, K, N_z, N_y, N_x). restore_factor (L, K), when present,
    maps the stored values back to the units of the source matrix; noise_std
    (L, K) is the per-part noise level in the stored units.

    Arrays are held in double precision whatever they were loaded as; a
    complex64 matrix with entries near 1e-22 squares to below the float32
    range.
    """

    data: np.ndarray
    scanner: ScannerSpec
    particle: ParticleSpec
    calibration: CalibrationSpec
    receive: ReceiveChain
    provenance: list[ProvenanceStep] = field(default_factory=list)
    restore_factor: np.ndarray | None = None
    noise_std: np.ndarray | None = None
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.restore_factor is not None:
            self.restore_factor = np.asarray(self.restore_factor, dtype=np.complex128)
        if self.noise_std is not None:
            self.noise_std = np.asarray(self.noise_std, dtype=np.float64)
        if self.data.ndim != 5:
            raise ValueError(f"system matrix data must be 5-D, got {self.data.shape}")
        if self.data.shape[2:] != self.calibration.shape:
            raise ValueError(
                f"grid dims {self.data.shape[2:]} do not match calibration "
                f"{self.calibration.shape}"
            )
        if self.data.shape[0] != self.receive.n_channels:
            raise ValueError(
                f"{self.data.shape[0]} channels but receive chain has "
                f"{self.receive.n_channels} coils"
            )

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_freq(self) -> int:
        return self.data.shape[1]

    @property
    def grid_shape(self) -> tuple[int, int, int]:
        return self.data.shape[2:]

    def as_matrix(self) -> np.ndarray:
        """S as an (L*K, N) matrix, rows ordered (l, k)"""
        return self.data.reshape(self.n_channels * self.n_freq, -1)

    def denormalized(self) -> np.ndarray:
        """Data mapped back to the source units"""
        if self.restore_factor is None:
            return self.data
        return self.data * self.restore_factor[:, :, None, None, None]

    def with_data(self, data: np.ndarray, step: ProvenanceStep | None = None, **changes):
        """Copy with new data, appending a provenance step"""
        provenance = list(self.provenance)
        if step is not None:
            provenance.append(step)
        return replace(self, data=data, provenance=provenance, **changes)
