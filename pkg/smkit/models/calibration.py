from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Vector3 = tuple[float, float, float]


class CalibrationSpec(BaseModel):
    """
    Cartesian calibration grid.

    Sizes and extents are ordered (x, y, z); the array layout of a system
    matrix is (N_z, N_y, N_x). An inactive axis has grid size 1.
    """

    model_config = ConfigDict(frozen=True)

    fov: Vector3  # m
    center: Vector3 = (0.0, 0.0, 0.0)  # m
    grid_size: tuple[int, int, int]
    # c0 * V_delta of the delta sample; fixed
    delta_volume: Literal[1.0] = 1.0

    @model_validator(mode="after")
    def check_invariants(self):
        for axis, (n, extent) in enumerate(zip(self.grid_size, self.fov)):
            if n < 1:
                raise ValueError(f"grid size on axis {'xyz'[axis]} must be positive")
            if n > 1 and extent <= 0:
                raise ValueError(f"fov on active axis {'xyz'[axis]} must be positive")
            if extent < 0:
                raise ValueError("fov must be non-negative")
        return self

    @property
    def shape(self) -> tuple[int, int, int]:
        """Array shape (N_z, N_y, N_x)"""
        nx, ny, nz = self.grid_size
        return (nz, ny, nx)

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along axis 0=x, 1=y, 2=z, meters"""
        n = self.grid_size[axis]
        idx = np.arange(n, dtype=float)
        return self.center[axis] + self.fov[axis] * ((idx + 0.5) / n - 0.5)

    def positions(self) -> np.ndarray:
        """Grid positions, shape (N_z, N_y, N_x, 3), components (x, y, z)"""
        z, y, x = np.meshgrid(
            self.axis_coordinates(2),
            self.axis_coordinates(1),
            self.axis_coordinates(0),
            indexing="ij",
        )
        return np.stack([x, y, z], axis=-1)


class ReceiveChain(BaseModel):
    """Homogeneous receive coils and the analog transfer function"""

    model_config = ConfigDict(frozen=True)

    coil_sensitivities: list[Vector3] = Field(min_length=2, max_length=3)
    # (re, im) per frequency index; None means a_k = 1
    transfer_function: list[tuple[float, float]] | None = None

    @field_validator("coil_sensitivities")
    @classmethod
    def check_unit_norm(cls, value):
        for p in value:
            if abs(float(np.linalg.norm(p)) - 1.0) > 1e-12:
                raise ValueError(f"coil sensitivity {p} must have unit norm")
        return value

    @property
    def n_channels(self) -> int:
        return len(self.coil_sensitivities)

    def transfer(self, n_freq: int) -> np.ndarray:
        """a_k for k in [0, n_freq)"""
        if self.transfer_function is None:
            return np.ones(n_freq, dtype=complex)
        values = np.asarray(self.transfer_function, dtype=float)
        if values.shape[0] != n_freq:
            raise ValueError(
                f"transfer function has {values.shape[0]} entries, expected {n_freq}"
            )
        return values[:, 0] + 1j * values[:, 1]


def default_receive_chain(dims: int) -> ReceiveChain:
    """Axis-aligned unit coils, two channels for 1D/2D and three for 3D"""
    axes = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]
    return ReceiveChain(coil_sensitivities=axes[: max(2, dims)])
