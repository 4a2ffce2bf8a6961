from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from smkit.config import settings
from smkit.models.calibration import CalibrationSpec
from smkit.models.particle import ParticleSpec
from smkit.models.scanner import ScannerSpec

Split = Literal["train", "val", "test"]
SPLITS: tuple[str, ...] = ("train", "val", "test")

DEFAULT_COUNTS = {2: (1000, 300, 300), 3: (50, 15, 15)}


class SamplingConfig(BaseModel):
    """Distribution bounds of the simulation parameter space (SI unless noted)"""

    model_config = ConfigDict(frozen=True)

    seed: int = Field(0, ge=0, lt=2**64)
    dims: Literal[2, 3] = 2
    counts: tuple[int, int, int] | None = None  # train, val, test

    # particle
    diameter_range: tuple[float, float] = (15e-9, 25e-9)
    log10_anisotropy_range: tuple[float, float] = (3.0, 4.0)
    fluid_probability: float = Field(0.5, ge=0, le=1)
    q_range: tuple[float, float] = (0.3, 1.3)
    saturation_magnetization: float = 474000.0
    temperature: float = 293.0

    # scanner, in T/m/μ₀ and mT/μ₀
    gradient_range: tuple[float, float] = (0.1, 1.5)
    amplitude_range: tuple[float, float] = (5.0, 14.0)
    df_dividers: tuple[int, int, int] = (102, 96, 99)
    base_frequency: float = 2.5e6
    sampling_rate: float = settings.sampling_rate

    # calibration
    fov_factor_range: tuple[float, float] = (1.0, 2.0)
    density_range: tuple[float, float] = (6.24, 8.32)
    grid_scale: float = Field(1.0, gt=0)
    max_grid_size: int = Field(settings.max_grid_size, ge=2)

    @model_validator(mode="after")
    def check_bounds(self):
        for name in (
            "diameter_range",
            "log10_anisotropy_range",
            "q_range",
            "gradient_range",
            "amplitude_range",
            "fov_factor_range",
            "density_range",
        ):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} must be ordered (lo <= hi)")
        if self.counts is not None and any(c < 0 for c in self.counts):
            raise ValueError("split counts must be non-negative")
        return self

    @property
    def split_counts(self) -> dict[str, int]:
        counts = self.counts or DEFAULT_COUNTS[self.dims]
        return dict(zip(SPLITS, counts))


class ManifestEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    split: Split
    index: int
    seed: int
    particle: ParticleSpec
    scanner: ScannerSpec
    calibration: CalibrationSpec


class DatasetManifest(BaseModel):
    schema_version: int = 1
    config: SamplingConfig
    entries: list[ManifestEntry]

    @model_validator(mode="after")
    def check_unique_ids(self):
        ids = [e.id for e in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError("manifest ids must be unique")
        return self

    def split(self, name: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == name]
