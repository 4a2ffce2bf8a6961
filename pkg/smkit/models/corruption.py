from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from smkit.config import settings


class SyntheticNoise(BaseModel):
    """Mixture of white, drift and burst components"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["synthetic"] = "synthetic"
    seed: int | None = None
    weights: tuple[float, float, float] = settings.noise_mixture
    burst_fraction: float = Field(0.1, gt=0, le=1)
    burst_gain: float = Field(10.0, gt=0)

    @model_validator(mode="after")
    def check_weights(self):
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        return self


class BackgroundNoise(BaseModel):
    """Frames of a recorded background measurement"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["background"] = "background"
    path: Path
    seed: int | None = None


NoiseSource = Annotated[
    Union[SyntheticNoise, BackgroundNoise], Field(discriminator="kind")
]


class NoiseConfig(BaseModel):
    """Additive noise; sigma is the std of the real and of the imaginary part"""

    model_config = ConfigDict(frozen=True)

    source: NoiseSource = SyntheticNoise()
    sigma: float = Field(0.0, ge=0)


class DenoiseTask(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["denoise"] = "denoise"


class DownsampleTask(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["downsample"] = "downsample"
    factors: tuple[int, int, int]  # (x, y, z)
    phase: int = Field(0, ge=0)

    @model_validator(mode="after")
    def check_factors(self):
        if any(f < 1 for f in self.factors):
            raise ValueError("downsampling factors must be >= 1")
        if any(self.phase >= f for f in self.factors if f > 1):
            raise ValueError("downsampling phase must be smaller than every factor")
        return self


class InpaintTask(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["inpaint"] = "inpaint"
    ratio: float = Field(0.1, gt=0, lt=1)
    n_blocks: int = Field(1, ge=1)
    per_component: bool = True
    mask_path: Path | None = None


TaskKind = Annotated[
    Union[DenoiseTask, DownsampleTask, InpaintTask], Field(discriminator="kind")
]


class CorruptionTask(BaseModel):
    """Degradation operator plus noise, with optional augmentations"""

    model_config = ConfigDict(frozen=True)

    kind: TaskKind = DenoiseTask()
    noise: NoiseConfig = NoiseConfig()
    random_phase: bool = False
    # amplitude scaling of the normalized GT, drawn from U(lo, hi)
    random_scale: tuple[float, float] | None = None


@dataclass
class InpaintingMask:
    """Boolean (N_z, N_y, N_x) mask, True marks a missing position"""

    missing: np.ndarray
    ratio: float

    @property
    def popcount(self) -> int:
        return int(np.count_nonzero(self.missing))
