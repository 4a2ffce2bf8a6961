from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class ReconstructionConfig(BaseModel):
    """Frequency selection, weighting and Kaczmarz parameters"""

    model_config = ConfigDict(frozen=True)

    snr_threshold: float = Field(1.5, ge=0)
    lam: float = Field(0.3, ge=0)
    n_iter: int = Field(1000, gt=0)
    nonneg: bool = True
    weighting: Literal["row_norm_l2", "none"] = "row_norm_l2"
    relaxation: float = Field(1.0, gt=0, le=2)
    drop_dc: bool = True
    shuffle_rows: bool = False
    seed: int | None = None


RECONSTRUCTION_PRESETS: dict[str, ReconstructionConfig] = {
    "snake": ReconstructionConfig(snr_threshold=1.5, lam=0.3, n_iter=1000),
    "resolution": ReconstructionConfig(snr_threshold=3.0, lam=1e-3, n_iter=3),
    "spiral": ReconstructionConfig(snr_threshold=1.5, lam=0.4, n_iter=1000),
    "rectangular": ReconstructionConfig(snr_threshold=10.0, lam=1e-5, n_iter=10),
}


@dataclass
class FrequencySelection:
    """Rows of the (L*K, N) matrix kept for reconstruction"""

    indices: np.ndarray  # flat row indices, ascending
    snr: np.ndarray  # (L, K)

    @property
    def n_rows(self) -> int:
        return int(self.indices.size)
