from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field

from smkit.models.calibration import CalibrationSpec


class DctFMethod(BaseModel):
    """DCT soft thresholding at omega * sigma"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["dctf"] = "dctf"
    omega: float = Field(2.75, gt=0)
    # scalar, or None to use the per-component noise_std of the input
    sigma: float | None = Field(None, ge=0)


class CubicMethod(BaseModel):
    """Separable natural cubic spline resampling onto a target grid"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["cubic"] = "cubic"
    target: CalibrationSpec


class BiharmonicMethod(BaseModel):
    """Biharmonic inpainting; the mask travels with the system matrix"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["biharmonic"] = "biharmonic"
    rtol: float = Field(1e-8, gt=0)
    maxiter: int = Field(20000, gt=0)


RestoreMethod = Annotated[
    Union[DctFMethod, CubicMethod, BiharmonicMethod], Field(discriminator="kind")
]
