from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class FluidMobility(BaseModel):
    """Easy axis follows the selection field; anisotropy modulated by q"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["fluid"] = "fluid"
    q: float = Field(gt=0)


class ImmobilizedMobility(BaseModel):
    """Fixed easy axis and anisotropy constant"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["immobilized"] = "immobilized"
    easy_axis: tuple[float, float, float]

    @field_validator("easy_axis")
    @classmethod
    def check_unit_norm(cls, value):
        norm = float(np.linalg.norm(value))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"easy axis must have unit norm, got |n| = {norm}")
        return value


Mobility = Annotated[
    Union[FluidMobility, ImmobilizedMobility], Field(discriminator="kind")
]


class ParticleSpec(BaseModel):
    """Tracer parameters in SI units"""

    model_config = ConfigDict(frozen=True)

    core_diameter: float = Field(gt=0)  # m
    saturation_magnetization: float = Field(474000.0, gt=0)  # A/m
    temperature: float = Field(293.0, gt=0)  # K
    anisotropy_constant: float = Field(0.0, ge=0)  # J/m³
    mobility: Mobility = ImmobilizedMobility(easy_axis=(0.0, 0.0, 1.0))


class DerivedParticleParams(BaseModel):
    """Moment, field scaling and reduced anisotropy derived from a ParticleSpec"""

    model_config = ConfigDict(frozen=True)

    m0: float  # A·m²
    beta: float  # m/A
    alpha_max: float  # dimensionless
