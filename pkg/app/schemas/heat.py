"""
Heat Schemas
"""
from pydantic import Field
from typing import List, Literal

from app.schemas.common import CamelModel
from app.schemas.norm import NormSpecConfig


class GaussianHeatRequest(CamelModel):
    """Gaussian-form initial datum evolved by the heat solver"""
    norm: NormSpecConfig
    center: List[float] = Field(default_factory=lambda: [0.0, 0.0])
    a: float = Field(0.25, gt=0)
    half_width: float = Field(5.0, gt=0)
    cells: int = Field(48, ge=3, le=256)
    dt: float = Field(0.005, gt=0)
    t_end: float = Field(0.1, gt=0)
    scheme: Literal["explicit_flux", "semi_implicit_frozen"] = "semi_implicit_frozen"
    snapshot_stride: int = Field(1, ge=1)


class FrameEvent(CamelModel):
    """One `frame` event of the heat stream"""
    t: float
    mass: float
    entropy: float
    m2_fwd: float
    m2_bwd: float
    dissipation: float
    clipped_mass: float
