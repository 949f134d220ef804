"""
Transport Schemas
"""
from pydantic import BaseModel, Field
from typing import List, Literal, Optional

from app.schemas.common import CamelModel
from app.schemas.norm import NormSpecConfig


class GridSpec(BaseModel):
    lo: List[float]
    hi: List[float]
    m: List[int]


class DensityPayload(BaseModel):
    """Grid header plus row-major values"""
    grid: GridSpec
    values: List[float]


class W2Request(CamelModel):
    norm: NormSpecConfig
    mu: DensityPayload
    nu: DensityPayload
    method: Literal["exact", "sinkhorn"] = "exact"
    eps_final: Optional[float] = Field(None, gt=0)


class W2Response(CamelModel):
    """JSON report of `w2`"""
    cost: float
    w2: float
    marginal_err: float
    method: str


class ThetaTriangleRequest(CamelModel):
    norm: Optional[NormSpecConfig] = None
    p: float = Field(4.0, gt=2)
    shift: float = Field(0.0, ge=0)
    scale: float = Field(1.0, gt=0)


class ThetaResponse(CamelModel):
    """JSON report of `theta`"""
    theta: float
    numerator: float
    second_moment: float
