"""
Flow Schemas
"""
from pydantic import BaseModel, Field
from typing import Dict, List, Literal, Optional

from app.schemas.common import CamelModel
from app.schemas.norm import NormSpecConfig


class PotentialConfig(BaseModel):
    kind: Literal["squared_reverse_norm", "squared_distance", "quadratic"]
    scale: float = Field(1.0, gt=0)
    z: Optional[List[float]] = None
    matrix: Optional[List[List[float]]] = None
    center: Optional[List[float]] = None


class SkewCheckRequest(CamelModel):
    norm: NormSpecConfig
    potential: PotentialConfig
    samples: int = Field(1000, ge=1, le=100_000)
    region_radius: float = Field(1.0, gt=0)
    seed: int = 0


class SkewCheckResponse(CamelModel):
    """JSON report of `skew check`"""
    inf_quotient: float
    argmin_pair: List[List[float]]
    samples: int
    summary: Dict[str, float]
    reference_k: Optional[float] = None


class GradientCurveRequest(CamelModel):
    norm: NormSpecConfig
    potential: PotentialConfig
    x0: List[float]
    t_end: float = Field(..., gt=0)
    dt: float = Field(..., gt=0)


class GradientCurveResponse(CamelModel):
    times: List[float]
    states: List[List[float]]
    dt: float
