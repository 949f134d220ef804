"""
Norm Schemas
Structured config object for Minkowski norm specifications
"""
from pydantic import BaseModel, Field, model_validator
from typing import List, Literal, Optional

from app.schemas.common import CamelModel


class NormParams(BaseModel):
    """
    Family parameters

    - matrix: quadratic family, row-major symmetric positive-definite matrix
    - p, eps, shear: regularized_p family
    - center: shifted_ball family
    - inner: reversed family
    """
    matrix: Optional[List[List[float]]] = None
    p: Optional[float] = None
    eps: Optional[float] = Field(None, ge=0)
    shear: Optional[List[List[float]]] = None
    center: Optional[List[float]] = None
    inner: Optional["NormSpecConfig"] = None


class NormSpecConfig(BaseModel):
    """Norm spec as read from JSON files or request bodies"""
    family: Literal["quadratic", "regularized_p", "shifted_ball", "reversed"]
    dim: int = Field(..., ge=1, le=3)
    params: NormParams = Field(default_factory=NormParams)

    @model_validator(mode="after")
    def checkFamilyParams(self) -> "NormSpecConfig":
        params = self.params
        if self.family == "regularized_p" and params.p is None:
            raise ValueError("regularized_p needs params.p")
        if self.family == "shifted_ball":
            if params.center is None or len(params.center) != self.dim:
                raise ValueError("shifted_ball needs params.center of length dim")
        if self.family == "reversed":
            if params.inner is None:
                raise ValueError("reversed needs params.inner")
            if params.inner.dim != self.dim:
                raise ValueError("reversed inner spec has a different dim")
        for name in ("matrix", "shear"):
            rows = getattr(params, name)
            if rows is not None and (len(rows) != self.dim or any(len(r) != self.dim for r in rows)):
                raise ValueError(f"params.{name} must be {self.dim}x{self.dim}")
        return self


NormParams.model_rebuild()


class NormInfoRequest(CamelModel):
    norm: NormSpecConfig
    samples: int = Field(64, ge=1, le=4096)
    angular_resolution: int = Field(64, ge=16, le=1024)


class NormInfoResponse(CamelModel):
    """JSON report of `norm info`"""
    lambda_lo: float
    lambda_hi: float
    c_const: float
    s_const: float
    symmetric: bool


class LegendreInverseRequest(CamelModel):
    norm: NormSpecConfig
    covector: List[float]


class LegendreInverseResponse(CamelModel):
    vector: List[float]
    residual: float
    dual_norm: float
