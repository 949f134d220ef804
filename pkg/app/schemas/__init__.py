from app.schemas.common import CamelModel, to_camel
from app.schemas.norm import (
    NormSpecConfig,
    NormInfoRequest,
    NormInfoResponse,
    LegendreInverseRequest,
    LegendreInverseResponse,
)
from app.schemas.flow import (
    PotentialConfig,
    SkewCheckRequest,
    SkewCheckResponse,
    GradientCurveRequest,
    GradientCurveResponse,
)
from app.schemas.transport import (
    GridSpec,
    DensityPayload,
    W2Request,
    W2Response,
    ThetaTriangleRequest,
    ThetaResponse,
)
from app.schemas.heat import GaussianHeatRequest, FrameEvent
from app.schemas.experiment import (
    ExperimentConfig,
    ReportRecord,
    ExperimentRunRequest,
    ExperimentRunResponse,
)

__all__ = [
    "CamelModel",
    "to_camel",
    "NormSpecConfig",
    "NormInfoRequest",
    "NormInfoResponse",
    "LegendreInverseRequest",
    "LegendreInverseResponse",
    "PotentialConfig",
    "SkewCheckRequest",
    "SkewCheckResponse",
    "GradientCurveRequest",
    "GradientCurveResponse",
    "GridSpec",
    "DensityPayload",
    "W2Request",
    "W2Response",
    "ThetaTriangleRequest",
    "ThetaResponse",
    "GaussianHeatRequest",
    "FrameEvent",
    "ExperimentConfig",
    "ReportRecord",
    "ExperimentRunRequest",
    "ExperimentRunResponse",
]
