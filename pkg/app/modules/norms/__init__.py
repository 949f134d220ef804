from app.modules.norms.family import (
    MinkowskiNorm,
    QuadraticNorm,
    RegularizedPNorm,
    ShiftedBallNorm,
    ReversedNorm,
    euclidean,
    lpNorm,
)
from app.modules.norms.service import (
    normService,
    MetricTensor,
    EllipticityBounds,
    UniformConstants,
)

__all__ = [
    "MinkowskiNorm",
    "QuadraticNorm",
    "RegularizedPNorm",
    "ShiftedBallNorm",
    "ReversedNorm",
    "euclidean",
    "lpNorm",
    "normService",
    "MetricTensor",
    "EllipticityBounds",
    "UniformConstants",
]
