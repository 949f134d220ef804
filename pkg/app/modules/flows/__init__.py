from app.modules.flows.potential import PotentialSpec
from app.modules.flows.service import (
    flowService,
    Trajectory,
    SkewReport,
    WitnessPair,
    DistanceSkewConfig,
    curvatureConstant,
)

__all__ = [
    "PotentialSpec",
    "flowService",
    "Trajectory",
    "SkewReport",
    "WitnessPair",
    "DistanceSkewConfig",
    "curvatureConstant",
]
