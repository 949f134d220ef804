from app.modules.entropy_transport.grid import (
    Grid,
    GridDensity,
    VectorField,
    readDensity,
    writeDensity,
    gridDifferential,
)
from app.modules.entropy_transport.profiles import (
    DensityProfile,
    AnalyticDensity,
    GaussianLikeProfile,
    UniformProfile,
    TableProfile,
    profileFromConfig,
)
from app.modules.entropy_transport.transport import TransportPlan, costMatrix
from app.modules.entropy_transport.service import (
    transportService,
    ThetaResult,
    SecondMoments,
)

__all__ = [
    "Grid",
    "GridDensity",
    "VectorField",
    "readDensity",
    "writeDensity",
    "gridDifferential",
    "DensityProfile",
    "AnalyticDensity",
    "GaussianLikeProfile",
    "UniformProfile",
    "TableProfile",
    "profileFromConfig",
    "TransportPlan",
    "costMatrix",
    "transportService",
    "ThetaResult",
    "SecondMoments",
]
