from app.modules.experiments.triangle import (
    TangentTriangle,
    TriangleDensity,
    tangentTriangle,
    triangleDensity,
    step0Directions,
    step0ClosedForm,
)
from app.modules.experiments.lift import LiftedDensity
from app.modules.experiments.service import (
    experimentService,
    TriangleSearchResult,
    Step0Row,
)

__all__ = [
    "TangentTriangle",
    "TriangleDensity",
    "tangentTriangle",
    "triangleDensity",
    "step0Directions",
    "step0ClosedForm",
    "LiftedDensity",
    "experimentService",
    "TriangleSearchResult",
    "Step0Row",
]
