from app.modules.heat_pde.service import (
    heatService,
    HeatConfig,
    DensityTrajectory,
    FrameDiagnostics,
    FirstVariation,
)

__all__ = [
    "heatService",
    "HeatConfig",
    "DensityTrajectory",
    "FrameDiagnostics",
    "FirstVariation",
]
