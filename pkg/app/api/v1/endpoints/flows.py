"""
Flow Endpoints
Skew-convexity checks and gradient curves
"""
from fastapi import APIRouter
import numpy as np

from app.modules.flows import PotentialSpec, flowService
from app.modules.norms import normService
from app.schemas import (
    SkewCheckRequest,
    SkewCheckResponse,
    GradientCurveRequest,
    GradientCurveResponse,
)

router = APIRouter()


@router.post("/skew-check", response_model=SkewCheckResponse)
def skewCheck(request: SkewCheckRequest):
    """
    Sampled infimum of the skew quotient

    The infimum is an upper bound on the best skew-convexity constant K.
    """
    norm = normService.fromConfig(request.norm)
    pot = PotentialSpec.fromConfig(request.potential.model_dump())
    report = flowService.skewEstimate(norm, pot, request.samples, request.region_radius, request.seed)
    x, y = report.argminPair
    return SkewCheckResponse(
        inf_quotient=report.infQuotient,
        argmin_pair=[np.asarray(x).tolist(), np.asarray(y).tolist()],
        samples=report.samples,
        summary=report.summary,
        reference_k=report.referenceK,
    )


@router.post("/gradient-curve", response_model=GradientCurveResponse)
def gradientCurve(request: GradientCurveRequest):
    norm = normService.fromConfig(request.norm)
    pot = PotentialSpec.fromConfig(request.potential.model_dump())
    traj = flowService.gradientCurve(norm, pot, np.asarray(request.x0, dtype=float), request.t_end, request.dt)
    return GradientCurveResponse(
        times=traj.times.tolist(),
        states=traj.states.tolist(),
        dt=traj.meta["dt"],
    )
