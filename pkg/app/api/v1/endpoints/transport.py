"""
Transport Endpoints
Wasserstein-2 distances between grid densities and the Theta functional of tent densities
"""
from fastapi import APIRouter

from app.modules.entropy_transport import Grid, GridDensity, transportService
from app.modules.experiments import triangleDensity
from app.modules.norms import lpNorm, normService
from app.schemas import (
    DensityPayload,
    W2Request,
    W2Response,
    ThetaTriangleRequest,
    ThetaResponse,
)

router = APIRouter()


def toDensity(payload: DensityPayload) -> GridDensity:
    grid = Grid(lo=payload.grid.lo, hi=payload.grid.hi, m=payload.grid.m)
    return GridDensity(grid, payload.values)


@router.post("/w2", response_model=W2Response)
def w2(request: W2Request):
    """
    Oriented W2 from mu to nu

    method "exact" solves the discrete Kantorovich problem (support <= W2_MAX_SUPPORT),
    "sinkhorn" returns the debiased entropic estimate.
    """
    norm = normService.fromConfig(request.norm)
    mu, nu = toDensity(request.mu), toDensity(request.nu)
    if request.method == "exact":
        plan = transportService.w2Exact(norm, mu, nu)
    else:
        plan = transportService.w2Sinkhorn(norm, mu, nu, epsFinal=request.eps_final)
    return W2Response(cost=plan.cost, w2=plan.w2, marginal_err=plan.marginalError, method=plan.method)


@router.post("/theta-triangle", response_model=ThetaResponse)
def thetaTriangle(request: ThetaTriangleRequest):
    """Theta of the l_p tent density translated by (-shift, 0) and scaled, by exact piecewise quadrature"""
    norm = lpNorm(request.p) if request.norm is None else normService.fromConfig(request.norm)
    density = triangleDensity(request.p, request.shift).scaled(request.scale)
    result = transportService.thetaParts(norm, density)
    return ThetaResponse(theta=result.theta, numerator=result.numerator, second_moment=result.secondMoment)
