"""
Norm Endpoints
Metric constants and Legendre duality for a norm spec
"""
from fastapi import APIRouter
import numpy as np

from app.modules.norms import normService
from app.schemas import (
    NormInfoRequest,
    NormInfoResponse,
    LegendreInverseRequest,
    LegendreInverseResponse,
)
from app.utils.logger import logger

router = APIRouter()


@router.post("/info", response_model=NormInfoResponse)
def normInfo(request: NormInfoRequest):
    """
    Ellipticity bounds and 2-uniform constants

    Request:
    {
        "norm": {"family": "regularized_p", "dim": 2, "params": {"p": 4, "eps": 0.001}},
        "samples": 64,
        "angularResolution": 64
    }
    """
    norm = normService.fromConfig(request.norm)
    bounds = normService.ellipticityBounds(norm, request.samples)
    constants = normService.uniformConstants(norm, request.angular_resolution)
    logger.info(f"✅ Norm info for {norm.family}: C={constants.cConst:.4f}, S={constants.sConst:.4f}")
    return NormInfoResponse(
        lambda_lo=bounds.lambdaLo,
        lambda_hi=bounds.lambdaHi,
        c_const=constants.cConst,
        s_const=constants.sConst,
        symmetric=normService.isSymmetric(norm),
    )


@router.post("/legendre-inverse", response_model=LegendreInverseResponse)
def legendreInverse(request: LegendreInverseRequest):
    """Vector x with L(x) = covector, plus the residual |L(x) - w| and the dual norm"""
    norm = normService.fromConfig(request.norm)
    w = np.asarray(request.covector, dtype=float)
    x = normService.legendreInverse(norm, w)
    residual = float(np.linalg.norm(normService.legendre(norm, x) - w))
    return LegendreInverseResponse(
        vector=x.tolist(),
        residual=residual,
        dual_norm=float(normService.normEval(norm, x)),
    )
