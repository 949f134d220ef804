"""
Discrete Wasserstein-2 transport with the oriented cost c(x, y) = ||y - x||^2
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
import numpy as np
import ot
from scipy import sparse

from app.core.config import settings
from app.modules.entropy_transport.grid import GridDensity, VectorField
from app.modules.norms.family import MinkowskiNorm
from app.utils.logger import logger
from app.utils.exceptions import (
    DimensionMismatch,
    InfeasibleMarginals,
    InvalidInputException,
    NonConvergence,
    SupportTooLarge,
)

COST_CHUNK_ROWS = 256


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """
    Coupling between the supports of source and target

    entries[i, j] is the mass moved from sourcePoints[i] to targetPoints[j];
    sourceIndex / targetIndex map support points back to flat grid nodes.
    """
    source: GridDensity
    target: GridDensity
    sourceIndex: np.ndarray
    targetIndex: np.ndarray
    entries: sparse.coo_array
    cost: float
    method: str
    marginalError: float
    epsFinal: Optional[float] = None

    @property
    def w2(self) -> float:
        return float(np.sqrt(max(self.cost, 0.0)))

    @property
    def sourcePoints(self) -> np.ndarray:
        return self.source.grid.points().reshape(-1, self.source.grid.dim)[self.sourceIndex]

    @property
    def targetPoints(self) -> np.ndarray:
        return self.target.grid.points().reshape(-1, self.target.grid.dim)[self.targetIndex]


def costMatrix(norm: MinkowskiNorm, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """C[i, j] = ||Y[j] - X[i]||^2, built in row chunks"""
    C = np.empty((X.shape[0], Y.shape[0]))
    for start in range(0, X.shape[0], COST_CHUNK_ROWS):
        block = X[start:start + COST_CHUNK_ROWS]
        C[start:start + block.shape[0]] = norm.value(Y[None, :, :] - block[:, None, :]) ** 2
    return C


def _support(density: GridDensity) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    weights = density.weights()
    index = np.flatnonzero(weights > 0)
    points = density.grid.points().reshape(-1, density.grid.dim)[index]
    return index, points, weights[index]


def _prepare(norm: MinkowskiNorm, mu: GridDensity, nu: GridDensity):
    if mu.grid.dim != norm.dim or nu.grid.dim != norm.dim:
        raise DimensionMismatch("densities and norm must share the dimension")
    ia, X, a = _support(mu)
    ib, Y, b = _support(nu)
    if a.size == 0 or b.size == 0:
        raise InfeasibleMarginals("a density has empty support")
    if abs(a.sum() - b.sum()) > 1e-8 * max(a.sum(), b.sum()):
        raise InfeasibleMarginals(f"masses differ: {a.sum():.12g} vs {b.sum():.12g}")
    return ia, X, a / a.sum(), ib, Y, b / b.sum()


def _marginalError(P: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Largest total-variation violation of the two marginals"""
    rows = 0.5 * np.abs(P.sum(axis=1) - a).sum()
    cols = 0.5 * np.abs(P.sum(axis=0) - b).sum()
    return float(max(rows, cols))


# ============================================================
# EXACT: network simplex
# ============================================================

def solveExact(norm: MinkowskiNorm, mu: GridDensity, nu: GridDensity) -> TransportPlan:
    ia, X, a, ib, Y, b = _prepare(norm, mu, nu)
    limit = settings.W2_MAX_SUPPORT
    if a.size > limit or b.size > limit:
        raise SupportTooLarge(f"supports {a.size} x {b.size} exceed {limit} nodes")

    M = costMatrix(norm, X, Y)
    G, log = ot.emd(a, b, M, numItermax=settings.W2_MAX_ITER, log=True)
    if log.get("warning"):
        logger.warning(f"⚠️ network simplex: {log['warning']}")
    if log.get("result_code", 1) != 1:
        raise NonConvergence(f"network simplex stopped with code {log.get('result_code')}: {log.get('warning')}")

    G = np.where(G > 1e-300, G, 0.0)
    cost = float(np.sum(G * M))
    return TransportPlan(
        source=mu,
        target=nu,
        sourceIndex=ia,
        targetIndex=ib,
        entries=sparse.coo_array(G),
        cost=max(cost, 0.0),
        method="exact",
        marginalError=_marginalError(G, a, b),
    )


# ============================================================
# SINKHORN: log domain, eps-scaling, debiased
# ============================================================

def epsSchedule(diameterSq: float, epsFinal: float) -> List[float]:
    """Halve from diameter^2 / 8 down to epsFinal (always the last entry)"""
    schedule = []
    eps = diameterSq / 8.0
    while eps > epsFinal:
        schedule.append(eps)
        eps *= 0.5
    schedule.append(epsFinal)
    return schedule


def _sinkhornLog(
    a: np.ndarray,
    b: np.ndarray,
    M: np.ndarray,
    schedule: Sequence[float],
    tol: float,
) -> np.ndarray:
    # POT stops on the l2 column error; this bound keeps half the l1 error under tol
    l2Scale = 2.0 / np.sqrt(max(a.size, b.size))
    f = np.zeros(a.size)
    g = np.zeros(b.size)
    used = 0
    for stage, eps in enumerate(schedule):
        final = stage == len(schedule) - 1
        stageTol = tol if final else max(tol, 1e-3)
        budget = settings.SINKHORN_MAX_ITER - used if final else settings.SINKHORN_STAGE_ITER
        P, log = ot.bregman.sinkhorn_log(
            a, b, M, eps,
            numItermax=max(budget, 1),
            stopThr=stageTol * l2Scale,
            log=True,
            warn=False,
            warmstart=(f / eps, g / eps),
        )
        used += int(log.get("niter", budget))
        f, g = eps * log["log_u"], eps * log["log_v"]

    err = 0.5 * max(float(np.abs(P.sum(axis=1) - a).sum()), float(np.abs(P.sum(axis=0) - b).sum()))
    if err >= tol:
        raise NonConvergence(
            f"Sinkhorn marginal error {err:.3e} after {used} iterations at eps={schedule[-1]:.3e}"
        )
    return P


def solveSinkhorn(
    norm: MinkowskiNorm,
    mu: GridDensity,
    nu: GridDensity,
    schedule: Optional[Sequence[float]] = None,
    epsFinal: Optional[float] = None,
) -> TransportPlan:
    """
    Entropic estimate of W2^2 with the self-transport debiasing
    cost(mu, nu) - (cost(mu, mu) + cost(nu, nu)) / 2
    """
    ia, X, a, ib, Y, b = _prepare(norm, mu, nu)
    M = costMatrix(norm, X, Y)
    Mxx = costMatrix(norm, X, X)
    Myy = costMatrix(norm, Y, Y)
    diameterSq = float(max(M.max(), Mxx.max(), Myy.max()))
    floor = 1e-4 * diameterSq

    if schedule is None:
        final = floor if epsFinal is None else float(epsFinal)
        schedule = epsSchedule(diameterSq, final)
    schedule = [float(e) for e in schedule]
    if any(e2 >= e1 for e1, e2 in zip(schedule, schedule[1:])):
        raise InvalidInputException("eps schedule must be strictly decreasing")
    if schedule[-1] < floor * (1 - 1e-12):
        raise InvalidInputException(f"final eps {schedule[-1]:.3e} below 1e-4 * diameter^2 = {floor:.3e}")

    tol = settings.SINKHORN_TOL * 0.5
    P = _sinkhornLog(a, b, M, schedule, tol)
    Pxx = _sinkhornLog(a, a, Mxx, schedule, tol)
    Pyy = _sinkhornLog(b, b, Myy, schedule, tol)
    cost = float(np.sum(P * M)) - 0.5 * (float(np.sum(Pxx * Mxx)) + float(np.sum(Pyy * Myy)))
    logger.debug(f"🔍 Sinkhorn: {len(schedule)} stages, eps_final={schedule[-1]:.3e}, cost={cost:.6g}")

    return TransportPlan(
        source=mu,
        target=nu,
        sourceIndex=ia,
        targetIndex=ib,
        entries=sparse.coo_array(np.where(P > 1e-300, P, 0.0)),
        cost=max(cost, 0.0),
        method=f"sinkhorn({schedule[-1]:.3g})",
        marginalError=_marginalError(P, a, b),
        epsFinal=schedule[-1],
    )


# ============================================================
# BARYCENTRIC PROJECTION
# ============================================================

def barycentricFields(plan: TransportPlan) -> Tuple[VectorField, VectorField]:
    """
    Approximate geodesic tangent fields at both endpoints

    Source node x_i gets sum_j pi_ij (y_j - x_i) / a_i, target node y_j gets
    sum_i pi_ij (y_j - x_i) / b_j; nodes outside a support are zero and flagged.
    """
    P = plan.entries.toarray()
    X, Y = plan.sourcePoints, plan.targetPoints
    a = P.sum(axis=1)
    b = P.sum(axis=0)

    # sum_j P_ij (y_j - x_i) = (P Y)_i - a_i x_i
    srcVals = (P @ Y - a[:, None] * X) / np.where(a > 0, a, 1.0)[:, None]
    dstVals = (b[:, None] * Y - P.T @ X) / np.where(b > 0, b, 1.0)[:, None]

    def toField(density: GridDensity, index: np.ndarray, vals: np.ndarray) -> VectorField:
        dim = density.grid.dim
        full = np.zeros((int(np.prod(density.grid.m)), dim))
        full[index] = vals
        flagged = np.ones(full.shape[0], dtype=bool)
        flagged[index] = False
        return VectorField(density.grid, full, flagged)

    return toField(plan.source, plan.sourceIndex, srcVals), toField(plan.target, plan.targetIndex, dstVals)
