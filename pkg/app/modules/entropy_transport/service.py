"""
Transport Service
Grid densities, relative entropy, Wasserstein-2 transport and the Theta functional
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union
import numpy as np
from scipy.special import xlogy

from app.core.config import settings
from app.modules.entropy_transport.grid import Grid, GridDensity, VectorField, gridDifferential
from app.modules.entropy_transport.profiles import AnalyticDensity, DensityProfile
from app.modules.entropy_transport.transport import (
    TransportPlan,
    barycentricFields,
    solveExact,
    solveSinkhorn,
)
from app.modules.norms.family import MinkowskiNorm
from app.modules.norms.service import normService
from app.utils.logger import logger
from app.utils.exceptions import (
    DegenerateScale,
    DimensionMismatch,
    InvalidInputException,
    ZeroMass,
    ZeroSecondMoment,
)


@dataclass(frozen=True)
class ThetaResult:
    theta: float
    numerator: float
    secondMoment: float
    mode: str


@dataclass(frozen=True)
class SecondMoments:
    forward: float
    backward: float


class TransportService:
    """
    Service for densities on grids and the Wasserstein-2 geometry they carry
    """

    # ============================================================
    # DENSITIES
    # ============================================================

    def makeDensity(self, grid: Grid, profile: DensityProfile) -> GridDensity:
        """
        Sample a profile at the grid nodes, clip negatives and normalize

        Raises:
            ZeroMass: the profile vanishes on every node
        """
        values = np.asarray(profile.evaluate(grid.points()), dtype=float).reshape(grid.m)
        values = np.where(np.isfinite(values), values, 0.0)
        values = np.clip(values, 0.0, None)
        mass = float(values.sum() * grid.cellVolume)
        if not mass > 0:
            raise ZeroMass(f"profile {type(profile).__name__} has no mass on the grid")
        return GridDensity(grid, values / mass)

    def relativeEntropy(self, mu: GridDensity) -> float:
        """Ent(mu) = int rho log rho dx, with 0 log 0 = 0"""
        return float(xlogy(mu.values, mu.values).sum() * mu.grid.cellVolume)

    def entropyWGradient(self, mu: GridDensity, norm: MinkowskiNorm) -> VectorField:
        """
        Wasserstein gradient of -Ent: grad(-rho)/rho = L*(-D rho)/rho

        Nodes with rho below DENSITY_FLOOR get the zero vector and are flagged.
        """
        self._checkDim(norm, mu.grid)
        covector = -gridDifferential(mu.values, mu.grid)
        vectors = normService.gradientVector(norm, covector)
        floor = settings.DENSITY_FLOOR
        flagged = mu.values < floor
        safe = np.where(flagged, 1.0, mu.values)
        field = np.where(flagged[..., None], 0.0, vectors / safe[..., None])
        out = VectorField(mu.grid, field, flagged)
        dropped = out.flaggedMass(mu)
        if dropped > 0:
            logger.debug(f"🔍 entropy gradient: {flagged.sum()} nodes flagged, mass {dropped:.3e}")
        return out

    def secondMoments(self, norm: MinkowskiNorm, mu: GridDensity) -> SecondMoments:
        self._checkDim(norm, mu.grid)
        x = mu.grid.points()
        w = mu.values * mu.grid.cellVolume
        forward = float(np.sum(norm.value(x) ** 2 * w))
        backward = float(np.sum(norm.value(-x) ** 2 * w))
        return SecondMoments(forward=forward, backward=backward)

    def tangentSpeed(self, norm: MinkowskiNorm, mu: GridDensity, field: VectorField) -> float:
        """F_mu(Phi) = (int ||Phi||^2 dmu)^(1/2)"""
        self._checkDim(norm, mu.grid)
        if field.grid != mu.grid:
            raise DimensionMismatch("field and density live on different grids")
        w = mu.values * mu.grid.cellVolume
        return float(np.sqrt(np.sum(norm.value(field.values) ** 2 * w)))

    # ============================================================
    # TRANSPORT
    # ============================================================

    def w2Exact(self, norm: MinkowskiNorm, mu: GridDensity, nu: GridDensity) -> TransportPlan:
        """Exact discrete W2 plan from mu to nu (network simplex)"""
        try:
            return solveExact(norm, mu, nu)
        except Exception as e:
            logger.error(f"❌ Exact transport failed: {e}")
            raise

    def w2Sinkhorn(
        self,
        norm: MinkowskiNorm,
        mu: GridDensity,
        nu: GridDensity,
        epsSchedule: Optional[Sequence[float]] = None,
        epsFinal: Optional[float] = None,
    ) -> TransportPlan:
        """
        Debiased entropic estimate of the W2 plan

        Args:
            epsSchedule: strictly decreasing eps values; derived from epsFinal when omitted
            epsFinal: last eps of the default halving schedule (default 1e-4 * diameter^2)
        """
        try:
            return solveSinkhorn(norm, mu, nu, schedule=epsSchedule, epsFinal=epsFinal)
        except Exception as e:
            logger.error(f"❌ Sinkhorn transport failed: {e}")
            raise

    def barycentricFields(self, plan: TransportPlan) -> Tuple[VectorField, VectorField]:
        fields = barycentricFields(plan)
        logger.info(f"⚠️ geodesic fields from barycentric projection of a {plan.method} plan are approximate")
        return fields

    def contractionGeodesic(self, mu: GridDensity, T: float, s: float) -> Tuple[GridDensity, VectorField]:
        """
        Point s of the geodesic from mu contracting to the Dirac mass at 0 at time T

        The density is rho^s(x) = (T/(T-s))^n rho(T x/(T-s)), realized on the
        grid scaled by (T-s)/T; the tangent field is -x/(T-s).

        Raises:
            DegenerateScale: s outside [0, T)
        """
        if not T > 1:
            raise InvalidInputException(f"contraction parameter T must exceed 1, got {T}")
        if not 0 <= s < T:
            raise DegenerateScale(f"need 0 <= s < T (s={s}, T={T})")
        k = (T - s) / T
        grid = mu.grid.scaled(k)
        density = GridDensity(grid, mu.values * k ** (-grid.dim))
        field = VectorField(grid, -grid.points() / (T - s))
        return density, field

    def omegaGap(
        self,
        norm: MinkowskiNorm,
        mu: GridDensity,
        nu: GridDensity,
        gradMu: VectorField,
        gradNu: VectorField,
        fieldMu: VectorField,
        fieldNu: VectorField,
    ) -> float:
        """
        int g(w1, grad_nu) dnu - int g(w0, grad_mu) dmu

        fieldMu / fieldNu are the geodesic tangent fields at the two endpoints;
        g_w(w, v) = L(w) . v with the zero covector at w = 0.
        """
        def pairing(density: GridDensity, tangent: VectorField, grad: VectorField) -> float:
            if tangent.grid != density.grid or grad.grid != density.grid:
                raise DimensionMismatch("fields must live on the density's grid")
            integrand = np.einsum("...i,...i->...", norm.legendre(tangent.values), grad.values)
            return float(np.sum(integrand * density.values) * density.grid.cellVolume)

        self._checkDim(norm, mu.grid)
        return pairing(nu, fieldNu, gradNu) - pairing(mu, fieldMu, gradMu)

    # ============================================================
    # THETA
    # ============================================================

    def thetaParts(self, norm: MinkowskiNorm, rho: Union[GridDensity, AnalyticDensity]) -> ThetaResult:
        """
        Theta(rho) = int g_{-x}(-x, grad(-rho)) dx / int ||-x||^2 rho dx

        Grid densities use midpoint quadrature with central differences;
        analytic densities supply their own exact pieces.
        """
        if isinstance(rho, GridDensity):
            self._checkDim(norm, rho.grid)
            x = rho.grid.points()
            gradNeg = normService.gradientVector(norm, -gridDifferential(rho.values, rho.grid))
            integrand = np.einsum("...i,...i->...", norm.legendre(-x), gradNeg)
            numerator = float(integrand.sum() * rho.grid.cellVolume)
            secondMoment = self.secondMoments(norm, rho).backward
            mode = "grid"
        elif isinstance(rho, AnalyticDensity):
            numerator, secondMoment = rho.thetaParts(norm)
            mode = "analytic"
        else:
            raise InvalidInputException(f"theta needs a grid density or an analytic density, got {type(rho).__name__}")

        if not secondMoment > 0:
            raise ZeroSecondMoment("backward second moment vanishes")
        return ThetaResult(
            theta=numerator / secondMoment,
            numerator=float(numerator),
            secondMoment=float(secondMoment),
            mode=mode,
        )

    def theta(self, norm: MinkowskiNorm, rho: Union[GridDensity, AnalyticDensity]) -> float:
        return self.thetaParts(norm, rho).theta

    # ============================================================
    # SPEEDS
    # ============================================================

    def metricSpeed(
        self,
        norm: MinkowskiNorm,
        frames: Sequence[GridDensity],
        times: Sequence[float],
        tIndex: int,
        method: str = "sinkhorn",
    ) -> float:
        """
        Forward difference W2(mu_t, mu_{t+1}) / (t_{i+1} - t_i)

        Args:
            method: "sinkhorn" (default) or "exact"
        """
        if len(frames) != len(times):
            raise DimensionMismatch("need one time per frame")
        if not 0 <= tIndex < len(frames) - 1:
            raise InvalidInputException(f"t_index {tIndex} has no successor frame")
        delta = float(times[tIndex + 1]) - float(times[tIndex])
        if not delta > 0:
            raise InvalidInputException("times must be increasing")

        mu, nu = frames[tIndex], frames[tIndex + 1]
        if method == "exact":
            plan = self.w2Exact(norm, mu, nu)
        elif method == "sinkhorn":
            plan = self.w2Sinkhorn(norm, mu, nu)
        else:
            raise InvalidInputException(f"unknown transport method '{method}'")
        return plan.w2 / delta

    def _checkDim(self, norm: MinkowskiNorm, grid: Grid) -> None:
        if grid.dim != norm.dim:
            raise DimensionMismatch(f"grid dim {grid.dim} != norm dim {norm.dim}")


transportService = TransportService()
