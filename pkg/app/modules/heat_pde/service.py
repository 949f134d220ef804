"""
Heat Service
Reverse nonlinear heat equation du/dt = -div(grad(-u)) on a padded box
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from app.core.config import settings
from app.modules.entropy_transport.grid import Grid, GridDensity, VectorField, gridDifferential
from app.modules.entropy_transport.profiles import GaussianLikeProfile
from app.modules.entropy_transport.service import transportService
from app.modules.heat_pde.stencil import fluxDivergence, frozenOperator
from app.modules.norms.family import MinkowskiNorm
from app.modules.norms.service import normService
from app.utils.logger import logger
from app.utils.exceptions import (
    AsymmetricNorm,
    DegenerateWindow,
    DimensionMismatch,
    InvalidInputException,
    LinearSolveFailure,
    NegativeDensity,
    StabilityViolation,
)

SCHEMES = ("explicit_flux", "semi_implicit_frozen")


@dataclass(frozen=True)
class HeatConfig:
    grid: Grid
    dt: float
    tEnd: float
    scheme: str = "explicit_flux"
    boundary: str = "zero_flux"
    snapshotStride: int = 1

    def __post_init__(self):
        if not self.dt > 0 or not self.tEnd > self.dt:
            raise InvalidInputException(f"need dt > 0 and t_end > dt (dt={self.dt}, t_end={self.tEnd})")
        if self.scheme not in SCHEMES:
            raise InvalidInputException(f"unknown scheme '{self.scheme}', expected one of {SCHEMES}")
        if self.boundary != "zero_flux":
            raise InvalidInputException("only zero_flux boundaries are supported")
        if self.snapshotStride < 1:
            raise InvalidInputException("snapshot_stride must be >= 1")
        if any(c < 3 for c in self.grid.m):
            raise InvalidInputException("heat grids need at least 3 cells per axis")


@dataclass(frozen=True)
class FrameDiagnostics:
    t: float
    mass: float
    entropy: float
    m2Fwd: float
    m2Bwd: float
    dissipation: float
    clippedMass: float = 0.0

    def toRow(self) -> Dict[str, float]:
        return {
            "t": self.t,
            "mass": self.mass,
            "entropy": self.entropy,
            "m2_fwd": self.m2Fwd,
            "m2_bwd": self.m2Bwd,
            "dissipation": self.dissipation,
            "clipped_mass": self.clippedMass,
        }


@dataclass
class DensityTrajectory:
    times: np.ndarray
    frames: List[GridDensity]
    diagnostics: List[FrameDiagnostics] = field(default_factory=list)
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.frames) != self.times.size:
            raise DimensionMismatch("need one time per frame")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise InvalidInputException("trajectory times must be strictly increasing")

    def indexOf(self, t: float) -> int:
        """Index of the snapshot at time t (relative match 1e-9)"""
        scale = max(1.0, float(np.max(np.abs(self.times))))
        hits = np.flatnonzero(np.abs(self.times - t) <= 1e-9 * scale)
        if hits.size == 0:
            raise InvalidInputException(f"t={t} is not a snapshot time")
        return int(hits[0])

    def frameAt(self, t: float) -> GridDensity:
        return self.frames[self.indexOf(t)]


@dataclass(frozen=True)
class FirstVariation:
    lhs: float
    rhs: float
    residual: float
    approximate: bool


class HeatService:
    """
    Service for the heat flow of a Minkowski norm

    The node field V = L*(-D_h u) is averaged to faces and differenced,
    so total mass changes only by round-off.
    """

    # ============================================================
    # SOLVER
    # ============================================================

    def stabilityBound(self, norm: MinkowskiNorm, grid: Grid) -> float:
        """0.25 * min h^2 / Lambda with Lambda = 1 / lambda_lo(g), the dual ellipticity"""
        if "dual_lambda_hi" not in norm.cache:
            bounds = normService.ellipticityBounds(norm, 256)
            norm.cache["dual_lambda_hi"] = 1.0 / bounds.lambdaLo
        hMin = float(np.min(grid.spacing))
        return settings.HEAT_STABILITY_FACTOR * hMin ** 2 / norm.cache["dual_lambda_hi"]

    def nodeField(self, norm: MinkowskiNorm, u: np.ndarray, grid: Grid) -> np.ndarray:
        """V = grad(-u) = L*(-D_h u) per node"""
        return normService.gradientVector(norm, -gridDifferential(u, grid))

    def heatSolve(self, norm: MinkowskiNorm, u0: GridDensity, cfg: HeatConfig) -> DensityTrajectory:
        """
        Evolve u0 to cfg.tEnd, keeping every snapshotStride-th step and the last one

        Raises:
            StabilityViolation: explicit dt above stabilityBound
            NegativeDensity: undershoot below -HEAT_NEGATIVE_TOL * max(u)
            LinearSolveFailure: the semi-implicit system could not be solved
        """
        if u0.grid != cfg.grid:
            raise DimensionMismatch("initial density must live on the configured grid")
        if cfg.grid.dim != norm.dim:
            raise DimensionMismatch(f"grid dim {cfg.grid.dim} != norm dim {norm.dim}")

        nSteps = int(np.ceil(cfg.tEnd / cfg.dt - 1e-9))
        dt = cfg.tEnd / nSteps
        if cfg.scheme == "explicit_flux":
            bound = self.stabilityBound(norm, cfg.grid)
            if dt > bound * (1 + 1e-12):
                raise StabilityViolation(f"dt={dt:.3e} exceeds the explicit bound {bound:.3e}")

        boundary = u0.boundaryMass()
        if boundary >= settings.BOUNDARY_MASS_TOL:
            logger.warning(f"⚠️ initial boundary mass {boundary:.3e} above {settings.BOUNDARY_MASS_TOL:.0e}")

        logger.info(f"🔍 Heat solve: {cfg.scheme}, {nSteps} steps of dt={dt:.3e} on grid {cfg.grid.m}")
        u = np.array(u0.values, dtype=float)
        mass0 = float(u.sum())
        times = [0.0]
        frames = [u0]
        diagnostics = [self.frameDiagnostics(norm, u0, 0.0)]
        clipped = 0.0

        try:
            for step in range(1, nSteps + 1):
                if cfg.scheme == "explicit_flux":
                    u = u - dt * fluxDivergence(self.nodeField(norm, u, cfg.grid), cfg.grid)
                else:
                    u = self._semiImplicitStep(norm, u, cfg.grid, dt)
                u, removed = self._clipNegative(u, step)
                clipped += removed * cfg.grid.cellVolume

                if step % cfg.snapshotStride == 0 or step == nSteps:
                    t = step * dt
                    frame = GridDensity(cfg.grid, u)
                    times.append(t)
                    frames.append(frame)
                    diagnostics.append(self.frameDiagnostics(norm, frame, t, clipped))
                    clipped = 0.0
        except Exception as e:
            logger.error(f"❌ Heat solve failed at step {step}: {e}")
            raise

        drift = abs(float(u.sum()) - mass0) * cfg.grid.cellVolume
        logger.info(f"✅ Heat solve done: {len(frames)} frames, mass drift {drift:.2e}")
        if drift > settings.HEAT_MASS_TOL:
            logger.warning(f"⚠️ cumulative mass drift {drift:.2e} above {settings.HEAT_MASS_TOL:.0e}")
        return DensityTrajectory(
            times=np.array(times),
            frames=frames,
            diagnostics=diagnostics,
            meta={"scheme": cfg.scheme, "dt": dt, "steps": nSteps, "norm": norm.family},
        )

    def _semiImplicitStep(self, norm: MinkowskiNorm, u: np.ndarray, grid: Grid, dt: float) -> np.ndarray:
        # Frozen coefficients A = g(V_prev)^{-1}, so that V = A(-D u) exactly at V_prev
        V = self.nodeField(norm, u, grid).reshape(-1, grid.dim)
        zero = ~np.any(V != 0.0, axis=-1)
        if zero.any():
            logger.debug(f"🔍 semi-implicit: {int(zero.sum())} critical nodes use the first basis direction")
            V[zero] = np.eye(grid.dim)[0]
        A = np.linalg.inv(normService.checkedHessian(norm, V))
        N = u.size
        system = (sparse.identity(N, format="csr") - dt * frozenOperator(A, grid)).tocsc()
        try:
            out = spsolve(system, u.ravel())
        except Exception as e:
            raise LinearSolveFailure(f"sparse solve failed: {e}") from e
        if not np.all(np.isfinite(out)):
            raise LinearSolveFailure("sparse solve returned non-finite values")
        return np.asarray(out).reshape(grid.m)

    def _clipNegative(self, u: np.ndarray, step: int) -> Tuple[np.ndarray, float]:
        """Clip small undershoots, rescaling the positive part to keep the total"""
        low = float(u.min())
        if low >= 0:
            return u, 0.0
        peak = float(u.max())
        if low < -settings.HEAT_NEGATIVE_TOL * peak:
            raise NegativeDensity(f"value {low:.3e} at step {step} (peak {peak:.3e})")
        total = float(u.sum())
        removed = -float(u[u < 0].sum())
        u = np.clip(u, 0.0, None)
        u *= total / float(u.sum())
        return u, removed

    # ============================================================
    # DIAGNOSTICS
    # ============================================================

    def dissipation(self, norm: MinkowskiNorm, rho: GridDensity) -> float:
        """int ||grad(-rho)||^2 / rho dx, zero on nodes below DENSITY_FLOOR"""
        field = transportService.entropyWGradient(rho, norm)
        return transportService.tangentSpeed(norm, rho, field) ** 2

    def frameDiagnostics(self, norm: MinkowskiNorm, rho: GridDensity, t: float, clipped: float = 0.0) -> FrameDiagnostics:
        moments = transportService.secondMoments(norm, rho)
        return FrameDiagnostics(
            t=float(t),
            mass=rho.mass(),
            entropy=transportService.relativeEntropy(rho),
            m2Fwd=moments.forward,
            m2Bwd=moments.backward,
            dissipation=self.dissipation(norm, rho),
            clippedMass=float(clipped),
        )

    # ============================================================
    # GAUSSIAN-FORM SOLUTIONS
    # ============================================================

    def gaussianProfile(self, norm: MinkowskiNorm, center, a: float, grid: Grid) -> GridDensity:
        """
        Density proportional to exp(-||x - z||^2 / (4a)) for a symmetric norm

        Raises:
            AsymmetricNorm: forward and reverse norms differ on samples
        """
        if not normService.isSymmetric(norm):
            raise AsymmetricNorm(f"{norm.family} norm is not symmetric; the Gaussian form needs ||-x|| = ||x||")
        return transportService.makeDensity(grid, GaussianLikeProfile(norm=norm, center=np.asarray(center, dtype=float), a=a))

    def gaussianEvolution(
        self,
        norm: MinkowskiNorm,
        center,
        a: float,
        times: Sequence[float],
        grid: Grid,
    ) -> DensityTrajectory:
        """Analytic heat flow of the Gaussian form: a -> a + t"""
        times = np.asarray(times, dtype=float)
        if np.any(times < 0):
            raise InvalidInputException("evolution times must be >= 0")
        frames = [self.gaussianProfile(norm, center, a + t, grid) for t in times]
        diagnostics = [self.frameDiagnostics(norm, f, t) for f, t in zip(frames, times)]
        return DensityTrajectory(times=times, frames=frames, diagnostics=diagnostics, meta={"analytic": True, "a": a})

    # ============================================================
    # GRADIENT-FLOW CHECKS
    # ============================================================

    def entropyDissipationResidual(self, norm: MinkowskiNorm, traj: DensityTrajectory, tau: float, T: float) -> float:
        """
        |int_tau^T dissipation dt - (Ent(tau) - Ent(T))| / |Ent(tau) - Ent(T)|

        Trapezoid in time over the snapshots between tau and T.
        """
        i, j = traj.indexOf(tau), traj.indexOf(T)
        if j < i:
            raise InvalidInputException("need tau <= T")
        diags = traj.diagnostics or [self.frameDiagnostics(norm, f, t) for f, t in zip(traj.frames, traj.times)]
        drop = diags[i].entropy - diags[j].entropy
        if abs(drop) < 1e-10:
            raise DegenerateWindow(f"entropy change {drop:.3e} over [{tau}, {T}] is too small")
        dissipation = np.array([d.dissipation for d in diags[i:j + 1]])
        integral = float(np.trapezoid(dissipation, traj.times[i:j + 1]))
        return abs(integral - drop) / abs(drop)

    def firstVariation(
        self,
        norm: MinkowskiNorm,
        trajA: DensityTrajectory,
        trajB: DensityTrajectory,
        t: float,
        dtFd: float,
        geodesicFields: Optional[Tuple[VectorField, VectorField]] = None,
        method: str = "exact",
    ) -> FirstVariation:
        """
        Both sides of d/dt W2(mu_t, nu_t)^2 / 2 = int g(w1, nu') dnu - int g(w0, mu') dmu

        The left side is a centered difference over frames at t -/+ dtFd.
        Without geodesicFields, the endpoint tangents come from barycentric
        projection of the exact plan between mu_t and nu_t (approximate).
        """
        if not dtFd > 0 or t - dtFd < 0:
            raise InvalidInputException("need dt_fd > 0 and t - dt_fd >= 0")

        def w2Sq(mu: GridDensity, nu: GridDensity) -> float:
            if method == "exact":
                return transportService.w2Exact(norm, mu, nu).cost
            return transportService.w2Sinkhorn(norm, mu, nu).cost

        lhs = (
            w2Sq(trajA.frameAt(t + dtFd), trajB.frameAt(t + dtFd))
            - w2Sq(trajA.frameAt(t - dtFd), trajB.frameAt(t - dtFd))
        ) / (4.0 * dtFd)

        mu, nu = trajA.frameAt(t), trajB.frameAt(t)
        approximate = geodesicFields is None
        if approximate:
            geodesicFields = transportService.barycentricFields(transportService.w2Exact(norm, mu, nu))
        fieldMu, fieldNu = geodesicFields
        rhs = transportService.omegaGap(
            norm,
            mu,
            nu,
            transportService.entropyWGradient(mu, norm),
            transportService.entropyWGradient(nu, norm),
            fieldMu,
            fieldNu,
        )
        return FirstVariation(lhs=float(lhs), rhs=float(rhs), residual=abs(lhs - rhs), approximate=approximate)

    def firstVariationResidual(
        self,
        norm: MinkowskiNorm,
        trajA: DensityTrajectory,
        trajB: DensityTrajectory,
        t: float,
        dtFd: float,
        geodesicFields: Optional[Tuple[VectorField, VectorField]] = None,
    ) -> float:
        return self.firstVariation(norm, trajA, trajB, t, dtFd, geodesicFields).residual


heatService = HeatService()
