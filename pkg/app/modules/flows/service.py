"""
Flow Service
Gradient curves, skew-convexity quotients and contraction-rate fitting
on R^n with a Minkowski norm (geodesics are straight segments)
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import numpy as np

from app.core.config import settings
from app.modules.norms.family import MinkowskiNorm
from app.modules.norms.service import normService, unitDirections
from app.modules.flows.potential import PotentialSpec
from app.modules.flows.integrator import integrate
from app.utils.logger import logger
from app.utils.exceptions import (
    CoincidentPoints,
    InvalidInputException,
    UnsupportedCurvature,
)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise InvalidInputException("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidInputException("trajectory times must be strictly increasing")


@dataclass(frozen=True)
class SkewReport:
    infQuotient: float
    argminPair: Tuple[np.ndarray, np.ndarray]
    samples: int
    summary: Dict[str, float]
    referenceK: Optional[float] = None


@dataclass(frozen=True)
class WitnessPair:
    x: np.ndarray
    y: np.ndarray
    quotient: float


@dataclass(frozen=True)
class DistanceSkewConfig:
    """Curvature data for squared-distance potentials; Minkowski runs use k = delta = 0"""
    k: float = 0.0
    delta: float = 0.0
    r: float = 1.0
    z: Optional[np.ndarray] = None


def curvatureConstant(k: float, sConst: float, delta: float, r: float) -> float:
    """
    sqrt(k S^2 + delta) r * cot(sqrt(k S^2 + delta) r), equal to 1 in the flat limit
    """
    theta = np.sqrt(k * sConst ** 2 + delta) * r
    if theta < 1e-8:
        return 1.0 - theta ** 2 / 3.0
    return float(theta / np.tan(theta))


class FlowService:
    """
    Service for gradient flows of potentials

    Gradient curves solve xi' = grad(-f)(xi) with grad(-f) = L*(D(-f)).
    """

    def negGradient(self, norm: MinkowskiNorm, pot: PotentialSpec, x: np.ndarray) -> np.ndarray:
        """grad(-f)(x) row-wise"""
        return normService.gradientVector(norm, pot.negDifferential(norm, x))

    # ============================================================
    # GRADIENT CURVES
    # ============================================================

    def gradientCurve(
        self,
        norm: MinkowskiNorm,
        pot: PotentialSpec,
        x0,
        tEnd: float,
        dt: float,
        richardson: bool = True
    ) -> Trajectory:
        """
        RK4 gradient curve from x0 (or a batch of starting points)

        Args:
            norm: Minkowski norm
            pot: potential f
            x0: start point(s), shape (n,) or (k, n)
            tEnd: final time (>= dt)
            dt: mesh step (> 0)
            richardson: subdivide steps whose local error exceeds RK4_LOCAL_TOL

        Returns:
            Trajectory with states of shape (len(times),) + x0.shape
        """
        if not dt > 0 or tEnd < dt:
            raise InvalidInputException(f"need dt > 0 and t_end >= dt (dt={dt}, t_end={tEnd})")
        x0 = norm.checkShape(x0)

        try:
            times, states = integrate(
                lambda x: self.negGradient(norm, pot, x),
                x0,
                tEnd,
                dt,
                richardson=richardson,
                localTol=settings.RK4_LOCAL_TOL,
                minDt=settings.RK4_MIN_DT,
            )
        except Exception as e:
            logger.error(f"❌ Gradient curve failed ({pot.label}): {e}")
            raise

        if not np.all(np.isfinite(states)):
            raise InvalidInputException("gradient curve left the finite range")
        return Trajectory(
            times=times,
            states=states,
            meta={"dt": tEnd / (len(times) - 1), "norm": norm.family, "potential": pot.label},
        )

    # ============================================================
    # SKEW CONVEXITY
    # ============================================================

    def skewQuotients(self, norm: MinkowskiNorm, pot: PotentialSpec, X, Y) -> np.ndarray:
        """
        Q(x, y) = -[g_v(v, grad(-f)(y)) - g_v(v, grad(-f)(x))] / ||v||^2, v = y - x

        g_v(v, w) = [L(v)](w), so no metric tensor is assembled.
        """
        X = norm.checkShape(X)
        Y = norm.checkShape(Y)
        V = Y - X
        if np.any(np.all(V == 0, axis=-1)):
            raise CoincidentPoints("skew quotient needs x != y")
        gradX = self.negGradient(norm, pot, X)
        gradY = self.negGradient(norm, pot, Y)
        numerator = np.sum(norm.legendre(V) * (gradY - gradX), axis=-1)
        return -numerator / norm.value(V) ** 2

    def skewQuotient(self, norm: MinkowskiNorm, pot: PotentialSpec, x, y) -> float:
        return float(self.skewQuotients(norm, pot, np.atleast_2d(x), np.atleast_2d(y))[0])

    def _ballSamples(self, rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
        direction = rng.standard_normal((count, dim))
        direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
        return direction * radius * rng.random((count, 1)) ** (1.0 / dim)

    def _refinePair(self, norm, pot, x, y, inside, step) -> Tuple[np.ndarray, np.ndarray, float]:
        """Coordinate descent on (x, y) in R^{2n}, halving the step when no move improves"""
        n = norm.dim
        z = np.concatenate([x, y])
        best = self.skewQuotient(norm, pot, x, y)
        moves = np.vstack([np.eye(2 * n), -np.eye(2 * n)])
        for _ in range(settings.SKEW_REFINE_ITERS):
            cand = z[None, :] + step * moves
            ok = np.array([inside(c[:n]) and inside(c[n:]) for c in cand])
            ok &= np.linalg.norm(cand[:, n:] - cand[:, :n], axis=-1) > 1e-12
            if ok.any():
                values = self.skewQuotients(norm, pot, cand[ok, :n], cand[ok, n:])
                k = int(np.argmin(values))
                if values[k] < best:
                    best = float(values[k])
                    z = cand[ok][k]
                    continue
            step *= 0.5
        return z[:n], z[n:], best

    def _estimate(self, norm, pot, X, Y, inside, step) -> SkewReport:
        Q = self.skewQuotients(norm, pot, X, Y)
        k = int(np.argmin(Q))
        x, y, best = self._refinePair(norm, pot, X[k], Y[k], inside, step)
        if best > Q[k]:
            x, y, best = X[k], Y[k], float(Q[k])
        summary = {
            "min": float(Q.min()),
            "q25": float(np.quantile(Q, 0.25)),
            "median": float(np.median(Q)),
            "q75": float(np.quantile(Q, 0.75)),
            "max": float(Q.max()),
            "mean": float(Q.mean()),
        }
        return SkewReport(infQuotient=best, argminPair=(x, y), samples=len(Q), summary=summary)

    def skewEstimate(
        self,
        norm: MinkowskiNorm,
        pot: PotentialSpec,
        sampleCount: int,
        regionRadius: float,
        seed: int,
        extraPairs: Optional[Sequence[Tuple[np.ndarray, np.ndarray]]] = None
    ) -> SkewReport:
        """
        Sampled infimum of the skew quotient over pairs in the Euclidean ball of radius regionRadius

        The result is an upper bound on the best K; a pair with small quotient is a disproof.
        """
        if sampleCount < 1:
            raise InvalidInputException("sample_count must be >= 1")
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        X = self._ballSamples(rng, sampleCount, norm.dim, regionRadius)
        Y = self._ballSamples(rng, sampleCount, norm.dim, regionRadius)
        if extraPairs:
            X = np.vstack([X] + [np.atleast_2d(p[0]) for p in extraPairs])
            Y = np.vstack([Y] + [np.atleast_2d(p[1]) for p in extraPairs])
        keep = np.linalg.norm(Y - X, axis=-1) > 1e-12
        report = self._estimate(
            norm, pot, X[keep], Y[keep],
            inside=lambda p: float(np.linalg.norm(p)) <= regionRadius,
            step=0.1 * regionRadius,
        )
        logger.info(f"✅ Skew estimate ({pot.label}, {norm.family}): inf Q = {report.infQuotient:.6f}")
        return report

    def witnessSearch(
        self,
        norm: MinkowskiNorm,
        pot: PotentialSpec,
        thresholdK: float,
        sampleCount: int = 2048,
        regionRadius: float = 1.0,
        seed: int = 0
    ) -> Optional[WitnessPair]:
        """
        Look for a pair with skew quotient below thresholdK

        Besides random pairs, sweeps pairs (-v, 0) over directions v, the
        shape of the witness for potentials centred at the origin.
        """
        sweep = None
        if norm.dim == 2:
            V = 0.5 * regionRadius * unitDirections(2, 720)
            sweep = [(-v, np.zeros(2)) for v in V]
        report = self.skewEstimate(norm, pot, sampleCount, regionRadius, seed, extraPairs=sweep)
        if report.infQuotient >= thresholdK:
            logger.info(f"🔍 No witness below K={thresholdK} (inf Q = {report.infQuotient:.6f})")
            return None
        x, y = report.argminPair
        quotient = self.skewQuotient(norm, pot, x, y)
        logger.info(f"💡 Witness found: Q={quotient:.6f} at x={x.tolist()}, y={y.tolist()}")
        return WitnessPair(x=np.array(x), y=np.array(y), quotient=quotient)

    # ============================================================
    # CONTRACTION
    # ============================================================

    def contractionFit(
        self,
        norm: MinkowskiNorm,
        pot: PotentialSpec,
        pairCount: int,
        tEnd: float,
        dt: float,
        seed: int,
        regionRadius: float = 2.0,
        seedPairs: Optional[Sequence[Tuple[np.ndarray, np.ndarray]]] = None
    ) -> float:
        """
        Largest K with d(xi(t), zeta(t)) <= exp(-K t) d(xi(0), zeta(0)) (1 + 1e-6)
        over all integrated pairs and mesh times, d(x, y) = ||y - x||

        Args:
            pairCount: random pairs in the ball of radius regionRadius
            seedPairs: extra starting pairs (e.g. a skew-quotient argmin or witness)

        Returns:
            fitted K (log-slope minimum)
        """
        if not tEnd > 0:
            raise InvalidInputException("t_end must be > 0")
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        X = self._ballSamples(rng, pairCount, norm.dim, regionRadius)
        Y = self._ballSamples(rng, pairCount, norm.dim, regionRadius)
        if seedPairs:
            X = np.vstack([X] + [np.atleast_2d(p[0]) for p in seedPairs])
            Y = np.vstack([Y] + [np.atleast_2d(p[1]) for p in seedPairs])
        keep = np.linalg.norm(Y - X, axis=-1) > 1e-12
        X, Y = X[keep], Y[keep]
        m = len(X)

        traj = self.gradientCurve(norm, pot, np.vstack([X, Y]), tEnd, dt, richardson=False)
        xi, zeta = traj.states[:, :m], traj.states[:, m:]
        dist = norm.value(zeta - xi)
        t = traj.times[1:, None]
        rates = -np.log(dist[1:] / (dist[0][None, :] * (1.0 + 1e-6))) / t
        fitted = float(rates.min())
        logger.info(f"✅ Contraction fit ({pot.label}, {norm.family}): K = {fitted:.6f} over {m} pairs")
        return fitted

    def distanceSkewCheck(
        self,
        norm: MinkowskiNorm,
        cfg: DistanceSkewConfig,
        samples: int,
        seed: int = 0
    ) -> SkewReport:
        """
        Skew estimate for f = d(., z)^2 / 2 on the reverse ball {x : ||z - x|| < r}

        Only the flat case k = delta = 0 is supported; there the reference
        constant K(0, S, 0, r) is 1.
        """
        if cfg.k != 0 or cfg.delta != 0:
            raise UnsupportedCurvature(f"k={cfg.k}, delta={cfg.delta}; only k = delta = 0 is implemented")
        z = np.zeros(norm.dim) if cfg.z is None else np.asarray(cfg.z, dtype=float)
        pot = PotentialSpec(kind="squared_distance", z=z)

        rng = np.random.default_rng(np.random.SeedSequence(seed))

        def sample(count):
            # x = z - w with ||w|| < r
            u = rng.standard_normal((count, norm.dim))
            radius = cfg.r * rng.random((count, 1)) ** (1.0 / norm.dim)
            return z - radius * u / norm.value(u)[:, None]

        X = sample(samples)
        Y = sample(samples)
        keep = np.linalg.norm(Y - X, axis=-1) > 1e-12
        report = self._estimate(
            norm, pot, X[keep], Y[keep],
            inside=lambda p: float(norm.value(z - p)) < cfg.r,
            step=0.1 * cfg.r,
        )
        referenceK = curvatureConstant(cfg.k, 1.0, cfg.delta, cfg.r)
        logger.info(f"✅ Distance skew check: inf Q = {report.infQuotient:.8f}, K(0,S,0,r) = {referenceK}")
        return SkewReport(
            infQuotient=report.infQuotient,
            argminPair=report.argminPair,
            samples=report.samples,
            summary=report.summary,
            referenceK=referenceK,
        )


# Singleton instance
flowService = FlowService()
