"""
Norm Service
Metric tensors, Legendre duality and uniform constants of Minkowski norms
"""
from dataclasses import dataclass
from typing import Dict, Optional, Union
import numpy as np
from scipy.optimize import minimize

from app.core.config import settings
from app.modules.norms.family import (
    MinkowskiNorm,
    QuadraticNorm,
    RegularizedPNorm,
    ShiftedBallNorm,
    ReversedNorm,
)
from app.schemas.norm import NormSpecConfig
from app.utils.logger import logger
from app.utils.exceptions import (
    ZeroVector,
    DegenerateHessian,
    NewtonDivergence,
    InvalidInputException,
)


@dataclass(frozen=True)
class MetricTensor:
    at: np.ndarray
    entries: np.ndarray


@dataclass(frozen=True)
class EllipticityBounds:
    lambdaLo: float
    lambdaHi: float


@dataclass(frozen=True)
class UniformConstants:
    cConst: float
    sConst: float
    resolution: int


def unitDirections(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """
    Deterministic sample of Euclidean unit directions

    - n = 1: +-1
    - n = 2: equally spaced angles 2*pi*k/count (the first is the x-axis)
    - n = 3: coordinate axes followed by seeded Gaussian directions
    """
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    rng = np.random.default_rng(seed)
    extra = rng.standard_normal((max(count - len(axes), 0), dim))
    extra /= np.linalg.norm(extra, axis=-1, keepdims=True)
    return np.vstack([axes, extra])


class NormService:
    """
    Service for Minkowski norm geometry

    All operations are pure; the only state is the write-once
    ellipticity cache stored on each norm instance.
    """

    # ============================================================
    # CONSTRUCTION
    # ============================================================

    def fromConfig(self, config: Union[NormSpecConfig, Dict]) -> MinkowskiNorm:
        """
        Build a norm from its structured config

        Args:
            config: NormSpecConfig or a plain dict with keys family/dim/params

        Returns:
            MinkowskiNorm instance
        """
        if not isinstance(config, NormSpecConfig):
            config = NormSpecConfig.model_validate(config)
        params = config.params
        n = config.dim

        if config.family == "quadratic":
            matrix = np.eye(n) if params.matrix is None else np.array(params.matrix)
            return QuadraticNorm(matrix)
        if config.family == "regularized_p":
            shear = np.eye(n) if params.shear is None else np.array(params.shear)
            eps = 0.0 if params.eps is None else params.eps
            return RegularizedPNorm(params.p, eps, shear)
        if config.family == "shifted_ball":
            return ShiftedBallNorm(np.array(params.center))
        return ReversedNorm(self.fromConfig(params.inner))

    def reverseNorm(self, norm: MinkowskiNorm) -> MinkowskiNorm:
        """Reverse norm x -> ||-x||; reversing twice gives back the original object"""
        if isinstance(norm, ReversedNorm):
            return norm.inner
        return ReversedNorm(norm)

    # ============================================================
    # FIRST ORDER: value, Legendre transform
    # ============================================================

    def normEval(self, norm: MinkowskiNorm, x) -> Union[float, np.ndarray]:
        out = norm.value(x)
        return float(out) if np.ndim(out) == 0 else out

    def legendre(self, norm: MinkowskiNorm, x) -> np.ndarray:
        """L(x) = g(x) x; the zero covector at x = 0"""
        return norm.legendre(x)

    def legendreInverse(self, norm: MinkowskiNorm, w) -> np.ndarray:
        """
        L*(w), the inverse of the Legendre transform

        Closed form for quadratic and exact l_p families, damped Newton
        on L(x) = w with g_ij as Jacobian otherwise.

        Args:
            norm: Minkowski norm
            w: covector(s), shape (..., n)

        Returns:
            vector(s) x with L(x) = w
        """
        W = norm.checkShape(w)
        closed = norm.legendreInverseClosedForm(W)
        if closed is not None:
            return closed
        flat = W.reshape(-1, norm.dim)
        return self._newtonInverse(norm, flat).reshape(W.shape)

    def gradientVector(self, norm: MinkowskiNorm, df) -> np.ndarray:
        """Gradient vector nabla f = L*(Df)"""
        return self.legendreInverse(norm, df)

    def dualNorm(self, norm: MinkowskiNorm, w) -> Union[float, np.ndarray]:
        """||w||_* = ||L*(w)||"""
        return self.normEval(norm, self.legendreInverse(norm, w))

    def _startScale(self, norm: MinkowskiNorm) -> float:
        if "lambda_mid" not in norm.cache:
            try:
                bounds = self.ellipticityBounds(norm, 32)
                norm.cache["lambda_mid"] = float(np.sqrt(bounds.lambdaLo * bounds.lambdaHi))
            except DegenerateHessian:
                norm.cache["lambda_mid"] = 1.0
        return norm.cache["lambda_mid"]

    def _newtonInverse(self, norm: MinkowskiNorm, W: np.ndarray) -> np.ndarray:
        scale = np.linalg.norm(W, axis=-1)
        X = np.zeros_like(W)
        nonzero = scale > 0
        if not nonzero.any():
            return X

        # L is 1-homogeneous, so solve for the normalised covector and rescale
        Wn = W[nonzero] / scale[nonzero, None]
        tol = settings.LEGENDRE_TOL * (1.0 + scale[nonzero]) / scale[nonzero]
        Xn = Wn / self._startScale(norm)
        R = norm.legendre(Xn) - Wn
        res = np.linalg.norm(R, axis=-1)
        active = res > tol

        for iteration in range(settings.LEGENDRE_MAX_ITER):
            if not active.any():
                break
            idx = np.flatnonzero(active)
            G = norm.hessian(Xn[idx])
            D = np.linalg.solve(G, -R[idx][..., None])[..., 0]

            step = np.ones(len(idx))
            pending = np.ones(len(idx), dtype=bool)
            for _ in range(settings.LEGENDRE_MAX_HALVINGS):
                cand = Xn[idx[pending]] + step[pending, None] * D[pending]
                candR = norm.legendre(cand) - Wn[idx[pending]]
                candRes = np.linalg.norm(candR, axis=-1)
                better = candRes < res[idx[pending]]
                rows = idx[pending][better]
                Xn[rows] = cand[better]
                R[rows] = candR[better]
                res[rows] = candRes[better]
                pending[np.flatnonzero(pending)[better]] = False
                if not pending.any():
                    break
                step[pending] *= 0.5

            # rows where no damped step helps sit at round-off
            stalled = idx[pending]
            active[stalled] = False
            active[idx] &= res[idx] > tol[idx]
            logger.debug(f"Newton iteration {iteration}: {active.sum()} rows active")

        # one polishing step: the residual bound alone leaves ~1/lambda of slack in x
        D = np.linalg.solve(norm.hessian(Xn), -R[..., None])[..., 0]
        cand = Xn + D
        candR = norm.legendre(cand) - Wn
        better = np.linalg.norm(candR, axis=-1) < res
        Xn[better] = cand[better]
        res[better] = np.linalg.norm(candR[better], axis=-1)

        bad = res > np.maximum(tol, 1e3 * settings.LEGENDRE_TOL)
        if bad.any():
            logger.error(f"❌ Legendre inverse failed for {int(bad.sum())} covectors (max residual {res.max():.3e})")
            raise NewtonDivergence(
                f"L*(w) did not converge within {settings.LEGENDRE_MAX_ITER} iterations"
            )
        X[nonzero] = Xn * scale[nonzero, None]
        return X

    # ============================================================
    # SECOND ORDER: metric tensor
    # ============================================================

    def checkedHessian(self, norm: MinkowskiNorm, X: np.ndarray) -> np.ndarray:
        """g_ij at each row of X, raising DegenerateHessian below METRIC_TOL"""
        X = norm.checkShape(X)
        if np.any(np.all(X == 0, axis=-1)):
            raise ZeroVector("metric tensor is undefined at the origin")
        G = norm.hessian(X)
        smallest = np.linalg.eigvalsh(G)[..., 0]
        if np.any(smallest < settings.METRIC_TOL):
            where = X.reshape(-1, norm.dim)[np.argmin(smallest.ravel())]
            raise DegenerateHessian(
                f"smallest eigenvalue {smallest.min():.3e} of g at {where.tolist()}"
            )
        return G

    def metricTensor(self, norm: MinkowskiNorm, x) -> MetricTensor:
        x = norm.checkShape(x)
        return MetricTensor(at=x.copy(), entries=self.checkedHessian(norm, x))

    def innerG(self, norm: MinkowskiNorm, x, a, b) -> float:
        """g_x(a, b) = sum g_ij(x) a^i b^j"""
        g = self.metricTensor(norm, x).entries
        return float(np.asarray(a, dtype=float) @ g @ np.asarray(b, dtype=float))

    def finiteDifferenceMetric(self, norm: MinkowskiNorm, x, step: Optional[float] = None) -> np.ndarray:
        """
        Central-difference Jacobian of the Legendre map, symmetrised

        Independent oracle for metricTensor: g = D L.
        """
        h = settings.FD_STEP if step is None else step
        x = norm.checkShape(x)
        E = h * np.eye(norm.dim)
        jac = (norm.legendre(x + E) - norm.legendre(x - E)) / (2.0 * h)
        return 0.5 * (jac + jac.T)

    # ============================================================
    # GLOBAL CONSTANTS
    # ============================================================

    def ellipticityBounds(self, norm: MinkowskiNorm, samples: int) -> EllipticityBounds:
        """
        Empirical lambda, Lambda: extreme eigenvalues of g over sampled unit directions

        Args:
            norm: Minkowski norm
            samples: number of directions (>= 1)
        """
        if samples < 1:
            raise InvalidInputException("samples must be >= 1")
        X = unitDirections(norm.dim, samples)
        eig = np.linalg.eigvalsh(self.checkedHessian(norm, X))
        return EllipticityBounds(lambdaLo=float(eig[:, 0].min()), lambdaHi=float(eig[:, -1].max()))

    def _ratio(self, norm: MinkowskiNorm, x: np.ndarray, y: np.ndarray) -> float:
        g = norm.hessian(x)
        return float(norm.value(y) / np.sqrt(y @ g @ y))

    def uniformConstants(
        self,
        norm: MinkowskiNorm,
        angularResolution: int,
        refine: bool = True
    ) -> UniformConstants:
        """
        Estimate C = sup ||y|| / g_x(y,y)^(1/2) and S = sup g_x(y,y)^(1/2) / ||y||

        Grid sup over pairs of unit directions, then one Nelder-Mead pass
        from each grid argmax. Both are >= 1 since the pair y = x gives ratio 1.
        """
        if angularResolution < 16:
            raise InvalidInputException("angular_resolution must be >= 16")

        U = unitDirections(norm.dim, angularResolution)
        G = self.checkedHessian(norm, U)
        quad = np.einsum("jk,ikl,jl->ij", U, G, U)
        ratio = norm.value(U)[None, :] / np.sqrt(quad)
        cConst = float(ratio.max())
        sConst = float((1.0 / ratio).max())

        if refine:
            for sign in (1.0, -1.0):
                i, j = np.unravel_index(np.argmax(sign * np.log(ratio)), ratio.shape)
                best = self._refineRatio(norm, U[i], U[j], sign)
                if sign > 0:
                    cConst = max(cConst, best)
                else:
                    sConst = max(sConst, best)

        logger.info(f"✅ Uniform constants: C={cConst:.6f}, S={sConst:.6f} (resolution {angularResolution})")
        return UniformConstants(cConst=cConst, sConst=sConst, resolution=angularResolution)

    def _refineRatio(self, norm: MinkowskiNorm, x0: np.ndarray, y0: np.ndarray, sign: float) -> float:
        n = norm.dim
        if n == 2:
            start = np.array([np.arctan2(x0[1], x0[0]), np.arctan2(y0[1], y0[0])])

            def unpack(z):
                return (np.array([np.cos(z[0]), np.sin(z[0])]),
                        np.array([np.cos(z[1]), np.sin(z[1])]))
        else:
            start = np.concatenate([x0, y0])

            def unpack(z):
                return z[:n] / np.linalg.norm(z[:n]), z[n:] / np.linalg.norm(z[n:])

        def objective(z):
            x, y = unpack(z)
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                return np.inf
            g = norm.hessian(x)
            q = y @ g @ y
            if q <= 0:
                return np.inf
            return -(norm.value(y) / np.sqrt(q)) ** sign

        result = minimize(objective, start, method="Nelder-Mead",
                          options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
        return float(-result.fun) if np.isfinite(result.fun) else 1.0

    # ============================================================
    # DIAGNOSTICS
    # ============================================================

    def isSymmetric(self, norm: MinkowskiNorm, samples: int = 256, tol: float = 1e-12) -> bool:
        """Reverse equals forward pointwise on seeded samples"""
        X = np.random.default_rng(settings.DEFAULT_SEED).standard_normal((samples, norm.dim))
        fwd = norm.value(X)
        bwd = norm.value(-X)
        return bool(np.all(np.abs(fwd - bwd) <= tol * np.maximum(fwd, 1.0)))

    def unitBallVolume(self, norm: MinkowskiNorm, nodes: int = 2048) -> float:
        """
        Lebesgue volume of {||x|| <= 1} by polar quadrature

        vol = (1/n) * integral over the Euclidean sphere of ||u||^(-n)
        """
        n = norm.dim
        if n == 1:
            return float(1.0 / norm.value(np.array([1.0])) + 1.0 / norm.value(np.array([-1.0])))
        if n == 2:
            U = unitDirections(2, nodes)
            return float(0.5 * np.mean(norm.value(U) ** -2) * 2.0 * np.pi)
        # n = 3: Gauss-Legendre in cos(theta), periodic trapezoid in phi
        ct, wt = np.polynomial.legendre.leggauss(nodes // 16)
        phi = 2.0 * np.pi * np.arange(nodes // 8) / (nodes // 8)
        st = np.sqrt(1.0 - ct ** 2)
        U = np.stack([
            st[:, None] * np.cos(phi)[None, :],
            st[:, None] * np.sin(phi)[None, :],
            np.broadcast_to(ct[:, None], (len(ct), len(phi))),
        ], axis=-1)
        integrand = norm.value(U) ** -3
        sphere = np.sum(wt[:, None] * integrand) * (2.0 * np.pi / len(phi))
        return float(sphere / 3.0)



# Singleton instance
normService = NormService()
