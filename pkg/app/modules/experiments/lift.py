"""
Three-dimensional lift of a planar tent density by a smooth cut-off
"""
from dataclasses import dataclass
from typing import Tuple
import numpy as np

from app.modules.experiments.triangle import TriangleDensity
from app.modules.norms.family import MinkowskiNorm
from app.modules.norms.service import normService
from app.utils.exceptions import DimensionMismatch, InvalidInputException


def smootherstep(s: np.ndarray) -> np.ndarray:
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s ** 2)


def smootherstepSlope(s: np.ndarray) -> np.ndarray:
    """Derivative 30 s^2 (1 - s)^2, at most 1.875"""
    s = np.clip(s, 0.0, 1.0)
    return 30.0 * s ** 2 * (1.0 - s) ** 2


@dataclass(frozen=True, eq=False)
class LiftedDensity:
    """
    rho(x, y) = rho2d(x) * eta(y) / int eta

    eta = 1 on |y| <= sqrt(R), eta = 0 beyond sqrt(R) + 1, smootherstep in between.
    """
    base: TriangleDensity
    R: float
    gaussNodes: int = 32

    def __post_init__(self):
        if not self.R >= 4:
            raise InvalidInputException(f"lift needs R >= 4, got {self.R}")

    @property
    def dim(self) -> int:
        return 3

    @property
    def plateau(self) -> float:
        return float(np.sqrt(self.R))

    @property
    def cutoffMass(self) -> float:
        """int eta = 2 sqrt(R) + 1"""
        return 2.0 * self.plateau + 1.0

    @property
    def boundaryShare(self) -> float:
        """|{eta < 1}| / int eta"""
        return 2.0 / self.cutoffMass

    def eta(self, y: np.ndarray) -> np.ndarray:
        return 1.0 - smootherstep(np.abs(y) - self.plateau)

    def etaSlope(self, y: np.ndarray) -> np.ndarray:
        return -np.sign(y) * smootherstepSlope(np.abs(y) - self.plateau)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.base.evaluate(points[..., :2]) * self.eta(points[..., 2]) / self.cutoffMass

    def _cutoffQuadrature(self) -> Tuple[np.ndarray, np.ndarray]:
        nodes, weights = np.polynomial.legendre.leggauss(self.gaussNodes)
        r = self.plateau
        ys, ws = [], []
        for lo, hi in ((-r - 1.0, -r), (-r, r), (r, r + 1.0)):
            ys.append(0.5 * (hi - lo) * nodes + 0.5 * (hi + lo))
            ws.append(0.5 * (hi - lo) * weights)
        return np.concatenate(ys), np.concatenate(ws)

    def quadrature(self):
        """Tensor nodes: (points (N, 3), weights, rho values, D(-rho) covectors)"""
        s = self.base.scale
        yTent, wTent, valTent, covTent = self.base.pieces()
        X = s * (yTent + self.base.shift)
        wX = wTent * s ** 2
        rhoX = valTent * s ** -2
        negDX = covTent * s ** -3

        Y, wY = self._cutoffQuadrature()
        Z = self.cutoffMass
        eta = self.eta(Y)
        slope = self.etaSlope(Y)

        nx, ny = X.shape[0], Y.size
        points = np.concatenate([np.repeat(X, ny, axis=0), np.tile(Y, nx)[:, None]], axis=1)
        weights = np.outer(wX, wY).ravel()
        values = np.outer(rhoX, eta).ravel() / Z
        covectors = np.concatenate([
            (negDX[:, None, :] * eta[None, :, None]).reshape(-1, 2),
            (-np.outer(rhoX, slope)).reshape(-1, 1),
        ], axis=1) / Z
        return points, weights, values, covectors

    def mass(self) -> float:
        _, w, values, _ = self.quadrature()
        return float(np.sum(w * values))

    def thetaParts(self, norm: MinkowskiNorm) -> Tuple[float, float]:
        if norm.dim != 3:
            raise DimensionMismatch("lifted densities need a 3D norm")
        points, w, values, covectors = self.quadrature()
        grads = normService.gradientVector(norm, covectors)
        numerator = float(np.sum(w * np.einsum("ij,ij->i", norm.legendre(-points), grads)))
        moment = float(np.sum(w * values * norm.value(-points) ** 2))
        return numerator, moment
