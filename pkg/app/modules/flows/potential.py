"""
Potentials for gradient flows on a Minkowski space
"""
from dataclasses import dataclass
from typing import Dict, Optional
import numpy as np

from app.modules.norms.family import MinkowskiNorm
from app.utils.exceptions import InvalidInputException, DimensionMismatch


@dataclass(frozen=True)
class PotentialSpec:
    """
    f(x) for one of three kinds, multiplied by scale > 0

    - squared_reverse_norm: f(x) = ||-x||^2 / 2
    - squared_distance: f(x) = ||z - x||^2 / 2  (distance from x to z)
    - quadratic: f(x) = <x - m, Q (x - m)> / 2
    """
    kind: str
    scale: float = 1.0
    z: Optional[np.ndarray] = None
    matrix: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("squared_reverse_norm", "squared_distance", "quadratic"):
            raise InvalidInputException(f"unknown potential kind '{self.kind}'")
        if not self.scale > 0:
            raise InvalidInputException("potential scale must be > 0")
        if self.kind == "squared_distance" and self.z is None:
            raise InvalidInputException("squared_distance needs z")
        if self.kind == "quadratic":
            if self.matrix is None:
                raise InvalidInputException("quadratic potential needs a matrix")
            Q = np.asarray(self.matrix, dtype=float)
            if not np.allclose(Q, Q.T) or np.linalg.eigvalsh(Q).min() <= 0:
                raise InvalidInputException("quadratic potential needs a symmetric positive-definite matrix")

    @classmethod
    def fromConfig(cls, config: Dict) -> "PotentialSpec":
        def arr(key):
            value = config.get(key)
            return None if value is None else np.asarray(value, dtype=float)

        return cls(
            kind=config["kind"],
            scale=float(config.get("scale", 1.0)),
            z=arr("z"),
            matrix=arr("matrix"),
            center=arr("center"),
        )

    @property
    def label(self) -> str:
        return f"{self.kind}(scale={self.scale:g})"

    def _center(self, dim: int) -> np.ndarray:
        return np.zeros(dim) if self.center is None else np.asarray(self.center, dtype=float)

    def value(self, norm: MinkowskiNorm, x: np.ndarray) -> np.ndarray:
        x = norm.checkShape(x)
        if self.kind == "squared_reverse_norm":
            return 0.5 * self.scale * norm.value(-x) ** 2
        if self.kind == "squared_distance":
            return 0.5 * self.scale * norm.value(np.asarray(self.z) - x) ** 2
        d = x - self._center(norm.dim)
        return 0.5 * self.scale * np.einsum("...i,ij,...j->...", d, self.matrix, d)

    def negDifferential(self, norm: MinkowskiNorm, x: np.ndarray) -> np.ndarray:
        """D(-f)(x) as a covector"""
        x = norm.checkShape(x)
        if self.kind == "squared_reverse_norm":
            return self.scale * norm.legendre(-x)
        if self.kind == "squared_distance":
            z = np.asarray(self.z, dtype=float)
            if z.shape != (norm.dim,):
                raise DimensionMismatch(f"z has shape {z.shape}, norm dim is {norm.dim}")
            # L(0) = 0 gives the continuous extension at x = z
            return self.scale * norm.legendre(z - x)
        return -self.scale * (x - self._center(norm.dim)) @ np.asarray(self.matrix, dtype=float)
