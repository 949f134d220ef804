"""
Density profiles sampled by make_density
Anything with evaluate(points) -> values works as a profile; analytic
densities that also provide thetaParts(norm) are integrated exactly by theta.
"""
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence, Tuple, runtime_checkable
import numpy as np

from app.modules.norms.family import MinkowskiNorm
from app.utils.exceptions import DimensionMismatch, InvalidInputException


@runtime_checkable
class DensityProfile(Protocol):
    def evaluate(self, points: np.ndarray) -> np.ndarray:
        ...


@runtime_checkable
class AnalyticDensity(Protocol):
    """Profile with a piecewise-exact gradient, used by the analytic theta mode"""

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        ...

    def thetaParts(self, norm: MinkowskiNorm) -> Tuple[float, float]:
        ...


@dataclass
class GaussianLikeProfile:
    """exp(-||x - center||^2 / (4a)), unnormalized"""
    norm: MinkowskiNorm
    center: np.ndarray
    a: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.center.shape != (self.norm.dim,):
            raise DimensionMismatch(f"center has shape {self.center.shape}, norm dim is {self.norm.dim}")
        if not self.a > 0:
            raise InvalidInputException("gaussian_like needs a > 0")

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        dist = self.norm.value(points - self.center)
        return np.exp(-dist ** 2 / (4.0 * self.a))


@dataclass
class UniformProfile:
    """Indicator of the box [lo, hi] (closed)"""
    lo: Sequence[float]
    hi: Sequence[float]

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if points.shape[-1] != lo.size:
            raise DimensionMismatch("box and grid dimensions differ")
        inside = np.all((points >= lo) & (points <= hi), axis=-1)
        return inside.astype(float)


@dataclass
class TableProfile:
    """Values given directly at the grid nodes"""
    values: np.ndarray

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        values = np.asarray(self.values, dtype=float)
        if values.size != int(np.prod(points.shape[:-1])):
            raise DimensionMismatch(f"table has {values.size} values, grid has {np.prod(points.shape[:-1])} nodes")
        return values.reshape(points.shape[:-1])


def profileFromConfig(config: dict, norm: Optional[MinkowskiNorm] = None) -> DensityProfile:
    """
    Build a profile from {"kind": ..., ...}

    kinds: gaussian_like (center, a; needs norm), uniform (lo, hi), table (values)
    """
    kind = config.get("kind")
    if kind == "gaussian_like":
        if norm is None:
            raise InvalidInputException("gaussian_like profile needs a norm")
        center = config.get("center", [0.0] * norm.dim)
        return GaussianLikeProfile(norm=norm, center=np.asarray(center, dtype=float), a=float(config.get("a", 0.5)))
    if kind == "uniform":
        return UniformProfile(lo=config["lo"], hi=config["hi"])
    if kind == "table":
        return TableProfile(values=np.asarray(config["values"], dtype=float))
    raise InvalidInputException(f"unknown profile kind '{kind}'")
