"""
Rectangular grids, grid densities and vector fields
Nodes sit at cell centres; quadrature is the midpoint rule.
"""
from dataclasses import dataclass, field
import json
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union
import numpy as np

from app.utils.exceptions import DimensionMismatch, InvalidInputException, ConfigException


@dataclass(frozen=True)
class Grid:
    lo: Tuple[float, ...]
    hi: Tuple[float, ...]
    m: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        if not (len(self.lo) == len(self.hi) == len(self.m)):
            raise DimensionMismatch("grid lo, hi and m must have the same length")
        if self.dim not in (1, 2, 3):
            raise InvalidInputException(f"grid dimension must be 1, 2 or 3, got {self.dim}")
        if any(c < 2 for c in self.m):
            raise InvalidInputException("each axis needs at least 2 cells")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise InvalidInputException("grid needs hi > lo on every axis")

    @classmethod
    def cube(cls, half: float, cells: int, dim: int = 2) -> "Grid":
        return cls(lo=(-half,) * dim, hi=(half,) * dim, m=(cells,) * dim)

    @property
    def dim(self) -> int:
        return len(self.m)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.m

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / np.array(self.m)

    @property
    def cellVolume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(np.array(self.hi) - np.array(self.lo)))

    def axes(self) -> List[np.ndarray]:
        h = self.spacing
        return [self.lo[i] + (np.arange(self.m[i]) + 0.5) * h[i] for i in range(self.dim)]

    def points(self) -> np.ndarray:
        """Node coordinates, shape (*m, n), row-major"""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def scaled(self, factor: float) -> "Grid":
        """Grid whose nodes are factor * (nodes of self)"""
        lo = tuple(factor * v for v in self.lo)
        hi = tuple(factor * v for v in self.hi)
        return Grid(lo=lo, hi=hi, m=self.m)

    def boundaryMask(self) -> np.ndarray:
        mask = np.zeros(self.m, dtype=bool)
        for axis in range(self.dim):
            index = [slice(None)] * self.dim
            index[axis] = 0
            mask[tuple(index)] = True
            index[axis] = -1
            mask[tuple(index)] = True
        return mask

    def toConfig(self) -> dict:
        return {"dim": self.dim, "lo": list(self.lo), "hi": list(self.hi), "m": list(self.m)}


def _frozen(values: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Nonnegative density sampled at the nodes of a grid"""
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.size != int(np.prod(self.grid.m)):
            raise DimensionMismatch(f"density has {values.size} values, grid has {np.prod(self.grid.m)} nodes")
        values = values.reshape(self.grid.m)
        if not np.all(np.isfinite(values)):
            raise InvalidInputException("density values must be finite")
        if values.min() < 0:
            raise InvalidInputException(f"density has negative values (min {values.min():.3e})")
        object.__setattr__(self, "values", _frozen(values))

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cellVolume)

    def weights(self) -> np.ndarray:
        """Node masses, flattened row-major"""
        return self.values.ravel() * self.grid.cellVolume

    def boundaryMass(self) -> float:
        return float(self.values[self.grid.boundaryMask()].sum() * self.grid.cellVolume)

    def normalized(self) -> "GridDensity":
        return GridDensity(self.grid, self.values / self.mass())


@dataclass(frozen=True, eq=False)
class VectorField:
    """One n-vector per node; flagged marks nodes where the field was set to zero"""
    grid: Grid
    values: np.ndarray
    flagged: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(self.grid.m + (self.grid.dim,))
        if not np.all(np.isfinite(values)):
            raise InvalidInputException("vector field has non-finite entries")
        object.__setattr__(self, "values", _frozen(values))
        if self.flagged is not None:
            flagged = np.asarray(self.flagged, dtype=bool).reshape(self.grid.m)
            flagged.setflags(write=False)
            object.__setattr__(self, "flagged", flagged)

    def flaggedMass(self, density: GridDensity) -> float:
        if self.flagged is None:
            return 0.0
        return float(density.values[self.flagged].sum() * self.grid.cellVolume)


# ============================================================
# DENSITY FILES: JSON grid header + CSV of row-major rho values
# ============================================================

def writeDensity(density: GridDensity, headerPath: Union[str, Path]) -> Path:
    headerPath = Path(headerPath)
    headerPath.parent.mkdir(parents=True, exist_ok=True)
    csvPath = headerPath.with_suffix(".csv")
    header = density.grid.toConfig()
    header["values"] = csvPath.name
    headerPath.write_text(json.dumps(header, indent=2, sort_keys=True))
    np.savetxt(csvPath, density.values.ravel(), header="rho", comments="", fmt="%.17g")
    return headerPath


def readDensity(headerPath: Union[str, Path]) -> GridDensity:
    headerPath = Path(headerPath)
    if not headerPath.is_file():
        raise ConfigException(f"density file not found: {headerPath}")
    try:
        header = json.loads(headerPath.read_text())
        grid = Grid(lo=header["lo"], hi=header["hi"], m=header["m"])
        csvPath = headerPath.parent / header.get("values", headerPath.with_suffix(".csv").name)
        values = np.loadtxt(csvPath, skiprows=1, ndmin=1)
    except (KeyError, ValueError, OSError) as e:
        raise ConfigException(f"unreadable density file {headerPath}: {e}") from e
    if int(header.get("dim", grid.dim)) != grid.dim:
        raise ConfigException("density header dim disagrees with lo/hi/m")
    return GridDensity(grid, values)


def gridDifferential(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Second-order central differences D_h rho, shape (*m, n)"""
    grads: Sequence[np.ndarray] = np.gradient(values, *grid.spacing, edge_order=2)
    if grid.dim == 1:
        grads = [grads]
    return np.stack(list(grads), axis=-1)
