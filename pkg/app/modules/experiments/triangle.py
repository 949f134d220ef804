"""
Tangent triangles circumscribed to the unit sphere of a planar norm,
and the tent densities built over them
"""
from dataclasses import dataclass, replace
from typing import Optional, Tuple
import numpy as np

from app.core.config import settings
from app.modules.norms.family import MinkowskiNorm, lpNorm
from app.modules.norms.service import normService
from app.utils.exceptions import DimensionMismatch, InvalidInputException, InvalidTriple

# Degree-5 seven-point rule on the reference triangle (barycentric, weights sum to 1)
_DUNAVANT_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [0.059715871789770, 0.470142064105115, 0.470142064105115],
    [0.470142064105115, 0.059715871789770, 0.470142064105115],
    [0.470142064105115, 0.470142064105115, 0.059715871789770],
    [0.797426985353087, 0.101286507323456, 0.101286507323456],
    [0.101286507323456, 0.797426985353087, 0.101286507323456],
    [0.101286507323456, 0.101286507323456, 0.797426985353087],
])
_DUNAVANT_W = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)


def cross2(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def refineTriangles(tris: np.ndarray, levels: int) -> np.ndarray:
    """Split each triangle (..., 3, 2) into 4**levels congruent pieces"""
    tris = tris.reshape(-1, 3, 2)
    for _ in range(levels):
        p0, p1, p2 = tris[:, 0], tris[:, 1], tris[:, 2]
        m01, m12, m20 = 0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)
        tris = np.concatenate([
            np.stack([p0, m01, m20], axis=1),
            np.stack([m01, p1, m12], axis=1),
            np.stack([m20, m12, p2], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ])
    return tris


def triangleQuadrature(tris: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Points (T, 7, 2) and weights (T, 7) of the seven-point rule on each triangle"""
    points = np.einsum("qk,tkd->tqd", _DUNAVANT_BARY, tris)
    area = 0.5 * np.abs(cross2(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]))
    return points, area[:, None] * _DUNAVANT_W[None, :]


@dataclass(frozen=True, eq=False)
class TangentTriangle:
    """
    Triangle ABC whose edges touch the unit sphere at a (on BC), b (on CA), c (on AB)
    """
    vertices: np.ndarray  # rows A, B, C
    tangentPoints: np.ndarray  # rows a, b, c
    covectors: np.ndarray  # rows L(a), L(b), L(c); edge through t is {L(t).x = 1}
    areas: np.ndarray  # |OAB|, |OBC|, |OCA|

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    @property
    def vector(self) -> np.ndarray:
        """|OAB| c + |OBC| a + |OCA| b"""
        a, b, c = self.tangentPoints
        oab, obc, oca = self.areas
        return oab * c + obc * a + oca * b

    def toDict(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "tangent_points": self.tangentPoints.tolist(),
            "areas": self.areas.tolist(),
            "vector": self.vector.tolist(),
        }


def _intersect(L1: np.ndarray, L2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Solve L1.x = 1, L2.x = 1 by Cramer's rule; returns (x, det)"""
    det = cross2(L1, L2)
    safe = np.where(np.abs(det) > 0, det, 1.0)
    x = np.stack([(L2[..., 1] - L1[..., 1]) / safe, (L1[..., 0] - L2[..., 0]) / safe], axis=-1)
    return x, det


def tangentTriangle(norm: MinkowskiNorm, a, b, c) -> TangentTriangle:
    """
    Circumscribed triangle with tangent points along directions a, b, c

    Raises:
        InvalidTriple: tangent lines parallel or O outside the triangle
    """
    if norm.dim != 2:
        raise DimensionMismatch("tangent triangles need a 2D norm")
    dirs = np.array([a, b, c], dtype=float)
    if dirs.shape != (3, 2):
        raise DimensionMismatch("need three 2-vectors")
    lengths = norm.value(dirs)
    if np.any(lengths <= 0):
        raise InvalidTriple("tangent directions must be nonzero")
    points = dirs / lengths[:, None]
    L = norm.legendre(points)

    # A = lines(b, c), B = lines(c, a), C = lines(a, b)
    A, detA = _intersect(L[1], L[2])
    B, detB = _intersect(L[2], L[0])
    C, detC = _intersect(L[0], L[1])
    if min(abs(detA), abs(detB), abs(detC)) < 1e-12:
        raise InvalidTriple("two tangent lines are parallel")

    signed = 0.5 * np.array([cross2(A, B), cross2(B, C), cross2(C, A)])
    if not (np.all(signed > 0) or np.all(signed < 0)):
        raise InvalidTriple("tangent lines do not enclose the origin")
    return TangentTriangle(
        vertices=np.stack([A, B, C]),
        tangentPoints=points,
        covectors=L,
        areas=np.abs(signed),
    )


def tangentTriangleBatch(units: np.ndarray, covectors: np.ndarray, triples: np.ndarray):
    """
    Certificate magnitudes for many index triples into precomputed unit points

    Returns:
        (magnitudes, areas) with magnitude -inf where the triple is inadmissible
    """
    ia, ib, ic = triples[:, 0], triples[:, 1], triples[:, 2]
    A, detA = _intersect(covectors[ib], covectors[ic])
    B, detB = _intersect(covectors[ic], covectors[ia])
    C, detC = _intersect(covectors[ia], covectors[ib])
    signed = 0.5 * np.stack([cross2(A, B), cross2(B, C), cross2(C, A)], axis=-1)
    dets = np.stack([detA, detB, detC], axis=-1)
    sameSign = np.all(signed > 0, axis=-1) | np.all(signed < 0, axis=-1)
    areas = np.abs(signed)
    total = areas.sum(axis=-1)
    ok = sameSign & np.all(np.abs(dets) >= 1e-12, axis=-1) & (total <= settings.TRIANGLE_MAX_AREA)
    vec = areas[:, 0:1] * units[ic] + areas[:, 1:2] * units[ia] + areas[:, 2:3] * units[ib]
    mags = np.where(ok, np.linalg.norm(vec, axis=-1), -np.inf)
    return mags, total


def step0Directions(p: float) -> np.ndarray:
    """Tangent directions a = (-1, 0), b = 2^{-1/p}(1, 1), c = 2^{-1/p}(1, -1)"""
    s = 2.0 ** (-1.0 / p)
    return np.array([[-1.0, 0.0], [s, s], [s, -s]])


def step0ClosedForm(p: float) -> float:
    """(1 + 2^{1-1/p}) (2^{1-2/p} - 1) sigma with sigma = 3 / (1 + 2^{1-1/p})^2"""
    k = 1.0 + 2.0 ** (1.0 - 1.0 / p)
    return k * (2.0 ** (1.0 - 2.0 / p) - 1.0) * 3.0 / k ** 2


# ============================================================
# TENT DENSITY
# ============================================================

@dataclass(frozen=True, eq=False)
class TriangleDensity:
    """
    Tent over a tangent triangle, translated then scaled

    rho(x) = scale^{-2} * rhoHat(x / scale - shift) with
    rhoHat(y) = sigma * max(0, 1 - max_i L_i . y) and sigma = 3 / area,
    so grad(-rhoHat) = sigma * (tangent point) on each sub-triangle through O.
    """
    triangle: TangentTriangle
    shift: np.ndarray
    scale: float = 1.0
    quadratureLevel: int = 4

    def __post_init__(self):
        object.__setattr__(self, "shift", np.asarray(self.shift, dtype=float).reshape(2))
        if not self.scale > 0:
            raise InvalidInputException("scale must be > 0")

    @property
    def sigma(self) -> float:
        return 3.0 / self.triangle.area

    @property
    def dim(self) -> int:
        return 2

    @property
    def peak(self) -> float:
        return self.sigma * self.scale ** -2

    def scaled(self, eps: float) -> "TriangleDensity":
        """rho_eps(x) = eps^{-2} rho(x / eps)"""
        if not eps > 0:
            raise InvalidInputException("eps must be > 0")
        return replace(self, scale=self.scale * eps)

    def translated(self, shift) -> "TriangleDensity":
        return replace(self, shift=np.asarray(shift, dtype=float))

    def supportBox(self) -> Tuple[np.ndarray, np.ndarray]:
        corners = self.scale * (self.triangle.vertices + self.shift)
        return corners.min(axis=0), corners.max(axis=0)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        y = points / self.scale - self.shift
        gauge = np.max(y @ self.triangle.covectors.T, axis=-1)
        return self.peak * np.clip(1.0 - gauge, 0.0, None)

    def pieces(self, level: Optional[int] = None):
        """
        Quadrature over the three sub-triangles OBC, OCA, OAB in tent coordinates y

        Returns:
            (points, weights, tent values, D(-rhoHat)) flattened over all nodes,
            with D(-rhoHat) = sigma * L(tangent point of the sub-triangle)
        """
        level = self.quadratureLevel if level is None else level
        A, B, C = self.triangle.vertices
        O = np.zeros(2)
        pts, wts, vals, covs = [], [], [], []
        for tri, covector in (
            (np.stack([O, B, C]), self.triangle.covectors[0]),
            (np.stack([O, C, A]), self.triangle.covectors[1]),
            (np.stack([O, A, B]), self.triangle.covectors[2]),
        ):
            p, w = triangleQuadrature(refineTriangles(tri, level))
            p = p.reshape(-1, 2)
            pts.append(p)
            wts.append(w.ravel())
            vals.append(self.sigma * (1.0 - p @ covector))
            covs.append(np.broadcast_to(self.sigma * covector, p.shape))
        return np.concatenate(pts), np.concatenate(wts), np.concatenate(vals), np.concatenate(covs)

    def thetaParts(self, norm: MinkowskiNorm) -> Tuple[float, float]:
        """
        Exact-gradient numerator and backward second moment

        With x = scale (y + shift) the numerator int L(-x) . grad(-rho) dx does
        not depend on scale, and the second moment picks up scale^2.
        """
        if norm.dim != 2:
            raise DimensionMismatch("triangle densities are planar")
        y, w, vals, covs = self.pieces()
        # sigma * tangent point when norm is the one the triangle was built for
        grads = normService.gradientVector(norm, covs)
        x = y + self.shift
        numerator = float(np.sum(w * np.einsum("ij,ij->i", norm.legendre(-x), grads)))
        moment = float(np.sum(w * vals * norm.value(-x) ** 2)) * self.scale ** 2
        return numerator, moment


def certificateShift(triangle: TangentTriangle, R: float) -> np.ndarray:
    """Translation by R against the certificate vector, so that -x points along it"""
    v = triangle.vector
    length = float(np.linalg.norm(v))
    direction = v / length if length > 1e-12 else np.array([1.0, 0.0])
    return -R * direction


def triangleDensity(p: float, R: float = 0.0, norm: Optional[MinkowskiNorm] = None) -> TriangleDensity:
    """
    Tent over the l_p tangent triangle with A = (2^{1-1/p}, 0),
    B = (-1, -1-2^{1-1/p}), C = (-1, 1+2^{1-1/p}), translated by (-R, 0)
    """
    if R < 0:
        raise InvalidInputException("shift R must be >= 0")
    norm = lpNorm(p) if norm is None else norm
    dirs = step0Directions(p)
    tri = tangentTriangle(norm, dirs[0], dirs[1], dirs[2])
    return TriangleDensity(triangle=tri, shift=np.array([-float(R), 0.0]))
