"""
Minkowski Norm Families
Closed set of strongly convex gauges with analytic first and second derivatives.

Every method is vectorised over leading axes: x has shape (..., n).
"""
from abc import ABC, abstractmethod
from typing import Dict, Optional
import numpy as np

from app.utils.exceptions import DimensionMismatch, InvalidP, InvalidInputException


class MinkowskiNorm(ABC):
    """
    Base class for a Minkowski norm on R^n

    Subclasses provide:
    - value(x): ||x||
    - legendre(x): L(x) = 1/2 D(||.||^2)(x), a covector
    - hessian(x): g_ij(x) = 1/2 Hessian of ||.||^2 at x
    """

    family: str = "abstract"

    def __init__(self, dim: int):
        self.dim = int(dim)
        # write-once derived quantities (ellipticity estimate for Newton starts)
        self.cache: Dict[str, float] = {}

    def checkShape(self, x: np.ndarray) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.shape[-1:] != (self.dim,):
            raise DimensionMismatch(
                f"expected trailing dimension {self.dim}, got shape {arr.shape}"
            )
        return arr

    @abstractmethod
    def value(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def legendre(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def hessian(self, x: np.ndarray) -> np.ndarray:
        ...

    def legendreInverseClosedForm(self, w: np.ndarray) -> Optional[np.ndarray]:
        """Closed-form L*(w) when the family has one, else None"""
        return None

    @abstractmethod
    def toConfig(self) -> Dict:
        ...

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.toConfig()})"


# ============================================================
# QUADRATIC: ||x|| = sqrt(<x, A x>)
# ============================================================

class QuadraticNorm(MinkowskiNorm):
    family = "quadratic"

    def __init__(self, matrix: np.ndarray):
        A = np.asarray(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"quadratic matrix must be square, got {A.shape}")
        if not np.allclose(A, A.T, atol=1e-12):
            raise InvalidInputException("quadratic matrix must be symmetric")
        if np.linalg.eigvalsh(A).min() <= 0:
            raise InvalidInputException("quadratic matrix must be positive definite")
        super().__init__(A.shape[0])
        self.matrix = A
        self.inverse = np.linalg.inv(A)

    def value(self, x):
        x = self.checkShape(x)
        return np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", x, self.matrix, x), 0.0))

    def legendre(self, x):
        x = self.checkShape(x)
        return x @ self.matrix

    def hessian(self, x):
        x = self.checkShape(x)
        return np.broadcast_to(self.matrix, x.shape[:-1] + self.matrix.shape).copy()

    def legendreInverseClosedForm(self, w):
        return self.checkShape(w) @ self.inverse

    def toConfig(self):
        return {"family": self.family, "dim": self.dim, "params": {"matrix": self.matrix.tolist()}}


# ============================================================
# REGULARIZED l_p: ||x||^2 = ||Sx||_p^2 + eps |Sx|_2^2
# ============================================================

def _pNormScaled(y: np.ndarray, p: float):
    """Return (m, z, Nz) with y = m z, max|z_i| = 1 and Nz = ||z||_p (m = 0 at the origin)"""
    m = np.max(np.abs(y), axis=-1)
    safe = np.where(m > 0, m, 1.0)
    z = y / safe[..., None]
    Nz = np.sum(np.abs(z) ** p, axis=-1) ** (1.0 / p)
    return m, z, np.where(m > 0, Nz, 1.0)


class RegularizedPNorm(MinkowskiNorm):
    family = "regularized_p"

    def __init__(self, p: float, eps: float, shear: np.ndarray):
        if not p > 2:
            raise InvalidP(f"p must be > 2, got {p}")
        if eps < 0:
            raise InvalidInputException(f"eps must be >= 0, got {eps}")
        S = np.asarray(shear, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise DimensionMismatch(f"shear must be square, got {S.shape}")
        if abs(np.linalg.det(S)) < 1e-14:
            raise InvalidInputException("shear matrix must be invertible")
        super().__init__(S.shape[0])
        self.p = float(p)
        self.q = self.p / (self.p - 1.0)
        self.eps = float(eps)
        self.shear = S
        self.shearInverse = np.linalg.inv(S)

    def value(self, x):
        y = self.checkShape(x) @ self.shear.T
        m, _, Nz = _pNormScaled(y, self.p)
        pNorm = m * Nz
        return np.sqrt(pNorm ** 2 + self.eps * np.sum(y * y, axis=-1))

    def _gradY(self, y: np.ndarray) -> np.ndarray:
        # D(1/2 ||y||_p^2) = N^{2-p} |y|^{p-2} y, evaluated on the rescaled z
        m, z, Nz = _pNormScaled(y, self.p)
        grad = m[..., None] * Nz[..., None] ** (2.0 - self.p) * np.abs(z) ** (self.p - 2.0) * z
        return grad + self.eps * y

    def legendre(self, x):
        y = self.checkShape(x) @ self.shear.T
        return self._gradY(y) @ self.shear

    def hessian(self, x):
        y = self.checkShape(x) @ self.shear.T
        _, z, Nz = _pNormScaled(y, self.p)
        p = self.p
        w = np.abs(z) ** (p - 2.0) * z
        diag = (p - 1.0) * Nz[..., None] ** (2.0 - p) * np.abs(z) ** (p - 2.0)
        H = diag[..., :, None] * np.eye(self.dim)
        H = H + (2.0 - p) * Nz[..., None, None] ** (2.0 - 2.0 * p) * w[..., :, None] * w[..., None, :]
        H = H + self.eps * np.eye(self.dim)
        return np.einsum("ki,...kl,lj->...ij", self.shear, H, self.shear)

    def legendreInverseClosedForm(self, w):
        # Exact l_p only: the dual map is the gradient of 1/2 ||.||_q^2
        if self.eps != 0.0:
            return None
        u = self.checkShape(w) @ self.shearInverse
        m, z, Nz = _pNormScaled(u, self.q)
        v = m[..., None] * Nz[..., None] ** (2.0 - self.q) * np.sign(z) * np.abs(z) ** (self.q - 1.0)
        return v @ self.shearInverse.T

    def toConfig(self):
        return {
            "family": self.family,
            "dim": self.dim,
            "params": {"p": self.p, "eps": self.eps, "shear": self.shear.tolist()},
        }


# ============================================================
# SHIFTED BALL: gauge of the Euclidean unit ball centred at c
# ============================================================

class ShiftedBallNorm(MinkowskiNorm):
    family = "shifted_ball"

    def __init__(self, center: np.ndarray):
        c = np.asarray(center, dtype=float).ravel()
        if float(c @ c) >= 1.0:
            raise InvalidInputException(f"center must have Euclidean length < 1, got {c}")
        super().__init__(c.shape[0])
        self.center = c
        self.beta = 1.0 - float(c @ c)

    def _parts(self, x: np.ndarray):
        x = self.checkShape(x)
        u = x @ self.center
        sq = np.sum(x * x, axis=-1)
        r = np.sqrt(u * u + self.beta * sq)
        # two algebraically equal forms, each stable on one side of u = 0
        with np.errstate(divide="ignore", invalid="ignore"):
            F = np.where(u >= 0, sq / np.where(r + u > 0, r + u, 1.0), (r - u) / self.beta)
        F = np.where(sq > 0, F, 0.0)
        return x, u, r, F

    def value(self, x):
        return self._parts(x)[3]

    def _gradF(self, x, u, r):
        q = u[..., None] * self.center + self.beta * x
        safeR = np.where(r > 0, r, 1.0)[..., None]
        return (q / safeR - self.center) / self.beta, q, safeR

    def legendre(self, x):
        x, u, r, F = self._parts(x)
        gradF, _, _ = self._gradF(x, u, r)
        return np.where((r > 0)[..., None], F[..., None] * gradF, 0.0)

    def hessian(self, x):
        x, u, r, F = self._parts(x)
        gradF, q, safeR = self._gradF(x, u, r)
        n = self.dim
        cc = np.outer(self.center, self.center) + self.beta * np.eye(n)
        hessR = cc / safeR[..., None] - q[..., :, None] * q[..., None, :] / safeR[..., None] ** 3
        hessF = hessR / self.beta
        return gradF[..., :, None] * gradF[..., None, :] + F[..., None, None] * hessF

    def toConfig(self):
        return {"family": self.family, "dim": self.dim, "params": {"center": self.center.tolist()}}


# ============================================================
# REVERSED: ||x||_rev = ||-x||_inner
# ============================================================

class ReversedNorm(MinkowskiNorm):
    family = "reversed"

    def __init__(self, inner: MinkowskiNorm):
        super().__init__(inner.dim)
        self.inner = inner

    def value(self, x):
        return self.inner.value(-self.checkShape(x))

    def legendre(self, x):
        return -self.inner.legendre(-self.checkShape(x))

    def hessian(self, x):
        return self.inner.hessian(-self.checkShape(x))

    def legendreInverseClosedForm(self, w):
        inv = self.inner.legendreInverseClosedForm(-self.checkShape(w))
        return None if inv is None else -inv

    def toConfig(self):
        return {"family": self.family, "dim": self.dim, "params": {"inner": self.inner.toConfig()}}


def euclidean(dim: int) -> QuadraticNorm:
    return QuadraticNorm(np.eye(dim))


def lpNorm(p: float, dim: int = 2, eps: float = 0.0) -> RegularizedPNorm:
    """Exact (eps = 0) or regularised l_p norm without shear"""
    return RegularizedPNorm(p, eps, np.eye(dim))
