"""
Finite-difference stencils for the flux-form heat operator
Node field -> face average -> divergence, with zero flux on the boundary faces.
"""
from typing import List
import numpy as np
from scipy import sparse

from app.modules.entropy_transport.grid import Grid


def fluxDivergence(V: np.ndarray, grid: Grid) -> np.ndarray:
    """div_h of the node field V (shape (*m, n)) averaged to interior faces"""
    out = np.zeros(grid.m)
    h = grid.spacing
    for k in range(grid.dim):
        Vk = V[..., k]
        m = grid.m[k]
        face = 0.5 * (np.take(Vk, np.arange(m - 1), axis=k) + np.take(Vk, np.arange(1, m), axis=k))
        pad = [(0, 0)] * grid.dim
        pad[k] = (1, 1)
        out += np.diff(np.pad(face, pad), axis=k) / h[k]
    return out


def _centralDifference1d(m: int, h: float) -> sparse.csr_array:
    """Matches np.gradient(edge_order=2): central inside, one-sided second order at the ends"""
    D = sparse.lil_array((m, m))
    for i in range(1, m - 1):
        D[i, i - 1] = -0.5 / h
        D[i, i + 1] = 0.5 / h
    D[0, 0], D[0, 1], D[0, 2] = -1.5 / h, 2.0 / h, -0.5 / h
    D[m - 1, m - 1], D[m - 1, m - 2], D[m - 1, m - 3] = 1.5 / h, -2.0 / h, 0.5 / h
    return D.tocsr()


def _divergenceAverage1d(m: int, h: float) -> sparse.csr_array:
    """(F_{i+1/2} - F_{i-1/2}) / h with F the face average and zero boundary flux"""
    D = sparse.lil_array((m, m))
    for i in range(m):
        if i + 1 < m:
            D[i, i] += 0.5 / h
            D[i, i + 1] += 0.5 / h
        if i - 1 >= 0:
            D[i, i] -= 0.5 / h
            D[i, i - 1] -= 0.5 / h
    return D.tocsr()


def _alongAxis(op1d: sparse.csr_array, grid: Grid, axis: int) -> sparse.csr_array:
    before = int(np.prod(grid.m[:axis])) if axis > 0 else 1
    after = int(np.prod(grid.m[axis + 1:])) if axis + 1 < grid.dim else 1
    return sparse.kron(
        sparse.kron(sparse.identity(before, format="csr"), op1d, format="csr"),
        sparse.identity(after, format="csr"),
        format="csr",
    )


def gradientOperators(grid: Grid) -> List[sparse.csr_array]:
    return [_alongAxis(_centralDifference1d(grid.m[k], grid.spacing[k]), grid, k) for k in range(grid.dim)]


def divergenceOperators(grid: Grid) -> List[sparse.csr_array]:
    return [_alongAxis(_divergenceAverage1d(grid.m[k], grid.spacing[k]), grid, k) for k in range(grid.dim)]


def frozenOperator(coefficients: np.ndarray, grid: Grid) -> sparse.csr_array:
    """
    Sparse matrix of u -> div_h(A D_h u) with per-node coefficients A (shape (*m, n, n))

    Columns sum to zero, so I - dt * op preserves mass.
    """
    grads = gradientOperators(grid)
    divs = divergenceOperators(grid)
    N = int(np.prod(grid.m))
    A = coefficients.reshape(N, grid.dim, grid.dim)
    op = sparse.csr_array((N, N))
    for k in range(grid.dim):
        flux = sparse.csr_array((N, N))
        for j in range(grid.dim):
            flux = flux + sparse.diags_array(A[:, k, j]) @ grads[j]
        op = op + divs[k] @ flux
    return op.tocsr()
