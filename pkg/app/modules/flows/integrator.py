"""
Fixed-step RK4 with a step-halving Richardson check
"""
from typing import Callable, Tuple
import numpy as np

from app.utils.logger import logger
from app.utils.exceptions import StepSizeUnderflow


def rk4Step(rhs: Callable[[np.ndarray], np.ndarray], x: np.ndarray, dt: float) -> np.ndarray:
    k1 = rhs(x)
    k2 = rhs(x + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt * k2)
    k4 = rhs(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _checkedStep(rhs, x, dt, localTol, minDt) -> Tuple[np.ndarray, int]:
    full = rk4Step(rhs, x, dt)
    half = rk4Step(rhs, rk4Step(rhs, x, 0.5 * dt), 0.5 * dt)
    err = float(np.max(np.linalg.norm(full - half, axis=-1))) / 15.0
    if err <= localTol * dt:
        return half, 0
    if 0.5 * dt < minDt:
        raise StepSizeUnderflow(
            f"local error {err:.3e} still above {localTol * dt:.3e} at dt={dt:.3e}"
        )
    mid, a = _checkedStep(rhs, x, 0.5 * dt, localTol, minDt)
    end, b = _checkedStep(rhs, mid, 0.5 * dt, localTol, minDt)
    return end, 1 + a + b


def integrate(
    rhs: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    tEnd: float,
    dt: float,
    richardson: bool = True,
    localTol: float = 1e-8,
    minDt: float = 1e-9
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrate x' = rhs(x) on the uniform mesh 0, h, ..., tEnd

    rhs acts row-wise, so x0 may hold a batch of initial states (..., n).
    With richardson=True every mesh step is compared with two half steps
    and subdivided until the estimated local error is below localTol per
    unit time; the mesh itself stays fixed for reproducible outputs.

    Returns:
        (times, states) with states of shape (len(times),) + x0.shape
    """
    nSteps = max(int(np.ceil(tEnd / dt - 1e-9)), 1)
    h = tEnd / nSteps
    times = h * np.arange(nSteps + 1)
    states = np.empty((nSteps + 1,) + np.shape(x0))
    states[0] = x0
    splits = 0
    for i in range(nSteps):
        if richardson:
            states[i + 1], extra = _checkedStep(rhs, states[i], h, localTol, minDt)
            splits += extra
        else:
            states[i + 1] = rk4Step(rhs, states[i], h)
    if splits:
        logger.info(f"⚠️ RK4 Richardson check subdivided {splits} steps")
    return times, states
