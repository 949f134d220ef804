"""
Custom Exceptions
"""
from fastapi import status


class LabException(Exception):
    """Base class for every error raised by the numerical modules"""
    exitCode: int = 3
    statusCode: int = status.HTTP_422_UNPROCESSABLE_ENTITY


# ============================================================
# Invalid inputs (CLI exit 2, HTTP 400)
# ============================================================

class InvalidInputException(LabException):
    """Input violates an operation precondition"""
    exitCode = 2
    statusCode = status.HTTP_400_BAD_REQUEST


class ConfigException(InvalidInputException):
    """Config file missing or malformed"""
    pass


class DimensionMismatch(InvalidInputException):
    pass


class ZeroVector(InvalidInputException):
    """Operation needs x != 0"""
    pass


class CoincidentPoints(InvalidInputException):
    pass


class InvalidP(InvalidInputException):
    """Exponent p must exceed 2"""
    pass


class InvalidTriple(InvalidInputException):
    """Tangent lines are parallel or do not enclose the origin"""
    pass


class UnsupportedCurvature(InvalidInputException):
    """Only the flat case k = delta = 0 is implemented"""
    pass


class AsymmetricNorm(InvalidInputException):
    pass


class DegenerateScale(InvalidInputException):
    pass


class SupportTooLarge(InvalidInputException):
    pass


class SupportOverflow(InvalidInputException):
    pass


class InfeasibleMarginals(InvalidInputException):
    pass


class ZeroMass(InvalidInputException):
    pass


class ZeroSecondMoment(InvalidInputException):
    pass


class DegenerateWindow(InvalidInputException):
    pass


class StabilityViolation(InvalidInputException):
    """Explicit time step exceeds the ellipticity-based bound"""
    pass


# ============================================================
# Numerical failures (CLI exit 3, HTTP 422)
# ============================================================

class NumericalException(LabException):
    """A solver failed on admissible input"""
    pass


class DegenerateHessian(NumericalException):
    pass


class NewtonDivergence(NumericalException):
    pass


class StepSizeUnderflow(NumericalException):
    pass


class NonConvergence(NumericalException):
    pass


class NegativeDensity(NumericalException):
    pass


class LinearSolveFailure(NumericalException):
    pass


class InconclusiveSlope(NumericalException):
    pass


"""
Usage:
    from app.utils.exceptions import ZeroVector

    if not np.any(x):
        raise ZeroVector("metric tensor needs x != 0")

CLI maps LabException.exitCode to the process exit status,
the API maps LabException.statusCode to the HTTP response.
"""
