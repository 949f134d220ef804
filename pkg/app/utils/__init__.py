"""Utils Package"""
from app.utils.logger import logger
from app.utils.exceptions import (
    LabException,
    InvalidInputException,
    NumericalException,
)

__all__ = [
    "logger",
    "LabException",
    "InvalidInputException",
    "NumericalException",
]
