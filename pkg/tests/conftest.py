"""
Shared fixtures: norms from every family, grids and small densities
"""
import json
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from app.modules.entropy_transport import Grid, GaussianLikeProfile, transportService  # noqa: E402
from app.modules.norms import (  # noqa: E402
    QuadraticNorm,
    RegularizedPNorm,
    ReversedNorm,
    ShiftedBallNorm,
    euclidean,
    lpNorm,
)


@pytest.fixture
def euclidean2():
    return euclidean(2)


@pytest.fixture
def quadratic13():
    return QuadraticNorm(np.diag([1.0, 3.0]))


@pytest.fixture
def lp4():
    """Regularized l_4 with eps = 1e-3, symmetric"""
    return lpNorm(4.0, eps=1e-3)


@pytest.fixture
def shearedLp8():
    return RegularizedPNorm(8.0, 1e-2, np.array([[1.0, 0.4], [0.0, 1.0]]))


@pytest.fixture
def shiftedBall():
    return ShiftedBallNorm(np.array([0.3, 0.0]))


@pytest.fixture
def reversedShiftedBall(shiftedBall):
    return ReversedNorm(shiftedBall)


@pytest.fixture
def normMatrix(euclidean2, quadratic13, lp4, shearedLp8, shiftedBall, reversedShiftedBall):
    """One instance per family, planar"""
    return [euclidean2, quadratic13, lp4, shearedLp8, shiftedBall, reversedShiftedBall]


@pytest.fixture
def grid16():
    return Grid.cube(4.0, 16)


@pytest.fixture
def gaussianFactory():
    def make(norm, grid, center=(0.0, 0.0), a=0.25):
        return transportService.makeDensity(grid, GaussianLikeProfile(norm=norm, center=np.array(center), a=a))
    return make


@pytest.fixture
def writeJson(tmp_path):
    """Write a dict as JSON under tmp_path and return the path as str"""
    def write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)
    return write


@pytest.fixture
def lp4Spec():
    return {"family": "regularized_p", "dim": 2, "params": {"p": 4.0, "eps": 1e-3}}


@pytest.fixture
def euclideanSpec():
    return {"family": "quadratic", "dim": 2, "params": {"matrix": [[1.0, 0.0], [0.0, 1.0]]}}
