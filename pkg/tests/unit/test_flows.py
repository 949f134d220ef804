"""
Gradient curves, skew quotients and contraction fits
"""
import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from app.modules.flows import DistanceSkewConfig, PotentialSpec, curvatureConstant, flowService
from app.modules.flows.integrator import integrate, rk4Step
from app.modules.norms import RegularizedPNorm, ShiftedBallNorm, lpNorm
from app.utils.exceptions import CoincidentPoints, InvalidInputException, UnsupportedCurvature

REVERSE_SQUARED = PotentialSpec(kind="squared_reverse_norm")
IDENTITY_QUADRATIC = PotentialSpec(kind="quadratic", matrix=np.eye(2))
ANISOTROPIC_QUADRATIC = PotentialSpec(kind="quadratic", matrix=np.diag([1.0, 2.0]))

NORMS = [
    lpNorm(4.0, eps=1e-3),
    RegularizedPNorm(8.0, 1e-2, np.array([[1.0, 0.4], [0.0, 1.0]])),
    ShiftedBallNorm(np.array([0.3, 0.0])),
]
NORM_IDS = ["lp4", "sheared_lp8", "shifted_ball"]

coords = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)
points = st.tuples(coords, coords).map(np.array)


def test_potential_kinds_are_validated():
    with pytest.raises(InvalidInputException):
        PotentialSpec(kind="cubic")
    with pytest.raises(InvalidInputException):
        PotentialSpec(kind="squared_distance")
    with pytest.raises(InvalidInputException):
        PotentialSpec(kind="quadratic", matrix=np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_potential_fromConfig():
    pot = PotentialSpec.fromConfig({"kind": "squared_distance", "z": [1.0, 0.0], "scale": 2.0})
    assert pot.kind == "squared_distance"
    assert pot.scale == 2.0
    assert np.allclose(pot.z, [1.0, 0.0])


def test_rk4_is_exact_for_linear_growth():
    x = rk4Step(lambda v: np.ones_like(v), np.zeros(2), 0.5)
    assert np.allclose(x, [0.5, 0.5])


def test_integrate_keeps_the_requested_mesh():
    times, states = integrate(lambda v: -v, np.array([1.0]), 1.0, 0.1)
    assert times.size == 11
    assert states[-1, 0] == pytest.approx(np.exp(-1.0), rel=1e-6)


def test_euclidean_gradient_curve_decays_exponentially(euclidean2):
    traj = flowService.gradientCurve(euclidean2, REVERSE_SQUARED, np.array([1.0, -2.0]), 1.0, 0.01)
    expected = np.array([1.0, -2.0]) * np.exp(-traj.times)[:, None]
    assert np.allclose(traj.states, expected, atol=1e-8)
    assert traj.meta["dt"] == pytest.approx(0.01)


def test_gradient_curve_accepts_batches(lp4):
    x0 = np.array([[1.0, 0.5], [-0.3, 0.2]])
    traj = flowService.gradientCurve(lp4, REVERSE_SQUARED, x0, 0.5, 0.05)
    assert traj.states.shape == (11, 2, 2)


def test_gradient_curve_rejects_bad_step(lp4):
    with pytest.raises(InvalidInputException):
        flowService.gradientCurve(lp4, REVERSE_SQUARED, np.ones(2), 0.01, 0.1)


def test_gradient_curve_is_fourth_order(shearedLp8):
    x0 = np.array([1.0, -0.5])
    reference = flowService.gradientCurve(shearedLp8, REVERSE_SQUARED, x0, 1.0, 0.25 / 64, richardson=False)
    errors = []
    for dt in (0.25, 0.125):
        traj = flowService.gradientCurve(shearedLp8, REVERSE_SQUARED, x0, 1.0, dt, richardson=False)
        errors.append(np.linalg.norm(traj.states[-1] - reference.states[-1]))
    assert errors[0] / errors[1] >= 8.0


def test_skew_quotient_needs_distinct_points(lp4):
    with pytest.raises(CoincidentPoints):
        flowService.skewQuotient(lp4, REVERSE_SQUARED, np.ones(2), np.ones(2))


def test_reverse_squared_norm_has_quotient_one(normMatrix):
    # grad(-f)(x) = -x for f = ||-x||^2 / 2 in every Minkowski space
    rng = np.random.default_rng(0)
    X, Y = rng.standard_normal((200, 2)), rng.standard_normal((200, 2))
    for norm in normMatrix:
        Q = flowService.skewQuotients(norm, REVERSE_SQUARED, X, Y)
        assert np.allclose(Q, 1.0, atol=1e-8)


def test_skew_estimate_of_euclidean_quadratic(euclidean2):
    report = flowService.skewEstimate(euclidean2, IDENTITY_QUADRATIC, 200, 1.0, seed=3)
    assert report.infQuotient == pytest.approx(1.0, abs=1e-10)
    assert report.samples == 200
    assert set(report.summary) == {"min", "q25", "median", "q75", "max", "mean"}


def test_skew_estimate_is_seeded(lp4):
    a = flowService.skewEstimate(lp4, IDENTITY_QUADRATIC, 100, 1.0, seed=5)
    b = flowService.skewEstimate(lp4, IDENTITY_QUADRATIC, 100, 1.0, seed=5)
    assert a.infQuotient == b.infQuotient
    assert np.array_equal(a.argminPair[0], b.argminPair[0])


@pytest.mark.parametrize("norm", NORMS, ids=NORM_IDS)
@hsettings(max_examples=30, deadline=None)
@given(x=points, y=points, c=st.floats(min_value=0.2, max_value=5.0))
def test_skew_quotient_is_scale_invariant(norm, x, y, c):
    if np.linalg.norm(y - x) < 0.1:
        return
    for pot in (REVERSE_SQUARED, ANISOTROPIC_QUADRATIC):
        base = flowService.skewQuotient(norm, pot, x, y)
        assert flowService.skewQuotient(norm, pot, c * x, c * y) == pytest.approx(base, rel=1e-8, abs=1e-8)


@pytest.mark.parametrize("norm", NORMS, ids=NORM_IDS)
@hsettings(max_examples=30, deadline=None)
@given(x=points, y=points, scale=st.floats(min_value=0.1, max_value=10.0))
def test_skew_quotient_is_linear_in_potential_scale(norm, x, y, scale):
    if np.linalg.norm(y - x) < 0.1:
        return
    scaled = PotentialSpec(kind="quadratic", matrix=np.diag([1.0, 2.0]), scale=scale)
    base = flowService.skewQuotient(norm, ANISOTROPIC_QUADRATIC, x, y)
    assert flowService.skewQuotient(norm, scaled, x, y) == pytest.approx(scale * base, rel=1e-9, abs=1e-9)


def test_no_witness_below_one_for_euclidean(euclidean2):
    assert flowService.witnessSearch(euclidean2, IDENTITY_QUADRATIC, 0.5, sampleCount=128) is None


def test_witness_below_zero_for_sheared_lp8(shearedLp8):
    # grad(-f) can point away from the partner for an anisotropic quadratic
    witness = flowService.witnessSearch(shearedLp8, ANISOTROPIC_QUADRATIC, 0.0, sampleCount=512)
    assert witness is not None
    assert witness.quotient < 0
    assert flowService.skewQuotient(shearedLp8, ANISOTROPIC_QUADRATIC, witness.x, witness.y) == pytest.approx(witness.quotient)


def test_contraction_fit_recovers_rate(euclidean2):
    fitted = flowService.contractionFit(euclidean2, IDENTITY_QUADRATIC, 16, 1.0, 0.01, seed=0)
    assert fitted == pytest.approx(1.0, abs=1e-3)


def test_curvature_constant():
    assert curvatureConstant(0.0, 1.3, 0.0, 2.0) == 1.0
    assert curvatureConstant(1.0, 1.0, 0.0, np.pi / 4) == pytest.approx(np.pi / 4)


def test_distance_skew_check_flat_case(normMatrix):
    for norm in normMatrix:
        report = flowService.distanceSkewCheck(norm, DistanceSkewConfig(r=1.0, z=np.array([0.2, -0.1])), 200)
        assert report.infQuotient >= 1.0 - 1e-6
        assert report.referenceK == 1.0


def test_distance_skew_check_rejects_curvature(lp4):
    with pytest.raises(UnsupportedCurvature):
        flowService.distanceSkewCheck(lp4, DistanceSkewConfig(k=1.0), 10)
