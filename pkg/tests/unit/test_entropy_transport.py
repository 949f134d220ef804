"""
Grid densities, entropy, Wasserstein-2 transport and Theta on grids
"""
import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from app.core.config import settings
from app.modules.entropy_transport import (
    Grid,
    GridDensity,
    TableProfile,
    UniformProfile,
    profileFromConfig,
    readDensity,
    transportService,
    writeDensity,
)
from app.modules.entropy_transport.transport import epsSchedule
from app.modules.norms import QuadraticNorm, ShiftedBallNorm, euclidean, lpNorm, normService
from app.utils.exceptions import (
    ConfigException,
    DegenerateScale,
    DimensionMismatch,
    InfeasibleMarginals,
    InvalidInputException,
    NonConvergence,
    SupportTooLarge,
    ZeroMass,
)


def pointMass(grid: Grid, index) -> GridDensity:
    values = np.zeros(grid.m)
    values[index] = 1.0
    return transportService.makeDensity(grid, TableProfile(values))


def randomDensity(grid: Grid, rng: np.random.Generator) -> GridDensity:
    values = rng.random(grid.m) * (rng.random(grid.m) < 0.6)
    values.flat[rng.integers(grid.m[0] * grid.m[1])] += 1.0
    return transportService.makeDensity(grid, TableProfile(values))


ORIENTED_NORMS = [lpNorm(4.0, eps=1e-3), ShiftedBallNorm(np.array([0.3, 0.0]))]


# ============================================================
# GRIDS AND DENSITIES
# ============================================================

def test_grid_nodes_are_cell_centres():
    grid = Grid(lo=(0.0, 0.0), hi=(1.0, 2.0), m=(4, 4))
    assert np.allclose(grid.spacing, [0.25, 0.5])
    assert grid.cellVolume == pytest.approx(0.125)
    assert grid.points().shape == (4, 4, 2)
    assert np.allclose(grid.axes()[0], [0.125, 0.375, 0.625, 0.875])


def test_grid_validation():
    with pytest.raises(DimensionMismatch):
        Grid(lo=(0.0,), hi=(1.0, 1.0), m=(4, 4))
    with pytest.raises(InvalidInputException):
        Grid(lo=(1.0, 0.0), hi=(0.0, 1.0), m=(4, 4))


def test_make_density_normalizes(lp4, grid16, gaussianFactory):
    rho = gaussianFactory(lp4, grid16)
    assert rho.mass() == pytest.approx(1.0, abs=1e-12)
    assert rho.values.min() >= 0


def test_density_values_are_read_only(lp4, grid16, gaussianFactory):
    rho = gaussianFactory(lp4, grid16)
    with pytest.raises(ValueError):
        rho.values[0, 0] = 1.0


def test_negative_density_rejected(grid16):
    values = np.ones(grid16.m)
    values[3, 3] = -1.0
    with pytest.raises(InvalidInputException):
        GridDensity(grid16, values)


def test_zero_mass_profile(grid16):
    with pytest.raises(ZeroMass):
        transportService.makeDensity(grid16, UniformProfile(lo=[10.0, 10.0], hi=[11.0, 11.0]))


def test_profile_from_config(lp4):
    profile = profileFromConfig({"kind": "gaussian_like", "center": [0.5, 0.0], "a": 0.3}, lp4)
    assert profile.evaluate(np.array([[0.5, 0.0]]))[0] == pytest.approx(1.0)
    with pytest.raises(InvalidInputException):
        profileFromConfig({"kind": "gaussian_like"})
    with pytest.raises(InvalidInputException):
        profileFromConfig({"kind": "spline"})


def test_density_file_io(tmp_path, lp4, grid16, gaussianFactory):
    rho = gaussianFactory(lp4, grid16)
    header = writeDensity(rho, tmp_path / "rho.json")
    assert (tmp_path / "rho.csv").read_text().splitlines()[0] == "rho"
    back = readDensity(header)
    assert back.grid == rho.grid
    assert np.array_equal(back.values, rho.values)


def test_missing_density_file(tmp_path):
    with pytest.raises(ConfigException):
        readDensity(tmp_path / "absent.json")


# ============================================================
# ENTROPY AND MOMENTS
# ============================================================

def test_entropy_of_uniform_density():
    grid = Grid.cube(1.0, 10)
    rho = transportService.makeDensity(grid, UniformProfile(lo=[-1.0, -1.0], hi=[1.0, 1.0]))
    assert transportService.relativeEntropy(rho) == pytest.approx(-np.log(4.0), abs=1e-12)


def test_entropy_gradient_flags_empty_nodes(lp4):
    grid = Grid.cube(2.0, 12)
    rho = transportService.makeDensity(grid, UniformProfile(lo=[-1.0, -1.0], hi=[1.0, 1.0]))
    field = transportService.entropyWGradient(rho, lp4)
    assert field.flagged is not None and field.flagged.any()
    assert np.all(field.values[field.flagged] == 0.0)
    assert field.flaggedMass(rho) == 0.0


def test_second_moments_differ_for_asymmetric_norm(shiftedBall):
    grid = Grid.cube(3.0, 12)
    rho = pointMass(grid, (9, 6))
    moments = transportService.secondMoments(shiftedBall, rho)
    x = grid.points()[9, 6]
    assert moments.forward == pytest.approx(float(shiftedBall.value(x)) ** 2)
    assert moments.backward == pytest.approx(float(shiftedBall.value(-x)) ** 2)
    assert moments.forward != pytest.approx(moments.backward)


# ============================================================
# TRANSPORT
# ============================================================

def test_w2_between_point_masses_is_oriented(shiftedBall):
    grid = Grid.cube(2.0, 8)
    mu, nu = pointMass(grid, (1, 2)), pointMass(grid, (6, 5))
    x, y = grid.points()[1, 2], grid.points()[6, 5]
    forward = transportService.w2Exact(shiftedBall, mu, nu)
    backward = transportService.w2Exact(shiftedBall, nu, mu)
    assert forward.cost == pytest.approx(float(shiftedBall.value(y - x)) ** 2, rel=1e-12)
    assert backward.cost == pytest.approx(float(shiftedBall.value(x - y)) ** 2, rel=1e-12)
    assert forward.cost != pytest.approx(backward.cost)


def test_w2_to_itself_is_zero(lp4, grid16, gaussianFactory):
    rho = gaussianFactory(lp4, grid16, a=0.5)
    plan = transportService.w2Exact(lp4, rho, rho)
    assert plan.cost == pytest.approx(0.0, abs=1e-14)
    assert plan.marginalError < 1e-12


def test_w2_of_translation_euclidean():
    # a density shifted by whole cells moves rigidly
    grid = Grid.cube(2.0, 8)
    values = np.zeros(grid.m)
    values[1:4, 2:5] = np.arange(1.0, 10.0).reshape(3, 3)
    mu = transportService.makeDensity(grid, TableProfile(values))
    nu = transportService.makeDensity(grid, TableProfile(np.roll(values, 2, axis=0)))
    shift = 2 * grid.spacing[0]
    assert transportService.w2Exact(euclidean(2), mu, nu).w2 == pytest.approx(shift, rel=1e-10)


def test_exact_transport_support_limit(lp4, monkeypatch):
    monkeypatch.setattr(settings, "W2_MAX_SUPPORT", 10)
    grid = Grid.cube(1.0, 8)
    rho = transportService.makeDensity(grid, UniformProfile(lo=[-1.0, -1.0], hi=[1.0, 1.0]))
    with pytest.raises(SupportTooLarge):
        transportService.w2Exact(lp4, rho, rho)


def test_infeasible_marginals(lp4):
    grid = Grid.cube(1.0, 4)
    mu = GridDensity(grid, np.ones(grid.m))
    nu = GridDensity(grid, 2.0 * np.ones(grid.m))
    with pytest.raises(InfeasibleMarginals):
        transportService.w2Exact(lp4, mu, nu)


def test_eps_schedule_halves_down_to_final():
    schedule = epsSchedule(8.0, 0.1)
    assert schedule[0] == 1.0
    assert schedule[-1] == 0.1
    assert all(b < a for a, b in zip(schedule, schedule[1:]))


def test_sinkhorn_matches_exact_on_small_grid(lp4):
    grid = Grid.cube(1.0, 8)
    rng = np.random.default_rng(11)
    mu = transportService.makeDensity(grid, TableProfile(rng.random(grid.m) + 0.1))
    nu = transportService.makeDensity(grid, TableProfile(np.roll(rng.random(grid.m) + 0.1, 3, axis=1)))
    exact = transportService.w2Exact(lp4, mu, nu)
    entropic = transportService.w2Sinkhorn(lp4, mu, nu, epsFinal=2e-3)
    assert entropic.cost == pytest.approx(exact.cost, rel=5e-3)
    assert entropic.marginalError < 1e-5


def test_sinkhorn_rejects_bad_schedules(lp4):
    grid = Grid.cube(1.0, 4)
    rho = transportService.makeDensity(grid, UniformProfile(lo=[-1.0, -1.0], hi=[1.0, 1.0]))
    with pytest.raises(InvalidInputException):
        transportService.w2Sinkhorn(lp4, rho, rho, epsSchedule=[0.1, 0.2])
    with pytest.raises(InvalidInputException):
        transportService.w2Sinkhorn(lp4, rho, rho, epsSchedule=[1e-12])


def test_sinkhorn_reports_non_convergence(lp4, monkeypatch):
    monkeypatch.setattr(settings, "SINKHORN_STAGE_ITER", 1)
    monkeypatch.setattr(settings, "SINKHORN_MAX_ITER", 2)
    grid = Grid.cube(1.0, 8)
    rng = np.random.default_rng(4)
    mu, nu = randomDensity(grid, rng), randomDensity(grid, rng)
    with pytest.raises(NonConvergence):
        transportService.w2Sinkhorn(lp4, mu, nu, epsFinal=2e-3)


@pytest.mark.parametrize("norm", ORIENTED_NORMS, ids=["lp4", "shifted_ball"])
@hsettings(max_examples=15, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 16))
def test_w2_oriented_triangle_inequality(norm, seed):
    grid = Grid.cube(1.0, 6)
    rng = np.random.default_rng(seed)
    mu, nu, kappa = (randomDensity(grid, rng) for _ in range(3))
    direct = transportService.w2Exact(norm, mu, kappa).w2
    via = transportService.w2Exact(norm, mu, nu).w2 + transportService.w2Exact(norm, nu, kappa).w2
    assert direct <= via + 1e-9


@pytest.mark.parametrize("norm", ORIENTED_NORMS, ids=["lp4", "shifted_ball"])
def test_w2_between_norm_and_frozen_metric(norm):
    # C^-1 W2 <= W2 under g_x <= S W2 for any fixed x
    constants = normService.uniformConstants(norm, 64)
    frozen = QuadraticNorm(normService.metricTensor(norm, np.array([1.0, 0.3])).entries)
    grid = Grid.cube(1.0, 6)
    rng = np.random.default_rng(8)
    for _ in range(5):
        mu, nu = randomDensity(grid, rng), randomDensity(grid, rng)
        w = transportService.w2Exact(norm, mu, nu).w2
        wg = transportService.w2Exact(frozen, mu, nu).w2
        assert w / constants.cConst <= wg * (1 + 1e-9)
        assert wg <= constants.sConst * w * (1 + 1e-9)


def test_barycentric_fields_of_a_point_shift():
    grid = Grid.cube(2.0, 8)
    mu, nu = pointMass(grid, (2, 2)), pointMass(grid, (5, 2))
    plan = transportService.w2Exact(euclidean(2), mu, nu)
    fieldMu, fieldNu = transportService.barycentricFields(plan)
    step = grid.points()[5, 2] - grid.points()[2, 2]
    assert np.allclose(fieldMu.values[2, 2], step)
    assert np.allclose(fieldNu.values[5, 2], step)
    assert fieldMu.flagged[0, 0] and not fieldMu.flagged[2, 2]


def test_metric_speed_of_translation():
    grid = Grid.cube(2.0, 8)
    frames = [pointMass(grid, (i, 3)) for i in range(3)]
    speed = transportService.metricSpeed(euclidean(2), frames, [0.0, 0.5, 1.0], 0, method="exact")
    assert speed == pytest.approx(grid.spacing[0] / 0.5)
    with pytest.raises(InvalidInputException):
        transportService.metricSpeed(euclidean(2), frames, [0.0, 0.5, 1.0], 2, method="exact")


# ============================================================
# GEODESIC, OMEGA GAP AND THETA
# ============================================================

def test_contraction_geodesic(lp4, grid16, gaussianFactory):
    rho = gaussianFactory(lp4, grid16, center=(1.0, 0.5))
    start, field = transportService.contractionGeodesic(rho, 2.0, 0.0)
    assert np.array_equal(start.values, rho.values)
    mid, field = transportService.contractionGeodesic(rho, 2.0, 1.0)
    assert mid.mass() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(field.values, -mid.grid.points() / 1.0)
    with pytest.raises(DegenerateScale):
        transportService.contractionGeodesic(rho, 2.0, 2.0)
    with pytest.raises(InvalidInputException):
        transportService.contractionGeodesic(rho, 1.0, 0.0)


def test_euclidean_theta_numerator_is_minus_dimension(gaussianFactory):
    norm = euclidean(2)
    rho = gaussianFactory(norm, Grid.cube(4.0, 64), a=0.25)
    result = transportService.thetaParts(norm, rho)
    assert result.numerator == pytest.approx(-2.0, rel=1e-2)
    assert result.theta < 0
    assert result.mode == "grid"


def test_theta_scales_like_inverse_square(lp4, gaussianFactory):
    from app.modules.experiments import experimentService
    rho = gaussianFactory(lp4, Grid.cube(4.0, 32), center=(0.7, -0.2))
    base = transportService.thetaParts(lp4, rho)
    for eps in (0.5, 0.1, 0.05):
        scaled = transportService.thetaParts(lp4, experimentService.scaleDensity(rho, eps))
        assert eps ** 2 * scaled.theta == pytest.approx(base.theta, rel=1e-9)
        assert scaled.secondMoment == pytest.approx(eps ** 2 * base.secondMoment, rel=1e-10)


def test_omega_gap_matches_theta_on_contraction_family(lp4, gaussianFactory):
    # gap(mu^0, mu^1) = -num(mu^1)/(T-1) + num(mu^0)/T = num / (T (T-1)) after rescaling
    rho = gaussianFactory(lp4, Grid.cube(4.0, 32), center=(0.9, 0.3))
    T = 2.0
    mu0, f0 = transportService.contractionGeodesic(rho, T, 0.0)
    mu1, f1 = transportService.contractionGeodesic(rho, T, 1.0)
    gap = transportService.omegaGap(
        lp4, mu0, mu1,
        transportService.entropyWGradient(mu0, lp4),
        transportService.entropyWGradient(mu1, lp4),
        f0, f1,
    )
    numerator = transportService.thetaParts(lp4, rho).numerator
    assert gap == pytest.approx(numerator / (T * (T - 1.0)), rel=1e-8)
