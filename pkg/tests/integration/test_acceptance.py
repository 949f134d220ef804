"""
End-to-end acceptance runs

Slow; deselected by default. Run with `pytest -m slow`.
"""
import numpy as np
import pytest

from app.modules.entropy_transport import Grid, GaussianLikeProfile, TableProfile, transportService
from app.modules.experiments import experimentService
from app.modules.flows import PotentialSpec, flowService
from app.modules.heat_pde import HeatConfig, heatService
from app.modules.norms import euclidean, lpNorm

pytestmark = pytest.mark.slow

REVERSE_SQUARED = PotentialSpec(kind="squared_reverse_norm")
ANISOTROPIC_QUADRATIC = PotentialSpec(kind="quadratic", matrix=np.diag([1.0, 2.0]))


def test_step0_limit_ladder():
    rows = experimentService.step0Limit(4.0, [25.0, 50.0, 100.0])
    assert rows[-1].relError < 0.05
    assert rows[0].limit == pytest.approx(0.46337, abs=1e-5)


def test_euclidean_theta_of_standard_gaussian():
    norm = euclidean(2)
    grid = Grid.cube(8.0, 128)
    rho = transportService.makeDensity(grid, GaussianLikeProfile(norm=norm, center=np.zeros(2), a=0.5))
    result = transportService.thetaParts(norm, rho)
    assert result.numerator == pytest.approx(-2.0, rel=0.01)
    assert result.theta == pytest.approx(-1.0, rel=0.01)


def test_reverse_squared_quotient_on_1000_pairs(normMatrix):
    rng = np.random.default_rng(42)
    X, Y = rng.standard_normal((1000, 2)), rng.standard_normal((1000, 2))
    for norm in normMatrix:
        assert np.allclose(flowService.skewQuotients(norm, REVERSE_SQUARED, X, Y), 1.0, atol=1e-8)


def test_contraction_fit_matches_skew_infimum(normMatrix):
    for norm in normMatrix:
        inf = flowService.skewEstimate(norm, REVERSE_SQUARED, 500, 1.0, seed=1).infQuotient
        fitted = flowService.contractionFit(norm, REVERSE_SQUARED, 16, 1.0, 1e-2, seed=1)
        assert abs(fitted - inf) <= 0.05 * abs(inf)


def test_skew_infimum_equals_contraction_rate(lp4, shiftedBall, shearedLp8):
    infima = {}
    for name, norm in (("lp4", lp4), ("shifted_ball", shiftedBall), ("sheared_lp8", shearedLp8)):
        report = flowService.skewEstimate(norm, ANISOTROPIC_QUADRATIC, 1000, 2.0, seed=0)
        fitted = flowService.contractionFit(
            norm, ANISOTROPIC_QUADRATIC, 8, 0.2, 1e-3, seed=0, seedPairs=[report.argminPair]
        )
        assert abs(report.infQuotient - fitted) < 1e-2
        infima[name] = report.infQuotient
    assert infima["sheared_lp8"] < 0 < infima["lp4"]


def test_euclidean_heat_matches_kernel_at_128():
    norm = euclidean(2)
    grid = Grid.cube(6.0, 128)
    u0 = heatService.gaussianProfile(norm, (0.0, 0.0), 0.25, grid)
    dt = heatService.stabilityBound(norm, grid)
    traj = heatService.heatSolve(norm, u0, HeatConfig(grid=grid, dt=dt, tEnd=0.25, snapshotStride=1000))
    exact = heatService.gaussianProfile(norm, (0.0, 0.0), 0.5, grid)
    error = np.abs(traj.frames[-1].values - exact.values).sum() / exact.values.sum()
    assert error < 0.02
    assert abs(traj.frames[-1].mass() - 1.0) < 1e-8


def test_entropy_dissipation_identity_at_128():
    norm = euclidean(2)
    grid = Grid.cube(6.0, 128)
    u0 = heatService.gaussianProfile(norm, (0.0, 0.0), 0.25, grid)
    traj = heatService.heatSolve(norm, u0, HeatConfig(grid=grid, dt=0.002, tEnd=0.3))
    assert heatService.entropyDissipationResidual(norm, traj, 0.05, 0.3) < 0.02


def test_lp4_heat_refines_toward_gaussian_form():
    norm = lpNorm(4.0, eps=1e-3)
    errors = []
    for cells, dt in ((32, 0.005), (64, 0.00125)):
        grid = Grid.cube(4.0, cells)
        u0 = heatService.gaussianProfile(norm, (0.0, 0.0), 0.25, grid)
        traj = heatService.heatSolve(
            norm, u0, HeatConfig(grid=grid, dt=dt, tEnd=0.25, scheme="semi_implicit_frozen")
        )
        exact = heatService.gaussianProfile(norm, (0.0, 0.0), 0.5, grid)
        errors.append(np.abs(traj.frames[-1].values - exact.values).sum() / exact.values.sum())
    assert errors[1] < 0.03
    assert errors[0] / errors[1] > 2.5

    entropies = [d.entropy for d in traj.diagnostics]
    assert all(b <= a + 1e-12 for a, b in zip(entropies, entropies[1:]))
    assert heatService.entropyDissipationResidual(norm, traj, 0.05, 0.25) < 0.05


def test_sinkhorn_against_exact_at_32():
    norm = lpNorm(4.0, eps=1e-3)
    grid = Grid.cube(1.0, 32)
    for seed in range(20):
        rng = np.random.default_rng(seed)
        mu = transportService.makeDensity(grid, TableProfile(rng.random(grid.m) + 0.1))
        nu = transportService.makeDensity(grid, TableProfile(rng.random(grid.m) + 0.1))
        exact = transportService.w2Exact(norm, mu, nu).cost
        entropic = transportService.w2Sinkhorn(norm, mu, nu, epsFinal=1e-3).cost
        assert entropic == pytest.approx(exact, rel=5e-3)


def test_euclidean_gaussian_w2_closed_form():
    norm = euclidean(2)
    grid = Grid.cube(5.0, 32)
    mu = heatService.gaussianProfile(norm, (0.0, 0.0), 0.25, grid)
    nu = heatService.gaussianProfile(norm, (1.0, 0.0), 0.5, grid)
    expected = 1.0 + 2.0 * (np.sqrt(0.5) - 1.0) ** 2
    assert transportService.w2Exact(norm, mu, nu).cost == pytest.approx(expected, rel=0.02)


def test_l4_gaussian_non_expansion():
    record, rows = experimentService.gaussianContractDemo(lpNorm(4.0, eps=1e-3), analytic=True)
    assert record.passed
    assert rows[-1]["w2"] <= rows[0]["w2"] * 1.005


def test_l4_gaussian_non_expansion_through_the_solver():
    record, rows = experimentService.gaussianContractDemo(lpNorm(4.0, eps=1e-3))
    assert record.passed
    assert rows[-1]["w2"] < rows[0]["w2"]


def test_noncontraction_demo_passes_for_l4():
    record, rows = experimentService.noncontractionDemo(lpNorm(4.0, eps=1e-3))
    assert record.passed
    assert record.results["omega_gap"] > 0
    assert record.results["theta"] > 0
    assert record.results["initial_slope"] > 0
    w0sq = record.results["w2_initial"] ** 2
    assert record.results["initial_slope"] > 10.0 * w0sq
    assert all(flag["slope_defeats_bound"] for flag in record.flags.values())
    assert len(rows) >= 3


def test_euclidean_control_contracts():
    control, _ = experimentService.noncontractionDemo(euclidean(2), requireConclusive=False)
    assert control.results["omega_gap"] < 0
    assert control.results["initial_slope"] <= 0
    assert not control.passed
