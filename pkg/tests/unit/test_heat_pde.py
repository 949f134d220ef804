"""
Heat flow solver, diagnostics and Gaussian-form solutions
"""
import numpy as np
import pytest

from app.modules.entropy_transport import Grid
from app.modules.heat_pde import DensityTrajectory, HeatConfig, heatService
from app.modules.heat_pde.stencil import fluxDivergence
from app.utils.exceptions import AsymmetricNorm, InvalidInputException, StabilityViolation


def relativeL1(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.abs(u - v).sum() / np.abs(v).sum())


# ============================================================
# CONFIGURATION
# ============================================================

def test_heat_config_validation(grid16):
    with pytest.raises(InvalidInputException):
        HeatConfig(grid=grid16, dt=0.1, tEnd=0.05)
    with pytest.raises(InvalidInputException):
        HeatConfig(grid=grid16, dt=0.01, tEnd=1.0, scheme="crank_nicolson")
    with pytest.raises(InvalidInputException):
        HeatConfig(grid=grid16, dt=0.01, tEnd=1.0, boundary="periodic")
    with pytest.raises(InvalidInputException):
        HeatConfig(grid=grid16, dt=0.01, tEnd=1.0, snapshotStride=0)
    with pytest.raises(InvalidInputException):
        HeatConfig(grid=Grid.cube(1.0, 2), dt=0.01, tEnd=1.0)


def test_stability_bound_of_euclidean(euclidean2, grid16):
    h = grid16.spacing[0]
    assert heatService.stabilityBound(euclidean2, grid16) == pytest.approx(0.25 * h ** 2, rel=1e-6)


def test_explicit_step_above_bound_is_rejected(euclidean2, grid16, gaussianFactory):
    u0 = gaussianFactory(euclidean2, grid16)
    with pytest.raises(StabilityViolation):
        heatService.heatSolve(euclidean2, u0, HeatConfig(grid=grid16, dt=0.2, tEnd=1.0))


def test_flux_divergence_conserves_mass():
    grid = Grid.cube(2.0, 9)
    V = np.random.default_rng(1).standard_normal((*grid.m, 2))
    assert fluxDivergence(V, grid).sum() == pytest.approx(0.0, abs=1e-12)


# ============================================================
# SOLVER
# ============================================================

def test_explicit_run_conserves_mass_and_dissipates_entropy(quadratic13, grid16, gaussianFactory):
    u0 = gaussianFactory(quadratic13, grid16)
    traj = heatService.heatSolve(quadratic13, u0, HeatConfig(grid=grid16, dt=0.05, tEnd=0.5))
    assert len(traj.frames) == 11
    assert traj.meta["steps"] == 10
    masses = np.array([d.mass for d in traj.diagnostics])
    entropies = np.array([d.entropy for d in traj.diagnostics])
    assert np.allclose(masses, 1.0, atol=1e-10)
    assert np.all(np.diff(entropies) <= 1e-12)
    assert all(f.values.min() >= 0 for f in traj.frames)


def test_snapshot_stride_keeps_last_step(quadratic13, grid16, gaussianFactory):
    u0 = gaussianFactory(quadratic13, grid16)
    traj = heatService.heatSolve(quadratic13, u0, HeatConfig(grid=grid16, dt=0.05, tEnd=0.35, snapshotStride=3))
    assert traj.times.tolist() == pytest.approx([0.0, 0.15, 0.3, 0.35])


def test_semi_implicit_run_conserves_mass(quadratic13, grid16, gaussianFactory):
    u0 = gaussianFactory(quadratic13, grid16)
    cfg = HeatConfig(grid=grid16, dt=0.1, tEnd=0.5, scheme="semi_implicit_frozen")
    traj = heatService.heatSolve(quadratic13, u0, cfg)
    assert traj.meta["scheme"] == "semi_implicit_frozen"
    assert traj.frames[-1].mass() == pytest.approx(1.0, abs=1e-10)
    assert traj.diagnostics[-1].entropy < traj.diagnostics[0].entropy


def test_euclidean_solver_matches_heat_kernel(euclidean2):
    grid = Grid.cube(5.0, 96)
    u0 = heatService.gaussianProfile(euclidean2, (0.0, 0.0), 0.25, grid)
    traj = heatService.heatSolve(euclidean2, u0, HeatConfig(grid=grid, dt=0.002, tEnd=0.1, snapshotStride=50))
    exact = heatService.gaussianProfile(euclidean2, (0.0, 0.0), 0.35, grid)
    assert relativeL1(traj.frameAt(0.1).values, exact.values) < 0.03


def test_dissipation_matches_entropy_drop(euclidean2):
    grid = Grid.cube(5.0, 64)
    u0 = heatService.gaussianProfile(euclidean2, (0.0, 0.0), 0.25, grid)
    traj = heatService.heatSolve(euclidean2, u0, HeatConfig(grid=grid, dt=0.005, tEnd=0.3))
    assert heatService.entropyDissipationResidual(euclidean2, traj, 0.05, 0.3) < 0.05


def test_lp4_semi_implicit_follows_gaussian_form(lp4):
    grid = Grid.cube(4.0, 32)
    u0 = heatService.gaussianProfile(lp4, (0.0, 0.0), 0.25, grid)
    cfg = HeatConfig(grid=grid, dt=0.005, tEnd=0.25, scheme="semi_implicit_frozen", snapshotStride=10)
    traj = heatService.heatSolve(lp4, u0, cfg)
    exact = heatService.gaussianEvolution(lp4, (0.0, 0.0), 0.25, traj.times, grid)
    assert relativeL1(traj.frames[-1].values, exact.frames[-1].values) < 0.1
    assert traj.frames[-1].mass() == pytest.approx(1.0, abs=1e-10)
    entropies = [d.entropy for d in traj.diagnostics]
    assert all(b <= a + 1e-12 for a, b in zip(entropies, entropies[1:]))


# ============================================================
# GAUSSIAN FORM
# ============================================================

def test_gaussian_profile_needs_symmetric_norm(shiftedBall, grid16):
    with pytest.raises(AsymmetricNorm):
        heatService.gaussianProfile(shiftedBall, (0.0, 0.0), 0.25, grid16)


def test_gaussian_evolution_shifts_the_scale(lp4, grid16):
    traj = heatService.gaussianEvolution(lp4, (0.0, 0.0), 0.25, [0.0, 0.5], grid16)
    later = heatService.gaussianProfile(lp4, (0.0, 0.0), 0.75, grid16)
    assert np.allclose(traj.frameAt(0.5).values, later.values)
    assert traj.meta["analytic"] is True
    with pytest.raises(InvalidInputException):
        heatService.gaussianEvolution(lp4, (0.0, 0.0), 0.25, [-0.1], grid16)


def test_gaussian_second_moments_grow_linearly(euclidean2):
    # E|x|^2 = 2n(a + t) for the Euclidean heat kernel
    grid = Grid.cube(8.0, 128)
    traj = heatService.gaussianEvolution(euclidean2, (0.0, 0.0), 0.25, [0.0, 0.25, 0.5], grid)
    moments = [d.m2Fwd for d in traj.diagnostics]
    assert moments == pytest.approx([1.0, 2.0, 3.0], rel=1e-3)


# ============================================================
# TRAJECTORIES AND FIRST VARIATION
# ============================================================

def test_trajectory_lookup(lp4, grid16):
    traj = heatService.gaussianEvolution(lp4, (0.0, 0.0), 0.25, [0.0, 0.1, 0.2], grid16)
    assert traj.indexOf(0.1) == 1
    with pytest.raises(InvalidInputException):
        traj.indexOf(0.15)
    with pytest.raises(InvalidInputException):
        DensityTrajectory(times=np.array([0.0, 0.0]), frames=traj.frames[:2])


def test_diagnostic_rows_use_series_columns(lp4, grid16, gaussianFactory):
    row = heatService.frameDiagnostics(lp4, gaussianFactory(lp4, grid16), 0.0).toRow()
    assert list(row) == ["t", "mass", "entropy", "m2_fwd", "m2_bwd", "dissipation", "clipped_mass"]
    assert row["dissipation"] > 0


def test_first_variation_of_translated_gaussians(euclidean2):
    # two heat flows from translated data stay translates, so W2 is constant
    grid = Grid.cube(4.0, 16)
    times = [0.0, 0.05, 0.1]
    a = heatService.gaussianEvolution(euclidean2, (-1.0, 0.0), 0.25, times, grid)
    b = heatService.gaussianEvolution(euclidean2, (1.0, 0.0), 0.25, times, grid)
    result = heatService.firstVariation(euclidean2, a, b, 0.05, 0.05)
    assert result.approximate is True
    assert abs(result.lhs) < 0.05
    with pytest.raises(InvalidInputException):
        heatService.firstVariation(euclidean2, a, b, 0.0, 0.05)
