"""
Command-line surface
Run as `python -m app.cli <command> ...`

Exit codes: 0 PASS / success, 1 FAIL, 2 invalid input or config, 3 numerical failure.
"""
import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from app.core.config import settings
from app.modules.entropy_transport import Grid, profileFromConfig, readDensity, transportService, writeDensity
from app.modules.experiments import experimentService, triangleDensity
from app.modules.flows import PotentialSpec, flowService
from app.modules.heat_pde import HeatConfig, heatService
from app.modules.norms import MinkowskiNorm, lpNorm, normService
from app.schemas import ExperimentConfig, NormSpecConfig
from app.utils.exceptions import ConfigException, LabException
from app.utils.logger import console_handler, logger

SERIES_COLUMNS = ["t", "mass", "entropy", "m2_fwd", "m2_bwd", "dissipation", "clipped_mass"]


# ============================================================
# FILE HELPERS
# ============================================================

def readJson(path: str) -> Dict[str, Any]:
    p = Path(path)
    if not p.is_file():
        raise ConfigException(f"file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigException(f"invalid JSON in {p}: {e}") from e


def loadNorm(path: str) -> MinkowskiNorm:
    try:
        spec = NormSpecConfig.model_validate(readJson(path))
    except ValidationError as e:
        raise ConfigException(f"invalid norm spec {path}: {e}") from e
    return normService.fromConfig(spec)


def loadPotential(path: str) -> PotentialSpec:
    config = readJson(path)
    if "kind" not in config:
        raise ConfigException(f"potential file {path} has no 'kind'")
    return PotentialSpec.fromConfig(config)


def loadGrid(path: str) -> Grid:
    config = readJson(path)
    try:
        return Grid(lo=config["lo"], hi=config["hi"], m=config["m"])
    except KeyError as e:
        raise ConfigException(f"grid file {path} is missing {e}") from e


def emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2))


# ============================================================
# COMMANDS
# ============================================================

def cmdNormInfo(args) -> int:
    norm = loadNorm(args.spec)
    bounds = normService.ellipticityBounds(norm, args.samples)
    constants = normService.uniformConstants(norm, args.angular_resolution)
    emit({
        "lambda_lo": bounds.lambdaLo,
        "lambda_hi": bounds.lambdaHi,
        "c_const": constants.cConst,
        "s_const": constants.sConst,
    })
    return 0


def cmdFlowRun(args) -> int:
    norm = loadNorm(args.norm)
    pot = loadPotential(args.potential)
    traj = flowService.gradientCurve(norm, pot, np.asarray(args.x0, dtype=float), args.t_end, args.dt)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x{i}" for i in range(norm.dim)])
        for t, x in zip(traj.times, traj.states):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in x])
    logger.info(f"✅ Trajectory written: {out} ({len(traj.times)} rows)")
    return 0


def cmdSkewCheck(args) -> int:
    norm = loadNorm(args.norm)
    pot = loadPotential(args.potential)
    report = flowService.skewEstimate(norm, pot, args.pairs, args.radius, args.seed)
    x, y = report.argminPair
    fitted = flowService.contractionFit(
        norm, pot,
        pairCount=args.fit_pairs,
        tEnd=args.fit_t_end,
        dt=args.fit_dt,
        seed=args.seed,
        regionRadius=args.radius,
        seedPairs=[(np.asarray(x), np.asarray(y))],
    )
    emit({
        "inf_quotient": report.infQuotient,
        "argmin_pair": [np.asarray(x).tolist(), np.asarray(y).tolist()],
        "fitted_K": fitted,
    })
    return 0


def cmdW2(args) -> int:
    norm = loadNorm(args.norm)
    mu, nu = readDensity(args.mu), readDensity(args.nu)
    if args.method == "exact":
        plan = transportService.w2Exact(norm, mu, nu)
    else:
        plan = transportService.w2Sinkhorn(norm, mu, nu, epsFinal=args.eps_final)
    emit({"cost": plan.cost, "w2": plan.w2, "marginal_err": plan.marginalError})
    return 0


def cmdTheta(args) -> int:
    """--density is a density header or a triangle spec {"kind": "triangle", "p", "shift", "scale"}"""
    config = readJson(args.density)
    if config.get("kind") == "triangle":
        p = float(config.get("p", 4.0))
        norm = loadNorm(args.norm) if args.norm else lpNorm(p)
        rho = triangleDensity(p, float(config.get("shift", 0.0))).scaled(float(config.get("scale", 1.0)))
    else:
        if not args.norm:
            raise ConfigException("grid densities need --norm")
        norm = loadNorm(args.norm)
        rho = readDensity(args.density)
    result = transportService.thetaParts(norm, rho)
    emit({"theta": result.theta, "numerator": result.numerator, "second_moment": result.secondMoment})
    return 0


def cmdHeatRun(args) -> int:
    norm = loadNorm(args.norm)
    init = readJson(args.init)
    if "kind" in init:
        if not args.grid:
            raise ConfigException("profile initial data need --grid")
        u0 = transportService.makeDensity(loadGrid(args.grid), profileFromConfig(init, norm))
    else:
        u0 = readDensity(args.init)
        if args.grid and loadGrid(args.grid) != u0.grid:
            raise ConfigException("--grid disagrees with the initial density's grid")

    cfg = HeatConfig(
        grid=u0.grid,
        dt=args.dt,
        tEnd=args.t_end,
        scheme=args.scheme,
        snapshotStride=args.stride,
    )
    traj = heatService.heatSolve(norm, u0, cfg)

    outDir = Path(args.out_dir)
    for i, frame in enumerate(traj.frames):
        writeDensity(frame, outDir / f"frame_{i:04d}.json")
    csvPath = Path(args.csv)
    csvPath.parent.mkdir(parents=True, exist_ok=True)
    with csvPath.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SERIES_COLUMNS)
        writer.writeheader()
        for diag in traj.diagnostics:
            writer.writerow({k: repr(float(v)) for k, v in diag.toRow().items()})
    logger.info(f"✅ Heat run: {len(traj.frames)} frames in {outDir}, series in {csvPath}")
    return 0


def runExperiment(kind: str, norm: Optional[str], params: Dict[str, Any], args) -> int:
    """Experiments share one path with `run --config`, with norm paths relative to the cwd"""
    params = {k: v for k, v in params.items() if v is not None}
    config = ExperimentConfig(experiment=kind, norm=norm, params=params, seed=args.seed, out=args.out)
    record = experimentService.runLoaded(config, experimentService.resolveNorm(config.norm), writeArtifacts=True)
    print(record.model_dump_json(indent=2, exclude_none=True))
    return 0 if record.passed else 1


def cmdNoncontract(args) -> int:
    return runExperiment("noncontraction", args.norm, {
        "p": args.p, "eps": args.eps, "T": args.T, "t_max": args.t_max, "dt": args.dt,
        "shift": args.shift, "k_sweep": args.k_sweep, "scheme": args.scheme,
        "grid": readJson(args.grid) if args.grid else None,
    }, args)


def cmdTriangleSearch(args) -> int:
    return runExperiment("triangle_search", args.norm, {
        "angular_grid": args.angular_grid, "refine": not args.no_refine, "expect": args.expect,
    }, args)


def cmdStep0(args) -> int:
    return runExperiment("step0", None, {"p": args.p, "r_list": args.r_list, "eps_norm": args.eps_norm}, args)


def cmdGaussianContract(args) -> int:
    return runExperiment("gaussian_contract", args.norm, {
        "a": args.a, "b": args.b, "z": args.z, "t_max": args.t_max, "dt": args.dt,
        "analytic": args.analytic, "scheme": args.scheme,
        "grid": readJson(args.grid) if args.grid else None,
    }, args)


def cmdLift(args) -> int:
    return runExperiment("lift", args.norm, {"p": args.p, "R": args.R}, args)


def cmdRun(args) -> int:
    record = experimentService.runConfig(args.config)
    print(record.model_dump_json(indent=2, exclude_none=True))
    return 0 if record.passed else 1


# ============================================================
# PARSER
# ============================================================

def buildParser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="app.cli", description=settings.PROJECT_NAME)
    commands = parser.add_subparsers(dest="command", required=True)

    # norm info
    norm = commands.add_parser("norm", help="norm geometry").add_subparsers(dest="action", required=True)
    info = norm.add_parser("info", help="ellipticity bounds and 2-uniform constants")
    info.add_argument("--spec", required=True)
    info.add_argument("--samples", type=int, default=64)
    info.add_argument("--angular-resolution", type=int, default=64)
    info.set_defaults(handler=cmdNormInfo)

    # flow run
    flow = commands.add_parser("flow", help="gradient curves").add_subparsers(dest="action", required=True)
    flowRun = flow.add_parser("run")
    flowRun.add_argument("--norm", required=True)
    flowRun.add_argument("--potential", required=True)
    flowRun.add_argument("--x0", type=float, nargs="+", required=True)
    flowRun.add_argument("--t-end", type=float, required=True)
    flowRun.add_argument("--dt", type=float, required=True)
    flowRun.add_argument("--out", default="traj.csv")
    flowRun.set_defaults(handler=cmdFlowRun)

    # skew check
    skew = commands.add_parser("skew", help="skew convexity").add_subparsers(dest="action", required=True)
    check = skew.add_parser("check")
    check.add_argument("--norm", required=True)
    check.add_argument("--potential", required=True)
    check.add_argument("--pairs", type=int, default=1000)
    check.add_argument("--radius", type=float, default=1.0)
    check.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    check.add_argument("--fit-pairs", type=int, default=32)
    check.add_argument("--fit-t-end", type=float, default=1.0)
    check.add_argument("--fit-dt", type=float, default=1e-2)
    check.set_defaults(handler=cmdSkewCheck)

    w2 = commands.add_parser("w2", help="oriented Wasserstein-2 distance")
    w2.add_argument("--norm", required=True)
    w2.add_argument("--mu", required=True)
    w2.add_argument("--nu", required=True)
    w2.add_argument("--method", choices=["exact", "sinkhorn"], default="exact")
    w2.add_argument("--eps-final", type=float, default=None)
    w2.set_defaults(handler=cmdW2)

    theta = commands.add_parser("theta", help="Theta functional of a density")
    theta.add_argument("--norm", default=None)
    theta.add_argument("--density", required=True)
    theta.set_defaults(handler=cmdTheta)

    # heat run
    heat = commands.add_parser("heat", help="heat equation").add_subparsers(dest="action", required=True)
    heatRun = heat.add_parser("run")
    heatRun.add_argument("--norm", required=True)
    heatRun.add_argument("--init", required=True)
    heatRun.add_argument("--dt", type=float, required=True)
    heatRun.add_argument("--t-end", type=float, required=True)
    heatRun.add_argument("--grid", default=None)
    heatRun.add_argument("--scheme", choices=["explicit_flux", "semi_implicit_frozen"], default="explicit_flux")
    heatRun.add_argument("--stride", type=int, default=1)
    heatRun.add_argument("--out-dir", default="frames")
    heatRun.add_argument("--csv", default="series.csv")
    heatRun.set_defaults(handler=cmdHeatRun)

    # experiments
    def experiment(name: str, handler, needsNorm: bool = True) -> argparse.ArgumentParser:
        sub = commands.add_parser(name)
        sub.add_argument("--norm", required=needsNorm, default=None)
        sub.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
        sub.add_argument("--out", default=settings.OUTPUT_DIR)
        sub.set_defaults(handler=handler)
        return sub

    noncontract = experiment("noncontract", cmdNoncontract)
    noncontract.add_argument("--p", type=float, default=4.0)
    noncontract.add_argument("--eps", type=float, default=0.02)
    noncontract.add_argument("--T", type=float, default=2.0)
    noncontract.add_argument("--t-max", type=float, default=None)
    noncontract.add_argument("--dt", type=float, default=None)
    noncontract.add_argument("--shift", type=float, default=25.0)
    noncontract.add_argument("--k-sweep", type=float, nargs="+", default=None)
    noncontract.add_argument("--scheme", choices=["explicit_flux", "semi_implicit_frozen"], default=None)
    noncontract.add_argument("--grid", default=None)

    search = experiment("triangle-search", cmdTriangleSearch)
    search.add_argument("--angular-grid", type=int, default=48)
    search.add_argument("--no-refine", action="store_true")
    search.add_argument("--expect", choices=["non_inner_product", "consistent_with_inner_product"], default=None)

    step0 = experiment("step0", cmdStep0, needsNorm=False)
    step0.add_argument("--p", type=float, default=4.0)
    step0.add_argument("--r-list", type=float, nargs="+", default=[25.0, 50.0, 100.0])
    step0.add_argument("--eps-norm", type=float, default=0.0)

    gaussian = experiment("gaussian-contract", cmdGaussianContract)
    gaussian.add_argument("--a", type=float, default=0.25)
    gaussian.add_argument("--b", type=float, default=0.5)
    gaussian.add_argument("--z", type=float, nargs="+", default=[1.0, 0.0])
    gaussian.add_argument("--t-max", type=float, default=0.5)
    gaussian.add_argument("--dt", type=float, default=None)
    gaussian.add_argument("--analytic", action="store_true")
    gaussian.add_argument("--scheme", choices=["explicit_flux", "semi_implicit_frozen"], default=None)
    gaussian.add_argument("--grid", default=None)

    lift = experiment("lift", cmdLift, needsNorm=False)
    lift.add_argument("--p", type=float, default=4.0)
    lift.add_argument("--R", type=float, default=64.0)

    run = commands.add_parser("run", help="run the experiment a config file names")
    run.add_argument("--config", required=True)
    run.set_defaults(handler=cmdRun)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = buildParser().parse_args(argv)
    # stdout carries the JSON reports
    console_handler.setStream(sys.stderr)
    try:
        return args.handler(args)
    except LabException as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exitCode
    except ValidationError as e:
        logger.error(f"❌ Invalid parameters: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
