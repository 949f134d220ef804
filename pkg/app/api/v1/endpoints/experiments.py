"""
Experiment Endpoints
"""
from fastapi import APIRouter

from app.modules.experiments import experimentService
from app.schemas import ExperimentRunRequest, ExperimentRunResponse

router = APIRouter()


@router.post("/run", response_model=ExperimentRunResponse)
def runExperiment(request: ExperimentRunRequest):
    """
    Run one experiment from an inline config

    Norm paths in the config resolve against the working directory.
    Artifacts are written to config.out only when writeArtifacts is true.
    """
    norm = experimentService.resolveNorm(request.config.norm)
    record = experimentService.runLoaded(request.config, norm, writeArtifacts=request.write_artifacts)
    return ExperimentRunResponse(report=record, exit_code=0 if record.passed else 1)
