"""
Experiment Schemas
Config files for `run --config` and the JSON reports they produce
"""
from pydantic import BaseModel, Field
from typing import Any, Dict, List, Literal, Optional, Union

from app.schemas.common import CamelModel
from app.schemas.norm import NormSpecConfig

ExperimentKind = Literal["triangle_search", "step0", "noncontraction", "gaussian_contract", "lift"]


class GridConfig(BaseModel):
    lo: List[float]
    hi: List[float]
    m: List[int]


class ExperimentConfig(BaseModel):
    """
    {experiment, norm, params, seed, out}

    norm is either an inline spec or a path to a norm JSON file,
    resolved against the config file's directory.
    """
    experiment: ExperimentKind
    norm: Optional[Union[NormSpecConfig, str]] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    seed: int = 0
    out: str = "out"


class ReportRecord(BaseModel):
    """Deterministic report; wall_time only when REPORT_INCLUDE_TIMING is set"""
    experiment: str
    passed: bool
    seed: int = 0
    config: Dict[str, Any] = Field(default_factory=dict)
    results: Dict[str, Any] = Field(default_factory=dict)
    flags: Dict[str, Any] = Field(default_factory=dict)
    artifacts: List[str] = Field(default_factory=list)
    wall_time: Optional[float] = None


class ExperimentRunRequest(CamelModel):
    config: ExperimentConfig
    write_artifacts: bool = False


class ExperimentRunResponse(CamelModel):
    report: ReportRecord
    exit_code: int
