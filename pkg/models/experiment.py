import os
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from config.settings import settings
from models.base import GraphlapModel


class AnalysisName(str, Enum):
    VALIDATE = "validate"
    ASSEMBLE = "assemble"
    SPECTRUM = "spectrum"
    GREEN_KATO = "green-kato"
    BOUNDED = "bounded"
    CRITERION_MEASURE = "criterion-measure"
    CRITERION_METRIC = "criterion-metric"
    CAPACITY = "capacity"
    BOUNDARY_CAPACITY = "boundary-capacity"
    RECURRENCE = "recurrence"
    EXAMPLE = "example"


class ExampleName(str, Enum):
    Z_LINE = "z-line"
    Z_LINE_NU = "z-line-nu"
    COMPLETE_UNION = "complete-union"
    CIRCLE_PACKING = "circle-packing"
    HARDY_STUB = "hardy-stub"
    COMB_TREE = "comb-tree"


class ExperimentConfig(GraphlapModel):
    """One batch invocation: input files, one analysis, its parameters and an output directory"""
    analysis: AnalysisName
    graph: Optional[str] = None
    bundle: Optional[str] = None
    metric: Optional[str] = None
    boundary: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    output: str = Field(default_factory=lambda: settings.output_dir)
    seed: int = Field(default_factory=lambda: settings.default_seed)

    @field_validator("graph", "bundle", "metric", "boundary")
    @classmethod
    def input_exists(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and not os.path.isfile(v):
            raise ValueError(f"input file not found: {v}")
        return v


class AnalysisParams(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ValidateParams(AnalysisParams):
    pass


class AssembleParams(AnalysisParams):
    write_entries: bool = True


class SpectrumParams(AnalysisParams):
    full: bool = True
    write_ground: bool = True


class GreenKatoParams(AnalysisParams):
    trials: int = Field(default=100, ge=1)
    max_vertices: int = Field(default=50, ge=2)
    max_dim: int = Field(default=3, ge=1)


class BoundedParams(AnalysisParams):
    trials: int = Field(default=20, ge=1)


class CriterionMeasureParams(AnalysisParams):
    shift: float = 0.0
    path: Optional[List[str]] = None
    N: Optional[int] = Field(default=None, ge=1)


class CriterionMetricParams(AnalysisParams):
    core: List[str] = Field(default_factory=list)


class CapacityParams(AnalysisParams):
    targets: List[List[str]]
    domain: Optional[List[str]] = None
    h: Union[Literal["auto-excessive", "one"], Dict[str, float]] = "auto-excessive"
    bruteforce: bool = False


class BoundaryCapacityParams(AnalysisParams):
    root: Optional[str] = None
    radii: Optional[List[int]] = None
    h: Union[Literal["auto-excessive", "one"], Dict[str, float]] = "auto-excessive"


class RecurrenceParams(AnalysisParams):
    alpha: float = Field(default=0.75, gt=0)
    levels: Optional[List[float]] = None
    f: Optional[Dict[str, float]] = None


class ExampleParams(BaseModel):
    """Family parameters; anything not listed here is handed to the inner analysis"""
    model_config = ConfigDict(extra="allow")

    name: str
    analysis: Optional[AnalysisName] = None
    N: int = Field(default=50, ge=1)
    alpha: Optional[float] = None
    mu_rule: Optional[str] = None
    V_rule: Optional[str] = None
    mu_scale: float = Field(default=1.0, gt=0)
    n_max: int = Field(default=3, ge=1)
    connect: bool = False
    rows: int = Field(default=3, ge=1)
    cols: int = Field(default=3, ge=1)
    n: int = Field(default=10, ge=1)
    symmetric: bool = False

    @field_validator("analysis")
    @classmethod
    def not_nested(cls, v: Optional[AnalysisName]) -> Optional[AnalysisName]:
        if v == AnalysisName.EXAMPLE:
            raise ValueError("example runs cannot nest another example")
        return v

    def inner_params(self) -> Dict[str, Any]:
        return dict(self.model_extra or {})

