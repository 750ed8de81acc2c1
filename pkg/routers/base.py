"""
Analysis registry. Each router groups related analyses the way the web app grouped
endpoints: handlers are registered by name together with the pydantic model that
validates their parameters.
"""
import logging
import os
from typing import Any, Callable, Dict, List, Optional, Type

from pydantic import BaseModel, Field

from models.base import GraphlapModel
from models.bundle import HermitianBundle, Section
from models.experiment import AnalysisName, AnalysisParams
from models.graph import MeasuredGraph
from models.metric import BoundarySpec, PseudoMetric
from services.errors import GraphlapError, MissingInput, UnknownAnalysis
from services.serialization import save_section, write_table

logger = logging.getLogger(__name__)


class AnalysisResult(BaseModel):
    residuals: Dict[str, Any] = Field(default_factory=dict)
    verdicts: Dict[str, bool] = Field(default_factory=dict)
    summary: Dict[str, Any] = Field(default_factory=dict)
    files: List[str] = Field(default_factory=list)

    def require(self, error_cls: Type[GraphlapError], message: Optional[str] = None) -> "AnalysisResult":
        """Raise ``error_cls`` carrying this result when any verdict failed"""
        failed = sorted(k for k, ok in self.verdicts.items() if not ok)
        if failed:
            error = error_cls(message or f"failed verdicts: {', '.join(failed)}")
            error.result = self
            raise error
        return self


class AnalysisContext(GraphlapModel):
    analysis: AnalysisName
    out_dir: str
    seed: int
    graph: Optional[MeasuredGraph] = None
    bundle: Optional[HermitianBundle] = None
    metric: Optional[PseudoMetric] = None
    boundary: Optional[BoundarySpec] = None
    app: Optional[Any] = None

    def require_graph(self) -> MeasuredGraph:
        if self.graph is None:
            raise MissingInput(f"{self.analysis.value} needs --graph")
        return self.graph

    def require_metric(self) -> PseudoMetric:
        if self.metric is None:
            raise MissingInput(f"{self.analysis.value} needs --metric")
        return self.metric

    def table(self, name: str, table, result: AnalysisResult) -> str:
        path = write_table(os.path.join(self.out_dir, name), table)
        result.files.append(os.path.basename(path))
        return path

    def section(self, name: str, f: Section, result: AnalysisResult) -> str:
        path = save_section(os.path.join(self.out_dir, name), f)
        result.files.append(os.path.basename(path))
        return path


Handler = Callable[[AnalysisContext, BaseModel], AnalysisResult]


class AnalysisRoute(GraphlapModel):
    name: AnalysisName
    params: Type[BaseModel]
    handler: Callable
    prefix: str = ""
    tags: List[str] = Field(default_factory=list)

    @property
    def path(self) -> str:
        return f"{self.prefix}/{self.name.value}" if self.prefix else self.name.value


class AnalysisRouter:
    def __init__(self, prefix: str = "", tags: Optional[List[str]] = None):
        self.prefix = prefix
        self.tags = tags or []
        self.routes: Dict[AnalysisName, AnalysisRoute] = {}

    def analysis(self, name: AnalysisName, params: Type[BaseModel] = AnalysisParams):
        def decorator(func: Handler) -> Handler:
            self.routes[name] = AnalysisRoute(name=name, params=params, handler=func,
                                              prefix=self.prefix, tags=self.tags)
            return func
        return decorator


class AnalysisApp:
    """Registry of every analysis, assembled from routers"""

    def __init__(self, title: str, version: str):
        self.title = title
        self.version = version
        self.routes: Dict[AnalysisName, AnalysisRoute] = {}

    def include_router(self, router: AnalysisRouter) -> None:
        for name, route in router.routes.items():
            if name in self.routes:
                raise ValueError(f"analysis {name.value} registered twice")
            self.routes[name] = route

    def route(self, name) -> AnalysisRoute:
        try:
            return self.routes[AnalysisName(name)]
        except (ValueError, KeyError):
            raise UnknownAnalysis(f"unknown analysis {name!r}; registered: {self.paths()}")

    def validate_params(self, name, params: Dict[str, Any]) -> BaseModel:
        return self.route(name).params.model_validate(params)

    def dispatch(self, context: AnalysisContext, params: BaseModel) -> AnalysisResult:
        route = self.route(context.analysis)
        logger.info(f"running {route.path} ({', '.join(route.tags)})")
        result = route.handler(context, params)
        result.summary["route"] = route.path
        return result

    def paths(self) -> List[str]:
        return sorted(route.path for route in self.routes.values())
