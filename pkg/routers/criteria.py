"""
Self-adjointness criteria: partial sums along a path and the metric slack.
"""
import logging
from typing import List

import numpy as np

from config.settings import settings
from models.experiment import AnalysisName, CriterionMeasureParams, CriterionMetricParams
from models.graph import MeasuredGraph
from models.metric import BoundarySpec
from routers.base import AnalysisContext, AnalysisResult, AnalysisRouter
from services.bundle_service import w_min_vector
from services.errors import MissingInput
from services.form_lab import measure_criterion_partial_sums
from services.metric_engine import boundary_distance, core_reference, intrinsic_slack, metric_criterion_slack

logger = logging.getLogger(__name__)

router = AnalysisRouter(prefix="criteria", tags=["criteria"])


def default_ray(mg: MeasuredGraph) -> List[str]:
    """0, 1, 2, ... as far as the vertex names go"""
    present = set(mg.graph.vertices)
    ray = []
    k = 0
    while str(k) in present:
        ray.append(str(k))
        k += 1
    if len(ray) < 2:
        raise MissingInput("no default ray 0, 1, 2, ... in this graph; pass --path")
    return ray


def _w_min(context: AnalysisContext) -> np.ndarray:
    mg = context.require_graph()
    if context.bundle is not None:
        return w_min_vector(mg.graph, context.bundle)
    return mg.V_vector()


@router.analysis(AnalysisName.CRITERION_MEASURE, CriterionMeasureParams)
def criterion_measure(context: AnalysisContext, params: CriterionMeasureParams) -> AnalysisResult:
    mg = context.require_graph()
    path = params.path or default_ray(mg)
    N = params.N or len(path) - 1
    sums = measure_criterion_partial_sums(mg, _w_min(context), params.shift, path, N)
    tail = float(sums[-1] - sums[N // 2 - 1]) if N >= 2 else float(sums[-1])
    result = AnalysisResult(
        residuals={"tail_increment": tail},
        verdicts={"bounded": tail <= 1e-3 * max(1.0, float(sums[-1]))},
        summary={"N": N, "shift": params.shift, "S_N": float(sums[-1]), "path_start": path[0]},
    )
    context.table("partial_sums.csv", {"n": np.arange(1, N + 1), "S_n": sums}, result)
    return result


@router.analysis(AnalysisName.CRITERION_METRIC, CriterionMetricParams)
def criterion_metric(context: AnalysisContext, params: CriterionMetricParams) -> AnalysisResult:
    mg = context.require_graph()
    rho = context.require_metric()
    spec = context.boundary or BoundarySpec()
    idx = rho.index()
    D_rho = boundary_distance(rho, spec)
    D = np.array([D_rho[idx[v]] for v in mg.graph.vertices])
    w = _w_min(context)
    V_ref = core_reference(mg, w, D, params.core) if params.core else np.zeros(mg.graph.size)
    slack = metric_criterion_slack(mg, w, D, V_ref)
    intrinsic = intrinsic_slack(mg, rho)
    worst = float(slack.min())
    result = AnalysisResult(
        residuals={"slack_min": worst, "intrinsic_slack_min": float(min(intrinsic.values()))},
        verdicts={
            "criterion": worst >= -1e-12,
            "intrinsic": min(intrinsic.values()) >= -settings.inequality_tol,
        },
        summary={"boundary_points": len(spec.points), "core": list(params.core),
                 "finite_distances": int(np.isfinite(D).sum())},
    )
    context.table("metric_slack.csv", {
        "vertex": list(mg.graph.vertices),
        "D": D,
        "w_min": w,
        "V_ref": V_ref,
        "slack": slack,
        "intrinsic_slack": [intrinsic[v] for v in mg.graph.vertices],
    }, result)
    return result
