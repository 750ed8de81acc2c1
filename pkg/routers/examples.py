"""
Example families written to disk, optionally followed by one analysis on the result.
"""
import logging
import os
from typing import Any, Dict, Mapping, Optional, Union

from models.bundle import HermitianBundle
from models.base import GraphlapModel
from models.experiment import AnalysisName, ExampleName, ExampleParams
from models.graph import MeasuredGraph
from models.metric import BoundarySpec, EdgeLength, PseudoMetric
from routers.base import AnalysisContext, AnalysisResult, AnalysisRouter
from services.bundle_service import adjacency_bundle
from services.errors import UnknownExample
from services.generators import (
    gen_circle_packing_nerve,
    gen_comb_tree,
    gen_complete_union,
    gen_hardy_stub,
    gen_line_Z,
    hex_circle_patch,
    packing_embedding,
    z_line_boundary,
    z_line_embedding,
)
from services.metric_engine import embedding_metric, path_metric
from services.operator_engine import assemble, hardy_weight_check, spectrum
from services.serialization import save_boundary, save_bundle, save_graph, save_metric, write_json

logger = logging.getLogger(__name__)

router = AnalysisRouter(prefix="examples", tags=["examples"])

SPECTRUM_TOL = 1e-9


class EmittedExample(GraphlapModel):
    name: ExampleName
    files: Dict[str, str]
    graph: MeasuredGraph
    bundle: Optional[HermitianBundle] = None
    metric: Optional[PseudoMetric] = None
    boundary: Optional[BoundarySpec] = None
    summary: Dict[str, Any] = {}


def _z_line(params: ExampleParams) -> MeasuredGraph:
    mu_rule = params.mu_rule or ("nu_alpha" if params.alpha is not None else "uniform")
    V_rule = params.V_rule or ("half_square" if mu_rule != "uniform" else "zero")
    return gen_line_Z(params.N, mu_rule, V_rule, params.alpha if params.alpha is not None else 1.0,
                      params.mu_scale)


def _complete_union_summary(mg: MeasuredGraph, bundle: HermitianBundle, params: ExampleParams) -> Dict[str, Any]:
    """Adjacency spectrum of the union; each K_n block tops out at n - 1, not at n"""
    eigenvalues = spectrum(assemble(mg, bundle), full=True).eigenvalues
    if eigenvalues is None:
        return {}
    summary: Dict[str, Any] = {"spectrum": eigenvalues}
    if params.connect:
        return summary
    tops = [v for v in eigenvalues if v > -1.0 + SPECTRUM_TOL]
    stated = [float(n) for n in range(1, params.n_max + 1)]
    if len(tops) == len(stated):
        gap = max(abs(a - b) for a, b in zip(tops, stated))
        summary["stated_eigenvalue_discrepancy"] = {
            "block_top_computed": tops,
            "block_top_stated": stated,
            "max_gap": gap,
        }
        if gap > SPECTRUM_TOL:
            logger.warning(f"K_n blocks have top adjacency eigenvalue n-1 (computed {tops}), "
                           f"not n as stated ({stated}); reporting the computed spectrum")
    return summary


def emit_example(name: str, params: Union[ExampleParams, Mapping[str, Any], None], out_dir: str) -> EmittedExample:
    """Write graph/bundle/metric/boundary JSON for one example family into ``out_dir``"""
    try:
        family = ExampleName(name)
    except ValueError:
        raise UnknownExample(f"unknown example {name!r}; known: {[e.value for e in ExampleName]}")
    if not isinstance(params, ExampleParams):
        params = ExampleParams.model_validate({**(params or {}), "name": family.value})

    bundle = metric = boundary = None
    summary: Dict[str, Any] = {}
    if family == ExampleName.Z_LINE:
        mg = _z_line(params)
    elif family == ExampleName.Z_LINE_NU:
        mg = gen_line_Z(params.N, "nu_quartic", params.V_rule or "half_square")
        metric = embedding_metric(mg.graph, z_line_embedding(params.N, params.symmetric)).metric
        boundary = BoundarySpec(points=z_line_boundary(params.symmetric))
    elif family == ExampleName.COMPLETE_UNION:
        mg = gen_complete_union(params.n_max, params.connect)
        bundle = adjacency_bundle(mg)
        summary.update(_complete_union_summary(mg, bundle, params))
    elif family == ExampleName.CIRCLE_PACKING:
        circles = hex_circle_patch(params.rows, params.cols)
        mg = gen_circle_packing_nerve(circles)
        metric = embedding_metric(mg.graph, packing_embedding(circles)).metric
    elif family == ExampleName.HARDY_STUB:
        mg, w, subset = gen_hardy_stub(params.N)
        check = hardy_weight_check(mg, w, subset)
        summary.update({"hardy": check.is_hardy, "hardy_margin": check.margin})
    else:
        mg = gen_comb_tree(params.n)
        sigma = EdgeLength(sigma={(u, v): w for u, v, w in mg.graph.edges})
        metric = path_metric(mg.graph, sigma)

    os.makedirs(out_dir, exist_ok=True)
    files = {"graph": save_graph(os.path.join(out_dir, "graph.json"), mg)}
    if bundle is not None:
        files["bundle"] = save_bundle(os.path.join(out_dir, "bundle.json"), bundle)
    if metric is not None:
        files["metric"] = save_metric(os.path.join(out_dir, "metric.json"), metric)
    if boundary is not None:
        files["boundary"] = save_boundary(os.path.join(out_dir, "boundary.json"), boundary)
    if family == ExampleName.HARDY_STUB:
        files["weights"] = write_json(os.path.join(out_dir, "weights.json"), {"w": w, "subset": subset})
    logger.info(f"example {family.value}: {mg.graph.size} vertices, {len(mg.graph.edges)} edges")
    return EmittedExample(name=family, files=files, graph=mg, bundle=bundle, metric=metric,
                          boundary=boundary, summary=summary)


@router.analysis(AnalysisName.EXAMPLE, ExampleParams)
def example(context: AnalysisContext, params: ExampleParams) -> AnalysisResult:
    emitted = emit_example(params.name, params, os.path.join(context.out_dir, "inputs"))
    inner = params.analysis or AnalysisName.VALIDATE
    inner_params = context.app.validate_params(inner, params.inner_params())
    inner_context = context.model_copy(update={
        "analysis": inner,
        "graph": emitted.graph,
        "bundle": emitted.bundle,
        "metric": emitted.metric,
        "boundary": emitted.boundary,
    })
    result = context.app.dispatch(inner_context, inner_params)
    result.summary.update({"example": emitted.name.value, "inner_analysis": inner.value,
                           "vertices": emitted.graph.graph.size, **emitted.summary})
    result.files[:0] = [os.path.relpath(p, context.out_dir) for p in emitted.files.values()]
    return result
