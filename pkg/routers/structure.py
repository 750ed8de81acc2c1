"""
Structural analyses: input validation, operator assembly and spectra.
"""
import logging

import numpy as np
import scipy.sparse as sp

from config.settings import settings
from models.bundle import HermitianBundle
from models.experiment import AnalysisName, AssembleParams, SpectrumParams, ValidateParams
from models.graph import MeasuredGraph
from routers.base import AnalysisContext, AnalysisResult, AnalysisRouter
from services.bundle_service import scalar_to_bundle, validate_connection
from services.errors import ValidationFailure
from services.graph_builder import connected_components
from services.metric_engine import metric_violations
from services.operator_engine import assemble, ground_section, lambda0_estimate, spectrum

logger = logging.getLogger(__name__)

router = AnalysisRouter(prefix="structure", tags=["structure"])


def bundle_or_scalar(context: AnalysisContext) -> HermitianBundle:
    """The supplied bundle, or the plain scalar operator (theta = 0, W = V)"""
    mg = context.require_graph()
    if context.bundle is not None:
        return context.bundle
    return scalar_to_bundle(mg.graph, None, mg.V)


def _graph_summary(mg: MeasuredGraph) -> dict:
    count, _ = connected_components(mg.graph)
    deg = mg.graph.degrees()
    return {
        "name": mg.name,
        "vertices": mg.graph.size,
        "edges": len(mg.graph.edges),
        "components": count,
        "max_degree": float(deg.max()) if deg.size else 0.0,
        "mu_min": float(mg.mu_vector().min()),
        "mu_max": float(mg.mu_vector().max()),
    }


@router.analysis(AnalysisName.VALIDATE, ValidateParams)
def validate(context: AnalysisContext, params: ValidateParams) -> AnalysisResult:
    """Graph checks happen while loading; bundle and metric checks are collected here"""
    mg = context.require_graph()
    violations = []
    if context.bundle is not None:
        violations += validate_connection(context.bundle, mg.graph)
    if context.metric is not None:
        violations += metric_violations(context.metric)
    result = AnalysisResult(summary={**_graph_summary(mg), "violations": violations})
    result.residuals["violation_count"] = len(violations)
    result.verdicts["valid"] = not violations
    if violations:
        context.table("violations.csv", {"violation": violations}, result)
    return result.require(ValidationFailure, f"{len(violations)} violations, first: {violations[:1]}")


@router.analysis(AnalysisName.ASSEMBLE, AssembleParams)
def assemble_operator(context: AnalysisContext, params: AssembleParams) -> AnalysisResult:
    mg = context.require_graph()
    op = assemble(mg, bundle_or_scalar(context))
    matrix = sp.coo_matrix(op.matrix)
    defect = abs(matrix - matrix.conj().T).max() if matrix.nnz else 0.0
    result = AnalysisResult(
        residuals={"hermitian_defect": float(defect)},
        verdicts={"hermitian": float(defect) <= settings.hermitian_tol},
        summary={"size": op.size, "nnz": int(matrix.nnz), "storage": "sparse" if sp.issparse(op.matrix) else "dense"},
    )
    if params.write_entries:
        context.table("operator.csv", {
            "row": matrix.row, "col": matrix.col,
            "re": np.real(matrix.data), "im": np.imag(matrix.data),
        }, result)
    return result


@router.analysis(AnalysisName.SPECTRUM, SpectrumParams)
def spectrum_analysis(context: AnalysisContext, params: SpectrumParams) -> AnalysisResult:
    mg = context.require_graph()
    op = assemble(mg, bundle_or_scalar(context))
    summary = spectrum(op, full=params.full)
    result = AnalysisResult(summary={"size": op.size, "lambda_min": summary.lambda_min,
                                     "lambda_max": summary.lambda_max,
                                     "lambda0": lambda0_estimate(op)})
    if summary.eigenvalues is not None:
        context.table("spectrum.csv", {"index": np.arange(len(summary.eigenvalues)),
                                       "eigenvalue": summary.eigenvalues}, result)
    if params.write_ground:
        value, section = ground_section(op)
        result.summary["ground_eigenvalue"] = value
        context.section("ground_section.json", section, result)
    return result
