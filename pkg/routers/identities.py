"""
Identity suites and boundedness.
"""
import logging

from config.settings import settings
from models.experiment import AnalysisName, BoundedParams, GreenKatoParams
from routers.base import AnalysisContext, AnalysisResult, AnalysisRouter
from routers.structure import bundle_or_scalar
from services.errors import IdentityViolation
from services.operator_engine import boundedness_report, finiteness_profile, identity_suite

logger = logging.getLogger(__name__)

router = AnalysisRouter(prefix="identities", tags=["identities"])


@router.analysis(AnalysisName.GREEN_KATO, GreenKatoParams)
def green_kato(context: AnalysisContext, params: GreenKatoParams) -> AnalysisResult:
    report = identity_suite(params.trials, context.seed, params.max_vertices, params.max_dim)
    result = AnalysisResult(
        residuals={
            "green_max": report.green_max,
            "symmetry_max": report.symmetry_max,
            "form_operator_max": report.form_operator_max,
            "heart_max": report.heart_max,
            "kato_min": report.kato_min,
            "subsolution_max": report.subsolution_max,
        },
        verdicts={
            "green": report.green_max <= settings.identity_tol,
            "form_operator": report.form_operator_max <= settings.identity_tol,
            "heart": report.heart_max <= settings.identity_tol,
            "kato": report.kato_min >= -settings.inequality_tol,
            "subsolution": report.subsolution_max <= settings.subsolution_tol,
        },
        summary={"trials": report.trials, "seed": report.seed},
    )
    return result.require(IdentityViolation)


@router.analysis(AnalysisName.BOUNDED, BoundedParams)
def bounded(context: AnalysisContext, params: BoundedParams) -> AnalysisResult:
    mg = context.require_graph()
    report = boundedness_report(mg, bundle_or_scalar(context), trials=params.trials, seed=context.seed)
    result = AnalysisResult(
        residuals={"heart_residual": report.heart_residual},
        verdicts={"heart": report.heart_residual <= settings.identity_tol},
        summary={
            "B_max": report.B_max,
            "lambda_min": report.spectrum.lambda_min,
            "lambda_max": report.spectrum.lambda_max,
            "flipped_lambda_min": report.flipped_spectrum.lambda_min,
            "flipped_lambda_max": report.flipped_spectrum.lambda_max,
        },
    )
    profile = finiteness_profile(mg)
    context.table("boundedness.csv", {
        "vertex": list(mg.graph.vertices),
        "B": [report.B[v] for v in mg.graph.vertices],
        "finiteness": profile,
    }, result)
    return result
