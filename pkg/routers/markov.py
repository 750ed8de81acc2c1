"""
Markov uniqueness evidence: capacities, boundary capacity along an exhaustion, recurrence.
"""
import logging
from typing import Dict, Optional, Sequence, Union

import numpy as np

from config.settings import settings
from models.experiment import AnalysisName, BoundaryCapacityParams, CapacityParams, RecurrenceParams
from models.graph import MeasuredGraph
from routers.base import AnalysisContext, AnalysisResult, AnalysisRouter
from services.errors import MissingInput
from services.form_lab import (
    boundary_capacity,
    capacity,
    capacity_alt,
    capacity_bruteforce,
    excessive_check,
    excessive_function,
    neumann_form,
    recurrence_probe,
)
from services.generators import f_alpha_values
from services.graph_builder import bfs_exhaustion

logger = logging.getLogger(__name__)

router = AnalysisRouter(prefix="markov", tags=["markov"])

HSpec = Union[str, Dict[str, float]]


def resolve_h(mg: MeasuredGraph, domain: Optional[Sequence[str]], h: HSpec) -> np.ndarray:
    """Candidate 1-excessive function on the form domain, in domain order"""
    form = neumann_form(mg, mg.graph.vertices if domain is None else domain)
    if h == "auto-excessive":
        return excessive_function(form)
    if h == "one":
        return np.ones(form.size)
    missing = [v for v in form.subset if v not in h]
    if missing:
        raise MissingInput(f"h is missing values at {missing[:5]}")
    return np.array([h[v] for v in form.subset], dtype=float)


@router.analysis(AnalysisName.CAPACITY, CapacityParams)
def capacity_analysis(context: AnalysisContext, params: CapacityParams) -> AnalysisResult:
    mg = context.require_graph()
    domain = params.domain
    h = resolve_h(mg, domain, params.h)
    certificate = excessive_check(mg, mg.graph.vertices if domain is None else domain, h)
    rows = []
    worst_gap = 0.0
    sandwich = 0.0
    for k, targets in enumerate(params.targets):
        primary = capacity(mg, domain, h, targets, certificate=certificate)
        alternative = capacity_alt(mg, h, targets, domain, certificate=certificate)
        gap = abs(primary.value - alternative) / (1.0 + primary.value)
        worst_gap = max(worst_gap, gap)
        sandwich = max(sandwich, primary.sandwich_violation)
        row = {"target": k, "size": len(targets), "capacity": primary.value,
               "capacity_alt": alternative, "sandwich_violation": primary.sandwich_violation}
        if params.bruteforce:
            row["capacity_bruteforce"] = capacity_bruteforce(mg, domain, h, targets).value
        rows.append(row)
    result = AnalysisResult(
        residuals={"excessive_violation": certificate.max_violation, "capacity_gap": worst_gap,
                   "sandwich_violation": sandwich},
        verdicts={"excessive": certificate.valid, "capacity_alt_agrees": worst_gap <= 1e-8,
                  "sandwich": sandwich <= settings.inequality_tol},
        summary={"targets": len(params.targets), "h": params.h if isinstance(params.h, str) else "explicit"},
    )
    context.table("capacity.csv", rows, result)
    return result


@router.analysis(AnalysisName.BOUNDARY_CAPACITY, BoundaryCapacityParams)
def boundary_capacity_analysis(context: AnalysisContext, params: BoundaryCapacityParams) -> AnalysisResult:
    mg = context.require_graph()
    root = params.root or ("0" if "0" in mg.graph.index() else mg.graph.vertices[0])
    ex = bfs_exhaustion(mg.graph, root, params.radii)
    h = resolve_h(mg, None, params.h)
    sequence = boundary_capacity(mg, h, ex)
    first, last = sequence.values[0], sequence.values[-1]
    result = AnalysisResult(
        residuals={"final_over_first": last / first if first > 0 else 0.0},
        verdicts={"nonincreasing": sequence.nonincreasing},
        summary={"root": root, "shells": len(sequence.values), "first": first, "last": last},
    )
    context.table("boundary_capacity.csv", {"shell": np.arange(len(sequence.values)),
                                            "size": sequence.sizes, "capacity": sequence.values}, result)
    return result


def _default_f(mg: MeasuredGraph, alpha: float) -> Dict[str, float]:
    try:
        N = max(abs(int(v)) for v in mg.graph.vertices)
    except ValueError:
        raise MissingInput("recurrence needs integer vertex names for the default f, or an explicit f")
    values = f_alpha_values(N, alpha, symmetric=True)
    return {v: values[v] for v in mg.graph.vertices}


@router.analysis(AnalysisName.RECURRENCE, RecurrenceParams)
def recurrence(context: AnalysisContext, params: RecurrenceParams) -> AnalysisResult:
    mg = context.require_graph()
    f = params.f if params.f is not None else _default_f(mg, params.alpha)
    probe = recurrence_probe(mg, f, params.levels)
    first, last = probe.energies[0], probe.energies[-1]
    result = AnalysisResult(
        residuals={"final_over_first": last / first if first > 0 else 0.0},
        verdicts={"decreasing": probe.decreasing},
        summary={"levels": len(probe.levels), "first": first, "last": last, "alpha": params.alpha},
    )
    context.table("recurrence.csv", {"level": probe.levels, "energy": probe.energies}, result)
    return result
