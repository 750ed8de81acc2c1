from .graph import Exhaustion, MeasuredGraph, Path, WeightedGraph
from .bundle import FiberLayout, HermitianBundle, ScalarField, Section
from .operator import AssembledOperator, BoundednessReport, FormValue, SpectrumSummary
from .metric import BoundarySpec, EdgeLength, InducedMetric, MetricKind, PseudoMetric
from .form import CapacityResult, ExcessiveCertificate, FiniteForm, FormMode
from .experiment import AnalysisName, ExperimentConfig
