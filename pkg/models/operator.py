from typing import Dict, List, Optional, Union

import numpy as np
import scipy.sparse as sp

from models.base import GraphlapModel
from models.bundle import FiberLayout


class AssembledOperator(GraphlapModel):
    """Finite section of the magnetic operator on the direct sum of fibers.

    ``matrix`` holds the similarity-symmetrized D^1/2 M D^-1/2 (D = diag(mu) repeated
    over fibers), which is Hermitian in the Euclidean sense. ``weights`` is the
    diagonal of D.
    """
    layout: FiberLayout
    matrix: Union[np.ndarray, sp.csr_matrix]
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.layout.size

    def dense(self) -> np.ndarray:
        if sp.issparse(self.matrix):
            return self.matrix.toarray()
        return np.asarray(self.matrix)

    def matvec(self, f: np.ndarray) -> np.ndarray:
        """Action of M itself (not the symmetrized matrix) on a flat section"""
        root = np.sqrt(self.weights)
        return (self.matrix @ (root * f)) / root


class FormValue(GraphlapModel):
    real: float
    imag: float
    kinetic: Optional[float] = None
    endomorphism: Optional[float] = None

    @property
    def value(self) -> complex:
        return complex(self.real, self.imag)


class GreenResidual(GraphlapModel):
    value: float
    symmetry: float
    scale: float


class SpectrumSummary(GraphlapModel):
    lambda_min: float
    lambda_max: float
    eigenvalues: Optional[List[float]] = None


class BoundednessReport(GraphlapModel):
    B: Dict[str, float]
    B_max: float
    spectrum: SpectrumSummary
    flipped_spectrum: SpectrumSummary
    heart_residual: float
    trials: int


class SubsolutionReport(GraphlapModel):
    eigenpairs: int
    max_violation: float
    passed: bool


class ResolventTable(GraphlapModel):
    levels: List[int]
    values: List[List[float]]
    max_decrease: float
    monotone: bool


class HardyCheck(GraphlapModel):
    is_hardy: bool
    margin: float


class IdentitySuiteReport(GraphlapModel):
    trials: int
    seed: int
    green_max: float
    symmetry_max: float
    kato_min: float
    heart_max: float
    subsolution_max: float
    form_operator_max: float
