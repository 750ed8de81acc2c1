from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import PrivateAttr

from models.base import GraphlapModel
from models.graph import MeasuredGraph


class FormMode(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    FREE = "free"
    FULL = "full"


class FiniteForm(GraphlapModel):
    """Hermitian form matrix A on the subset U: Q(f, g) = <f, A g> (Euclidean).

    The associated operator in l2(U, mu) is D^-1 A with D = diag(mu on U).
    """
    host: MeasuredGraph
    subset: Tuple[str, ...]
    mode: FormMode
    matrix: sp.csr_matrix
    mu: np.ndarray

    _lambda0: Optional[float] = PrivateAttr(default=None)

    @property
    def size(self) -> int:
        return len(self.subset)

    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.subset)}

    def value(self, f: np.ndarray, g: Optional[np.ndarray] = None) -> complex:
        g = f if g is None else g
        return complex(np.vdot(f, self.matrix @ g))

    def norm_squared(self, f: np.ndarray) -> float:
        """Form norm ||f||_Q^2 = Q(f) + ||f||^2_mu"""
        return float(np.real(self.value(f)) + np.sum(self.mu * np.abs(f) ** 2))


class ExcessiveCertificate(GraphlapModel):
    h: List[float]
    tested_betas: List[float]
    max_violation: float
    valid: bool


class CapacityResult(GraphlapModel):
    value: float
    equilibrium: List[float]
    target: Tuple[str, ...]
    sandwich_violation: float
    verified: bool


class BoundaryCapacityResult(GraphlapModel):
    sizes: List[int]
    values: List[float]
    nonincreasing: bool


class BeurlingDenyReport(GraphlapModel):
    alphas: List[float]
    trials: int
    positivity_violation: float
    markov_violation: float
    positivity_preserving: bool
    markovian: bool


class FormComparison(GraphlapModel):
    dirichlet_value: float
    neumann_value: float
    free_value: float


class RecurrenceResult(GraphlapModel):
    levels: List[float]
    energies: List[float]
    decreasing: bool
