from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from models.base import GraphlapModel


class MetricKind(str, Enum):
    TABLE = "table"
    PATH = "path"
    EMBEDDING = "embedding"


class EdgeLength(GraphlapModel):
    """Edge lengths keyed by the stored orientation (u, v) of each graph edge"""
    sigma: Dict[Tuple[str, str], float]

    def get(self, x: str, y: str) -> float:
        if (x, y) in self.sigma:
            return self.sigma[(x, y)]
        return self.sigma[(y, x)]


class PseudoMetric(GraphlapModel):
    """Pseudo metric on a finite vertex set, always materialized as a distance table"""
    kind: MetricKind
    vertices: Tuple[str, ...]
    table: np.ndarray
    sigma: Optional[EdgeLength] = None
    iota: Optional[Dict[str, Tuple[float, ...]]] = None

    def index(self) -> Dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def distance(self, x: str, y: str) -> float:
        idx = self.index()
        return float(self.table[idx[x], idx[y]])


class BoundarySpec(GraphlapModel):
    """Accumulation points (embedding kind) or explicit distances to the boundary"""
    points: List[Tuple[float, ...]] = []
    distances: Optional[Dict[str, float]] = None

    @property
    def is_empty(self) -> bool:
        return not self.points and not self.distances


class BallResult(GraphlapModel):
    center: str
    radius: float
    vertices: Tuple[str, ...]
    saturated: bool


class InducedMetric(GraphlapModel):
    """Metric induced by a map into R^n together with its smallest intrinsic weight"""
    metric: PseudoMetric
    mu: np.ndarray
    total_mass: float
    double_energy: float
