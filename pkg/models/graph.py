from typing import Dict, List, Optional, Tuple

import numpy as np

from models.base import GraphlapModel

Edge = Tuple[str, str, float]


class WeightedGraph(GraphlapModel):
    """Finite weighted graph; each unordered pair is stored once with a positive weight"""
    vertices: Tuple[str, ...]
    edges: Tuple[Edge, ...] = ()

    def index(self) -> Dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def weight_map(self) -> Dict[Tuple[str, str], float]:
        """Weights keyed by both orientations of every edge"""
        weights: Dict[Tuple[str, str], float] = {}
        for u, v, w in self.edges:
            weights[(u, v)] = w
            weights[(v, u)] = w
        return weights

    def weight(self, x: str, y: str) -> float:
        for u, v, w in self.edges:
            if (u, v) == (x, y) or (u, v) == (y, x):
                return w
        return 0.0

    def neighbors(self) -> Dict[str, List[Tuple[str, float]]]:
        adjacency: Dict[str, List[Tuple[str, float]]] = {v: [] for v in self.vertices}
        for u, v, w in self.edges:
            adjacency[u].append((v, w))
            adjacency[v].append((u, w))
        return adjacency

    def degrees(self) -> np.ndarray:
        idx = self.index()
        deg = np.zeros(len(self.vertices))
        for u, v, w in self.edges:
            deg[idx[u]] += w
            deg[idx[v]] += w
        return deg

    @property
    def size(self) -> int:
        return len(self.vertices)


class MeasuredGraph(GraphlapModel):
    """Weighted graph with a strictly positive measure and a real potential.

    ``frontier`` lists the vertices where a finite section of an infinite family
    was cut off; balls touching it are flagged as saturated.
    """
    graph: WeightedGraph
    mu: Dict[str, float]
    V: Dict[str, float]
    frontier: Tuple[str, ...] = ()
    name: Optional[str] = None

    @property
    def vertices(self) -> Tuple[str, ...]:
        return self.graph.vertices

    def mu_vector(self) -> np.ndarray:
        return np.array([self.mu[v] for v in self.graph.vertices], dtype=float)

    def V_vector(self) -> np.ndarray:
        return np.array([self.V[v] for v in self.graph.vertices], dtype=float)


class Path(GraphlapModel):
    vertices: Tuple[str, ...]


class Exhaustion(GraphlapModel):
    """Nested finite vertex sets K_1 <= K_2 <= ..."""
    sets: Tuple[Tuple[str, ...], ...]
    seed: Optional[str] = None
