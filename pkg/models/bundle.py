from typing import Dict, Tuple

import numpy as np

from models.base import GraphlapModel


class HermitianBundle(GraphlapModel):
    """Fiber dimensions, Hermitian endomorphisms W_x and unitary connection maps Phi_{x,y}.

    Phi is stored for both orientations of every edge; consistency
    (Phi_{x,y} = Phi_{y,x}^-1) is checked by the validator, never derived.
    """
    dim: Dict[str, int]
    W: Dict[str, np.ndarray]
    Phi: Dict[Tuple[str, str], np.ndarray]


class ScalarField(GraphlapModel):
    """Magnetic phase theta(x,y) in [0, 2pi) on ordered edges"""
    theta: Dict[Tuple[str, str], float]


class FiberLayout(GraphlapModel):
    """Position of every fiber inside the flat direct-sum vector"""
    vertices: Tuple[str, ...]
    dims: Tuple[int, ...]

    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.dims)]).astype(int)

    def block(self, i: int) -> slice:
        offsets = self.offsets()
        return slice(int(offsets[i]), int(offsets[i + 1]))

    @property
    def size(self) -> int:
        return int(sum(self.dims))

    def expand(self, values: np.ndarray) -> np.ndarray:
        """Repeat one value per vertex across that vertex's fiber"""
        return np.repeat(np.asarray(values), self.dims)

    def fiber_norms(self, flat: np.ndarray) -> np.ndarray:
        offsets = self.offsets()
        return np.array([np.linalg.norm(flat[offsets[i]:offsets[i + 1]])
                         for i in range(len(self.vertices))])


class Section(GraphlapModel):
    """One complex vector per vertex, sized by the fiber dimension"""
    values: Dict[str, np.ndarray]

    def to_array(self, layout: FiberLayout) -> np.ndarray:
        flat = np.zeros(layout.size, dtype=complex)
        for i, v in enumerate(layout.vertices):
            flat[layout.block(i)] = self.values[v]
        return flat

    @classmethod
    def from_array(cls, layout: FiberLayout, flat: np.ndarray) -> "Section":
        flat = np.asarray(flat, dtype=complex)
        return cls(values={v: flat[layout.block(i)].copy()
                           for i, v in enumerate(layout.vertices)})
