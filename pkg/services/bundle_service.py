"""
Hermitian bundles over finite graphs: scalar magnetic fields, random bundles,
connection validation and fiber spectra.
"""
import logging
from typing import Dict, List, Mapping, Optional

import numpy as np

from config.settings import settings
from models.bundle import FiberLayout, HermitianBundle, ScalarField
from models.graph import MeasuredGraph, WeightedGraph
from services.errors import AsymmetricTheta, DimensionMismatch, NonHermitian
from services.graph_builder import VertexFunction, as_vertex_array

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


def fiber_layout(g: WeightedGraph, bundle: HermitianBundle) -> FiberLayout:
    missing = [v for v in g.vertices if v not in bundle.dim]
    if missing:
        raise DimensionMismatch(f"bundle has no fiber at {missing[:5]}")
    return FiberLayout(vertices=g.vertices, dims=tuple(int(bundle.dim[v]) for v in g.vertices))


def uniform_field(g: WeightedGraph, theta: float) -> ScalarField:
    """theta on every stored orientation (u, v) and -theta on (v, u)"""
    field = {}
    for u, v, _ in g.edges:
        field[(u, v)] = float(theta) % TWO_PI
        field[(v, u)] = float(-theta) % TWO_PI
    return ScalarField(theta=field)


def _angle_gap(a: float, b: float) -> float:
    gap = (a + b) % TWO_PI
    return min(gap, TWO_PI - gap)


def scalar_to_bundle(g: WeightedGraph, theta: Optional[ScalarField], V: VertexFunction) -> HermitianBundle:
    """Scalar magnetic bundle: dim 1, W_x = [V(x)], Phi_{x,y} = [exp(i theta(x,y))]"""
    values = as_vertex_array(g, V, "V")
    field = theta.theta if theta is not None else {}
    Phi = {}
    for u, v, _ in g.edges:
        forward, backward = field.get((u, v)), field.get((v, u))
        if forward is None and backward is None:
            forward = backward = 0.0
        elif forward is None:
            forward = (-backward) % TWO_PI
        elif backward is None:
            backward = (-forward) % TWO_PI
        if _angle_gap(forward, backward) > settings.hermitian_tol:
            raise AsymmetricTheta(f"theta({u},{v}) = {forward} but theta({v},{u}) = {backward}")
        Phi[(u, v)] = np.array([[np.exp(1j * forward)]])
        Phi[(v, u)] = np.array([[np.exp(1j * backward)]])
    return HermitianBundle(
        dim={v: 1 for v in g.vertices},
        W={v: np.array([[complex(values[i])]]) for i, v in enumerate(g.vertices)},
        Phi=Phi,
    )


def flip_connection(bundle: HermitianBundle) -> HermitianBundle:
    """Sign-flipped connection -Phi with the same endomorphism"""
    return HermitianBundle(dim=dict(bundle.dim), W=dict(bundle.W),
                           Phi={edge: -m for edge, m in bundle.Phi.items()})


def adjacency_bundle(mg: MeasuredGraph) -> HermitianBundle:
    """theta = -pi and W = -Deg: the magnetic operator then acts as mu^-1 times the adjacency"""
    deg = mg.graph.degrees() / mg.mu_vector()
    return scalar_to_bundle(mg.graph, uniform_field(mg.graph, -np.pi), -deg)


def _hermitian_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def w_min(bundle: HermitianBundle) -> Dict[str, float]:
    """Smallest eigenvalue of every W_x"""
    result = {}
    for v, W in bundle.W.items():
        if _hermitian_defect(W) > settings.hermitian_tol:
            raise NonHermitian(f"W at vertex {v} is not Hermitian")
        result[v] = float(np.linalg.eigvalsh(W)[0])
    return result


def w_min_vector(g: WeightedGraph, bundle: HermitianBundle) -> np.ndarray:
    values = w_min(bundle)
    return np.array([values[v] for v in g.vertices])


def validate_connection(bundle: HermitianBundle, g: Optional[WeightedGraph] = None) -> List[str]:
    """Report every violated bundle invariant; an empty list means the bundle is valid"""
    tol = settings.hermitian_tol
    violations: List[str] = []
    for v, W in bundle.W.items():
        d = bundle.dim.get(v)
        if d is None or W.shape != (d, d):
            violations.append(f"DimensionMismatch: W at {v} has shape {W.shape}, dim {d}")
        elif _hermitian_defect(W) > tol:
            violations.append(f"NonHermitian: W at {v}")
    for v in bundle.dim:
        if v not in bundle.W:
            violations.append(f"DimensionMismatch: no endomorphism at {v}")
    for (x, y), P in sorted(bundle.Phi.items()):
        dx, dy = bundle.dim.get(x), bundle.dim.get(y)
        if P.shape != (dx, dy):
            violations.append(f"DimensionMismatch: Phi {x}->{y} has shape {P.shape}, fibers ({dx}, {dy})")
            continue
        if dx != dy:
            violations.append(f"NotUnitary: Phi {x}->{y} is rectangular")
            continue
        if np.max(np.abs(P.conj().T @ P - np.eye(dx))) > tol:
            violations.append(f"NotUnitary: Phi {x}->{y}")
        reverse = bundle.Phi.get((y, x))
        if reverse is None:
            violations.append(f"MissingReverse: Phi {y}->{x}")
        elif reverse.shape != (dy, dx) or np.max(np.abs(P @ reverse - np.eye(dx))) > tol:
            violations.append(f"InverseMismatch: Phi {x}->{y}")
    if g is not None:
        edges = set()
        for u, v, _ in g.edges:
            edges.update({(u, v), (v, u)})
        for edge in sorted(edges - set(bundle.Phi)):
            violations.append(f"MissingConnection: Phi {edge[0]}->{edge[1]}")
        for edge in sorted(set(bundle.Phi) - edges):
            violations.append(f"ConnectionOffGraph: Phi {edge[0]}->{edge[1]}")
    return violations


def _random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_bundle(g: WeightedGraph, dim: int, seed: Optional[int] = None,
                  dims: Optional[Mapping[str, int]] = None) -> HermitianBundle:
    """Reproducible random bundle: Gaussian Hermitian W and QR unitaries with Phi_{y,x} = Phi_{x,y}^*"""
    if dim < 1:
        raise DimensionMismatch(f"fiber dimension must be positive, got {dim}")
    rng = np.random.default_rng(settings.default_seed if seed is None else seed)
    fiber = {v: int(dims[v]) if dims else dim for v in g.vertices}
    W = {}
    for v in g.vertices:
        d = fiber[v]
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        W[v] = (a + a.conj().T) / 2.0
    Phi = {}
    for u, v, _ in g.edges:
        if fiber[u] != fiber[v]:
            raise DimensionMismatch(f"fibers at {u} and {v} differ; rectangular connections are rejected")
        U = _random_unitary(rng, fiber[u])
        Phi[(u, v)] = U
        Phi[(v, u)] = U.conj().T
    return HermitianBundle(dim=fiber, W=W, Phi=Phi)


def random_scalar_bundle(g: WeightedGraph, rng: np.random.Generator, V: VertexFunction) -> HermitianBundle:
    theta = {}
    for u, v, _ in g.edges:
        angle = float(rng.uniform(0.0, TWO_PI))
        theta[(u, v)] = angle
        theta[(v, u)] = (-angle) % TWO_PI
    return scalar_to_bundle(g, ScalarField(theta=theta), V)
