"""
Construction and validation of weighted graphs, measured graphs, paths and exhaustions.
"""
import logging
from typing import Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components as cs_components, shortest_path

from config.settings import settings
from models.graph import Exhaustion, MeasuredGraph, Path, WeightedGraph
from services.errors import (
    BadParameter,
    DimensionMismatch,
    DuplicateEdge,
    InvalidExhaustion,
    NegativeFunction,
    NonPositiveWeight,
    SelfLoop,
    UnknownVertex,
)

logger = logging.getLogger(__name__)

VertexFunction = Union[Mapping[str, float], Sequence[float], np.ndarray]


def build_graph(vertices: Iterable, edges: Iterable) -> WeightedGraph:
    """Validate a vertex list and an edge list (u, v, b) into a WeightedGraph"""
    vertex_ids = tuple(str(v) for v in vertices)
    if len(set(vertex_ids)) != len(vertex_ids):
        raise BadParameter("vertex list contains duplicates")
    known = set(vertex_ids)
    seen: Set[frozenset] = set()
    stored: List[Tuple[str, str, float]] = []
    for edge in edges:
        u, v, w = str(edge[0]), str(edge[1]), float(edge[2])
        for endpoint in (u, v):
            if endpoint not in known:
                raise UnknownVertex(f"edge ({u}, {v}) references unknown vertex {endpoint}")
        if u == v:
            raise SelfLoop(f"self-loop at vertex {u}")
        if not np.isfinite(w) or w < settings.min_edge_weight:
            raise NonPositiveWeight(f"edge ({u}, {v}) has weight {w}")
        pair = frozenset((u, v))
        if pair in seen:
            raise DuplicateEdge(f"edge ({u}, {v}) is listed twice")
        seen.add(pair)
        stored.append((u, v, w))
    return WeightedGraph(vertices=vertex_ids, edges=tuple(stored))


def build_measured_graph(
    graph: WeightedGraph,
    mu: Optional[Mapping] = None,
    V: Optional[Mapping] = None,
    frontier: Iterable = (),
    name: Optional[str] = None,
) -> MeasuredGraph:
    """Attach a measure (default counting) and a potential (default zero) to a graph"""
    mu = {str(k): float(x) for k, x in (mu or {}).items()}
    V = {str(k): float(x) for k, x in (V or {}).items()}
    for key in set(mu) | set(V):
        if key not in graph.vertices:
            raise UnknownVertex(f"measure or potential given on unknown vertex {key}")
    measure = {v: mu.get(v, 1.0) for v in graph.vertices}
    potential = {v: V.get(v, 0.0) for v in graph.vertices}
    for v, m in measure.items():
        if not np.isfinite(m) or m <= 0:
            raise BadParameter(f"measure must be strictly positive, got mu({v}) = {m}")
    for v, p in potential.items():
        if not np.isfinite(p):
            raise BadParameter(f"potential must be finite, got V({v}) = {p}")
    frontier_ids = tuple(str(v) for v in frontier)
    for v in frontier_ids:
        if v not in measure:
            raise UnknownVertex(f"frontier vertex {v} is not a vertex")
    return MeasuredGraph(graph=graph, mu=measure, V=potential, frontier=frontier_ids, name=name)


def as_vertex_array(g: WeightedGraph, f: VertexFunction, name: str = "function") -> np.ndarray:
    """Vertex function as an array in the graph's vertex order"""
    if isinstance(f, Mapping):
        missing = [v for v in g.vertices if v not in f and _int_key(v) not in f]
        if missing:
            raise DimensionMismatch(f"{name} is undefined on {missing[:5]}")
        return np.array([f[v] if v in f else f[_int_key(v)] for v in g.vertices])
    values = np.asarray(f)
    if values.shape != (g.size,):
        raise DimensionMismatch(f"{name} has shape {values.shape}, expected ({g.size},)")
    return values


def _int_key(v: str):
    try:
        return int(v)
    except ValueError:
        return v


def adjacency_matrix(g: WeightedGraph) -> sp.csr_matrix:
    """Symmetric weight matrix b(x, y) in CSR layout"""
    n = g.size
    if not g.edges:
        return sp.csr_matrix((n, n))
    idx = g.index()
    rows = np.array([idx[u] for u, _, _ in g.edges])
    cols = np.array([idx[v] for _, v, _ in g.edges])
    weights = np.array([w for _, _, w in g.edges])
    upper = sp.coo_matrix((weights, (rows, cols)), shape=(n, n))
    return (upper + upper.T).tocsr()


def laplacian_matrix(g: WeightedGraph) -> sp.csr_matrix:
    """Form matrix of the unweighted energy: diag(deg) - b"""
    return (sp.diags(g.degrees()) - adjacency_matrix(g)).tocsr()


def degree(g: WeightedGraph, x) -> float:
    x = str(x)
    if x not in g.vertices:
        raise UnknownVertex(f"unknown vertex {x}")
    return float(sum(w for u, v, w in g.edges if x in (u, v)))


def combinatorial_neighborhood(g: WeightedGraph, U: Iterable) -> Set[str]:
    subset = {str(x) for x in U}
    unknown = subset - set(g.vertices)
    if unknown:
        raise UnknownVertex(f"unknown vertices {sorted(unknown)}")
    result = set(subset)
    for u, v, _ in g.edges:
        if u in subset:
            result.add(v)
        if v in subset:
            result.add(u)
    return result


def validate_path(g: WeightedGraph, p: Union[Path, Sequence]) -> bool:
    vertices = p.vertices if isinstance(p, Path) else tuple(str(x) for x in p)
    if any(x not in g.vertices for x in vertices):
        return False
    weights = g.weight_map()
    return all((a, b) in weights for a, b in zip(vertices, vertices[1:]))


def connected_components(g: WeightedGraph) -> Tuple[int, np.ndarray]:
    return cs_components(adjacency_matrix(g), directed=False)


def ground_state_graph(g: WeightedGraph, f: VertexFunction) -> WeightedGraph:
    """Graph with weights f(x) f(y) b(x, y); edges with vanishing product are dropped"""
    values = np.asarray(as_vertex_array(g, f, "f"), dtype=float)
    if np.any(values < 0):
        raise NegativeFunction("ground state transform needs a nonnegative function")
    idx = g.index()
    edges = []
    for u, v, w in g.edges:
        product = values[idx[u]] * values[idx[v]] * w
        if product >= settings.min_edge_weight:
            edges.append((u, v, product))
    return WeightedGraph(vertices=g.vertices, edges=tuple(edges))


def hop_distances(g: WeightedGraph, seed: str) -> np.ndarray:
    if seed not in g.vertices:
        raise UnknownVertex(f"unknown seed vertex {seed}")
    hops = shortest_path(adjacency_matrix(g), directed=False, unweighted=True,
                         indices=g.index()[seed])
    return np.asarray(hops)


def bfs_exhaustion(g: WeightedGraph, seed, radii: Optional[Sequence[int]] = None) -> Exhaustion:
    """Nested hop balls around ``seed``; default radii 0, 1, ... up to the eccentricity.

    The last set is completed with every vertex so the exhaustion ends at the full section.
    """
    seed = str(seed)
    if seed not in g.index():
        raise UnknownVertex(f"unknown exhaustion seed {seed}")
    hops = hop_distances(g, seed)
    finite = hops[np.isfinite(hops)]
    if radii is None:
        radii = list(range(int(finite.max()) + 1))
    radii = sorted(int(r) for r in radii)
    if any(r < 0 for r in radii):
        raise BadParameter("exhaustion radii must be nonnegative")
    order = list(breadth_first_order(adjacency_matrix(g), g.index()[seed], directed=False,
                                     return_predecessors=False))
    sets = []
    for r in radii:
        sets.append(tuple(g.vertices[i] for i in order if hops[i] <= r))
    if len(sets[-1]) < g.size:
        logger.info(f"exhaustion from {seed} closed off with the full vertex set")
        sets.append(g.vertices)
    return Exhaustion(sets=tuple(sets), seed=seed)


def validate_exhaustion(g: WeightedGraph, ex: Exhaustion) -> None:
    previous: Set[str] = set()
    known = set(g.vertices)
    for k, current in enumerate(ex.sets):
        current_set = set(current)
        if not current_set <= known:
            raise UnknownVertex(f"exhaustion set {k} contains unknown vertices")
        if not previous <= current_set:
            raise InvalidExhaustion(f"exhaustion set {k} does not contain set {k - 1}")
        previous = current_set
