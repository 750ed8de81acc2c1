"""
Pseudo metrics on finite sections: path metrics, embedding metrics, intrinsic weights,
balls, distance to the boundary and the metric uniqueness slack.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra
from scipy.spatial.distance import cdist

from config.settings import settings
from models.bundle import HermitianBundle
from models.graph import MeasuredGraph, WeightedGraph
from models.metric import BallResult, BoundarySpec, EdgeLength, InducedMetric, MetricKind, PseudoMetric
from services.bundle_service import w_min_vector
from services.errors import (
    IsolatedEndpoint,
    MissingCoordinate,
    NegativeDistance,
    NonPositiveD,
    NotInjective,
    SigmaEdgeMismatch,
    UnknownVertex,
)
from services.graph_builder import VertexFunction, as_vertex_array, hop_distances, laplacian_matrix

logger = logging.getLogger(__name__)

METRIC_TOL = 1e-12


def edge_length(g: WeightedGraph, sigma: Mapping) -> EdgeLength:
    """Validate edge lengths: defined and positive exactly on the edges of ``g``"""
    stored = {}
    lookup = {}
    for (x, y), value in sigma.items():
        lookup[(str(x), str(y))] = float(value)
    for u, v, _ in g.edges:
        value = lookup.pop((u, v), None)
        reverse = lookup.pop((v, u), None)
        if value is None:
            value = reverse
        elif reverse is not None and abs(reverse - value) > METRIC_TOL:
            raise SigmaEdgeMismatch(f"sigma({u},{v}) = {value} differs from sigma({v},{u}) = {reverse}")
        if value is None:
            raise SigmaEdgeMismatch(f"no edge length on edge ({u}, {v})")
        if not value > 0:
            raise SigmaEdgeMismatch(f"edge length on ({u}, {v}) must be positive, got {value}")
        stored[(u, v)] = value
    if lookup:
        raise SigmaEdgeMismatch(f"edge lengths given on non-edges {sorted(lookup)[:5]}")
    return EdgeLength(sigma=stored)


def _dijkstra_rows(matrix: sp.csr_matrix, sources: np.ndarray) -> np.ndarray:
    return dijkstra(matrix, directed=False, indices=sources)


def path_metric(g: WeightedGraph, sigma: Union[EdgeLength, Mapping]) -> PseudoMetric:
    """All-pairs shortest paths with edge costs sigma; distances across components are infinite"""
    lengths = sigma if isinstance(sigma, EdgeLength) else edge_length(g, sigma)
    n = g.size
    idx = g.index()
    missing = [(u, v) for u, v, _ in g.edges if (u, v) not in lengths.sigma and (v, u) not in lengths.sigma]
    if missing or len(lengths.sigma) != len(g.edges):
        raise SigmaEdgeMismatch(f"edge lengths do not match the edges of the graph: {missing[:5]}")
    if g.edges:
        rows = [idx[u] for u, v, _ in g.edges]
        cols = [idx[v] for u, v, _ in g.edges]
        costs = [lengths.get(u, v) for u, v, _ in g.edges]
        matrix = sp.csr_matrix((costs, (rows, cols)), shape=(n, n))
    else:
        matrix = sp.csr_matrix((n, n))
    sources = np.arange(n)
    workers = max(1, min(settings.threads, n))
    if workers > 1:
        chunks = np.array_split(sources, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            table = np.vstack(list(pool.map(lambda chunk: _dijkstra_rows(matrix, chunk), chunks)))
    else:
        table = _dijkstra_rows(matrix, sources) if n else np.zeros((0, 0))
    table = np.asarray(table, dtype=float).reshape(n, n)
    if np.isinf(table).any():
        logger.warning("graph is disconnected: distances across components are infinite")
    return PseudoMetric(kind=MetricKind.PATH, vertices=g.vertices, table=table, sigma=lengths)


def metric_from_table(vertices: Sequence, table) -> PseudoMetric:
    """Explicit distance table, checked exhaustively for the pseudo metric axioms"""
    vertex_ids = tuple(str(v) for v in vertices)
    values = np.asarray(table, dtype=float)
    if values.shape != (len(vertex_ids), len(vertex_ids)):
        raise NegativeDistance(f"distance table has shape {values.shape} for {len(vertex_ids)} vertices")
    metric = PseudoMetric(kind=MetricKind.TABLE, vertices=vertex_ids, table=values)
    violations = metric_violations(metric)
    if violations:
        raise NegativeDistance(f"distance table is not a pseudo metric: {violations[:3]}")
    return metric


def metric_violations(rho: PseudoMetric, tol: float = METRIC_TOL) -> List[str]:
    d = rho.table
    violations = []
    if np.any(d < -tol):
        violations.append("negative distance")
    if np.any(np.abs(np.diag(d)) > tol):
        violations.append("nonzero diagonal")
    finite = np.where(np.isfinite(d), d, 0.0)
    if np.any(np.abs(finite - finite.T) > tol) or np.any(np.isinf(d) != np.isinf(d.T)):
        violations.append("asymmetric")
    for k in range(d.shape[0]):
        through = d[:, [k]] + d[[k], :]
        if np.any(d > through + tol):
            violations.append(f"triangle inequality fails through {rho.vertices[k]}")
            break
    return violations


def huang_sigma(mg: MeasuredGraph) -> EdgeLength:
    """sigma_H(x,y) = min(mu(x)/deg(x), mu(y)/deg(y))^(1/2)"""
    deg = dict(zip(mg.graph.vertices, mg.graph.degrees()))
    sigma = {}
    for u, v, _ in mg.graph.edges:
        if deg[u] <= 0 or deg[v] <= 0:
            raise IsolatedEndpoint(f"edge ({u}, {v}) has an endpoint of degree zero")
        sigma[(u, v)] = float(np.sqrt(min(mg.mu[u] / deg[u], mg.mu[v] / deg[v])))
    return EdgeLength(sigma=sigma)


def strongly_intrinsic_slack(mg: MeasuredGraph, sigma: Union[EdgeLength, Mapping]) -> Dict[str, float]:
    """mu(x) - sum_y b(x,y) sigma(x,y)^2"""
    lengths = sigma if isinstance(sigma, EdgeLength) else edge_length(mg.graph, sigma)
    slack = dict(mg.mu)
    for u, v, w in mg.graph.edges:
        cost = w * lengths.get(u, v) ** 2
        slack[u] -= cost
        slack[v] -= cost
    return slack


def intrinsic_slack(mg: MeasuredGraph, rho: PseudoMetric) -> Dict[str, float]:
    """mu(x) - sum_y b(x,y) rho(x,y)^2; infinite distances are left out with a warning"""
    idx = rho.index()
    slack = dict(mg.mu)
    skipped = 0
    for u, v, w in mg.graph.edges:
        distance = rho.table[idx[u], idx[v]]
        if not np.isfinite(distance):
            skipped += 1
            continue
        slack[u] -= w * distance ** 2
        slack[v] -= w * distance ** 2
    if skipped:
        logger.warning(f"{skipped} edges with infinite distance excluded from intrinsic sums")
    return slack


def _induced(g: WeightedGraph, coords: np.ndarray, iota: Dict[str, Tuple[float, ...]]) -> InducedMetric:
    table = cdist(coords, coords)
    idx = g.index()
    mu = np.zeros(g.size)
    for u, v, w in g.edges:
        cost = w * table[idx[u], idx[v]] ** 2
        mu[idx[u]] += cost
        mu[idx[v]] += cost
    metric = PseudoMetric(kind=MetricKind.EMBEDDING, vertices=g.vertices, table=table, iota=iota)
    # 2 Q_0 of the coordinate functions
    energy = 2.0 * float(np.sum(coords * (laplacian_matrix(g) @ coords)))
    return InducedMetric(metric=metric, mu=mu, total_mass=float(mu.sum()), double_energy=float(energy))


def _coordinates(g: WeightedGraph, iota: Mapping) -> Tuple[np.ndarray, Dict[str, Tuple[float, ...]]]:
    points = {}
    for key, value in iota.items():
        points[str(key)] = tuple(float(c) for c in np.atleast_1d(value))
    missing = [v for v in g.vertices if v not in points]
    if missing:
        raise MissingCoordinate(f"embedding undefined on {missing[:5]}")
    coords = np.array([points[v] for v in g.vertices], dtype=float)
    if coords.ndim != 2:
        raise MissingCoordinate("embedding coordinates have inconsistent dimensions")
    return coords, {v: points[v] for v in g.vertices}


def embedding_metric(g: WeightedGraph, iota: Mapping) -> InducedMetric:
    """d(x,y) = |iota(x) - iota(y)| and mu_iota(x) = sum_y b(x,y) d(x,y)^2"""
    coords, points = _coordinates(g, iota)
    if len({tuple(c) for c in coords}) < len(coords):
        logger.warning("embedding is not injective: distinct vertices share an image")
    return _induced(g, coords, points)


def intrinsic_from_function(g: WeightedGraph, f: VertexFunction) -> InducedMetric:
    """d_f(x,y) = |f(x) - f(y)| with mu_f(x) = sum_y b(x,y)|f(x) - f(y)|^2; total mass equals 2 Q_0(f)"""
    values = np.asarray(as_vertex_array(g, f, "f"), dtype=float)
    if len(np.unique(values)) < len(values):
        raise NotInjective("d_f is only a metric for injective f")
    induced = _induced(g, values.reshape(-1, 1), {v: (float(values[i]),) for i, v in enumerate(g.vertices)})
    gap = abs(induced.total_mass - induced.double_energy)
    if gap > settings.identity_tol * max(1.0, induced.double_energy):
        logger.warning(f"mu_f(X) differs from 2 Q_0(f) by {gap}")
    return induced


def ball(rho: PseudoMetric, o, r: float, frontier: Optional[Sequence[str]] = None) -> BallResult:
    """Closed ball on the finite section; ``saturated`` flags contact with the section boundary"""
    o = str(o)
    if o not in rho.vertices:
        raise UnknownVertex(f"unknown center {o}")
    row = rho.table[rho.index()[o]]
    members = tuple(v for v, d in zip(rho.vertices, row) if d <= r)
    if frontier:
        saturated = any(v in set(members) for v in frontier)
    else:
        saturated = len(members) == int(np.isfinite(row).sum())
    return BallResult(center=o, radius=float(r), vertices=members, saturated=saturated)


def boundary_distance(rho: PseudoMetric, spec: BoundarySpec) -> np.ndarray:
    """Distance to the listed boundary; infinite everywhere for an empty boundary"""
    n = len(rho.vertices)
    if spec.is_empty:
        return np.full(n, np.inf)
    if spec.distances is not None:
        values = np.array([spec.distances.get(v, np.inf) for v in rho.vertices], dtype=float)
        if np.any(values < 0):
            raise NegativeDistance("distances to the boundary must be nonnegative")
    else:
        if rho.iota is None:
            raise MissingCoordinate("boundary points need an embedding metric")
        coords = np.array([rho.iota[v] for v in rho.vertices], dtype=float)
        values = cdist(coords, np.array(spec.points, dtype=float).reshape(len(spec.points), -1)).min(axis=1)
    touching = [v for v, d in zip(rho.vertices, values) if d == 0]
    if touching:
        logger.warning(f"vertices {touching[:5]} lie on the boundary; the boundary is not closed off from X")
    return values


def metric_criterion_slack(
    mg: MeasuredGraph,
    minimum: Union[HermitianBundle, VertexFunction],
    D: VertexFunction,
    V_ref: VertexFunction,
) -> np.ndarray:
    """w_min(x) - 1/(2 D(x)^2) - V_ref(x), with 1/(2 inf^2) = 0"""
    if isinstance(minimum, HermitianBundle):
        w = w_min_vector(mg.graph, minimum)
    else:
        w = np.asarray(as_vertex_array(mg.graph, minimum, "w_min"), dtype=float)
    distances = np.asarray(as_vertex_array(mg.graph, D, "D"), dtype=float)
    if np.any(distances <= 0):
        raise NonPositiveD("distance to the boundary must be positive")
    reference = np.asarray(as_vertex_array(mg.graph, V_ref, "V_ref"), dtype=float)
    with np.errstate(divide="ignore"):
        penalty = np.where(np.isinf(distances), 0.0, 1.0 / (2.0 * distances ** 2))
    return w - penalty - reference


def core_reference(mg: MeasuredGraph, w: np.ndarray, D: np.ndarray, core: Sequence[str]) -> np.ndarray:
    """Reference potential 0 off the finite core and min(0, w - 1/(2 D^2)) on it"""
    with np.errstate(divide="ignore"):
        penalty = np.where(np.isinf(D), 0.0, 1.0 / (2.0 * np.asarray(D, dtype=float) ** 2))
    reference = np.zeros(mg.graph.size)
    idx = mg.graph.index()
    for v in core:
        i = idx[str(v)]
        reference[i] = min(0.0, w[i] - penalty[i])
    return reference


def hop_core(mg: MeasuredGraph, seed, radius: int) -> List[str]:
    hops = hop_distances(mg.graph, str(seed))
    return [v for v, h in zip(mg.graph.vertices, hops) if h <= radius]


def bounded_far_set(rho: PseudoMetric, D: np.ndarray, eps: float, o, r: float) -> List[str]:
    """Vertices within distance r of o whose distance to the boundary is at least eps"""
    row = rho.table[rho.index()[str(o)]]
    return [v for v, d, b in zip(rho.vertices, row, D) if d <= r and b >= eps]
