"""
Example families: integer line truncations, unions of complete graphs, circle-packing
nerves, the half-line Hardy stub, the comb tree, and random instances.
"""
import logging
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from models.graph import MeasuredGraph
from services.errors import BadParameter, DegenerateMeasure, OverlappingCircles
from services.graph_builder import build_graph, build_measured_graph

logger = logging.getLogger(__name__)

Circle = Tuple[Tuple[float, float], float]


class MuRule(str, Enum):
    UNIFORM = "uniform"
    NU_ALPHA = "nu_alpha"
    NU_QUARTIC = "nu_quartic"


class VRule(str, Enum):
    ZERO = "zero"
    HALF_SQUARE = "half_square"
    QUARTER_SQUARE = "quarter_square"


def line_measure(k: int, rule: MuRule, alpha: float = 1.0, scale: float = 1.0) -> float:
    if rule == MuRule.UNIFORM:
        return scale
    if rule == MuRule.NU_ALPHA:
        return 1.0 if k == 0 else abs(k) ** (-alpha)
    return 2.0 if k == 0 else 2.0 * float(k) ** -4


def line_potential(k: int, rule: VRule) -> float:
    if rule == VRule.HALF_SQUARE:
        return k * k / 2.0
    if rule == VRule.QUARTER_SQUARE:
        return k * k / 4.0
    return 0.0


def gen_line_Z(
    N: int,
    mu_rule: str = "uniform",
    V_rule: str = "zero",
    alpha: float = 1.0,
    mu_scale: float = 1.0,
) -> MeasuredGraph:
    """Truncation {-N..N} of the integer line with unit weights between neighbors"""
    if N < 1:
        raise BadParameter(f"N must be at least 1, got {N}")
    try:
        mu_rule, V_rule = MuRule(mu_rule), VRule(V_rule)
    except ValueError as e:
        raise BadParameter(str(e))
    if mu_rule == MuRule.UNIFORM and mu_scale <= 0:
        raise BadParameter("mu_scale must be positive")
    ks = range(-N, N + 1)
    graph = build_graph([str(k) for k in ks], [(str(k), str(k + 1), 1.0) for k in range(-N, N)])
    mu = {str(k): line_measure(k, mu_rule, alpha, mu_scale) for k in ks}
    V = {str(k): line_potential(k, V_rule) for k in ks}
    return build_measured_graph(graph, mu, V, frontier=(str(-N), str(N)),
                                name=f"z-line N={N} mu={mu_rule.value} V={V_rule.value}")


def gen_complete_union(n_max: int, connect: bool = False) -> MeasuredGraph:
    """Disjoint union of K_1..K_n_max, optionally chained by one bridge between blocks"""
    if n_max < 1:
        raise BadParameter(f"n_max must be at least 1, got {n_max}")
    vertices: List[str] = []
    edges: List[Tuple[str, str, float]] = []
    for n in range(1, n_max + 1):
        block = [f"{n}:{i}" for i in range(n)]
        vertices.extend(block)
        edges.extend((block[i], block[j], 1.0) for i in range(n) for j in range(i + 1, n))
        if connect and n > 1:
            edges.append((f"{n - 1}:0", f"{n}:0", 1.0))
    return build_measured_graph(build_graph(vertices, edges),
                                name=f"complete-union n_max={n_max} connect={connect}")


def packing_embedding(circles: Sequence[Circle]) -> Dict[str, Tuple[float, ...]]:
    return {str(i): (float(c[0][0]), float(c[0][1])) for i, c in enumerate(circles)}


def gen_circle_packing_nerve(circles: Sequence[Circle], tangency_tol: Optional[float] = None) -> MeasuredGraph:
    """Contact graph of a circle packing with the measure mu_iota of the center embedding"""
    tol = settings.tangency_tol if tangency_tol is None else tangency_tol
    centers = np.array([c[0] for c in circles], dtype=float).reshape(-1, 2)
    radii = np.array([c[1] for c in circles], dtype=float)
    if np.any(radii <= 0):
        raise BadParameter("circle radii must be positive")
    edges = []
    for i in range(len(circles)):
        for j in range(i + 1, len(circles)):
            gap = np.linalg.norm(centers[i] - centers[j])
            reach = radii[i] + radii[j]
            if gap < reach - tol:
                raise OverlappingCircles(f"circles {i} and {j} overlap (distance {gap}, radii sum {reach})")
            if gap <= reach + tol:
                edges.append((str(i), str(j), 1.0))
    graph = build_graph([str(i) for i in range(len(circles))], edges)
    mu: Dict[str, float] = {v: 0.0 for v in graph.vertices}
    for u, v, w in graph.edges:
        d2 = float(np.sum((centers[int(u)] - centers[int(v)]) ** 2))
        mu[u] += w * d2
        mu[v] += w * d2
    degenerate = [v for v, m in mu.items() if m <= 0]
    if degenerate:
        raise DegenerateMeasure(f"mu_iota vanishes at isolated circles {degenerate}")
    return build_measured_graph(graph, mu, name=f"circle-packing n={len(circles)}")


def hex_circle_patch(rows: int, cols: int, radius: float = 1.0) -> List[Circle]:
    """Hexagonally packed patch of equal circles"""
    if rows < 1 or cols < 1:
        raise BadParameter("hex patch needs at least one row and one column")
    circles = []
    for r in range(rows):
        for c in range(cols):
            x = radius * (2 * c + (r % 2))
            y = radius * r * np.sqrt(3.0)
            circles.append(((x, y), radius))
    return circles


def gen_hardy_stub(N: int) -> Tuple[MeasuredGraph, Dict[str, float], List[str]]:
    """Half line {0..N} with the candidate weight w(k) = 1/(4k^2) and Dirichlet set {1..N}"""
    if N < 1:
        raise BadParameter(f"N must be at least 1, got {N}")
    graph = build_graph([str(k) for k in range(N + 1)], [(str(k), str(k + 1), 1.0) for k in range(N)])
    mg = build_measured_graph(graph, frontier=(str(N),), name=f"hardy-stub N={N}")
    w = {str(k): (0.0 if k == 0 else 1.0 / (4.0 * k * k)) for k in range(N + 1)}
    return mg, w, [str(k) for k in range(1, N + 1)]


def gen_comb_tree(n: int) -> MeasuredGraph:
    """Spine (k,0), k = 1..n, with weights min(k,l)^-2 and a unit tooth (k,1) at every spine vertex"""
    if n < 1:
        raise BadParameter(f"n must be at least 1, got {n}")
    vertices = [f"{k},{i}" for k in range(1, n + 1) for i in (0, 1)]
    edges = [(f"{k},0", f"{k},1", 1.0) for k in range(1, n + 1)]
    edges += [(f"{k},0", f"{k + 1},0", float(k) ** -2) for k in range(1, n)]
    return build_measured_graph(build_graph(vertices, edges), frontier=(f"{n},0",),
                                name=f"comb-tree n={n}")


def f_alpha(k: int, alpha: float, symmetric: bool = False) -> float:
    """1 + sgn(k) sum_{j<=|k|} j^-alpha; the symmetric variant drops the sign"""
    tail = float(np.sum(np.arange(1, abs(k) + 1, dtype=float) ** -alpha)) if k else 0.0
    if symmetric:
        return 1.0 + tail
    return 1.0 + np.sign(k) * tail


def f_alpha_values(N: int, alpha: float, symmetric: bool = False) -> Dict[str, float]:
    """f_alpha on {-N..N} via cumulative sums"""
    partial = np.concatenate([[0.0], np.cumsum(np.arange(1, N + 1, dtype=float) ** -alpha)])
    values = {}
    for k in range(-N, N + 1):
        tail = partial[abs(k)]
        values[str(k)] = 1.0 + (tail if symmetric else np.sign(k) * tail)
    return values


def g_alpha_values(N: int, alpha: float) -> Dict[str, float]:
    """g_alpha = f_{alpha/2} / sqrt(2)"""
    return {k: v / np.sqrt(2.0) for k, v in f_alpha_values(N, alpha / 2.0).items()}


def mu_g_alpha(n: int, alpha: float) -> float:
    """Closed form of the intrinsic weight of g_alpha (valid away from the truncation)"""
    if n == 0:
        return 1.0
    return 1.0 / (2.0 * (abs(n) + 1) ** alpha) + 1.0 / (2.0 * abs(n) ** alpha)


def random_instance(
    rng: np.random.Generator,
    max_vertices: int = 50,
    min_vertices: int = 2,
    edge_probability: float = 0.3,
) -> MeasuredGraph:
    """Random connected measured graph: spanning tree plus random extra edges"""
    n = int(rng.integers(min_vertices, max_vertices + 1))
    vertices = [str(i) for i in range(n)]
    pairs = set()
    order = rng.permutation(n)
    for k in range(1, n):
        parent = order[int(rng.integers(0, k))]
        pairs.add(tuple(sorted((int(order[k]), int(parent)))))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_probability / max(1.0, n / 10.0):
                pairs.add((i, j))
    edges = [(str(i), str(j), float(rng.uniform(0.1, 2.0))) for i, j in sorted(pairs)]
    mu = {v: float(rng.uniform(0.2, 3.0)) for v in vertices}
    V = {v: float(rng.normal()) for v in vertices}
    return build_measured_graph(build_graph(vertices, edges), mu, V, name="random")


def z_line_embedding(N: int, symmetric: bool = False) -> Dict[str, Tuple[float, ...]]:
    """iota(k) = 2 - 1/k, iota(0) = 0; the symmetric variant mirrors the negative half line"""
    iota = {"0": (0.0,)}
    for k in range(1, N + 1):
        iota[str(k)] = (2.0 - 1.0 / k,)
        iota[str(-k)] = (-(2.0 - 1.0 / k),) if symmetric else (2.0 + 1.0 / k,)
    return iota


def z_line_boundary(symmetric: bool = False) -> List[Tuple[float, ...]]:
    return [(2.0,), (-2.0,)] if symmetric else [(2.0,)]
