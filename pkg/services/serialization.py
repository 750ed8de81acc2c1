"""
JSON files for graphs, bundles, metrics and boundaries; CSV tables through pandas.
"""
import json
import logging
import os
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from models.bundle import HermitianBundle, ScalarField, Section
from models.graph import MeasuredGraph
from models.metric import BoundarySpec, MetricKind, PseudoMetric
from services.bundle_service import scalar_to_bundle
from services.errors import BadParameter, MissingInput
from services.graph_builder import build_graph, build_measured_graph
from services.metric_engine import embedding_metric, metric_from_table, path_metric

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


def edge_key(u: str, v: str) -> str:
    return f"{u}->{v}"


def split_edge_key(key: str) -> tuple:
    if "->" not in key:
        raise BadParameter(f"edge key {key!r} must look like 'u->v'")
    u, v = key.split("->", 1)
    return u, v


def encode_matrix(m: np.ndarray) -> List[List[List[float]]]:
    """Complex matrix as nested rows of [re, im] pairs"""
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(data, d: Optional[int] = None) -> np.ndarray:
    """Inverse of encode_matrix; a bare number, a real square matrix or a flat list of [re, im] pairs is accepted too"""
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0:
        return np.array([[complex(arr)]])
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1] and arr.shape[0] >= 2:
        return arr.astype(complex)
    if arr.shape[-1] == 2 and arr.ndim >= 2:
        values = arr[..., 0] + 1j * arr[..., 1]
    else:
        values = arr.astype(complex)
    if values.ndim == 1:
        size = d if d is not None else int(round(np.sqrt(values.size)))
        if size * size != values.size:
            raise BadParameter(f"cannot reshape {values.size} entries into a square matrix")
        values = values.reshape(size, size)
    return values


def _read_json(path: str) -> Any:
    if not os.path.exists(path):
        raise MissingInput(f"input file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_json(path: str, data: Any) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"wrote {path}")
    return path


def graph_to_dict(mg: MeasuredGraph) -> Dict[str, Any]:
    return {
        "name": mg.name,
        "vertices": list(mg.graph.vertices),
        "edges": [[u, v, w] for u, v, w in mg.graph.edges],
        "mu": dict(mg.mu),
        "V": dict(mg.V),
        "frontier": list(mg.frontier),
    }


def graph_from_dict(data: Mapping[str, Any]) -> MeasuredGraph:
    if "vertices" not in data or "edges" not in data:
        raise BadParameter("graph JSON needs 'vertices' and 'edges'")
    g = build_graph(data["vertices"], [tuple(e) for e in data["edges"]])
    return build_measured_graph(g, mu=data.get("mu"), V=data.get("V"),
                                frontier=tuple(str(v) for v in data.get("frontier", ())),
                                name=data.get("name"))


def load_graph(path: str) -> MeasuredGraph:
    return graph_from_dict(_read_json(path))


def save_graph(path: str, mg: MeasuredGraph) -> str:
    return write_json(path, graph_to_dict(mg))


def bundle_to_dict(bundle: HermitianBundle) -> Dict[str, Any]:
    return {
        "dim": dict(bundle.dim),
        "W": {v: encode_matrix(m) for v, m in bundle.W.items()},
        "Phi": {edge_key(u, v): encode_matrix(m) for (u, v), m in bundle.Phi.items()},
    }


def bundle_from_dict(data: Mapping[str, Any], mg: Optional[MeasuredGraph] = None) -> HermitianBundle:
    """Explicit bundle, or the scalar shorthand ``{"theta": {"u->v": angle}}`` on ``mg``"""
    if "theta" in data:
        if mg is None:
            raise MissingInput("a theta bundle needs the graph it lives on")
        theta = {split_edge_key(k): float(a) for k, a in data["theta"].items()}
        return scalar_to_bundle(mg.graph, ScalarField(theta=theta), mg.V)
    dim = {str(v): int(d) for v, d in data["dim"].items()}
    W = {str(v): decode_matrix(m, dim[str(v)]) for v, m in data["W"].items()}
    Phi = {}
    for key, m in data["Phi"].items():
        u, v = split_edge_key(key)
        Phi[(u, v)] = decode_matrix(m)
    return HermitianBundle(dim=dim, W=W, Phi=Phi)


def load_bundle(path: str, mg: Optional[MeasuredGraph] = None) -> HermitianBundle:
    return bundle_from_dict(_read_json(path), mg)


def save_bundle(path: str, bundle: HermitianBundle) -> str:
    return write_json(path, bundle_to_dict(bundle))


def section_to_dict(f: Section) -> Dict[str, List[List[float]]]:
    return {v: [[float(z.real), float(z.imag)] for z in np.asarray(x, dtype=complex)] for v, x in f.values.items()}


def section_from_dict(data: Mapping[str, Any]) -> Section:
    values = {}
    for v, x in data.items():
        arr = np.asarray(x, dtype=float)
        values[str(v)] = arr[..., 0] + 1j * arr[..., 1] if arr.ndim == 2 else arr.astype(complex).ravel()
    return Section(values=values)


def load_section(path: str) -> Section:
    return section_from_dict(_read_json(path))


def save_section(path: str, f: Section) -> str:
    return write_json(path, section_to_dict(f))


def metric_to_dict(rho: PseudoMetric) -> Dict[str, Any]:
    if rho.kind == MetricKind.PATH and rho.sigma is not None:
        return {"kind": "path", "sigma": {edge_key(u, v): s for (u, v), s in rho.sigma.sigma.items()}}
    if rho.kind == MetricKind.EMBEDDING and rho.iota is not None:
        return {"kind": "embedding", "iota": {v: list(p) for v, p in rho.iota.items()}}
    return {"kind": "table", "vertices": list(rho.vertices), "table": rho.table.tolist()}


def metric_from_dict(data: Mapping[str, Any], mg: Optional[MeasuredGraph] = None) -> PseudoMetric:
    kind = MetricKind(data.get("kind", "table"))
    if kind == MetricKind.TABLE:
        return metric_from_table(data["vertices"], data["table"])
    if mg is None:
        raise MissingInput(f"a {kind.value} metric needs the graph it lives on")
    if kind == MetricKind.PATH:
        sigma = {split_edge_key(k): float(s) for k, s in data["sigma"].items()}
        return path_metric(mg.graph, sigma)
    iota = {str(v): tuple(float(c) for c in np.atleast_1d(p)) for v, p in data["iota"].items()}
    return embedding_metric(mg.graph, iota).metric


def load_metric(path: str, mg: Optional[MeasuredGraph] = None) -> PseudoMetric:
    return metric_from_dict(_read_json(path), mg)


def save_metric(path: str, rho: PseudoMetric) -> str:
    return write_json(path, metric_to_dict(rho))


def boundary_to_dict(spec: BoundarySpec) -> Dict[str, Any]:
    data: Dict[str, Any] = {"points": [list(p) for p in spec.points]}
    if spec.distances is not None:
        data["distances"] = dict(spec.distances)
    return data


def boundary_from_dict(data: Mapping[str, Any]) -> BoundarySpec:
    points = [tuple(float(c) for c in np.atleast_1d(p)) for p in data.get("points", [])]
    distances = data.get("distances")
    if distances is not None:
        distances = {str(v): float(d) for v, d in distances.items()}
    return BoundarySpec(points=points, distances=distances)


def load_boundary(path: str) -> BoundarySpec:
    return boundary_from_dict(_read_json(path))


def save_boundary(path: str, spec: BoundarySpec) -> str:
    return write_json(path, boundary_to_dict(spec))


def write_table(path: str, table: Union[pd.DataFrame, Mapping[str, Sequence], Sequence[Mapping]]) -> str:
    """CSV with '.' decimals and 17 significant digits"""
    frame = table if isinstance(table, pd.DataFrame) else pd.DataFrame(table)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, decimal=".")
    logger.info(f"wrote {path} ({len(frame)} rows)")
    return path


def to_jsonable(value: Any) -> Any:
    """Plain JSON types for numpy scalars/arrays, pydantic models and infinities"""
    if hasattr(value, "model_dump"):
        return to_jsonable(value.model_dump(mode="python"))
    if isinstance(value, Mapping):
        return {str(k) if not isinstance(k, tuple) else edge_key(*k[:2]): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [to_jsonable(float(value.real)), to_jsonable(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if np.isnan(value):
            return "nan"
        if np.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, Enum):
        return value.value
    return value


def load_metric_boundary(path: str) -> Optional[BoundarySpec]:
    """Boundary points stored inline in an embedding metric file, if any"""
    data = _read_json(path)
    points = data.get("boundary") if isinstance(data, Mapping) else None
    if not points:
        return None
    return boundary_from_dict({"points": points})
