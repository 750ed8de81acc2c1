import json

import numpy as np
import pandas as pd
import pytest

from models.bundle import Section
from services.bundle_service import random_bundle
from services.errors import BadParameter, MissingInput
from services.generators import gen_line_Z, z_line_embedding
from services.serialization import (
    bundle_from_dict,
    decode_matrix,
    graph_from_dict,
    load_bundle,
    load_graph,
    load_metric,
    load_metric_boundary,
    load_section,
    save_bundle,
    save_graph,
    save_section,
    split_edge_key,
    to_jsonable,
    write_table,
)


def test_decode_matrix_formats():
    np.testing.assert_array_equal(decode_matrix(2.5), [[2.5]])
    np.testing.assert_array_equal(decode_matrix([[1.0, 2.0], [2.0, 1.0]]), [[1.0, 2.0], [2.0, 1.0]])
    np.testing.assert_array_equal(decode_matrix([[[0.0, 1.0]]]), [[1j]])
    np.testing.assert_array_equal(decode_matrix([[0.0, 1.0]]), [[1j]])
    with pytest.raises(BadParameter):
        decode_matrix([1.0, 2.0, 3.0])


def test_graph_file_keeps_measure_potential_and_frontier(tmp_path):
    mg = gen_line_Z(3, "nu_alpha", "half_square", alpha=2.0)
    path = save_graph(str(tmp_path / "graph.json"), mg)
    loaded = load_graph(path)
    assert loaded.graph == mg.graph
    assert loaded.mu == mg.mu
    assert loaded.frontier == ("-3", "3")


def test_bundle_file_keeps_complex_connections(tmp_path):
    mg = gen_line_Z(2)
    bundle = random_bundle(mg.graph, 2, seed=4)
    loaded = load_bundle(save_bundle(str(tmp_path / "bundle.json"), bundle))
    for key, matrix in bundle.Phi.items():
        np.testing.assert_allclose(loaded.Phi[key], matrix)


def test_theta_shorthand_needs_the_graph():
    mg = graph_from_dict({"vertices": ["0", "1"], "edges": [["0", "1", 1.0]]})
    bundle = bundle_from_dict({"theta": {"0->1": np.pi / 2}}, mg)
    np.testing.assert_allclose(bundle.Phi[("1", "0")], [[-1j]], atol=1e-15)
    with pytest.raises(MissingInput):
        bundle_from_dict({"theta": {"0->1": 1.0}})


def test_split_edge_key():
    assert split_edge_key("a->b") == ("a", "b")
    with pytest.raises(BadParameter):
        split_edge_key("a-b")


def test_embedding_metric_file_with_inline_boundary(write_input):
    mg = gen_line_Z(3)
    iota = {v: list(p) for v, p in z_line_embedding(3).items()}
    path = write_input("metric.json", {"kind": "embedding", "iota": iota, "boundary": [[2.0]]})
    rho = load_metric(path, mg)
    assert rho.distance("0", "1") == pytest.approx(1.0)
    assert load_metric_boundary(path).points == [(2.0,)]
    with pytest.raises(MissingInput):
        load_metric(path)


def test_load_graph_missing_file(tmp_path):
    with pytest.raises(MissingInput):
        load_graph(str(tmp_path / "absent.json"))


def test_write_table_full_precision(tmp_path):
    path = write_table(str(tmp_path / "t.csv"), {"x": [1.0 / 3.0]})
    assert pd.read_csv(path)["x"][0] == 1.0 / 3.0


def test_to_jsonable_handles_numpy_and_infinities():
    data = to_jsonable({("a", "b"): np.float64(np.inf), "z": 1 + 2j, "arr": np.arange(2)})
    assert json.loads(json.dumps(data)) == {"a->b": "inf", "z": [1.0, 2.0], "arr": [0, 1]}


def test_section_file_layout_and_values(tmp_path):
    f = Section(values={"0": np.array([1.0 - 2.0j, 0.5j]), "1": np.array([3.0])})
    path = save_section(str(tmp_path / "section.json"), f)
    with open(path) as handle:
        assert json.load(handle) == {"0": [[1.0, -2.0], [0.0, 0.5]], "1": [[3.0, 0.0]]}
    loaded = load_section(path)
    np.testing.assert_array_equal(loaded.values["0"], f.values["0"])
    np.testing.assert_array_equal(loaded.values["1"], [3.0 + 0.0j])
