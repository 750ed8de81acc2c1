import json

import numpy as np
import pytest

from services.generators import gen_line_Z
from services.graph_builder import build_graph, build_measured_graph


@pytest.fixture
def two_vertex():
    return build_measured_graph(build_graph(["0", "1"], [("0", "1", 1.0)]), name="two-vertex")


@pytest.fixture
def single_vertex():
    return build_measured_graph(build_graph(["0"], []), name="single")


@pytest.fixture
def chain():
    """Path 0 - 1 - 2 with unit weights, counting measure, V = 0"""
    return build_measured_graph(build_graph(["0", "1", "2"], [("0", "1", 1.0), ("1", "2", 1.0)]))


@pytest.fixture
def triangle():
    return build_graph(["a", "b", "c"], [("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)])


@pytest.fixture
def z_line():
    return gen_line_Z(5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def write_input(tmp_path):
    """Write a JSON input file and return its path"""
    def write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)
    return write
