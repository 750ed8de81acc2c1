import numpy as np
import pytest

from models.metric import BoundarySpec
from services.errors import MissingCoordinate, NegativeDistance, NonPositiveD, NotInjective, SigmaEdgeMismatch
from services.generators import gen_line_Z, random_instance, z_line_boundary, z_line_embedding
from services.graph_builder import build_graph
from services.metric_engine import (
    ball,
    boundary_distance,
    bounded_far_set,
    core_reference,
    edge_length,
    embedding_metric,
    hop_core,
    huang_sigma,
    intrinsic_from_function,
    intrinsic_slack,
    metric_criterion_slack,
    metric_from_table,
    path_metric,
    strongly_intrinsic_slack,
)
from services.operator_engine import dirichlet_energy


def unit_sigma(g):
    return {(u, v): 1.0 for u, v, _ in g.edges}


def test_path_metric_takes_shortest_route(triangle):
    rho = path_metric(triangle, {("a", "b"): 1.0, ("b", "c"): 1.0, ("a", "c"): 3.0})
    assert rho.distance("a", "c") == pytest.approx(2.0)
    assert rho.distance("c", "a") == pytest.approx(2.0)


def test_path_metric_disconnected_is_infinite():
    g = build_graph(["0", "1", "2"], [("0", "1", 1.0)])
    rho = path_metric(g, unit_sigma(g))
    assert np.isinf(rho.distance("0", "2"))


def test_edge_length_must_match_edges(triangle):
    with pytest.raises(SigmaEdgeMismatch):
        edge_length(triangle, {("a", "b"): 1.0, ("b", "c"): 1.0})
    with pytest.raises(SigmaEdgeMismatch):
        edge_length(triangle, {("a", "b"): 1.0, ("b", "c"): 1.0, ("a", "c"): 0.0})
    g = build_graph(["0", "1", "2"], [("0", "1", 1.0)])
    with pytest.raises(SigmaEdgeMismatch):
        edge_length(g, {("0", "1"): 1.0, ("1", "2"): 1.0})


def test_metric_from_table_checks_axioms():
    rho = metric_from_table(["x", "y"], [[0.0, 1.0], [1.0, 0.0]])
    assert rho.distance("x", "y") == 1.0
    with pytest.raises(NegativeDistance):
        metric_from_table(["x", "y", "z"], [[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    with pytest.raises(NegativeDistance):
        metric_from_table(["x", "y"], [[0, 1], [2, 0]])


def test_huang_sigma_on_line(z_line):
    sigma = huang_sigma(z_line)
    for value in sigma.sigma.values():
        assert value == pytest.approx(np.sqrt(0.5))
    slack = strongly_intrinsic_slack(z_line, sigma)
    assert min(slack.values()) >= -1e-12


def test_intrinsic_slack_of_unit_path_metric(z_line):
    slack = intrinsic_slack(z_line, path_metric(z_line.graph, unit_sigma(z_line.graph)))
    assert slack["0"] == pytest.approx(-1.0)
    assert slack["5"] == pytest.approx(0.0)


def test_embedding_measure_on_the_line():
    N = 8
    mg = gen_line_Z(N)
    induced = embedding_metric(mg.graph, z_line_embedding(N))
    mu = dict(zip(mg.graph.vertices, induced.mu))
    assert mu["0"] == pytest.approx(10.0)
    assert mu["-1"] == pytest.approx(9.25)
    for k in range(2, N):
        expected = 2.0 * (k * k + 1) / (k * k * (k * k - 1) ** 2)
        assert mu[str(k)] == pytest.approx(expected)
        assert mu[str(-k)] == pytest.approx(expected)


def test_symmetric_embedding_measure():
    mg = gen_line_Z(4)
    induced = embedding_metric(mg.graph, z_line_embedding(4, symmetric=True))
    mu = dict(zip(mg.graph.vertices, induced.mu))
    assert mu["0"] == pytest.approx(2.0)
    assert mu["-1"] == pytest.approx(1.25)
    assert induced.total_mass == pytest.approx(induced.double_energy)


def test_intrinsic_from_function(chain):
    induced = intrinsic_from_function(chain.graph, [0.0, 1.0, 3.0])
    np.testing.assert_allclose(induced.mu, [1.0, 5.0, 4.0])
    assert induced.total_mass == pytest.approx(10.0)
    with pytest.raises(NotInjective):
        intrinsic_from_function(chain.graph, [0.0, 1.0, 0.0])


def test_ball_and_saturation(z_line):
    rho = path_metric(z_line.graph, unit_sigma(z_line.graph))
    small = ball(rho, "0", 2.0, z_line.frontier)
    assert set(small.vertices) == {"-2", "-1", "0", "1", "2"}
    assert not small.saturated
    assert ball(rho, 0, 5.0, z_line.frontier).saturated


def test_boundary_distance_variants():
    N = 4
    mg = gen_line_Z(N)
    rho = embedding_metric(mg.graph, z_line_embedding(N)).metric
    D = boundary_distance(rho, BoundarySpec(points=z_line_boundary()))
    values = dict(zip(rho.vertices, D))
    assert values["0"] == pytest.approx(2.0)
    assert values["3"] == pytest.approx(1.0 / 3)
    assert values["-2"] == pytest.approx(0.5)
    assert np.all(np.isinf(boundary_distance(rho, BoundarySpec())))
    explicit = boundary_distance(rho, BoundarySpec(distances={"0": 1.0}))
    assert explicit[rho.index()["0"]] == 1.0
    assert np.isinf(explicit[rho.index()["1"]])


def test_boundary_points_need_an_embedding(chain):
    rho = path_metric(chain.graph, unit_sigma(chain.graph))
    with pytest.raises(MissingCoordinate):
        boundary_distance(rho, BoundarySpec(points=[(0.0,)]))


def test_metric_criterion_slack(chain):
    slack = metric_criterion_slack(chain, [1.0, 1.0, 1.0], [np.inf, 1.0, 0.5], [0.0, 0.0, 0.0])
    np.testing.assert_allclose(slack, [1.0, 0.5, -1.0])
    with pytest.raises(NonPositiveD):
        metric_criterion_slack(chain, [1.0, 1.0, 1.0], [0.0, 1.0, 1.0], [0.0, 0.0, 0.0])


def test_core_reference_absorbs_the_core(chain):
    w = np.array([0.0, 0.0, 0.0])
    D = np.array([2.0, 1.0, np.inf])
    reference = core_reference(chain, w, D, ["0"])
    np.testing.assert_allclose(reference, [-0.125, 0.0, 0.0])
    slack = metric_criterion_slack(chain, w, D, reference)
    assert slack[0] == pytest.approx(0.0)


def test_hop_core_and_far_set(z_line):
    assert set(hop_core(z_line, "0", 1)) == {"-1", "0", "1"}
    rho = path_metric(z_line.graph, unit_sigma(z_line.graph))
    D = np.array([abs(int(v)) for v in rho.vertices], dtype=float)
    assert set(bounded_far_set(rho, D, 1.0, "0", 1.0)) == {"-1", "1"}


def test_path_metric_never_exceeds_edge_lengths(rng):
    for _ in range(20):
        g = random_instance(rng, max_vertices=15).graph
        sigma = {(u, v): float(rng.uniform(0.1, 3.0)) for u, v, _ in g.edges}
        rho = path_metric(g, sigma)
        for (u, v), length in sigma.items():
            assert rho.distance(u, v) <= length + 1e-12


def test_huang_weight_is_strongly_intrinsic_and_its_path_metric_intrinsic(rng):
    for _ in range(20):
        mg = random_instance(rng, max_vertices=15)
        sigma = huang_sigma(mg)
        strong = strongly_intrinsic_slack(mg, sigma)
        weak = intrinsic_slack(mg, path_metric(mg.graph, sigma))
        for v in mg.graph.vertices:
            assert strong[v] >= -1e-12
            assert weak[v] >= strong[v] - 1e-12


def test_intrinsic_mass_matches_energy_on_random_graphs(rng):
    for _ in range(10):
        g = random_instance(rng, max_vertices=15).graph
        f = rng.permutation(g.size).astype(float) + rng.uniform(0.0, 0.5)
        induced = intrinsic_from_function(g, f)
        assert induced.total_mass == pytest.approx(dirichlet_energy(g, f), rel=1e-12)
        assert induced.double_energy == pytest.approx(dirichlet_energy(g, f), rel=1e-12)
