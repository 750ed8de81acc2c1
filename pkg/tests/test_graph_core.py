import numpy as np
import pytest

from models.graph import Exhaustion
from services.errors import (
    DegenerateMeasure,
    DimensionMismatch,
    DuplicateEdge,
    InvalidExhaustion,
    NonPositiveWeight,
    OverlappingCircles,
    SelfLoop,
    UnknownVertex,
    BadParameter,
)
from services.generators import (
    f_alpha,
    f_alpha_values,
    g_alpha_values,
    gen_circle_packing_nerve,
    gen_comb_tree,
    gen_complete_union,
    gen_hardy_stub,
    gen_line_Z,
    hex_circle_patch,
    mu_g_alpha,
    random_instance,
)
from services.graph_builder import (
    as_vertex_array,
    bfs_exhaustion,
    build_graph,
    build_measured_graph,
    combinatorial_neighborhood,
    connected_components,
    degree,
    ground_state_graph,
    validate_exhaustion,
    validate_path,
)


def test_build_graph_rejects_self_loop():
    with pytest.raises(SelfLoop):
        build_graph(["0"], [("0", "0", 1.0)])


def test_build_graph_rejects_bad_weights_and_duplicates():
    with pytest.raises(NonPositiveWeight):
        build_graph(["0", "1"], [("0", "1", 0.0)])
    with pytest.raises(DuplicateEdge):
        build_graph(["0", "1"], [("0", "1", 1.0), ("1", "0", 2.0)])
    with pytest.raises(UnknownVertex):
        build_graph(["0"], [("0", "1", 1.0)])


def test_measured_graph_defaults_and_validation(chain):
    assert chain.mu == {"0": 1.0, "1": 1.0, "2": 1.0}
    assert chain.V == {"0": 0.0, "1": 0.0, "2": 0.0}
    with pytest.raises(BadParameter):
        build_measured_graph(chain.graph, mu={"0": 0.0})
    with pytest.raises(UnknownVertex):
        build_measured_graph(chain.graph, V={"9": 1.0})


def test_degree_and_neighborhood(chain):
    assert degree(chain.graph, "1") == 2.0
    assert degree(chain.graph, 0) == 1.0
    assert combinatorial_neighborhood(chain.graph, ["0"]) == {"0", "1"}
    with pytest.raises(UnknownVertex):
        degree(chain.graph, "7")


def test_validate_path(chain):
    assert validate_path(chain.graph, ["0", "1", "2"])
    assert not validate_path(chain.graph, ["0", "2"])
    assert not validate_path(chain.graph, ["0", "9"])


def test_as_vertex_array_accepts_int_keys(chain):
    values = as_vertex_array(chain.graph, {0: 1.0, 1: 2.0, 2: 3.0})
    np.testing.assert_array_equal(values, [1.0, 2.0, 3.0])
    with pytest.raises(DimensionMismatch):
        as_vertex_array(chain.graph, [1.0, 2.0])


def test_ground_state_graph_drops_vanishing_edges(chain):
    transformed = ground_state_graph(chain.graph, [0.0, 1.0, 2.0])
    assert transformed.edges == (("1", "2", 2.0),)


def test_bfs_exhaustion_nests_and_closes(z_line):
    ex = bfs_exhaustion(z_line.graph, "0")
    sizes = [len(K) for K in ex.sets]
    assert sizes == [1, 3, 5, 7, 9, 11]
    validate_exhaustion(z_line.graph, ex)
    with pytest.raises(UnknownVertex):
        bfs_exhaustion(z_line.graph, "99")


def test_validate_exhaustion_rejects_shrinking_sets(chain):
    with pytest.raises(InvalidExhaustion):
        validate_exhaustion(chain.graph, Exhaustion(sets=(("0", "1"), ("0",))))


def test_gen_line_Z_rules():
    mg = gen_line_Z(3, "nu_alpha", "half_square", alpha=2.0)
    assert mg.mu["0"] == 1.0
    assert mg.mu["-2"] == pytest.approx(0.25)
    assert mg.V["3"] == pytest.approx(4.5)
    assert mg.frontier == ("-3", "3")
    quartic = gen_line_Z(3, "nu_quartic", "quarter_square")
    assert quartic.mu["2"] == pytest.approx(2.0 / 16)
    assert quartic.V["-2"] == pytest.approx(1.0)
    with pytest.raises(BadParameter):
        gen_line_Z(0)
    with pytest.raises(BadParameter):
        gen_line_Z(3, "cubic")


def test_complete_union_blocks():
    mg = gen_complete_union(4)
    assert mg.graph.size == 10
    assert len(mg.graph.edges) == 0 + 1 + 3 + 6
    count, _ = connected_components(mg.graph)
    assert count == 4
    count, _ = connected_components(gen_complete_union(4, connect=True).graph)
    assert count == 1


def test_circle_packing_two_tangent_circles():
    mg = gen_circle_packing_nerve([((0.0, 0.0), 1.0), ((2.0, 0.0), 1.0)])
    assert mg.mu == {"0": pytest.approx(4.0), "1": pytest.approx(4.0)}


def test_circle_packing_rejects_overlap_and_isolated_circles():
    with pytest.raises(OverlappingCircles):
        gen_circle_packing_nerve([((0.0, 0.0), 1.0), ((1.0, 0.0), 1.0)])
    with pytest.raises(DegenerateMeasure):
        gen_circle_packing_nerve([((0.0, 0.0), 1.0), ((2.0, 0.0), 1.0), ((10.0, 0.0), 1.0)])


def test_hex_patch_contact_graph():
    mg = gen_circle_packing_nerve(hex_circle_patch(2, 2))
    assert len(mg.graph.edges) == 5


def test_hardy_stub_weights():
    mg, w, subset = gen_hardy_stub(4)
    assert w["0"] == 0.0
    assert w["2"] == pytest.approx(1.0 / 16)
    assert subset == ["1", "2", "3", "4"]
    assert mg.frontier == ("4",)


def test_comb_tree_weights():
    mg = gen_comb_tree(3)
    weights = mg.graph.weight_map()
    assert weights[("2,0", "3,0")] == pytest.approx(0.25)
    assert weights[("1,0", "1,1")] == 1.0
    assert mg.graph.size == 6


def test_f_alpha_variants():
    assert f_alpha(2, 1.0) == pytest.approx(2.5)
    assert f_alpha(-2, 1.0) == pytest.approx(-0.5)
    assert f_alpha(-2, 1.0, symmetric=True) == pytest.approx(2.5)
    values = f_alpha_values(4, 1.5)
    for k in range(-4, 5):
        assert values[str(k)] == pytest.approx(f_alpha(k, 1.5))


def test_g_alpha_and_its_weight():
    assert g_alpha_values(3, 2.0)["1"] == pytest.approx(np.sqrt(2.0))
    assert mu_g_alpha(1, 2.0) == pytest.approx(0.625)
    assert mu_g_alpha(0, 2.0) == 1.0


def test_random_instance_is_connected(rng):
    for _ in range(5):
        mg = random_instance(rng, max_vertices=12)
        count, _ = connected_components(mg.graph)
        assert count == 1
        assert 2 <= mg.graph.size <= 12
        assert np.all(mg.mu_vector() > 0)


def test_degree_is_additive_over_edges(rng):
    for _ in range(10):
        g = random_instance(rng, max_vertices=15).graph
        neighbors = g.neighbors()
        for v in g.vertices:
            assert degree(g, v) == pytest.approx(sum(w for _, w in neighbors[v]))
        assert g.degrees().sum() == pytest.approx(2.0 * sum(w for _, _, w in g.edges))

        extra = str(g.size)
        w = float(rng.uniform(0.1, 2.0))
        anchor = g.vertices[int(rng.integers(0, g.size))]
        grown = build_graph(list(g.vertices) + [extra], list(g.edges) + [(anchor, extra, w)])
        for v in g.vertices:
            expected = degree(g, v) + (w if v == anchor else 0.0)
            assert degree(grown, v) == pytest.approx(expected)
        assert degree(grown, extra) == pytest.approx(w)
