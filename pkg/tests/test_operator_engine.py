import numpy as np
import pytest

from models.bundle import HermitianBundle, Section
from services.bundle_service import (
    adjacency_bundle,
    fiber_layout,
    random_bundle,
    scalar_to_bundle,
    uniform_field,
)
from services.errors import (
    AlignmentViolated,
    DimensionMismatch,
    NegativeWeight,
    NotSubsolution,
    ValidationFailure,
)
from services.generators import gen_complete_union, gen_hardy_stub, gen_line_Z, random_instance
from services.graph_builder import build_measured_graph
from services.operator_engine import (
    B_function,
    apply_H,
    apply_M,
    assemble,
    boundedness_report,
    dirichlet_energy,
    finiteness_profile,
    form_qc,
    greens_residual,
    ground_section,
    ground_state,
    ground_state_inequality,
    hardy_weight_check,
    heart_residual,
    identity_suite,
    kato_gap,
    lambda0_estimate,
    monotone_resolvent_experiment,
    spectrum,
    subsolution_check,
)


def random_section(mg, bundle, rng):
    layout = fiber_layout(mg.graph, bundle)
    return Section.from_array(layout, rng.normal(size=layout.size) + 1j * rng.normal(size=layout.size))


def test_apply_H_on_delta():
    mg = gen_line_Z(2)
    delta = {v: 1.0 if v == "0" else 0.0 for v in mg.graph.vertices}
    np.testing.assert_allclose(apply_H(mg, delta), [0.0, -1.0, 2.0, -1.0, 0.0])


def test_apply_M_matches_apply_H_without_field(chain, rng):
    mg = build_measured_graph(chain.graph, mu={"0": 2.0, "1": 0.5, "2": 1.0}, V={"1": 3.0})
    bundle = scalar_to_bundle(mg.graph, None, mg.V)
    f = rng.normal(size=3)
    section = Section(values={v: np.array([f[i]], dtype=complex) for i, v in enumerate(mg.graph.vertices)})
    result = apply_M(mg, bundle, section)
    np.testing.assert_allclose([result.values[v][0] for v in mg.graph.vertices], apply_H(mg, f))


def test_apply_M_rejects_missing_connection_maps(chain, rng):
    bundle = scalar_to_bundle(chain.graph, None, chain.V)
    section = random_section(chain, bundle, rng)
    partial = HermitianBundle(dim=bundle.dim, W=bundle.W,
                              Phi={k: P for k, P in bundle.Phi.items() if k != ("2", "1")})
    with pytest.raises(DimensionMismatch, match="2->1"):
        apply_M(chain, partial, section)
    no_W = HermitianBundle(dim=bundle.dim, W={k: W for k, W in bundle.W.items() if k != "0"}, Phi=bundle.Phi)
    with pytest.raises(DimensionMismatch):
        apply_M(chain, no_W, section)


def test_ground_section_is_an_eigenvector(rng):
    mg = random_instance(rng, max_vertices=12)
    bundle = random_bundle(mg.graph, 2, seed=11)
    value, section = ground_section(assemble(mg, bundle))
    layout = fiber_layout(mg.graph, bundle)
    flat = section.to_array(layout)
    weights = layout.expand(mg.mu_vector())
    assert np.real(np.vdot(flat, weights * flat)) == pytest.approx(1.0)
    image = apply_M(mg, bundle, section).to_array(layout)
    np.testing.assert_allclose(image, value * flat, atol=1e-9)
    assert value == pytest.approx(lambda0_estimate(assemble(mg, bundle)))


def test_dirichlet_energy(chain):
    assert dirichlet_energy(chain.graph, [0.0, 1.0, 2.0]) == pytest.approx(4.0)


def test_assemble_two_vertices(two_vertex):
    op = assemble(two_vertex, scalar_to_bundle(two_vertex.graph, None, two_vertex.V))
    np.testing.assert_allclose(op.dense(), [[1.0, -1.0], [-1.0, 1.0]])


def test_assemble_rejects_invalid_bundle(two_vertex):
    bundle = HermitianBundle(dim={"0": 1, "1": 1},
                             W={"0": np.array([[0j]]), "1": np.array([[0j]])},
                             Phi={("0", "1"): np.array([[1.0 + 0j]])})
    with pytest.raises(ValidationFailure):
        assemble(two_vertex, bundle)


def test_complete_graph_spectrum():
    mg = gen_complete_union(4)
    values = spectrum(assemble(mg, adjacency_bundle(mg))).eigenvalues
    expected = sorted([0.0, 1.0, -1.0, 2.0, -1.0, -1.0, 3.0, -1.0, -1.0, -1.0])
    np.testing.assert_allclose(values, expected, atol=1e-10)


def test_lambda0_matches_dense_spectrum(rng):
    mg = random_instance(rng, max_vertices=15)
    op = assemble(mg, random_bundle(mg.graph, 2, seed=3))
    assert lambda0_estimate(op) == pytest.approx(np.linalg.eigvalsh(op.dense())[0])


def test_form_qc_splits_kinetic_and_endomorphism(two_vertex):
    bundle = scalar_to_bundle(two_vertex.graph, None, {"0": 2.0, "1": 0.0})
    phi = Section(values={"0": np.array([1.0 + 0j]), "1": np.array([0j])})
    value = form_qc(two_vertex, bundle, phi, phi)
    assert value.kinetic == pytest.approx(1.0)
    assert value.endomorphism == pytest.approx(2.0)
    assert value.real == pytest.approx(3.0)
    assert value.imag == 0.0


def test_greens_formula_on_random_bundle(rng):
    mg = random_instance(rng, max_vertices=20)
    bundle = random_bundle(mg.graph, 2, seed=11)
    residual = greens_residual(mg, bundle, random_section(mg, bundle, rng), random_section(mg, bundle, rng))
    assert residual.value / residual.scale < 1e-10
    assert residual.symmetry / residual.scale < 1e-10


def test_kato_inequality_for_aligned_sections(rng):
    mg = random_instance(rng, max_vertices=20)
    bundle = random_bundle(mg.graph, 3, seed=5)
    f = random_section(mg, bundle, rng)
    phi = Section(values={x: 0.5 * value for x, value in f.values.items()})
    assert kato_gap(mg, bundle, f, phi) >= -1e-9


def test_kato_rejects_misaligned_sections(two_vertex):
    bundle = scalar_to_bundle(two_vertex.graph, None, [0.0, 0.0])
    f = Section(values={"0": np.array([1.0 + 0j]), "1": np.array([1.0 + 0j])})
    phi = Section(values={"0": np.array([-1.0 + 0j]), "1": np.array([1.0 + 0j])})
    with pytest.raises(AlignmentViolated):
        kato_gap(two_vertex, bundle, f, phi)


def test_subsolution_check_passes_for_random_bundle(rng):
    mg = random_instance(rng, max_vertices=15)
    report = subsolution_check(mg, random_bundle(mg.graph, 2, seed=9))
    assert report.passed
    assert report.eigenpairs == 2 * mg.graph.size


def test_ground_state_inequality(rng):
    mg = random_instance(rng, max_vertices=12)
    lam, f = ground_state(mg)
    assert np.all(f >= 0)
    gap = ground_state_inequality(mg, f, lam, rng.normal(size=mg.graph.size))
    assert gap >= -1e-8


def test_ground_state_inequality_needs_subsolution(chain):
    with pytest.raises(NotSubsolution):
        ground_state_inequality(chain, [1.0, 0.0, 1.0], 0.0, [1.0, 1.0, 1.0])


def test_B_function(chain):
    mg = build_measured_graph(chain.graph, V={"1": 3.0})
    B = B_function(mg, scalar_to_bundle(mg.graph, None, mg.V))
    assert B["1"] == pytest.approx(5.0)
    assert B["0"] == pytest.approx(1.0)


def test_heart_identity_with_field(rng):
    mg = gen_line_Z(4, "uniform", "half_square")
    bundle = scalar_to_bundle(mg.graph, uniform_field(mg.graph, 0.7), mg.V)
    assert heart_residual(mg, bundle, random_section(mg, bundle, rng)) < 1e-10


def test_boundedness_report(chain):
    mg = build_measured_graph(chain.graph, V={"1": 3.0})
    report = boundedness_report(mg, scalar_to_bundle(mg.graph, None, mg.V), trials=5, seed=1)
    assert report.B_max == pytest.approx(5.0)
    assert report.heart_residual < 1e-10
    assert report.spectrum.lambda_max <= 2.0 * report.B_max + 1e-9


def test_finiteness_profile(chain):
    np.testing.assert_allclose(finiteness_profile(chain), [1.0, 2.0, 1.0])


def test_monotone_resolvent_experiment(chain):
    mg = build_measured_graph(chain.graph, V={"0": -0.5, "2": -3.0})
    table = monotone_resolvent_experiment(mg, 5.0, [1.0, 1.0, 1.0], [0, 1, 2, 3])
    assert table.levels == [0, 1, 2, 3]
    assert table.monotone
    assert table.values[-1][2] > table.values[0][2]


def test_hardy_stub_weight_is_hardy():
    mg, w, subset = gen_hardy_stub(30)
    assert hardy_weight_check(mg, w, subset).is_hardy
    assert not hardy_weight_check(mg, {v: 1.0 for v in mg.graph.vertices}, subset).is_hardy
    with pytest.raises(NegativeWeight):
        hardy_weight_check(mg, {v: -1.0 for v in mg.graph.vertices}, subset)


def test_identity_suite_small():
    report = identity_suite(trials=3, seed=2, max_vertices=8, max_dim=2)
    assert report.trials == 3
    assert report.green_max < 1e-10
    assert report.form_operator_max < 1e-10
    assert report.heart_max < 1e-10
    assert report.kato_min >= -1e-9
    assert report.subsolution_max <= 1e-8
