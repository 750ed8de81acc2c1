"""
Desk-scale end-to-end checks on the example families.
"""
import numpy as np
import pytest

from models.metric import BoundarySpec
from services.bundle_service import adjacency_bundle, scalar_to_bundle, uniform_field
from services.form_lab import (
    alpha_floor,
    approximating_form,
    beurling_deny_check,
    boundary_capacity,
    capacity,
    capacity_alt,
    capacity_bruteforce,
    excessive_function,
    form_from_operator,
    host_form,
    measure_criterion_partial_sums,
    neumann_form,
    recurrence_probe,
    resolvent_identity_residual,
)
from services.generators import (
    f_alpha_values,
    g_alpha_values,
    gen_complete_union,
    gen_line_Z,
    mu_g_alpha,
    random_instance,
    z_line_boundary,
    z_line_embedding,
)
from services.graph_builder import bfs_exhaustion, build_graph, build_measured_graph
from services.metric_engine import (
    boundary_distance,
    core_reference,
    embedding_metric,
    intrinsic_from_function,
    metric_criterion_slack,
)
from services.operator_engine import apply_H, assemble, dirichlet_energy, identity_suite, spectrum


def nonnegative_potential(mg):
    return build_measured_graph(mg.graph, mu=mg.mu, V={v: abs(x) for v, x in mg.V.items()})


@pytest.mark.slow
def test_green_kato_and_heart_identities():
    report = identity_suite(trials=200, seed=7, max_vertices=50, max_dim=3)
    assert report.trials == 200
    assert report.green_max <= 1e-10
    assert report.symmetry_max <= 1e-10
    assert report.kato_min >= -1e-9
    assert report.heart_max <= 1e-10


def test_linear_function_on_the_quartic_line():
    norms = {}
    for N in (50, 100, 200):
        mg = gen_line_Z(N, "nu_quartic", "zero")
        h = np.array([float(v) for v in mg.graph.vertices])
        norms[N] = float(np.sum(mg.mu_vector() * h ** 2))
        interior = np.abs(apply_H(mg, h))[1:-1]
        assert interior.max() <= 1e-12
        assert dirichlet_energy(mg.graph, h) == 4 * N
    assert norms[100] == pytest.approx(norms[200], rel=1e-2)


def test_measure_criterion_on_the_line():
    flat = gen_line_Z(100, mu_scale=2.0)
    ray = [str(k) for k in range(101)]
    sums = measure_criterion_partial_sums(flat, flat.V, 0.0, ray, 100)
    assert sums[-1] == 200.0

    mg = gen_line_Z(200, "nu_alpha", "half_square", alpha=4.0)
    sums = measure_criterion_partial_sums(mg, mg.V, 0.0, [str(k) for k in range(201)], 200)
    assert sums[199] - sums[99] <= 1e-3


def test_metric_criterion_on_the_line():
    N = 10
    for rule, holds in (("half_square", True), ("quarter_square", False)):
        mg = gen_line_Z(N, "nu_quartic", rule)
        rho = embedding_metric(mg.graph, z_line_embedding(N)).metric
        D = boundary_distance(rho, BoundarySpec(points=z_line_boundary()))
        for v, d in zip(rho.vertices, D):
            if v != "0":
                assert d == pytest.approx(1.0 / abs(int(v)), abs=1e-12)
        w = mg.V_vector()
        slack = metric_criterion_slack(mg, w, D, core_reference(mg, w, D, ["0"]))
        assert (slack.min() >= -1e-12) == holds


def test_embedding_measure_closed_forms():
    N = 51
    mg = gen_line_Z(N)
    mu = dict(zip(mg.graph.vertices, embedding_metric(mg.graph, z_line_embedding(N)).mu))
    for k in range(2, N):
        expected = 2.0 * (k * k + 1) / (k * k * (k * k - 1) ** 2)
        assert mu[str(k)] == pytest.approx(expected, rel=1e-9)
        assert mu[str(-k)] == pytest.approx(expected, rel=1e-9)

    alpha = 2.0
    induced = intrinsic_from_function(mg.graph, g_alpha_values(N, alpha))
    mu_g = dict(zip(mg.graph.vertices, induced.mu))
    for n in range(-N + 1, N):
        assert mu_g[str(n)] == pytest.approx(mu_g_alpha(n, alpha), rel=1e-10)


@pytest.mark.slow
def test_capacity_instances(rng):
    mg = build_measured_graph(build_graph(["0", "1"], [("0", "1", 1.0)]))
    primary = capacity(mg, None, [1.0, 1.0], ["0"])
    assert primary.value == pytest.approx(1.5, abs=1e-10)
    assert capacity_alt(mg, [1.0, 1.0], ["0"]) == pytest.approx(1.5, abs=1e-10)
    assert capacity_bruteforce(mg, None, [1.0, 1.0], ["0"]).value == pytest.approx(1.5, abs=1e-6)

    for _ in range(100):
        mg = nonnegative_potential(random_instance(rng, max_vertices=30))
        h = excessive_function(neumann_form(mg, mg.graph.vertices))
        size = int(rng.integers(1, mg.graph.size + 1))
        targets = list(rng.choice(mg.graph.vertices, size=size, replace=False))
        assert capacity(mg, None, h, targets).verified


def test_boundary_capacity_decays_on_weighted_line():
    mg = gen_line_Z(200, "nu_alpha", "half_square", alpha=2.0)
    h = excessive_function(neumann_form(mg, mg.graph.vertices))
    result = boundary_capacity(mg, h, bfs_exhaustion(mg.graph, "0"))
    assert result.nonincreasing
    assert result.values[-2] <= 0.1 * result.values[0]


def test_recurrence_probe_on_the_line():
    N = 1000
    mg = gen_line_Z(N)
    probe = recurrence_probe(mg, f_alpha_values(N, 0.75, symmetric=True))
    assert probe.decreasing
    assert probe.energies[-1] <= 0.05 * probe.energies[0]


@pytest.mark.slow
def test_beurling_deny(rng):
    for _ in range(100):
        mg = nonnegative_potential(random_instance(rng, max_vertices=20))
        report = beurling_deny_check(host_form(mg), trials=5, seed=int(rng.integers(0, 1000)))
        assert report.positivity_violation <= 1e-9
        assert report.markov_violation <= 1e-9
    mg = build_measured_graph(build_graph(["0", "1"], [("0", "1", 1.0)]))
    flux = form_from_operator(mg, scalar_to_bundle(mg.graph, uniform_field(mg.graph, np.pi), mg.V))
    assert beurling_deny_check(flux, trials=5, seed=0).positivity_violation > 1e-3


def test_complete_union_spectra():
    mg = gen_complete_union(12)
    op = assemble(mg, adjacency_bundle(mg))
    expected = sorted(v for n in range(1, 13) for v in [n - 1.0] + [-1.0] * (n - 1))
    np.testing.assert_allclose(spectrum(op).eigenvalues, expected, atol=1e-9)
    assert spectrum(op).lambda_min >= -1.0 - 1e-9


@pytest.mark.slow
def test_resolvent_algebra(rng):
    for _ in range(100):
        form = host_form(random_instance(rng, max_vertices=20))
        shift = alpha_floor(form)
        f = rng.normal(size=form.size)
        assert resolvent_identity_residual(form, shift + 0.5, shift + 3.0, f) <= 1e-10
        values = [approximating_form(form, shift + a, f) for a in (1.0, 10.0, 100.0)]
        assert values[0] <= values[1] + 1e-9
        assert values[1] <= values[2] + 1e-9
