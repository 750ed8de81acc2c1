"""
Magnetic Schrödinger operators and forms on finite sections.

All pairings of sections are mu-weighted, (f, g) = sum_x <f(x), g(x)> mu(x),
antilinear in the first slot.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from config.settings import settings
from models.bundle import FiberLayout, HermitianBundle, Section
from models.graph import MeasuredGraph, WeightedGraph
from models.operator import (
    AssembledOperator,
    BoundednessReport,
    FormValue,
    GreenResidual,
    HardyCheck,
    IdentitySuiteReport,
    ResolventTable,
    SpectrumSummary,
    SubsolutionReport,
)
from services.bundle_service import (
    fiber_layout,
    flip_connection,
    random_bundle,
    random_scalar_bundle,
    validate_connection,
    w_min_vector,
)
from services.errors import (
    AlignmentViolated,
    AlphaTooSmall,
    BadParameter,
    ConvergenceFailure,
    DimensionMismatch,
    NegativeFunction,
    NegativeWeight,
    NonHermitian,
    NotSubsolution,
    SolveFailure,
    ValidationFailure,
)
from services.generators import random_instance
from services.graph_builder import (
    VertexFunction,
    adjacency_matrix,
    as_vertex_array,
    ground_state_graph,
    laplacian_matrix,
)

logger = logging.getLogger(__name__)


def _weighted_inner(weights: np.ndarray, a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.vdot(a, weights * b))


def scalar_form_matrix(mg: MeasuredGraph, potential: Optional[np.ndarray] = None) -> sp.csr_matrix:
    """Euclidean matrix of the scalar form with theta = 0: diag(deg) - b + diag(V mu)"""
    V = mg.V_vector() if potential is None else np.asarray(potential, dtype=float)
    return (laplacian_matrix(mg.graph) + sp.diags(V * mg.mu_vector())).tocsr()


def apply_H(mg: MeasuredGraph, f: VertexFunction, potential: Optional[VertexFunction] = None) -> np.ndarray:
    """mu^-1 sum_y b(x,y)(f(x) - f(y)) + V(x) f(x)"""
    values = as_vertex_array(mg.graph, f, "f")
    V = mg.V_vector() if potential is None else as_vertex_array(mg.graph, potential, "potential")
    deg = mg.graph.degrees()
    kinetic = deg * values - adjacency_matrix(mg.graph) @ values
    return kinetic / mg.mu_vector() + V * values


def dirichlet_energy(g: WeightedGraph, f: VertexFunction) -> float:
    """sum over ordered pairs of b(x,y)|f(x) - f(y)|^2 (twice the kinetic form)"""
    values = as_vertex_array(g, f, "f")
    idx = g.index()
    return float(2.0 * sum(w * abs(values[idx[u]] - values[idx[v]]) ** 2 for u, v, w in g.edges))


def _check_section(layout: FiberLayout, f: Section) -> None:
    for i, v in enumerate(layout.vertices):
        value = f.values.get(v)
        if value is None or np.shape(value) != (layout.dims[i],):
            raise DimensionMismatch(f"section value at {v} does not match fiber dimension {layout.dims[i]}")


def _check_connection_maps(g: WeightedGraph, bundle: HermitianBundle) -> None:
    missing_W = [v for v in g.vertices if v not in bundle.W]
    if missing_W:
        raise DimensionMismatch(f"bundle has no endomorphism at {missing_W[:5]}")
    missing = [f"{x}->{y}" for u, v, _ in g.edges for x, y in ((u, v), (v, u)) if (x, y) not in bundle.Phi]
    if missing:
        raise DimensionMismatch(f"bundle has no connection map for {missing[:5]}")


def apply_M(mg: MeasuredGraph, bundle: HermitianBundle, f: Section) -> Section:
    """mu^-1 sum_y b(x,y)(f(x) - Phi_{x,y} f(y)) + W_x f(x), evaluated edge by edge"""
    layout = fiber_layout(mg.graph, bundle)
    _check_section(layout, f)
    _check_connection_maps(mg.graph, bundle)
    result = {}
    neighbors = mg.graph.neighbors()
    for x in mg.graph.vertices:
        fx = np.asarray(f.values[x], dtype=complex)
        acc = np.zeros_like(fx)
        for y, b in neighbors[x]:
            acc += b * (fx - bundle.Phi[(x, y)] @ np.asarray(f.values[y], dtype=complex))
        result[x] = acc / mg.mu[x] + bundle.W[x] @ fx
    return Section(values=result)


def assemble(mg: MeasuredGraph, bundle: HermitianBundle) -> AssembledOperator:
    """Assemble D^1/2 M D^-1/2 in CSR layout (dense below the assembly limit)"""
    violations = validate_connection(bundle, mg.graph)
    if violations:
        raise ValidationFailure(f"bundle is invalid: {violations[:3]}")
    layout = fiber_layout(mg.graph, bundle)
    offsets = layout.offsets()
    idx = mg.graph.index()
    mu = mg.mu_vector()
    deg = mg.graph.degrees()
    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    data: List[np.ndarray] = []

    def put(i: int, j: int, block: np.ndarray) -> None:
        r, c = np.meshgrid(np.arange(offsets[i], offsets[i + 1]),
                           np.arange(offsets[j], offsets[j + 1]), indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        data.append(np.asarray(block, dtype=complex).ravel())

    for i, v in enumerate(mg.graph.vertices):
        put(i, i, deg[i] / mu[i] * np.eye(layout.dims[i]) + bundle.W[v])
    for u, v, b in mg.graph.edges:
        i, j = idx[u], idx[v]
        scale = b / np.sqrt(mu[i] * mu[j])
        put(i, j, -scale * bundle.Phi[(u, v)])
        put(j, i, -scale * bundle.Phi[(v, u)])

    n = layout.size
    matrix = sp.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                           shape=(n, n)).tocsr()
    defect = abs(matrix - matrix.conj().T).max() if matrix.nnz else 0.0
    if defect > settings.hermitian_tol:
        raise NonHermitian(f"assembled operator is not self-adjoint in l2(mu): defect {defect}")
    if n < settings.dense_assembly_limit:
        matrix = matrix.toarray()
    logger.debug(f"assembled operator of size {n} (dense={not sp.issparse(matrix)})")
    return AssembledOperator(layout=layout, matrix=matrix, weights=layout.expand(mu))


def form_qc(mg: MeasuredGraph, bundle: HermitianBundle, phi: Section, psi: Section) -> FormValue:
    """1/2 sum_{x,y} b <phi(x) - Phi phi(y), psi(x) - Phi psi(y)> + sum_x <W phi(x), psi(x)> mu(x)"""
    layout = fiber_layout(mg.graph, bundle)
    _check_section(layout, phi)
    _check_section(layout, psi)
    kinetic = 0j
    for u, v, b in mg.graph.edges:
        for x, y in ((u, v), (v, u)):
            d_phi = phi.values[x] - bundle.Phi[(x, y)] @ phi.values[y]
            d_psi = psi.values[x] - bundle.Phi[(x, y)] @ psi.values[y]
            kinetic += 0.5 * b * np.vdot(d_phi, d_psi)
    endomorphism = 0j
    for x in mg.graph.vertices:
        endomorphism += np.vdot(bundle.W[x] @ phi.values[x], psi.values[x]) * mg.mu[x]
    total = kinetic + endomorphism
    diagonal = all(np.array_equal(phi.values[x], psi.values[x]) for x in mg.graph.vertices)
    if diagonal:
        return FormValue(real=float(total.real), imag=0.0,
                         kinetic=float(kinetic.real), endomorphism=float(endomorphism.real))
    return FormValue(real=float(total.real), imag=float(total.imag))


def greens_residual(mg: MeasuredGraph, bundle: HermitianBundle, phi: Section, f: Section) -> GreenResidual:
    """|(phi, M f) - Q(phi, f)| and |(phi, M f) - (M phi, f)|, with the scale they are measured against"""
    layout = fiber_layout(mg.graph, bundle)
    weights = layout.expand(mg.mu_vector())
    phi_flat, f_flat = phi.to_array(layout), f.to_array(layout)
    M_f = apply_M(mg, bundle, f).to_array(layout)
    M_phi = apply_M(mg, bundle, phi).to_array(layout)
    pairing = _weighted_inner(weights, phi_flat, M_f)
    form = form_qc(mg, bundle, phi, f).value
    mirrored = _weighted_inner(weights, M_phi, f_flat)

    def norm(a: np.ndarray) -> float:
        return float(np.sqrt(np.real(_weighted_inner(weights, a, a))))

    scale = max(1.0, norm(phi_flat) * norm(M_f), norm(M_phi) * norm(f_flat))
    return GreenResidual(value=abs(pairing - form), symmetry=abs(pairing - mirrored), scale=scale)


def _aligned(f: np.ndarray, phi: np.ndarray, tol: float) -> bool:
    inner = np.vdot(f, phi)
    product = np.linalg.norm(f) * np.linalg.norm(phi)
    return abs(inner - product) <= tol * (1.0 + product)


def kato_gap(mg: MeasuredGraph, bundle: HermitianBundle, f: Section, phi: Section) -> float:
    """Re(phi, M f) - (|phi|, H_{mu, w_min} |f|) for pointwise aligned sections"""
    layout = fiber_layout(mg.graph, bundle)
    _check_section(layout, f)
    _check_section(layout, phi)
    for x in mg.graph.vertices:
        if not _aligned(f.values[x], phi.values[x], settings.inequality_tol):
            raise AlignmentViolated(f"<f({x}), phi({x})> differs from |f({x})| |phi({x})|")
    weights = layout.expand(mg.mu_vector())
    lhs = _weighted_inner(weights, phi.to_array(layout), apply_M(mg, bundle, f).to_array(layout)).real
    abs_f = np.array([np.linalg.norm(f.values[x]) for x in mg.graph.vertices])
    abs_phi = np.array([np.linalg.norm(phi.values[x]) for x in mg.graph.vertices])
    H_abs_f = apply_H(mg, abs_f, potential=w_min_vector(mg.graph, bundle))
    rhs = float(np.sum(mg.mu_vector() * abs_phi * H_abs_f))
    return float(lhs - rhs)


def _eigh(op: AssembledOperator) -> Tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eigh(op.dense())
    except np.linalg.LinAlgError as e:
        logger.error(f"dense eigensolve failed: {e}")
        raise ConvergenceFailure(f"dense eigensolve failed: {e}")


def subsolution_check(mg: MeasuredGraph, bundle: HermitianBundle, tol: Optional[float] = None) -> SubsolutionReport:
    """For every eigenpair (lambda, f) of M, max over vertices of H_{mu,w_min}|f| - lambda |f|"""
    tol = settings.subsolution_tol if tol is None else tol
    op = assemble(mg, bundle)
    if op.size > settings.dense_eigen_limit:
        raise BadParameter(f"subsolution check needs a full eigensolve; size {op.size} is above the dense limit")
    values, vectors = _eigh(op)
    root = np.sqrt(op.weights)
    w = w_min_vector(mg.graph, bundle)
    worst = 0.0
    for k, lam in enumerate(values):
        f = vectors[:, k] / root
        f = f / max(np.max(np.abs(f)), 1e-300)
        modulus = op.layout.fiber_norms(f)
        worst = max(worst, float(np.max(apply_H(mg, modulus, potential=w) - lam * modulus)))
    return SubsolutionReport(eigenpairs=len(values), max_violation=worst, passed=worst <= tol)


def ground_state(mg: MeasuredGraph) -> Tuple[float, np.ndarray]:
    """Bottom eigenpair of the scalar operator H; the eigenfunction is returned nonnegative"""
    mu = mg.mu_vector()
    root = np.sqrt(mu)
    S = sp.diags(1.0 / root) @ scalar_form_matrix(mg) @ sp.diags(1.0 / root)
    try:
        values, vectors = np.linalg.eigh(S.toarray())
    except np.linalg.LinAlgError as e:
        logger.error(f"ground state eigensolve failed: {e}")
        raise ConvergenceFailure(str(e))
    f = vectors[:, 0] / root
    f = np.abs(f)
    return float(values[0]), f / np.max(f)


def ground_state_inequality(mg: MeasuredGraph, f: VertexFunction, lam: float, phi: VertexFunction) -> float:
    """Q^{c,f}(phi) + lambda ||f phi||^2 - Q^c(f phi); nonnegative when H f <= lambda f"""
    f_values = np.asarray(as_vertex_array(mg.graph, f, "f"), dtype=float)
    phi_values = np.asarray(as_vertex_array(mg.graph, phi, "phi"))
    if np.any(f_values < 0):
        raise NegativeFunction("ground state transform needs a nonnegative function")
    excess = apply_H(mg, f_values) - lam * f_values
    if np.max(excess, initial=0.0) > settings.inequality_tol * max(1.0, np.max(np.abs(f_values))):
        raise NotSubsolution(f"H f exceeds lambda f by {np.max(excess)}")
    product = f_values * phi_values
    lhs = np.real(np.vdot(product, scalar_form_matrix(mg) @ product))
    transformed = laplacian_matrix(ground_state_graph(mg.graph, f_values))
    rhs = np.real(np.vdot(phi_values, transformed @ phi_values)) + lam * np.sum(mg.mu_vector() * np.abs(product) ** 2)
    return float(rhs - lhs)


def B_function(mg: MeasuredGraph, bundle: HermitianBundle) -> Dict[str, float]:
    """B(x) = max |spec(Deg(x) + W_x)|"""
    result = {}
    for x, d in zip(mg.graph.vertices, mg.graph.degrees()):
        W = bundle.W[x]
        if np.max(np.abs(W - W.conj().T), initial=0.0) > settings.hermitian_tol:
            raise NonHermitian(f"W at vertex {x} is not Hermitian")
        shifted = d / mg.mu[x] * np.eye(W.shape[0]) + W
        result[x] = float(np.max(np.abs(np.linalg.eigvalsh(shifted))))
    return result


def heart_residual(mg: MeasuredGraph, bundle: HermitianBundle, phi: Section) -> float:
    """Relative residual of Q_Phi(phi) = 2 q_{Deg+W}(phi) - Q_{-Phi}(phi)"""
    q_plus = form_qc(mg, bundle, phi, phi).real
    q_minus = form_qc(mg, flip_connection(bundle), phi, phi).real
    q_diag = 0.0
    for x, d in zip(mg.graph.vertices, mg.graph.degrees()):
        value = phi.values[x]
        shifted = d / mg.mu[x] * value + bundle.W[x] @ value
        q_diag += float(np.real(np.vdot(shifted, value))) * mg.mu[x]
    scale = max(1.0, abs(q_plus), abs(q_minus), abs(q_diag))
    return abs(q_plus - (2.0 * q_diag - q_minus)) / scale


def lambda0_estimate(op: AssembledOperator) -> float:
    """Bottom of the spectrum: dense below the eigen limit, Lanczos (eigsh) above"""
    if op.size <= settings.dense_eigen_limit:
        return float(np.linalg.eigvalsh(op.dense())[0])
    try:
        values = spla.eigsh(sp.csr_matrix(op.matrix), k=1, which="SA", tol=settings.eigen_tol,
                            return_eigenvectors=False)
    except spla.ArpackNoConvergence as e:
        logger.error(f"iterative eigensolve did not converge: {e}")
        raise ConvergenceFailure(str(e))
    return float(values[0])


def spectrum(op: AssembledOperator, full: bool = True) -> SpectrumSummary:
    if op.size <= settings.dense_eigen_limit:
        values = np.linalg.eigvalsh(op.dense())
        return SpectrumSummary(lambda_min=float(values[0]), lambda_max=float(values[-1]),
                               eigenvalues=[float(v) for v in values] if full else None)
    try:
        matrix = sp.csr_matrix(op.matrix)
        low = spla.eigsh(matrix, k=1, which="SA", tol=settings.eigen_tol, return_eigenvectors=False)
        high = spla.eigsh(matrix, k=1, which="LA", tol=settings.eigen_tol, return_eigenvectors=False)
    except spla.ArpackNoConvergence as e:
        logger.error(f"iterative eigensolve did not converge: {e}")
        raise ConvergenceFailure(str(e))
    return SpectrumSummary(lambda_min=float(low[0]), lambda_max=float(high[0]))


def ground_section(op: AssembledOperator) -> Tuple[float, Section]:
    """Bottom eigenpair of M; the section has unit l2(mu) norm"""
    if op.size <= settings.dense_eigen_limit:
        values, vectors = _eigh(op)
    else:
        try:
            values, vectors = spla.eigsh(sp.csr_matrix(op.matrix), k=1, which="SA", tol=settings.eigen_tol)
        except spla.ArpackNoConvergence as e:
            logger.error(f"iterative eigensolve did not converge: {e}")
            raise ConvergenceFailure(str(e))
    flat = vectors[:, 0] / np.sqrt(op.weights)
    return float(values[0]), Section.from_array(op.layout, flat)


def _random_section(layout: FiberLayout, rng: np.random.Generator) -> Section:
    flat = rng.normal(size=layout.size) + 1j * rng.normal(size=layout.size)
    return Section.from_array(layout, flat)


def boundedness_report(mg: MeasuredGraph, bundle: HermitianBundle, trials: int = 20,
                       seed: Optional[int] = None) -> BoundednessReport:
    """B, spectral bounds for Phi and -Phi, and the worst identity residual on random sections"""
    rng = np.random.default_rng(settings.default_seed if seed is None else seed)
    B = B_function(mg, bundle)
    flipped = flip_connection(bundle)
    plus = spectrum(assemble(mg, bundle), full=False)
    minus = spectrum(assemble(mg, flipped), full=False)
    layout = fiber_layout(mg.graph, bundle)
    worst = 0.0
    for _ in range(trials):
        worst = max(worst, heart_residual(mg, bundle, _random_section(layout, rng)))
    logger.info(f"B_max={max(B.values(), default=0.0):.6g} spectrum=({plus.lambda_min:.6g}, {plus.lambda_max:.6g}) "
                f"flipped=({minus.lambda_min:.6g}, {minus.lambda_max:.6g})")
    return BoundednessReport(B=B, B_max=max(B.values(), default=0.0), spectrum=plus,
                             flipped_spectrum=minus, heart_residual=worst, trials=trials)


def finiteness_profile(mg: MeasuredGraph) -> np.ndarray:
    """sum_y b(x,y)^2 / mu(y): squared l2(mu) norm of y -> b(x,y)/mu(y)"""
    B = adjacency_matrix(mg.graph)
    return np.asarray(B.multiply(B) @ (1.0 / mg.mu_vector())).ravel()


def _symmetrized_lambda0(matrix: sp.spmatrix, mu: np.ndarray) -> float:
    root = np.sqrt(mu)
    S = sp.diags(1.0 / root) @ matrix @ sp.diags(1.0 / root)
    if S.shape[0] <= settings.dense_eigen_limit:
        return float(np.linalg.eigvalsh(S.toarray())[0])
    try:
        return float(spla.eigsh(S.tocsr(), k=1, which="SA", tol=settings.eigen_tol,
                                return_eigenvectors=False)[0])
    except spla.ArpackNoConvergence as e:
        logger.error(f"iterative eigensolve did not converge: {e}")
        raise ConvergenceFailure(str(e))


def monotone_resolvent_experiment(mg: MeasuredGraph, alpha: float, f: VertexFunction,
                                  n_list: Sequence[int]) -> ResolventTable:
    """(H_n + alpha)^-1 f for the truncated potentials V_n = max(V, -n), n ascending"""
    values = np.asarray(as_vertex_array(mg.graph, f, "f"), dtype=float)
    if np.any(values < 0):
        raise NegativeFunction("monotone resolvent experiment needs f >= 0")
    levels = sorted(int(n) for n in n_list)
    if not levels or levels[0] < 0:
        raise BadParameter("truncation levels must be nonnegative integers")
    mu = mg.mu_vector()
    V = mg.V_vector()
    rows = []
    for n in levels:
        A = scalar_form_matrix(mg, np.maximum(V, -float(n)))
        lam0 = _symmetrized_lambda0(A, mu)
        if alpha + lam0 <= settings.alpha_margin:
            raise AlphaTooSmall(f"alpha={alpha} does not exceed -lambda0={-lam0} at truncation n={n}")
        try:
            g = spla.spsolve((A + alpha * sp.diags(mu)).tocsc(), mu * values)
        except RuntimeError as e:
            logger.error(f"resolvent solve failed at n={n}: {e}")
            raise SolveFailure(str(e))
        rows.append(np.atleast_1d(np.asarray(g, dtype=float)))
    decrease = 0.0
    for previous, current in zip(rows, rows[1:]):
        decrease = max(decrease, float(np.max(previous - current)))
    return ResolventTable(levels=levels, values=[r.tolist() for r in rows], max_decrease=decrease,
                          monotone=decrease <= settings.identity_tol * max(1.0, float(np.max(np.abs(rows[-1])))))


def hardy_weight_check(mg: MeasuredGraph, w: VertexFunction, subset: Optional[Sequence[str]] = None) -> HardyCheck:
    """Bottom eigenvalue of the energy form minus sum |phi|^2 w over functions supported in ``subset``"""
    if np.any(mg.V_vector() != 0):
        raise BadParameter("Hardy check expects V = 0")
    weight = np.asarray(as_vertex_array(mg.graph, w, "w"), dtype=float)
    if np.any(weight < 0):
        raise NegativeWeight("Hardy weights are nonnegative")
    matrix = (laplacian_matrix(mg.graph) - sp.diags(weight)).tocsr()
    if subset is not None:
        idx = mg.graph.index()
        keep = [idx[str(v)] for v in subset]
        matrix = matrix[keep][:, keep]
    if matrix.shape[0] <= settings.dense_eigen_limit:
        margin = float(np.linalg.eigvalsh(matrix.toarray())[0])
    else:
        try:
            margin = float(spla.eigsh(matrix, k=1, which="SA", tol=settings.eigen_tol,
                                      return_eigenvectors=False)[0])
        except spla.ArpackNoConvergence as e:
            raise ConvergenceFailure(str(e))
    return HardyCheck(is_hardy=margin >= -settings.inequality_tol, margin=margin)


def identity_suite(trials: int, seed: int, max_vertices: int = 50, max_dim: int = 3) -> IdentitySuiteReport:
    """Green, Kato, heart and subsolution checks over reproducible random instances"""
    rng = np.random.default_rng(seed)
    green = symmetry = heart = subsolution = form_operator = 0.0
    kato = np.inf
    for trial in range(trials):
        mg = random_instance(rng, max_vertices=max_vertices)
        dim = int(rng.integers(1, max_dim + 1))
        bundle = random_bundle(mg.graph, dim, seed=int(rng.integers(0, 2**31 - 1)))
        layout = fiber_layout(mg.graph, bundle)
        weights = layout.expand(mg.mu_vector())

        phi, f = _random_section(layout, rng), _random_section(layout, rng)
        residual = greens_residual(mg, bundle, phi, f)
        green = max(green, residual.value / residual.scale)
        symmetry = max(symmetry, residual.symmetry / residual.scale)

        op = assemble(mg, bundle)
        phi_flat = phi.to_array(layout)
        pairing = _weighted_inner(weights, phi_flat, op.matvec(phi_flat))
        form_value = form_qc(mg, bundle, phi, phi).value
        form_operator = max(form_operator, abs(pairing - form_value) / max(1.0, abs(form_value)))

        scales = rng.uniform(0.0, 2.0, size=mg.graph.size)
        aligned = Section(values={x: scales[i] * f.values[x] for i, x in enumerate(mg.graph.vertices)})
        kato = min(kato, kato_gap(mg, bundle, f, aligned))

        scalar = random_scalar_bundle(mg.graph, rng, mg.V)
        scalar_layout = fiber_layout(mg.graph, scalar)
        heart = max(heart, heart_residual(mg, scalar, _random_section(scalar_layout, rng)))
        heart = max(heart, heart_residual(mg, bundle, _random_section(layout, rng)))

        subsolution = max(subsolution, subsolution_check(mg, bundle).max_violation)
        logger.debug(f"identity trial {trial}: n={mg.graph.size} dim={dim}")
    logger.info(f"identity suite: trials={trials} green={green:.3g} kato_min={kato:.3g} heart={heart:.3g}")
    return IdentitySuiteReport(trials=trials, seed=seed, green_max=green, symmetry_max=symmetry,
                               kato_min=float(kato) if trials else 0.0, heart_max=heart,
                               subsolution_max=subsolution, form_operator_max=form_operator)
