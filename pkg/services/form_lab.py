"""
Finite quadratic forms on subsets: Dirichlet/Neumann restrictions, resolvents,
approximating forms, Beurling-Deny checks, 1-excessive functions, capacities and
equilibrium potentials, boundary capacity, recurrence cutoffs and the measure criterion.

A form is stored through its Euclidean matrix A, Q(f, g) = <f, A g>; the associated
operator on l2(U, mu) is D^-1 A, so the resolvent solves (A + alpha D) g = D f.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from config.settings import settings
from models.bundle import HermitianBundle
from models.form import (
    BeurlingDenyReport,
    BoundaryCapacityResult,
    CapacityResult,
    ExcessiveCertificate,
    FiniteForm,
    FormComparison,
    FormMode,
    RecurrenceResult,
)
from models.graph import Exhaustion, MeasuredGraph, Path
from services.bundle_service import w_min_vector
from services.errors import (
    AlphaTooSmall,
    BadParameter,
    ConvergenceFailure,
    DimensionMismatch,
    EmptySubset,
    InvalidPath,
    NegativeF,
    NegativeH,
    NotExcessive,
    SolveFailure,
    SupportViolation,
    UnknownVertex,
    ZeroDegree,
)
from services.graph_builder import VertexFunction, as_vertex_array, validate_exhaustion, validate_path
from services.operator_engine import assemble, scalar_form_matrix

logger = logging.getLogger(__name__)

Solver = Callable[[np.ndarray], np.ndarray]


def _subset(mg: MeasuredGraph, U: Iterable) -> tuple:
    requested = {str(v) for v in U}
    unknown = requested - set(mg.graph.vertices)
    if unknown:
        raise UnknownVertex(f"unknown vertices {sorted(unknown)[:5]}")
    if not requested:
        raise EmptySubset("forms need a nonempty subset")
    return tuple(v for v in mg.graph.vertices if v in requested)


def _positions(mg: MeasuredGraph, subset: Sequence[str]) -> List[int]:
    idx = mg.graph.index()
    return [idx[v] for v in subset]


def _make_form(mg: MeasuredGraph, subset: tuple, mode: FormMode, matrix) -> FiniteForm:
    mu = mg.mu_vector()[_positions(mg, subset)]
    return FiniteForm(host=mg, subset=subset, mode=mode, matrix=sp.csr_matrix(matrix), mu=mu)


def _on_subset(mg: MeasuredGraph, subset: Sequence[str], f, name: str = "function") -> np.ndarray:
    """Values of f on ``subset``: f may be a mapping, a host-ordered array or a subset-ordered array"""
    if isinstance(f, Mapping):
        try:
            return np.array([f[v] if v in f else f[int(v)] for v in subset])
        except (KeyError, ValueError):
            raise DimensionMismatch(f"{name} is not defined on the whole subset")
    values = np.asarray(f)
    if values.shape == (len(subset),):
        return values
    if values.shape == (mg.graph.size,):
        return values[_positions(mg, subset)]
    raise DimensionMismatch(f"{name} has shape {values.shape}; expected ({len(subset)},) or ({mg.graph.size},)")


def neumann_form(mg: MeasuredGraph, U: Iterable) -> FiniteForm:
    """Induced energy on U plus the killing term (V + d_U) mu, d_U = mu^-1 sum_{y not in U} b(x,y)"""
    subset = _subset(mg, U)
    inside = set(subset)
    local = {v: i for i, v in enumerate(subset)}
    n = len(subset)
    diagonal = np.array([mg.V[v] * mg.mu[v] for v in subset])
    rows, cols, data = [], [], []
    for u, v, w in mg.graph.edges:
        if u in inside and v in inside:
            i, j = local[u], local[v]
            rows += [i, j]
            cols += [j, i]
            data += [-w, -w]
            diagonal[i] += w
            diagonal[j] += w
        elif u in inside:
            diagonal[local[u]] += w
        elif v in inside:
            diagonal[local[v]] += w
    matrix = sp.coo_matrix((data, (rows, cols)), shape=(n, n)) + sp.diags(diagonal)
    return _make_form(mg, subset, FormMode.NEUMANN, matrix)


def dirichlet_form(mg: MeasuredGraph, U: Iterable) -> FiniteForm:
    """Host form on functions extended by zero off U"""
    subset = _subset(mg, U)
    keep = _positions(mg, subset)
    matrix = scalar_form_matrix(mg)[keep][:, keep]
    return _make_form(mg, subset, FormMode.DIRICHLET, matrix)


def free_form(mg: MeasuredGraph, U: Iterable) -> FiniteForm:
    """Energy of the induced subgraph on U with potential V and no killing term"""
    subset = _subset(mg, U)
    inside = set(subset)
    local = {v: i for i, v in enumerate(subset)}
    n = len(subset)
    diagonal = np.array([mg.V[v] * mg.mu[v] for v in subset])
    rows, cols, data = [], [], []
    for u, v, w in mg.graph.edges:
        if u in inside and v in inside:
            i, j = local[u], local[v]
            rows += [i, j]
            cols += [j, i]
            data += [-w, -w]
            diagonal[i] += w
            diagonal[j] += w
    matrix = sp.coo_matrix((data, (rows, cols)), shape=(n, n)) + sp.diags(diagonal)
    return _make_form(mg, subset, FormMode.FREE, matrix)


def host_form(mg: MeasuredGraph) -> FiniteForm:
    return _make_form(mg, mg.graph.vertices, FormMode.FULL, scalar_form_matrix(mg))


def form_from_operator(mg: MeasuredGraph, bundle: HermitianBundle) -> FiniteForm:
    """Form of a scalar magnetic operator: A = D M, assembled from the operator engine"""
    if any(d != 1 for d in bundle.dim.values()):
        raise DimensionMismatch("operator forms are built for scalar bundles only")
    op = assemble(mg, bundle)
    root = sp.diags(np.sqrt(op.weights))
    matrix = root @ sp.csr_matrix(op.matrix) @ root
    if np.iscomplexobj(matrix.data) and abs(matrix.imag).max() <= settings.hermitian_tol:
        matrix = matrix.real
    return _make_form(mg, mg.graph.vertices, FormMode.FULL, matrix)


def _gershgorin_floor(form: FiniteForm) -> float:
    A = form.matrix
    diagonal = np.real(A.diagonal())
    off = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(A.diagonal())
    c = float(np.min(diagonal - off))
    return c / float(np.max(form.mu)) if c >= 0 else c / float(np.min(form.mu))


def form_lambda0(form: FiniteForm) -> float:
    """Bottom of the spectrum of D^-1 A (cached on the form)"""
    if form._lambda0 is None:
        root = sp.diags(1.0 / np.sqrt(form.mu))
        S = (root @ form.matrix @ root).tocsr()
        if form.size <= settings.dense_eigen_limit:
            value = float(np.linalg.eigvalsh(S.toarray())[0])
        else:
            try:
                value = float(spla.eigsh(S, k=1, which="SA", tol=settings.eigen_tol,
                                         return_eigenvectors=False)[0])
            except spla.ArpackNoConvergence as e:
                logger.error(f"iterative eigensolve did not converge: {e}")
                raise ConvergenceFailure(str(e))
        form._lambda0 = value
    return form._lambda0


def alpha_floor(form: FiniteForm) -> float:
    """Smallest admissible resolvent parameter, max(0, -lambda0)"""
    return max(0.0, -form_lambda0(form))


def _check_alpha(form: FiniteForm, alpha: float) -> None:
    if alpha + _gershgorin_floor(form) > settings.alpha_margin:
        return
    lam0 = form_lambda0(form)
    if alpha + lam0 <= settings.alpha_margin:
        raise AlphaTooSmall(f"alpha={alpha} must exceed -lambda0={-lam0} by {settings.alpha_margin}")


def _solver(form: FiniteForm, alpha: float) -> Solver:
    """Factorized solve of (A + alpha D) g = D f"""
    _check_alpha(form, alpha)
    system = (form.matrix + alpha * sp.diags(form.mu)).tocsc()
    try:
        lu = spla.splu(system)
    except RuntimeError as e:
        logger.error(f"factorization failed for alpha={alpha}: {e}")
        raise SolveFailure(str(e))

    def solve(f: np.ndarray) -> np.ndarray:
        rhs = form.mu * f
        g = lu.solve(np.asarray(rhs, dtype=np.result_type(rhs, system.dtype)))
        residual = np.linalg.norm(system @ g - rhs)
        if residual > settings.solve_tol * max(np.linalg.norm(rhs), 1.0):
            logger.error(f"resolvent residual {residual} above tolerance")
            raise SolveFailure(f"resolvent residual {residual} above tolerance")
        return g

    return solve


def resolvent(form: FiniteForm, alpha: float, f) -> np.ndarray:
    """G_alpha f = (L + alpha)^-1 f in l2(U, mu)"""
    values = _on_subset(form.host, form.subset, f, "f")
    return _solver(form, alpha)(values)


def approximating_form(form: FiniteForm, alpha: float, f) -> float:
    """alpha <f - alpha G_alpha f, f>_mu; nondecreasing in alpha above alpha_floor(form)"""
    values = _on_subset(form.host, form.subset, f, "f")
    g = _solver(form, alpha)(values)
    return float(np.real(alpha * np.vdot(values - alpha * g, form.mu * values)))


def resolvent_identity_residual(form: FiniteForm, alpha: float, beta: float, f) -> float:
    """Relative size of G_alpha f - G_beta f - (beta - alpha) G_beta G_alpha f"""
    values = _on_subset(form.host, form.subset, f, "f")
    G_alpha, G_beta = _solver(form, alpha), _solver(form, beta)
    g_alpha = G_alpha(values)
    defect = g_alpha - G_beta(values) - (beta - alpha) * G_beta(g_alpha)
    return float(np.linalg.norm(defect) / max(1.0, np.linalg.norm(g_alpha)))


def strong_continuity_profile(form: FiniteForm, f, alphas: Sequence[float] = (10.0, 1e2, 1e3, 1e4)) -> List[float]:
    """||alpha G_alpha f - f||_mu along increasing alpha"""
    values = _on_subset(form.host, form.subset, f, "f")
    profile = []
    for alpha in sorted(alphas):
        defect = alpha * _solver(form, alpha)(values) - values
        profile.append(float(np.sqrt(np.real(np.vdot(defect, form.mu * defect)))))
    return profile


def beurling_deny_check(form: FiniteForm, trials: int = 20, seed: Optional[int] = None,
                        alphas: Optional[Sequence[float]] = None) -> BeurlingDenyReport:
    """Largest negative entry of G_alpha f (f >= 0) and largest excess of alpha G_alpha f over 1 (0 <= f <= 1)"""
    rng = np.random.default_rng(settings.default_seed if seed is None else seed)
    if alphas is None:
        floor = alpha_floor(form)
        alphas = [a for a in (0.1, 1.0, 10.0) if a - floor > settings.alpha_margin] or [floor + 1.0]
    n = form.size
    positivity = markov = 0.0
    for alpha in alphas:
        solve = _solver(form, alpha)
        probes = [np.eye(n)[k] for k in range(n)] + [np.ones(n)]
        probes += [rng.random(n) for _ in range(trials)]
        for f in probes:
            g = solve(f)
            positivity = max(positivity, float(np.max(-np.real(g))), float(np.max(np.abs(np.imag(g)))))
            markov = max(markov, float(np.max(alpha * np.real(g) - 1.0)))
    tol = settings.inequality_tol
    return BeurlingDenyReport(alphas=[float(a) for a in alphas], trials=trials,
                              positivity_violation=max(positivity, 0.0), markov_violation=max(markov, 0.0),
                              positivity_preserving=positivity <= tol, markovian=markov <= tol)


def _certify(form: FiniteForm, h: np.ndarray, betas: Sequence[float]) -> ExcessiveCertificate:
    worst = -np.inf
    for beta in betas:
        if beta <= 0:
            raise BadParameter(f"betas must be positive, got {beta}")
        worst = max(worst, float(np.max(beta * np.real(_solver(form, beta + 1.0)(h)) - h)))
    return ExcessiveCertificate(h=[float(x) for x in h], tested_betas=[float(b) for b in betas],
                                max_violation=worst, valid=worst <= settings.inequality_tol)


def excessive_check(mg: MeasuredGraph, U: Iterable, h, betas: Optional[Sequence[float]] = None) -> ExcessiveCertificate:
    """max over beta and vertices of beta G_{beta+1} h - h for the Neumann form on U"""
    form = neumann_form(mg, U)
    values = np.asarray(_on_subset(mg, form.subset, h, "h"), dtype=float)
    if np.any(values < 0):
        raise NegativeH("1-excessive candidates are nonnegative")
    return _certify(form, values, settings.excessive_betas if betas is None else betas)


def excessive_function(form: FiniteForm, g=None) -> np.ndarray:
    """G_1 g for strictly positive g (default 1), scaled to maximum 1"""
    values = np.ones(form.size) if g is None else np.asarray(_on_subset(form.host, form.subset, g, "g"), dtype=float)
    if np.any(values <= 0):
        raise BadParameter("excessive functions are generated from strictly positive g")
    h = np.real(_solver(form, 1.0)(values))
    return h / np.max(h)


def _capacity_parts(mg: MeasuredGraph, domain: Optional[Iterable], h, U: Iterable):
    form = neumann_form(mg, mg.graph.vertices if domain is None else domain)
    values = np.asarray(_on_subset(mg, form.subset, h, "h"), dtype=float)
    if np.any(values < 0):
        raise NegativeH("1-excessive candidates are nonnegative")
    targets = {str(v) for v in U}
    outside = targets - set(form.subset)
    if outside:
        raise UnknownVertex(f"targets {sorted(outside)[:5]} are outside the form domain")
    on = np.array([v in targets for v in form.subset])
    system = (form.matrix + sp.diags(form.mu)).tocsr()
    return form, values, on, system


def _ensure_excessive(form: FiniteForm, h: np.ndarray, certificate: Optional[ExcessiveCertificate]) -> None:
    if certificate is None:
        certificate = _certify(form, h, settings.excessive_betas)
    if not certificate.valid:
        raise NotExcessive(f"h is not 1-excessive (violation {certificate.max_violation:.3g})")


def _solve_block(system: sp.csr_matrix, rows: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    block = system[rows][:, rows].tocsc()
    try:
        return np.atleast_1d(spla.spsolve(block, rhs))
    except RuntimeError as e:
        logger.error(f"capacity solve failed: {e}")
        raise SolveFailure(str(e))


def capacity(mg: MeasuredGraph, domain: Optional[Iterable], h, U: Iterable,
             certificate: Optional[ExcessiveCertificate] = None) -> CapacityResult:
    """cap_h(U) with equilibrium potential h_U, obtained by fixing f = h on U"""
    form, values, on, system = _capacity_parts(mg, domain, h, U)
    target = tuple(v for v, flag in zip(form.subset, on) if flag)
    if not on.any():
        return CapacityResult(value=0.0, equilibrium=[0.0] * form.size, target=target,
                              sandwich_violation=0.0, verified=True)
    _ensure_excessive(form, values, certificate)
    f = np.where(on, values, 0.0)
    free = np.flatnonzero(~on)
    if free.size:
        fixed = np.flatnonzero(on)
        f[free] = _solve_block(system, free, -(system[free][:, fixed] @ values[fixed]))
    value = float(f @ (system @ f))
    lower = np.where(on, values, 0.0)
    violation = max(0.0, float(np.max(lower - f)), float(np.max(f - values)), float(np.max(-f)))
    verified = violation <= settings.inequality_tol
    if not verified:
        logger.warning(f"equilibrium potential leaves the sandwich 1_U h <= h_U <= h by {violation:.3g}")
    return CapacityResult(value=value, equilibrium=f.tolist(), target=target,
                          sandwich_violation=violation, verified=verified)


def capacity_alt(mg: MeasuredGraph, h, U: Iterable, domain: Optional[Iterable] = None,
                 certificate: Optional[ExcessiveCertificate] = None) -> float:
    """inf ||h - f||_Q^2 over f vanishing on U"""
    form, values, on, system = _capacity_parts(mg, domain, h, U)
    if not on.any():
        return 0.0
    _ensure_excessive(form, values, certificate)
    f = np.zeros(form.size)
    free = np.flatnonzero(~on)
    if free.size:
        f[free] = _solve_block(system, free, (system @ values)[free])
    gap = values - f
    return float(gap @ (system @ gap))


def capacity_bruteforce(mg: MeasuredGraph, domain: Optional[Iterable], h, U: Iterable,
                        tol: float = 1e-14) -> CapacityResult:
    """Projected gradient on min ||f||_Q^2 subject to f >= 1_U h; small instances only"""
    form, values, on, system = _capacity_parts(mg, domain, h, U)
    if form.size > settings.bruteforce_max_free:
        raise BadParameter(f"brute-force oracle handles at most {settings.bruteforce_max_free} variables")
    A = system.toarray()
    lower = np.where(on, values, 0.0)
    step = 1.0 / (2.0 * np.linalg.eigvalsh(A)[-1])
    f = np.maximum(values, lower)
    for _ in range(settings.bruteforce_max_iter):
        updated = np.maximum(f - step * 2.0 * (A @ f), lower)
        if np.max(np.abs(updated - f)) < tol:
            f = updated
            break
        f = updated
    target = tuple(v for v, flag in zip(form.subset, on) if flag)
    violation = max(0.0, float(np.max(lower - f)))
    return CapacityResult(value=float(f @ A @ f), equilibrium=f.tolist(), target=target,
                          sandwich_violation=violation, verified=violation <= settings.inequality_tol)


def boundary_capacity(mg: MeasuredGraph, h, ex: Exhaustion) -> BoundaryCapacityResult:
    """cap_h(X minus K_n) along the exhaustion"""
    validate_exhaustion(mg.graph, ex)
    form = neumann_form(mg, mg.graph.vertices)
    values = np.asarray(_on_subset(mg, form.subset, h, "h"), dtype=float)
    if np.any(values < 0):
        raise NegativeH("1-excessive candidates are nonnegative")
    certificate = _certify(form, values, settings.excessive_betas)
    if not certificate.valid:
        raise NotExcessive(f"h is not 1-excessive (violation {certificate.max_violation:.3g})")

    def shell(K: Sequence[str]) -> float:
        inside = set(K)
        complement = [v for v in mg.graph.vertices if v not in inside]
        return capacity(mg, None, values, complement, certificate=certificate).value

    workers = max(1, settings.threads)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            capacities = list(pool.map(shell, ex.sets))
    else:
        capacities = [shell(K) for K in ex.sets]
    nonincreasing = all(b <= a + settings.identity_tol * max(1.0, a) for a, b in zip(capacities, capacities[1:]))
    if not nonincreasing:
        logger.warning("boundary capacity sequence increases along the exhaustion")
    return BoundaryCapacityResult(sizes=[len(K) for K in ex.sets], values=capacities, nonincreasing=nonincreasing)


def recurrence_probe(mg: MeasuredGraph, f: VertexFunction, levels: Optional[Sequence[float]] = None) -> RecurrenceResult:
    """Energies Q_0(1 - e_n) of the cutoffs e_n = (n + 1 - f)_+ min 1"""
    if np.any(mg.V_vector() != 0):
        raise BadParameter("recurrence probe expects V = 0")
    values = np.asarray(as_vertex_array(mg.graph, f, "f"), dtype=float)
    if np.any(values < 0):
        raise NegativeF("recurrence probe needs f >= 0")
    if levels is None:
        levels = list(range(1, max(1, int(np.floor(values.max()))) + 1))
    idx = mg.graph.index()
    heads = np.array([idx[u] for u, _, _ in mg.graph.edges], dtype=int)
    tails = np.array([idx[v] for _, v, _ in mg.graph.edges], dtype=int)
    weights = np.array([w for _, _, w in mg.graph.edges])
    energies = []
    for n in levels:
        cutoff = np.minimum(np.maximum(n + 1.0 - values, 0.0), 1.0)
        remainder = 1.0 - cutoff
        energies.append(float(np.sum(weights * (remainder[heads] - remainder[tails]) ** 2)) if weights.size else 0.0)
    decreasing = all(b <= a + settings.identity_tol for a, b in zip(energies, energies[1:]))
    return RecurrenceResult(levels=[float(n) for n in levels], energies=energies, decreasing=decreasing)


def measure_criterion_partial_sums(mg: MeasuredGraph, w_min: Union[HermitianBundle, VertexFunction],
                                   alpha: float, p: Union[Path, Sequence], N: int) -> np.ndarray:
    """S_n = sum_{k=1..n} mu(x_k) prod_{j<k} (1 + mu(x_j)(w_min(x_j) - alpha)/deg(x_j))^2"""
    vertices = p.vertices if isinstance(p, Path) else tuple(str(x) for x in p)
    if N < 1 or len(vertices) < N + 1:
        raise InvalidPath(f"path needs at least {N + 1} vertices, got {len(vertices)}")
    if not validate_path(mg.graph, vertices):
        raise InvalidPath("consecutive path vertices must be neighbors")
    if isinstance(w_min, HermitianBundle):
        w = dict(zip(mg.graph.vertices, w_min_vector(mg.graph, w_min)))
    else:
        w = dict(zip(mg.graph.vertices, np.asarray(as_vertex_array(mg.graph, w_min, "w_min"), dtype=float)))
    deg = dict(zip(mg.graph.vertices, mg.graph.degrees()))
    sums = np.zeros(N)
    product = 1.0
    total = 0.0
    for k in range(1, N + 1):
        x = vertices[k - 1]
        if deg[x] <= 0:
            raise ZeroDegree(f"vertex {x} on the path has degree zero")
        product *= (1.0 + mg.mu[x] * (w[x] - alpha) / deg[x]) ** 2
        total += mg.mu[vertices[k]] * product
        sums[k - 1] = total
    return sums


def form_comparison(mg: MeasuredGraph, U: Iterable, f) -> FormComparison:
    """Dirichlet, Neumann and free values of f supported in U"""
    subset = _subset(mg, U)
    host_values = np.asarray(as_vertex_array(mg.graph, f, "f"))
    inside = set(subset)
    outside = [v for v, x in zip(mg.graph.vertices, host_values) if v not in inside and x != 0]
    if outside:
        raise SupportViolation(f"f does not vanish off U at {outside[:5]}")
    values = host_values[_positions(mg, subset)]
    return FormComparison(
        dirichlet_value=float(np.real(dirichlet_form(mg, subset).value(values))),
        neumann_value=float(np.real(neumann_form(mg, subset).value(values))),
        free_value=float(np.real(free_form(mg, subset).value(values))),
    )


def form_norm(form: FiniteForm, f) -> float:
    """||f||_Q = (Q(f) + ||f||_mu^2)^1/2"""
    values = _on_subset(form.host, form.subset, f, "f")
    return float(np.sqrt(max(form.norm_squared(values), 0.0)))


def lattice_energy_check(form: FiniteForm, f, g) -> float:
    """max(||f min g||_Q, ||f max g||_Q) - (||f||_Q + ||g||_Q)"""
    a = np.asarray(_on_subset(form.host, form.subset, f, "f"), dtype=float)
    b = np.asarray(_on_subset(form.host, form.subset, g, "g"), dtype=float)
    bound = form_norm(form, a) + form_norm(form, b)
    return max(form_norm(form, np.minimum(a, b)), form_norm(form, np.maximum(a, b))) - bound


def positivity_lemma_check(form: FiniteForm, f, g) -> float:
    """Q(f, g) for f >= 0 and 0 <= g <= 1 with g = 1 where f > 0"""
    a = np.asarray(_on_subset(form.host, form.subset, f, "f"), dtype=float)
    b = np.asarray(_on_subset(form.host, form.subset, g, "g"), dtype=float)
    if np.any(a < 0) or np.any(b < 0) or np.any(b > 1) or np.any(b[a > 0] != 1):
        raise BadParameter("positivity lemma needs f >= 0, 0 <= g <= 1 and g = 1 on {f > 0}")
    return float(np.real(form.value(a, b)))
