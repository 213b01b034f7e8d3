"""
Filter learning: tight frames by split Bregman with a constrained A-step,
the penalty relaxation, bi-frames in the redundant case (orthonormal
decomposition filters, designed reconstruction filters) and in the
critically sampled case (joint learning), and the lowpass constraint.
"""
# stdlib
import csv
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple
# lib
import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg
# local
from adaframe.controllers import LearnConfigValidator
from adaframe.controllers.exceptions import (
    ConstraintStalled,
    DimensionMismatch,
    Diverged,
    InconsistentSystem,
    InvalidLearnConfig,
    LowpassDegenerate,
    NotConverged,
    NumericalFailure,
    UnsupportedCase,
)
from adaframe.prox import (
    SolverBudget,
    cg_solve,
    constrained_A_step,
    hard,
    huber_prox,
    lowpass_procrustes,
    procrustes,
    restore_feasibility,
    shrink,
    unit_sphere_A_step,
)
from adaframe.tensor import FilterBank, PatchData
from adaframe.uep import (
    bank_pattern,
    constraint_residual,
    h_matrix,
    penalty_value_grad,
    uep_lhs,
)
from adaframe.wavelets import get_bank


__all__ = [
    'LearnConfig',
    'LearnTrace',
    'design_recon_filters',
    'enforce_lowpass',
    'init_bank',
    'learn_best_of',
    'learn_biframe_critical',
    'learn_biframe_decomp',
    'learn_frame',
    'learn_frame_penalty',
    'sparsity_objective',
]

LOGGER = 'adaframe.learn'

DIVERGENCE_FACTOR = 1e3
RECON_TOLERANCE = 1e-8
CRITICAL_STALL = 1e-2
CRITICAL_WARN = 1e-4
LOWPASS_TOLERANCE = 1e-10
INIT_ATTEMPTS = 10
STALLED_STEPS = 5
DENSE_LIMIT = 4_000_000


@dataclass
class LearnConfig:
    m: int
    support: Tuple[int, ...]
    M: Optional[Tuple[int, ...]] = None
    eta: float = 1e2
    lam: float = 1e3
    sparsity: str = 'l1'
    huber_delta: float = 1e-3
    init: str = 'randomOrthogonal'
    init_name: Optional[str] = None
    init_bank: Optional[FilterBank] = None
    max_outer: int = 200
    rel_tolerance: float = 1e-6
    lowpass_constraint: bool = False
    seed: int = 0
    restarts: int = 1
    constraint_tolerance: float = 1e-6
    channel_support: int = 0
    channel_sampling: int = 0
    a_step_outer: int = 3
    a_step_inner: int = 10
    cg_iterations: int = 50
    cg_tolerance: float = 1e-10
    alpha: float = 1.0

    def __post_init__(self):
        self.support = tuple(int(r) for r in self.support)
        self.M = tuple(int(k) for k in self.M) if self.M is not None else (1,) * len(self.support)
        success, errors = LearnConfigValidator(vars(self))()
        if not success:
            raise InvalidLearnConfig('; '.join(errors))

    @property
    def ext_support(self) -> Tuple[int, ...]:
        return ((self.channel_support,) if self.channel_support else ()) + self.support

    @property
    def n_taps(self) -> int:
        return int(np.prod(self.ext_support))

    @property
    def cg_budget(self) -> SolverBudget:
        return SolverBudget(self.cg_iterations, self.cg_tolerance)


@dataclass
class LearnTrace:
    """
    Per-iteration record. objective is sum ||W_A x||_{1,1} of the iterate;
    surrogate is the quantity the learner actually minimizes when that differs.
    """
    objective: List[float] = field(default_factory=list)
    residual: List[float] = field(default_factory=list)
    rel_change: List[float] = field(default_factory=list)
    accepted: List[bool] = field(default_factory=list)
    surrogate: List[float] = field(default_factory=list)

    def record(self, objective, residual, rel_change, accepted=True, surrogate=None):
        self.objective.append(float(objective))
        self.residual.append(float(residual))
        self.rel_change.append(float(rel_change))
        self.accepted.append(bool(accepted))
        self.surrogate.append(float(objective if surrogate is None else surrogate))

    def __len__(self):
        return len(self.objective)

    def accepted_objectives(self) -> List[float]:
        return [o for o, a in zip(self.objective, self.accepted) if a]

    @property
    def best_objective(self) -> float:
        return min(self.accepted_objectives())

    def to_csv(self, path):
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['iteration', 'objective', 'residual', 'relChange', 'accepted'])
            for i, row in enumerate(zip(self.objective, self.residual, self.rel_change, self.accepted)):
                writer.writerow([i, f'{row[0]:.17g}', f'{row[1]:.17g}', f'{row[2]:.17g}', int(row[3])])


def _l1(coeffs: List[np.ndarray]) -> float:
    return float(sum(np.abs(c).sum() for c in coeffs))


def sparsity_objective(A: FilterBank, batch) -> float:
    """sum over the batch of ||W_A x||_{1,1}."""
    data = PatchData.from_batch(batch, A)
    return _l1(data.coefficients(A.matrix))


def _threshold(cfg: LearnConfig) -> Callable[[np.ndarray, float], np.ndarray]:
    if cfg.sparsity == 'l0':
        return hard
    if cfg.sparsity == 'huber':
        return lambda y, a: huber_prox(y, a, cfg.huber_delta)
    return shrink


def _rel_change(new: np.ndarray, old: np.ndarray) -> float:
    return float(np.linalg.norm(new - old) / max(np.linalg.norm(old), np.finfo(float).tiny))


def _check_divergence(objective: float, initial: float):
    if not np.isfinite(objective) or objective > DIVERGENCE_FACTOR * max(initial, np.finfo(float).tiny):
        raise Diverged(objective)


def _order_by_tap_sum(*banks: FilterBank) -> List[FilterBank]:
    """
    Move the filter with the largest |tap sum| of the first bank to index 0
    and flag it lowpass; the other banks follow the same permutation.
    """
    lead = banks[0]
    sums = np.abs(lead.matrix.sum(axis=1))
    first = int(np.argmax(sums))
    order = [first] + [l for l in range(lead.m) if l != first]
    roles = ('lowpass',) + ('highpass',) * (lead.m - 1)
    return [replace(bank, taps=bank.taps[order], roles=roles) for bank in banks]


def _bank_for(cfg: LearnConfig, matrix: np.ndarray, kind: str) -> FilterBank:
    return FilterBank(
        taps=matrix.reshape((cfg.m,) + cfg.ext_support),
        M=cfg.M,
        kind=kind,
        channel_support=cfg.channel_support,
        channel_sampling=cfg.channel_sampling,
    )


def _random_orthogonal(cfg: LearnConfig, rng: np.random.Generator) -> np.ndarray:
    n_taps = cfg.n_taps
    if cfg.m > n_taps:
        raise UnsupportedCase(f'{cfg.m} orthogonal columns do not fit {n_taps} taps')
    Q, R = np.linalg.qr(rng.standard_normal((n_taps, n_taps)))
    Q = Q * np.sign(np.diag(R))
    return Q[:, :cfg.m].T / np.sqrt(n_taps)


def init_bank(cfg: LearnConfig, kind: str = 'frame') -> FilterBank:
    """
    Starting bank. Frames are projected onto the UEP set, so a random
    orthogonal start stays exact only when m equals the tap count and M
    divides the support.
    """
    logger = logging.getLogger(f'{LOGGER}.init_bank')
    if cfg.init == 'waveletBank':
        bank = get_bank(cfg.init_name, d=len(cfg.support), M=cfg.M)
        bank = replace(bank, kind=kind)
    elif cfg.init == 'explicit':
        bank = replace(cfg.init_bank, taps=np.array(cfg.init_bank.taps), kind=kind)
    else:
        rng = np.random.default_rng(cfg.seed)
        matrix = _random_orthogonal(cfg, rng)
        if cfg.lowpass_constraint and cfg.m > 1:
            matrix = _zero_mean_highpass(matrix)
        bank = _bank_for(cfg, matrix, kind)
        if kind == 'frame':
            pattern = bank_pattern(bank)
            for attempt in range(INIT_ATTEMPTS):
                try:
                    matrix = restore_feasibility(matrix, pattern, cfg.constraint_tolerance, cfg.lowpass_constraint)
                    break
                except NotConverged as e:
                    logger.debug(f'Projection of random start {attempt} stalled at {e.obj:.3e}')
                    matrix = _random_orthogonal(cfg, rng)
            else:
                raise NotConverged(constraint_residual(pattern, matrix), solution=matrix)
            bank = bank.with_matrix(matrix)
        return bank
    if bank.m != cfg.m or bank.ext_support != cfg.ext_support or bank.M != cfg.M:
        raise DimensionMismatch(f'initial bank taps {bank.taps.shape} for m={cfg.m}, support {cfg.ext_support}')
    if cfg.lowpass_constraint:
        bank = enforce_lowpass(bank)
    return bank


def _zero_mean_highpass(matrix: np.ndarray) -> np.ndarray:
    out = np.array(matrix, dtype=float)
    out[1:] -= out[1:].mean(axis=1, keepdims=True)
    return out


def enforce_lowpass(A: FilterBank) -> FilterBank:
    """Project filters 2..m onto zero tap sum and flag filter 1 as the lowpass."""
    if A.m < 2:
        raise UnsupportedCase('the lowpass constraint needs at least two filters')
    matrix = _zero_mean_highpass(A.matrix)
    if abs(matrix[0].sum()) < LOWPASS_TOLERANCE:
        raise LowpassDegenerate(float(matrix[0].sum()))
    return A.with_matrix(matrix, roles=('lowpass',) + ('highpass',) * (A.m - 1))


def _finish(bank: FilterBank, cfg: LearnConfig, *others: FilterBank) -> List[FilterBank]:
    if cfg.lowpass_constraint:
        lead_sum = abs(bank.matrix[0].sum())
        if lead_sum < LOWPASS_TOLERANCE:
            raise LowpassDegenerate(lead_sum)
        roles = ('lowpass',) + ('highpass',) * (bank.m - 1)
        return [replace(b, roles=roles) for b in (bank,) + others]
    return _order_by_tap_sum(bank, *others)


def learn_frame(batch, cfg: LearnConfig) -> Tuple[FilterBank, LearnTrace]:
    """
    Split Bregman for min sum ||W_A x||_1 subject to A satisfying the UEP.
    An iteration is accepted when the A-step leaves its start, which it only
    does for a feasible point of no larger quadratic objective; the trace
    surrogate is that quadratic at the returned point. Returns the accepted
    iterate with the smallest objective. A run of STALLED_STEPS rejected
    A-steps ends the loop, a stalled step alone does not.
    """
    logger = logging.getLogger(f'{LOGGER}.learn_frame')
    A = init_bank(cfg, 'frame')
    data = PatchData.from_batch(batch, A)
    pattern = bank_pattern(A)
    threshold = _threshold(cfg)
    level = 1.0 / cfg.eta
    budget = SolverBudget(cfg.a_step_inner, cfg.constraint_tolerance)

    matrix = A.matrix
    coeffs = data.coefficients(matrix)
    initial = _l1(coeffs)
    trace = LearnTrace()
    trace.record(initial, constraint_residual(pattern, matrix), 0.0)
    best, best_objective = matrix, initial
    breg = [np.zeros_like(c) for c in coeffs]
    logger.info(f'Learning {cfg.m} filters of support {cfg.ext_support}, initial objective {initial:.6g}')

    stalled = 0
    for iteration in range(1, cfg.max_outer + 1):
        D = [threshold(c + b, level) for c, b in zip(coeffs, breg)]
        step = constrained_A_step(
            data, D, breg, A.with_matrix(matrix), budget,
            outer=cfg.a_step_outer,
            lowpass=cfg.lowpass_constraint,
        )
        new = step.matrix
        accepted = not np.array_equal(new, matrix)
        coeffs = data.coefficients(new)
        surrogate = sum(float(np.sum((c - d + b) ** 2)) for c, d, b in zip(coeffs, D, breg))
        breg = [b + c - d for b, c, d in zip(breg, coeffs, D)]
        objective = _l1(coeffs)
        _check_divergence(objective, initial)
        change = _rel_change(new, matrix)
        if accepted and objective < best_objective:
            best, best_objective = new, objective
        trace.record(objective, constraint_residual(pattern, new), change, accepted, surrogate=surrogate)
        logger.debug(f'iteration {iteration}: objective {objective:.6g}, change {change:.3e}, accepted {accepted}')
        matrix = new
        stalled = 0 if accepted else stalled + 1
        if stalled >= STALLED_STEPS or (accepted and change < cfg.rel_tolerance):
            break

    bank, = _finish(A.with_matrix(best), cfg)
    logger.info(f'Finished after {len(trace) - 1} iterations, objective {best_objective:.6g}')
    return bank, trace


def learn_frame_penalty(batch, cfg: LearnConfig) -> Tuple[FilterBank, LearnTrace]:
    """
    Backtracking gradient descent on the Huber-smoothed penalty objective
    sum ||W_A x||_1 + eta sum_k (Tr(AA^T, k) - delta_k)^2. The constraint is
    only enforced approximately; the trace reports its residual.
    """
    logger = logging.getLogger(f'{LOGGER}.learn_frame_penalty')
    if len(cfg.M) != 1 or cfg.M != (1,) or cfg.channel_support:
        raise UnsupportedCase('the penalty formulation is defined for d = 1, M = 1')
    A = init_bank(cfg, 'frame')
    data = PatchData.from_batch(batch, A)
    pattern = bank_pattern(A)

    def evaluate(matrix):
        value, grad = penalty_value_grad(A.with_matrix(matrix), data, cfg.eta, cfg.huber_delta)
        return value, grad.reshape(matrix.shape)

    matrix = A.matrix
    value, grad = evaluate(matrix)
    trace = LearnTrace()
    trace.record(_l1(data.coefficients(matrix)), constraint_residual(pattern, matrix), 0.0, surrogate=value)
    step = 1.0
    for iteration in range(1, cfg.max_outer + 1):
        grad_sq = float(np.sum(grad * grad))
        if grad_sq == 0.0:
            break
        while step > 1e-20:
            candidate = matrix - step * grad
            cand_value, cand_grad = evaluate(candidate)
            if cand_value <= value - 1e-4 * step * grad_sq:
                break
            step *= 0.5
        else:
            logger.debug(f'Line search exhausted at iteration {iteration}')
            break
        change = _rel_change(candidate, matrix)
        matrix, value, grad = candidate, cand_value, cand_grad
        step *= 2.0
        trace.record(
            _l1(data.coefficients(matrix)),
            constraint_residual(pattern, matrix),
            change,
            surrogate=value,
        )
        if change < cfg.rel_tolerance:
            break
    bank, = _finish(A.with_matrix(matrix), cfg)
    return bank, trace


def learn_biframe_decomp(batch, cfg: LearnConfig) -> Tuple[FilterBank, LearnTrace]:
    """
    Redundant bi-frame decomposition filters with A^T A = I: split Bregman
    with a per-filter CG solve of (eta X^T X + lam I) a = eta X^T (d - f) + lam (p - c)
    and a Procrustes step for the orthonormal copy P.
    """
    logger = logging.getLogger(f'{LOGGER}.learn_biframe_decomp')
    if cfg.m > cfg.n_taps:
        raise UnsupportedCase(f'{cfg.m} orthonormal filters do not fit {cfg.n_taps} taps')
    A = init_bank(cfg, 'biframe_decomp')
    data = PatchData.from_batch(batch, A)
    project = lowpass_procrustes if cfg.lowpass_constraint and cfg.m > 1 else procrustes
    budget = cfg.cg_budget
    eta, lam = cfg.eta, cfg.lam

    P = project(A.matrix.T).T
    matrix = P.copy()
    dual_c = np.zeros_like(P)
    coeffs = data.coefficients(P)
    dual_f = [np.zeros_like(c) for c in coeffs]
    initial = _l1(coeffs)
    trace = LearnTrace()
    trace.record(initial, 0.0, 0.0)
    best, best_objective = P, initial

    def normal_operator(v):
        return eta * (data.gram @ v) + lam * v

    for iteration in range(1, cfg.max_outer + 1):
        coeffs = data.coefficients(matrix)
        D = [shrink(c + f, 1.0 / eta) for c, f in zip(coeffs, dual_f)]
        cross = data.correlate([d - f for d, f in zip(D, dual_f)])
        for l in range(cfg.m):
            rhs = eta * cross[:, l] + lam * (P[l] - dual_c[l])
            try:
                matrix[l] = cg_solve(normal_operator, rhs, budget, x0=matrix[l])
            except NotConverged as e:
                logger.debug(f'A-step CG for filter {l} stopped at residual {e.obj:.3e}')
                matrix[l] = e.solution
        P_old = P
        P = project((matrix + dual_c).T).T
        coeffs = data.coefficients(matrix)
        dual_f = [f + c - d for f, c, d in zip(dual_f, coeffs, D)]
        dual_c = dual_c + matrix - P
        objective = _l1(data.coefficients(P))
        _check_divergence(objective, initial)
        change = _rel_change(P, P_old)
        if objective < best_objective:
            best, best_objective = P, objective
        trace.record(objective, float(np.linalg.norm(matrix - P)), change)
        logger.debug(f'iteration {iteration}: objective {objective:.6g}, change {change:.3e}')
        if change < cfg.rel_tolerance:
            break

    bank, = _finish(A.with_matrix(best), cfg)
    return bank, trace


def _gradient_operator(bank: FilterBank) -> sparse.csr_matrix:
    """Forward differences inside the support of every filter, along every tap axis."""
    shape = bank.ext_support
    n_taps = bank.n_taps
    index = np.arange(n_taps).reshape(shape)
    blocks = []
    for axis in range(len(shape)):
        if shape[axis] < 2:
            continue
        head = np.take(index, range(1, shape[axis]), axis=axis).ravel()
        tail = np.take(index, range(0, shape[axis] - 1), axis=axis).ravel()
        rows = np.arange(head.size)
        block = sparse.csr_matrix(
            (np.concatenate([np.ones(head.size), -np.ones(tail.size)]),
             (np.concatenate([rows, rows]), np.concatenate([head, tail]))),
            shape=(head.size, n_taps),
        )
        blocks.append(block)
    if not blocks:
        return sparse.csr_matrix((0, bank.m * n_taps))
    single = sparse.vstack(blocks)
    return sparse.kron(sparse.identity(bank.m), single).tocsr()


def _tv_design(
        A: FilterBank,
        H: np.ndarray,
        f: np.ndarray,
        start: np.ndarray,
        alpha: float,
        sweeps: int,
        weight: float = 1.0,
) -> np.ndarray:
    """
    Split Bregman on sum ||grad b_l||_1 subject to H b = f: a KKT solve for b,
    per-filter rescaling toward ||b_l|| = alpha, then the affine projection.
    """
    grad_op = _gradient_operator(A)
    n = H.shape[1]
    H_pinv = np.linalg.pinv(H)

    def project(b):
        return b - H_pinv @ (H @ b - f)

    laplacian = (grad_op.T @ grad_op).toarray()
    kkt = np.block([
        [weight * laplacian + 1e-6 * np.eye(n), H.T],
        [H, np.zeros((H.shape[0], H.shape[0]))],
    ])
    kkt_pinv = np.linalg.pinv(kkt)
    b = start.copy()
    e = grad_op @ b
    dual = np.zeros_like(e)
    for _ in range(sweeps):
        rhs = np.concatenate([weight * (grad_op.T @ (e - dual)), f])
        b = (kkt_pinv @ rhs)[:n]
        filters = b.reshape(A.m, -1)
        norms = np.linalg.norm(filters, axis=1, keepdims=True)
        safe = np.where(norms > 0, norms, 1.0)
        filters = np.where(norms > 0, filters * (0.5 + 0.5 * alpha / safe), filters)
        b = project(filters.ravel())
        g = grad_op @ b
        e = shrink(g + dual, 1.0 / weight)
        dual = dual + g - e
    return project(b)


def design_recon_filters(
        A: FilterBank,
        mode: str = 'minNorm',
        alpha: float = 1.0,
        budget: Optional[SolverBudget] = None,
        sweeps: int = 50,
) -> FilterBank:
    """
    Reconstruction filters B with H(A)B = f. minNorm takes the minimum
    Euclidean norm solution (CG on H H^T y = f, B = H^T y); tv minimizes
    sum ||grad b_l||_1 over the same affine set.
    """
    logger = logging.getLogger(f'{LOGGER}.design_recon_filters')
    if mode not in ('minNorm', 'tv'):
        raise UnsupportedCase(f'unknown reconstruction design mode {mode!r}')
    pattern = bank_pattern(A)
    if pattern.orphan_cosets:
        raise InconsistentSystem(1.0 / pattern.det)
    H = h_matrix(pattern, A.matrix)
    f = pattern.f
    if budget is None:
        budget = SolverBudget(max(2 * min(H.shape), 100), 1e-14)
    try:
        y = cg_solve(lambda v: H @ (H.T @ v), f, budget)
    except NotConverged as e:
        logger.debug(f'CG on H H^T stopped at residual {e.obj:.3e}, falling back to least squares')
        y = e.solution
    b = H.T @ y
    residual = float(np.max(np.abs(H @ b - f)))
    if residual > RECON_TOLERANCE:
        if H.shape[0] * H.shape[1] <= DENSE_LIMIT:
            b = np.linalg.lstsq(H.toarray(), f, rcond=None)[0]
        else:
            b = sparse_linalg.lsqr(H, f, atol=1e-15, btol=1e-15, iter_lim=4 * H.shape[1])[0]
        residual = float(np.max(np.abs(H @ b - f)))
        if residual > RECON_TOLERANCE:
            raise InconsistentSystem(residual)
    if mode == 'tv':
        b = _tv_design(A, H.toarray(), f, b, alpha, sweeps)
        residual = float(np.max(np.abs(H @ b - f)))
        if residual > RECON_TOLERANCE:
            raise InconsistentSystem(residual)
    logger.debug(f'Designed {mode} reconstruction filters, residual {residual:.3e}')
    return FilterBank(
        taps=b.reshape(A.taps.shape),
        M=A.M,
        roles=A.roles,
        kind='biframe_recon',
        channel_support=A.channel_support,
        channel_sampling=A.channel_sampling,
    )


def learn_biframe_critical(batch, cfg: LearnConfig) -> Tuple[FilterBank, FilterBank, LearnTrace]:
    """
    Joint learning of unit-norm decomposition filters A and reconstruction
    filters B under the bilinear constraint H(A)B = f. Iterates whose bilinear
    residual is at most CRITICAL_WARN are accepted; the accepted one with the
    smallest objective is returned.
    """
    logger = logging.getLogger(f'{LOGGER}.learn_biframe_critical')
    A = init_bank(cfg, 'biframe_decomp')
    matrix = A.matrix / np.linalg.norm(A.matrix, axis=1, keepdims=True)
    A = A.with_matrix(matrix)
    data = PatchData.from_batch(batch, A)
    pattern = bank_pattern(A)
    f = pattern.f
    eta, lam = cfg.eta, cfg.lam
    budget = cfg.cg_budget
    a_budget = SolverBudget(cfg.a_step_inner, 1e-12)

    def bilinear_residual(a, b):
        return float(np.max(np.abs(uep_lhs(pattern, a, b.reshape(a.shape)) - f)))

    b = np.linalg.lstsq(h_matrix(pattern, matrix).toarray(), f, rcond=None)[0]
    coeffs = data.coefficients(matrix)
    dual_f = [np.zeros_like(c) for c in coeffs]
    dual_c = np.zeros(pattern.n_rows)
    initial = _l1(coeffs)
    trace = LearnTrace()
    trace.record(initial, bilinear_residual(matrix, b), 0.0)
    best, best_objective = matrix, initial

    for iteration in range(1, cfg.max_outer + 1):
        D = [shrink(c + d, 1.0 / eta) for c, d in zip(coeffs, dual_f)]
        new = unit_sphere_A_step(
            data, D, dual_f, b.reshape(matrix.shape), dual_c, lam, eta, A.with_matrix(matrix), a_budget,
        ).matrix
        H = h_matrix(pattern, new)
        try:
            b = cg_solve(lambda v: H.T @ (H @ v), H.T @ (f - dual_c), budget, x0=b)
        except NotConverged as e:
            b = e.solution
        coeffs = data.coefficients(new)
        dual_f = [d_ + c - d for d_, c, d in zip(dual_f, coeffs, D)]
        violation = H @ b - f
        dual_c = dual_c + violation
        objective = _l1(coeffs)
        _check_divergence(objective, initial)
        residual = float(np.max(np.abs(violation)))
        change = _rel_change(new, matrix)
        accepted = residual <= CRITICAL_WARN
        if accepted and objective < best_objective:
            best, best_objective = new, objective
        trace.record(objective, residual, change, accepted)
        logger.debug(f'iteration {iteration}: objective {objective:.6g}, residual {residual:.3e}')
        matrix = new
        if change < cfg.rel_tolerance:
            break

    H = h_matrix(pattern, best).toarray()
    b = np.linalg.lstsq(H, f, rcond=None)[0]
    residual = float(np.max(np.abs(H @ b - f)))
    if residual > CRITICAL_STALL:
        raise ConstraintStalled(residual)
    if residual > CRITICAL_WARN:
        logger.warning(f'Bilinear residual {residual:.3e} above {CRITICAL_WARN}')
    A = A.with_matrix(best)
    B = replace(A, taps=b.reshape(A.taps.shape), kind='biframe_recon')
    A, B = _finish(A, cfg, B)
    return A, B, trace


def learn_best_of(
        batch,
        cfg: LearnConfig,
        learner: Callable = learn_frame,
) -> tuple:
    """
    Run `learner` with seeds cfg.seed .. cfg.seed + restarts - 1 and keep the
    run with the smallest best accepted objective.
    """
    logger = logging.getLogger(f'{LOGGER}.learn_best_of')
    best, best_objective, failure = None, np.inf, None
    for restart in range(cfg.restarts):
        run_cfg = replace(cfg, seed=cfg.seed + restart, restarts=1)
        try:
            result = learner(batch, run_cfg)
        except NumericalFailure as e:
            logger.warning(f'Restart {restart} failed: {e}')
            failure = e
            continue
        objective = result[-1].best_objective
        logger.debug(f'Restart {restart}: objective {objective:.6g}')
        if objective < best_objective:
            best, best_objective = result, objective
    if best is None:
        raise failure
    return best
