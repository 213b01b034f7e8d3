"""
Proximal operators, the orthogonal Procrustes solution and the iterative
sub-solvers the learning algorithms delegate to.
"""
# stdlib
import logging
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional
# lib
import numpy as np
# local
from adaframe.controllers.exceptions import (
    InfeasibleStart,
    InvalidBudget,
    NotConverged,
    RankDeficient,
    UnsupportedCase,
)
from adaframe.tensor import FilterBank, PatchData
from adaframe.uep import (
    UepPattern,
    bank_pattern,
    constraint_jacobian,
    constraint_residual,
    h_matrix_second,
    uep_lhs,
)


__all__ = [
    'SolverBudget',
    'cg_solve',
    'constrained_A_step',
    'hard',
    'huber_prox',
    'lowpass_procrustes',
    'procrustes',
    'restore_feasibility',
    'shrink',
    'unit_sphere_A_step',
]

LOGGER = 'adaframe.prox'

INFEASIBLE_START = 1e-2
RANK_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SolverBudget:
    max_iterations: int = 50
    tolerance: float = 1e-10

    def __post_init__(self):
        if int(self.max_iterations) < 1 or self.tolerance < 0:
            raise InvalidBudget(f'max_iterations={self.max_iterations}, tolerance={self.tolerance}')


def shrink(x, a: float) -> np.ndarray:
    """Soft threshold; |x| <= a maps to 0."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - a, 0.0)


def hard(x, a: float) -> np.ndarray:
    """Hard threshold; keeps x only where |x| > a."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) > a, x, 0.0)


def huber_prox(y, tau: float, delta: float) -> np.ndarray:
    """argmin_z 1/2 (z - y)^2 + tau L_delta(z)."""
    y = np.asarray(y, dtype=float)
    return np.where(np.abs(y) <= delta * (1.0 + tau), y / (1.0 + tau), y - tau * delta * np.sign(y))


def _jacobi_svd(Y: np.ndarray, max_sweeps: int = 60):
    """
    One-sided Jacobi: rotates the columns of Y until they are mutually
    orthogonal. Returns W = Y V with orthogonal columns, and V.
    """
    W = np.array(Y, dtype=float)
    n_cols = W.shape[1]
    V = np.eye(n_cols)
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n_cols - 1):
            for j in range(i + 1, n_cols):
                alpha = W[:, i] @ W[:, i]
                beta = W[:, j] @ W[:, j]
                gamma = W[:, i] @ W[:, j]
                if abs(gamma) <= 1e-15 * np.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                wi, wj = W[:, i].copy(), W[:, j]
                W[:, i] = c * wi - s * wj
                W[:, j] = s * wi + c * wj
                vi, vj = V[:, i].copy(), V[:, j]
                V[:, i] = c * vi - s * vj
                V[:, j] = s * vi + c * vj
        if not rotated:
            break
    return W, V


def procrustes(Y: np.ndarray) -> np.ndarray:
    """
    Nearest matrix with orthonormal columns to Y (n x m, n >= m) in the
    Frobenius norm, the polar factor U V^T of Y = U S V^T.
    """
    logger = logging.getLogger(f'{LOGGER}.procrustes')
    Y = np.asarray(Y, dtype=float)
    n, m = Y.shape
    if n < m:
        raise UnsupportedCase(f'procrustes needs n >= m, got {Y.shape}')
    W, V = _jacobi_svd(Y)
    sigma = np.linalg.norm(W, axis=0)
    scale = max(float(sigma.max()), 1.0) if m else 1.0
    weak = sigma < RANK_TOLERANCE * scale
    U = np.zeros_like(W)
    U[:, ~weak] = W[:, ~weak] / sigma[~weak]
    if weak.any():
        warnings.warn(f'{int(weak.sum())} singular values below {RANK_TOLERANCE}', RankDeficient)
        logger.warning(f'Rank deficient Procrustes input: singular values {sigma}')
        for col in np.flatnonzero(weak):
            U[:, col] = _complete_column(U, col)
    return U @ V.T


def _complete_column(U: np.ndarray, col: int) -> np.ndarray:
    """A unit vector orthogonal to every other column of U."""
    others = np.delete(U, col, axis=1)
    for e in np.eye(U.shape[0]):
        candidate = e - others @ (others.T @ e)
        norm = np.linalg.norm(candidate)
        if norm > 1e-6:
            candidate /= norm
            return candidate - others @ (others.T @ candidate)
    return np.zeros(U.shape[0])


def lowpass_procrustes(Y: np.ndarray) -> np.ndarray:
    """
    Procrustes step with the lowpass constraint: columns 2..m lie in the
    zero-mean subspace and column 1 is orthogonalized against them.
    """
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[0]
    ones = np.full(n, 1.0 / np.sqrt(n))
    high = Y[:, 1:] - np.outer(ones, ones @ Y[:, 1:])
    P_high = procrustes(high) if high.shape[1] else high
    P_high -= np.outer(ones, ones @ P_high)
    low = Y[:, 0] - P_high @ (P_high.T @ Y[:, 0])
    norm = np.linalg.norm(low)
    if norm < RANK_TOLERANCE:
        low = ones - P_high @ (P_high.T @ ones)
        norm = np.linalg.norm(low)
    return np.column_stack([low / norm, P_high])


def cg_solve(
        apply_operator: Callable[[np.ndarray], np.ndarray],
        rhs: np.ndarray,
        budget: SolverBudget = SolverBudget(),
        x0: Optional[np.ndarray] = None,
        callback: Optional[Callable[[np.ndarray], None]] = None,
) -> np.ndarray:
    """
    Conjugate gradients for a symmetric positive semi-definite operator.
    Returns the first iterate with relative residual <= budget.tolerance.
    Raises NotConverged carrying the best iterate otherwise.
    """
    logger = logging.getLogger(f'{LOGGER}.cg_solve')
    b = np.asarray(rhs, dtype=float)
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros_like(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_operator(x)
    p = r.copy()
    rs = float(np.vdot(r, r))
    best_x, best_res = x.copy(), np.sqrt(rs) / b_norm
    if best_res <= budget.tolerance:
        return x
    iteration = 0
    for iteration in range(1, budget.max_iterations + 1):
        Ap = apply_operator(p)
        curvature = float(np.vdot(p, Ap))
        if curvature <= 0.0:
            break
        alpha = rs / curvature
        x = x + alpha * p
        r = r - alpha * Ap
        rs_new = float(np.vdot(r, r))
        res = np.sqrt(rs_new) / b_norm
        if callback is not None:
            callback(x)
        if res < best_res:
            best_x, best_res = x.copy(), res
        if res <= budget.tolerance:
            logger.debug(f'CG converged in {iteration} iterations, residual {res:.3e}')
            return x
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise NotConverged(best_res, solution=best_x, iterations=iteration)


def _lowpass_rows(m: int, n_taps: int) -> np.ndarray:
    rows = np.zeros((m - 1, m * n_taps))
    for l in range(1, m):
        rows[l - 1, l * n_taps:(l + 1) * n_taps] = 1.0
    return rows


def _feasibility(pattern: UepPattern, a: np.ndarray, lowpass: bool) -> float:
    residual = constraint_residual(pattern, a)
    if lowpass and a.shape[0] > 1:
        residual = max(residual, float(np.max(np.abs(a[1:].sum(axis=1)))))
    return residual


def restore_feasibility(
        a: np.ndarray,
        pattern: UepPattern,
        tolerance: float = 1e-6,
        lowpass: bool = False,
        max_steps: int = 50,
) -> np.ndarray:
    """
    Gauss-Newton minimum-norm steps on the UEP equations (plus the zero tap
    sums of filters 2..m when lowpass) until the max residual <= tolerance.
    """
    logger = logging.getLogger(f'{LOGGER}.restore_feasibility')
    if pattern.orphan_cosets:
        raise UnsupportedCase('a support shorter than the sampling factor leaves cosets without equations')
    a = np.array(a, dtype=float)
    m, n_taps = a.shape
    extra = _lowpass_rows(m, n_taps) if lowpass and m > 1 else None

    def violation(current):
        c = uep_lhs(pattern, current, current) - pattern.f
        if extra is not None:
            c = np.concatenate([c, extra @ current.ravel()])
        return c

    c = violation(a)
    for step in range(max_steps):
        if np.max(np.abs(c)) <= tolerance:
            logger.debug(f'Feasible after {step} Gauss-Newton steps')
            return a
        J = constraint_jacobian(pattern, a).toarray()
        if extra is not None:
            J = np.vstack([J, extra])
        delta = np.linalg.lstsq(J, c, rcond=None)[0].reshape(m, n_taps)
        norm = np.linalg.norm(c)
        t = 1.0
        for _ in range(30):
            candidate = a - t * delta
            c_new = violation(candidate)
            if np.linalg.norm(c_new) < norm:
                break
            t *= 0.5
        a, c = candidate, c_new
    residual = float(np.max(np.abs(c)))
    if residual <= tolerance:
        return a
    raise NotConverged(residual, solution=a, iterations=max_steps)


def _quadratic(data: PatchData, targets: List[np.ndarray]):
    """
    f(A) = sum_i ||X_i A^T - Y_i||_F^2 expanded through the Gram matrix,
    returned as (value, gradient) callables on the (m, taps) matrix.
    """
    gram = data.gram
    cross = data.correlate(targets).T
    offset = float(sum(np.sum(Y * Y) for Y in targets))

    def value(a):
        return float(np.sum((a @ gram) * a) - 2.0 * np.sum(a * cross) + offset)

    def gradient(a):
        return 2.0 * (a @ gram - cross)

    return value, gradient


def _zero_mean_highpass(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    out[1:] -= out[1:].mean(axis=1, keepdims=True)
    return out


def constrained_A_step(
        data: PatchData,
        D: List[np.ndarray],
        breg: List[np.ndarray],
        A0: FilterBank,
        budget: SolverBudget = SolverBudget(10, 1e-6),
        outer: int = 3,
        lowpass: bool = False,
) -> FilterBank:
    """
    argmin_A sum ||W_A x - D + breg||_F^2 subject to the UEP constraints.

    Augmented Lagrangian over the UEP equations: `outer` multiplier updates,
    each with budget.max_iterations backtracking gradient steps. The result
    is made feasible to budget.tolerance and accepted only when its
    objective does not exceed that of the restored start.
    """
    logger = logging.getLogger(f'{LOGGER}.constrained_A_step')
    pattern = bank_pattern(A0)
    a0 = A0.matrix
    start_residual = _feasibility(pattern, a0, lowpass)
    if start_residual > INFEASIBLE_START:
        raise InfeasibleStart(start_residual)
    objective, gradient = _quadratic(data, [d - b for d, b in zip(D, breg)])
    start = restore_feasibility(a0, pattern, budget.tolerance, lowpass)
    start_value = objective(start)

    curvature = max(float(np.linalg.norm(data.gram, 2)), 1.0)
    rho = 10.0 * curvature
    mu = np.zeros(pattern.n_rows)

    def lagrangian(a):
        c = uep_lhs(pattern, a, a) - pattern.f
        return objective(a) + float(mu @ c) + 0.5 * rho * float(c @ c), c

    a = start.copy()
    step = 1.0 / (2.0 * curvature + rho)
    for _ in range(outer):
        value, c = lagrangian(a)
        for _ in range(budget.max_iterations):
            grad = gradient(a) + (constraint_jacobian(pattern, a).T @ (mu + rho * c)).reshape(a.shape)
            grad_sq = float(np.sum(grad * grad))
            if grad_sq == 0.0:
                break
            accepted = False
            while step > 1e-16:
                candidate = a - step * grad
                if lowpass:
                    candidate = _zero_mean_highpass(candidate)
                cand_value, cand_c = lagrangian(candidate)
                if cand_value <= value - 1e-4 * step * grad_sq:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            a, value, c = candidate, cand_value, cand_c
            step *= 2.0
        mu = mu + rho * c

    candidate = a
    for _ in range(6):
        try:
            restored = restore_feasibility(candidate, pattern, budget.tolerance, lowpass)
        except NotConverged:
            restored = None
        if restored is not None and objective(restored) <= start_value:
            return A0.with_matrix(restored)
        candidate = start + 0.5 * (candidate - start)
    logger.debug('No feasible descent found, keeping the restored start')
    return A0.with_matrix(start)


def unit_sphere_A_step(
        data: PatchData,
        D: List[np.ndarray],
        F: List[np.ndarray],
        b: np.ndarray,
        C: np.ndarray,
        lam: float,
        eta: float,
        A0: FilterBank,
        budget: SolverBudget = SolverBudget(10, 1e-12),
) -> FilterBank:
    """
    Projected gradient on eta sum ||W_A x - D + F||^2 + lam ||H(A)B - f + C||^2
    subject to unit-norm filters, renormalizing after every step.
    """
    pattern = bank_pattern(A0)
    objective, gradient = _quadratic(data, [d - f for d, f in zip(D, F)])
    G = h_matrix_second(pattern, b)

    def bilinear(a):
        return uep_lhs(pattern, a, b) - pattern.f + C

    def total(a):
        r = bilinear(a)
        return eta * objective(a) + lam * float(r @ r)

    def normalize(a):
        return a / np.linalg.norm(a, axis=1, keepdims=True)

    a = normalize(A0.matrix)
    value = total(a)
    step = 1.0 / max(eta * float(np.linalg.norm(data.gram, 2)) + lam, 1.0)
    for _ in range(budget.max_iterations):
        grad = eta * gradient(a) + 2.0 * lam * (G.T @ bilinear(a)).reshape(a.shape)
        if not np.any(grad):
            break
        improved = False
        while step > 1e-16:
            candidate = normalize(a - step * grad)
            cand_value = total(candidate)
            if cand_value < value:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        if value - cand_value <= budget.tolerance * max(abs(value), 1.0):
            a, value = candidate, cand_value
            break
        a, value = candidate, cand_value
        step *= 2.0
    return A0.with_matrix(a)
