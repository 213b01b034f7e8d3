"""
Unitary Extension Principle machinery: equation-set enumeration, time and
Fourier domain residuals, and the linear system H(A)B = f.

The equations are indexed by (gamma, k) with gamma a coset representative in
{0..M_i - 1} and k a tap offset. Row (gamma, k) reads

    sum_l sum_{p = gamma mod M} a_l(p) b_l(p + k) = |det M|^-1 delta_k

The channel axis of a bank counts as one more axis with support
channel_support and sampling channel_step.
"""
# stdlib
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union
# lib
import numpy as np
from scipy import sparse
# local
from adaframe.controllers.exceptions import DimensionMismatch, GridNotDivisible, UnsupportedCase
from adaframe.tensor import FilterBank, PatchData


__all__ = [
    'LinearSystem',
    'UepPattern',
    'UepReport',
    'bank_pattern',
    'build_H',
    'constraint_jacobian',
    'constraint_residual',
    'count_S',
    'enumerate_S',
    'gram_diag_sums',
    'h_matrix',
    'h_matrix_second',
    'penalty_value_grad',
    'uep_lhs',
    'uep_pattern',
    'uep_report',
    'uep_residual_spectral',
    'uep_residual_time',
]

LOGGER = 'adaframe.uep'

DEFAULT_GRID = 64


@dataclass(frozen=True, eq=False)
class UepPattern:
    """
    Index arrays of every tap pair (p, q) taking part in the UEP equations.
    rows[j] is the equation that pair j contributes to.
    """
    keys: np.ndarray
    rows: np.ndarray
    p: np.ndarray
    q: np.ndarray
    f: np.ndarray
    orphan_cosets: int
    det: int
    n_taps: int

    @property
    def n_rows(self) -> int:
        return self.keys.shape[0]


@dataclass
class UepReport:
    time_residual: float
    spectral_residual: float
    equation_count: int
    unknown_count: int
    feasible: bool

    def to_dict(self) -> dict:
        return {
            'timeResidual': self.time_residual,
            'spectralResidual': self.spectral_residual,
            'equationCount': self.equation_count,
            'unknownCount': self.unknown_count,
            'feasible': self.feasible,
        }


@dataclass(eq=False)
class LinearSystem:
    H: np.ndarray
    f: np.ndarray
    keys: List[Tuple[Tuple[int, ...], Tuple[int, ...]]]


@lru_cache(maxsize=64)
def uep_pattern(support: Tuple[int, ...], sampling: Tuple[int, ...]) -> UepPattern:
    support = tuple(int(r) for r in support)
    sampling = tuple(int(k) for k in sampling)
    positions = np.array(list(np.ndindex(*support)), dtype=int).reshape(-1, len(support))
    n_taps = positions.shape[0]
    first, second = np.meshgrid(np.arange(n_taps), np.arange(n_taps), indexing='ij')
    first, second = first.ravel(), second.ravel()
    gammas = positions[first] % np.array(sampling)
    offsets = positions[second] - positions[first]
    keys, rows = np.unique(np.concatenate([gammas, offsets], axis=1), axis=0, return_inverse=True)
    det = int(np.prod(sampling))
    d = len(support)
    zero_rows = np.all(keys[:, d:] == 0, axis=1)
    f = np.where(zero_rows, 1.0 / det, 0.0)
    return UepPattern(
        keys=keys,
        rows=np.asarray(rows).reshape(-1),
        p=first,
        q=second,
        f=f,
        orphan_cosets=det - int(zero_rows.sum()),
        det=det,
        n_taps=n_taps,
    )


def bank_pattern(A: FilterBank) -> UepPattern:
    return uep_pattern(A.ext_support, A.ext_sampling)


def enumerate_S(r: Sequence[int], M: Sequence[int]) -> List[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """
    The equation set S(r) as (k, gamma) pairs, by brute force over tap pairs.
    Sorted by gamma first, then k.
    """
    pattern = uep_pattern(tuple(r), tuple(M))
    d = len(tuple(r))
    return [(tuple(int(i) for i in key[d:]), tuple(int(i) for i in key[:d])) for key in pattern.keys]


def count_S(r: Sequence[int], M: Sequence[int], m: int = 1) -> Tuple[int, bool]:
    """
    Closed-form |S(r)|, per axis (2r - M)M when r >= M and r^2 otherwise,
    with the feasibility flag 2 m prod(r) >= |S(r)|.
    """
    count = 1
    for r_i, M_i in zip(r, M):
        count *= (2 * r_i - M_i) * M_i if r_i >= M_i else r_i * r_i
    return count, 2 * m * int(np.prod(r)) >= count


def uep_lhs(pattern: UepPattern, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Left side of every equation for tap matrices of shape (m, taps)."""
    values = np.einsum('lj,lj->j', a[:, pattern.p], b[:, pattern.q])
    return np.bincount(pattern.rows, weights=values, minlength=pattern.n_rows)


def constraint_residual(pattern: UepPattern, a: np.ndarray, b: Optional[np.ndarray] = None) -> float:
    b = a if b is None else b
    residual = float(np.max(np.abs(uep_lhs(pattern, a, b) - pattern.f)))
    if pattern.orphan_cosets:
        # cosets without a k = 0 equation can never reach |det M|^-1
        residual = max(residual, 1.0 / pattern.det)
    return residual


def _check_pair(A: FilterBank, B: FilterBank):
    if not A.same_geometry(B):
        raise DimensionMismatch(
            f'A has taps {A.taps.shape} and sampling {A.ext_sampling}, '
            f'B has taps {B.taps.shape} and sampling {B.ext_sampling}',
        )


def uep_residual_time(A: FilterBank, B: FilterBank) -> float:
    _check_pair(A, B)
    return constraint_residual(bank_pattern(A), A.matrix, B.matrix)


def default_grid(A: FilterBank) -> Tuple[int, ...]:
    return tuple(
        M_i * int(np.ceil(max(DEFAULT_GRID, 2 * r_i) / M_i))
        for r_i, M_i in zip(A.ext_support, A.ext_sampling)
    )


def uep_residual_spectral(A: FilterBank, B: FilterBank, grid_shape: Optional[Sequence[int]] = None) -> float:
    """
    max over the grid and omega in Omega_M of
    |sum_l b_hat_l(xi) conj(a_hat_l(xi + 2 pi omega)) - delta(omega)|
    """
    _check_pair(A, B)
    grid = tuple(grid_shape) if grid_shape is not None else default_grid(A)
    sampling = A.ext_sampling
    if len(grid) != len(sampling) or any(g % k for g, k in zip(grid, sampling)):
        raise GridNotDivisible(f'grid {grid}, sampling {sampling}')
    axes = tuple(range(1, len(grid) + 1))
    a_hat = np.fft.fftn(A.taps, s=grid, axes=axes)
    b_hat = np.fft.fftn(B.taps, s=grid, axes=axes)
    worst = 0.0
    for omega in np.ndindex(*sampling):
        shift = tuple(-(g // k) * j for g, k, j in zip(grid, sampling, omega))
        shifted = np.roll(a_hat, shift, axis=axes)
        total = np.sum(b_hat * np.conj(shifted), axis=0)
        target = 0.0 if any(omega) else 1.0
        worst = max(worst, float(np.max(np.abs(total - target))))
    return worst


def uep_report(A: FilterBank, B: FilterBank, grid_shape: Optional[Sequence[int]] = None) -> UepReport:
    logger = logging.getLogger(f'{LOGGER}.uep_report')
    pattern = bank_pattern(A)
    count, feasible = count_S(A.ext_support, A.ext_sampling, A.m)
    report = UepReport(
        time_residual=uep_residual_time(A, B),
        spectral_residual=uep_residual_spectral(A, B, grid_shape),
        equation_count=pattern.n_rows,
        unknown_count=B.m * B.n_taps,
        feasible=feasible,
    )
    if count != pattern.n_rows:
        logger.error(f'Closed form count {count} disagrees with enumeration {pattern.n_rows}')
    return report


def gram_diag_sums(A: FilterBank) -> np.ndarray:
    """k-th superdiagonal sums Tr(A A^T, k) of the r x m tap matrix, 1D and M = 1 only."""
    if A.d != 1 or A.M != (1,) or A.channel_support:
        raise UnsupportedCase('Tr(AA^T, k) is defined for d = 1, M = 1; use uep_residual_time')
    taps = A.matrix.T
    gram = taps @ taps.T
    return np.array([np.trace(gram, offset=k) for k in range(taps.shape[0])])


def h_matrix(pattern: UepPattern, a: np.ndarray) -> sparse.csr_matrix:
    """H(A) as a sparse matrix acting on vec(B), vec index l * taps + q."""
    m, n_taps = a.shape
    rows = np.tile(pattern.rows, m)
    cols = (np.arange(m)[:, None] * n_taps + pattern.q[None, :]).ravel()
    data = a[:, pattern.p].ravel()
    return sparse.csr_matrix((data, (rows, cols)), shape=(pattern.n_rows, m * n_taps))


def h_matrix_second(pattern: UepPattern, b: np.ndarray) -> sparse.csr_matrix:
    """The operator with h_matrix_second(B) vec(A) = h_matrix(A) vec(B)."""
    m, n_taps = b.shape
    rows = np.tile(pattern.rows, m)
    cols = (np.arange(m)[:, None] * n_taps + pattern.p[None, :]).ravel()
    data = b[:, pattern.q].ravel()
    return sparse.csr_matrix((data, (rows, cols)), shape=(pattern.n_rows, m * n_taps))


def constraint_jacobian(pattern: UepPattern, a: np.ndarray) -> sparse.csr_matrix:
    """Jacobian of A -> uep_lhs(A, A)."""
    return (h_matrix(pattern, a) + h_matrix_second(pattern, a)).tocsr()


def build_H(A: FilterBank) -> LinearSystem:
    pattern = bank_pattern(A)
    d = len(A.ext_support)
    keys = [(tuple(int(i) for i in key[:d]), tuple(int(i) for i in key[d:])) for key in pattern.keys]
    return LinearSystem(H=h_matrix(pattern, A.matrix).toarray(), f=pattern.f.copy(), keys=keys)


def _normalized_huber(c: np.ndarray, delta: float) -> Tuple[float, np.ndarray]:
    magnitude = np.abs(c)
    inside = magnitude <= delta
    value = np.where(inside, 0.5 * c * c / delta, magnitude - 0.5 * delta).sum()
    return float(value), np.clip(c / delta, -1.0, 1.0)


def penalty_value_grad(
        A: FilterBank,
        x: Union[np.ndarray, List[np.ndarray], PatchData],
        eta: float,
        delta: float = 1e-3,
) -> Tuple[float, np.ndarray]:
    """
    Value and gradient of sum ||W_A x||_{1,1} + eta sum_k (Tr(AA^T, k) - delta_k)^2
    with the l1 term smoothed by the normalized Huber function L_delta / delta.
    """
    if A.d != 1 or A.M != (1,) or A.channel_support:
        raise UnsupportedCase('the penalty formulation is defined for d = 1, M = 1')
    data = x if isinstance(x, PatchData) else PatchData.from_batch(x, A)
    matrix = A.matrix
    value = 0.0
    grad = np.zeros_like(matrix)
    for X, coeffs in zip(data.matrices, data.coefficients(matrix)):
        v, slope = _normalized_huber(coeffs, delta)
        value += v
        grad += slope.T @ X
    r = matrix.shape[1]
    for k in range(r):
        g_k = float(np.sum(matrix[:, :r - k] * matrix[:, k:]))
        gap = g_k - (1.0 if k == 0 else 0.0)
        value += eta * gap * gap
        forward = np.zeros_like(matrix)
        backward = np.zeros_like(matrix)
        forward[:, :r - k] = matrix[:, k:]
        backward[:, k:] = matrix[:, :r - k]
        grad += 2.0 * eta * gap * (forward + backward)
    return value, grad.reshape(A.taps.shape)
