"""
Built-in filter banks: Haar, the piecewise-linear B-spline tight frame and
Daubechies orthogonal wavelets, with tensor products for 2D.
"""
# stdlib
import itertools
import logging
from functools import lru_cache
from math import comb
from typing import Optional, Sequence
# lib
import numpy as np
# local
from adaframe.controllers.exceptions import NotConverged, UnknownBankName, UnsupportedCase
from adaframe.tensor import FilterBank
from adaframe.uep import uep_residual_time


__all__ = [
    'BUILTIN_BANKS',
    'bspline_linear',
    'daubechies',
    'daubechies_lowpass',
    'get_bank',
    'haar',
    'tensor_bank',
]

LOGGER = 'adaframe.wavelets'

MAX_DAUBECHIES = 30
VALIDATION_TOLERANCE = 1e-10

BUILTIN_BANKS = ('haar', 'bspline-linear') + tuple(f'db{n}' for n in range(1, MAX_DAUBECHIES + 1))


def haar() -> FilterBank:
    return FilterBank(
        taps=[[0.5, 0.5], [0.5, -0.5]],
        M=(2,),
        roles=('lowpass', 'highpass'),
    )


def bspline_linear() -> FilterBank:
    """Piecewise-linear B-spline tight frame with three filters."""
    return FilterBank(
        taps=[
            [0.25, 0.5, 0.25],
            [np.sqrt(2.0) / 4.0, 0.0, -np.sqrt(2.0) / 4.0],
            [-0.25, 0.5, -0.25],
        ],
        M=(2,),
        roles=('lowpass', 'highpass', 'highpass'),
    )


def _orthogonality(h: np.ndarray, order: int) -> np.ndarray:
    return np.array([h[:len(h) - 2 * k] @ h[2 * k:] - (1.0 if k == 0 else 0.0) for k in range(order)])


def _polish(q: np.ndarray, order: int) -> np.ndarray:
    """
    Newton iterations on sum_n h(n) h(n + 2k) = delta_k with
    h = (1 + z)^N q, so the vanishing moments stay exact.
    """
    binomial = np.array([comb(order, i) for i in range(order + 1)], dtype=float)
    length = 2 * order
    conv = np.zeros((length, order))
    for j in range(order):
        conv[j:j + order + 1, j] = binomial
    for _ in range(50):
        h = conv @ q
        g = _orthogonality(h, order)
        if np.max(np.abs(g)) < 1e-15:
            break
        jac_h = np.zeros((order, length))
        for k in range(order):
            shift = 2 * k
            jac_h[k, :length - shift] += h[shift:]
            jac_h[k, shift:] += h[:length - shift]
        q = q - np.linalg.lstsq(jac_h @ conv, g, rcond=None)[0]
    return conv @ q


@lru_cache(maxsize=MAX_DAUBECHIES)
def daubechies_lowpass(order: int) -> np.ndarray:
    """
    Daubechies lowpass filter with `order` vanishing moments, sum sqrt(2),
    by spectral factorization: the roots y of P(y) = sum_k C(N-1+k, k) y^k map
    to z through z^2 - (2 - 4y) z + 1 = 0, keeping the root inside the unit circle.
    """
    logger = logging.getLogger(f'{LOGGER}.daubechies_lowpass')
    if order < 1 or order > MAX_DAUBECHIES:
        raise UnknownBankName(f'db{order}')
    coeffs = [comb(order - 1 + k, k) for k in range(order)]
    z_roots = []
    for y in np.roots(coeffs[::-1]):
        pair = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
        z_roots.append(pair[np.argmin(np.abs(pair))])
    q = np.real(np.poly(z_roots)) if z_roots else np.array([1.0])
    h = q.copy()
    for _ in range(order):
        h = np.convolve(h, [1.0, 1.0])
    scale = np.sqrt(2.0) / h.sum()
    h = _polish(q * scale, order)
    if h.sum() < 0:
        h = -h
    logger.debug(f'db{order} orthogonality residual {np.max(np.abs(_orthogonality(h, order))):.3e}')
    h.setflags(write=False)
    return h


def daubechies(order: int) -> FilterBank:
    h = daubechies_lowpass(order)
    length = len(h)
    g = np.array([(-1) ** n * h[length - 1 - n] for n in range(length)])
    bank = FilterBank(
        taps=np.stack([h, g]) / np.sqrt(2.0),
        M=(2,),
        roles=('lowpass', 'highpass'),
    )
    residual = uep_residual_time(bank, bank)
    if residual > VALIDATION_TOLERANCE:
        raise NotConverged(residual)
    return bank


def tensor_bank(bank: FilterBank, d: int = 2) -> FilterBank:
    """Separable d-dimensional bank; filter (l_1..l_d) is the outer product of the 1D filters."""
    if bank.d != 1 or bank.channel_support:
        raise UnsupportedCase('tensor products are built from scalar 1D banks')
    taps, roles = [], []
    for combo in itertools.product(range(bank.m), repeat=d):
        t = bank.taps[combo[0]]
        for l in combo[1:]:
            t = np.multiply.outer(t, bank.taps[l])
        taps.append(t)
        roles.append('lowpass' if all(bank.roles[l] == 'lowpass' for l in combo) else 'highpass')
    return FilterBank(taps=np.stack(taps), M=bank.M * d, roles=tuple(roles), kind=bank.kind)


def _base(name: str) -> FilterBank:
    if name == 'haar':
        return haar()
    if name == 'bspline-linear':
        return bspline_linear()
    if name.startswith('db') and name[2:].isdigit():
        return daubechies(int(name[2:]))
    raise UnknownBankName(name)


def get_bank(name: str, d: int = 1, M: Optional[Sequence[int]] = None) -> FilterBank:
    """
    Built-in bank by name. A bank that is tight for sampling factor M stays
    tight with M = 1, so each axis of M may be overridden by 1.
    """
    base = _base(name)
    bank = base if d == 1 else tensor_bank(base, d)
    if M is None:
        return bank
    M = tuple(int(k) for k in M)
    if len(M) != d or any(k not in (1, native) for k, native in zip(M, bank.M)):
        raise UnsupportedCase(f'{name} supports sampling factors 1 or {bank.M[0]} per axis, got {M}')
    return FilterBank(taps=bank.taps, M=M, roles=bank.roles, kind=bank.kind)
