"""
Periodic d-dimensional array algebra: sampling, transition and subdivision
operators, one-level decomposition and reconstruction.

Signals are plain numpy arrays. A signal for a d-dimensional bank either has
d axes, or d + 1 axes with the channel axis leading. Filter taps are indexed
on {0..r_i - 1} per axis and every index on the signal wraps periodically.
"""
# stdlib
import logging
from dataclasses import dataclass, field, replace
from typing import List, Sequence, Tuple, Union
# lib
import numpy as np
# local
from adaframe.controllers.exceptions import (
    ArityMismatch,
    ChannelMismatch,
    DimensionMismatch,
    InvalidFilterBank,
    ShapeMismatch,
    ShapeNotDivisible,
)


__all__ = [
    'CoeffSet',
    'Filter',
    'FilterBank',
    'KINDS',
    'PatchData',
    'ROLES',
    'decompose',
    'dft_filter',
    'downsample',
    'flip',
    'patch_matrix',
    'reconstruct',
    'subdivision',
    'tight_dual',
    'transition',
    'upsample',
]

LOGGER = 'adaframe.tensor'

ROLES = ('lowpass', 'highpass')
KINDS = ('frame', 'biframe_decomp', 'biframe_recon')


@dataclass(eq=False)
class Filter:
    taps: np.ndarray
    channel_support: int = 0

    def __post_init__(self):
        self.taps = np.asarray(self.taps, dtype=float)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(self.taps.shape[1:] if self.channel_support else self.taps.shape)


@dataclass(eq=False)
class FilterBank:
    """
    m filters of one support, stored as one array of shape (m, [c,] *support).

    channel_sampling is the step along the channel axis. 0 means full
    connectivity: the bank consumes exactly channel_support channels and
    yields one channel position per filter.
    """
    taps: np.ndarray
    M: Tuple[int, ...]
    roles: Tuple[str, ...] = ()
    kind: str = 'frame'
    channel_support: int = 0
    channel_sampling: int = 0

    def __post_init__(self):
        self.taps = np.array(self.taps, dtype=float)
        self.M = tuple(int(k) for k in self.M)
        if not self.roles:
            self.roles = ('lowpass',) + ('highpass',) * (self.taps.shape[0] - 1)
        self.roles = tuple(self.roles)
        self._validate()

    def _validate(self):
        if any(k < 1 for k in self.M) or len(self.M) == 0:
            raise InvalidFilterBank(f'sampling factors must be positive integers, got {self.M}')
        expected_ndim = 1 + len(self.M) + (1 if self.channel_support else 0)
        if self.taps.ndim != expected_ndim:
            raise InvalidFilterBank(f'taps have {self.taps.ndim} axes, expected {expected_ndim}')
        if self.channel_support and self.taps.shape[1] != self.channel_support:
            raise InvalidFilterBank(f'channel axis of taps is {self.taps.shape[1]}, expected {self.channel_support}')
        if self.channel_sampling and not self.channel_support:
            raise InvalidFilterBank('channel_sampling needs a channel axis')
        if not np.all(np.isfinite(self.taps)):
            raise InvalidFilterBank('taps must be finite')
        if len(self.roles) != self.m or any(role not in ROLES for role in self.roles):
            raise InvalidFilterBank(f'roles {self.roles} do not describe {self.m} filters')
        if self.kind not in KINDS:
            raise InvalidFilterBank(f'kind {self.kind} is not one of {KINDS}')

    @property
    def m(self) -> int:
        return self.taps.shape[0]

    @property
    def d(self) -> int:
        return len(self.M)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(self.taps.shape[-self.d:])

    @property
    def channel_step(self) -> int:
        return self.channel_sampling or self.channel_support

    @property
    def ext_support(self) -> Tuple[int, ...]:
        """Support including the channel axis."""
        return tuple(self.taps.shape[1:])

    @property
    def ext_sampling(self) -> Tuple[int, ...]:
        return ((self.channel_step,) if self.channel_support else ()) + self.M

    @property
    def det(self) -> int:
        return int(np.prod(self.ext_sampling))

    @property
    def n_taps(self) -> int:
        return int(np.prod(self.ext_support))

    @property
    def matrix(self) -> np.ndarray:
        return self.taps.reshape(self.m, self.n_taps)

    @property
    def filters(self) -> List[Filter]:
        return [Filter(t, self.channel_support) for t in self.taps]

    def with_matrix(self, matrix: np.ndarray, **changes) -> 'FilterBank':
        return replace(self, taps=np.asarray(matrix).reshape(self.taps.shape), **changes)

    def same_geometry(self, other: 'FilterBank') -> bool:
        return (
            self.taps.shape == other.taps.shape
            and self.M == other.M
            and self.channel_support == other.channel_support
            and self.channel_step == other.channel_step
        )


@dataclass(eq=False)
class CoeffSet:
    maps: List[np.ndarray] = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.maps)

    def stack(self, d: int) -> np.ndarray:
        """Maps as one channel signal, filter-major when a map carries channel positions."""
        stacked = np.stack(self.maps)
        if stacked.ndim == d + 2:
            stacked = stacked.reshape((-1,) + stacked.shape[2:])
        return stacked

    @classmethod
    def from_stacked(cls, stacked: np.ndarray, bank: FilterBank) -> 'CoeffSet':
        stacked = np.asarray(stacked, dtype=float)
        positions, rest = divmod(stacked.shape[0], bank.m)
        if rest:
            raise ArityMismatch(f'{stacked.shape[0]} channels for {bank.m} filters')
        if positions == 1:
            return cls([np.array(c) for c in stacked])
        grouped = stacked.reshape((bank.m, positions) + stacked.shape[1:])
        return cls([np.array(c) for c in grouped])


def _check_divisible(shape: Sequence[int], M: Sequence[int]):
    if any(n % k for n, k in zip(shape, M)):
        raise ShapeNotDivisible(f'shape {tuple(shape)}, sampling {tuple(M)}')


def _sampler(M: Sequence[int]) -> tuple:
    return tuple(slice(None, None, k) for k in M)


def downsample(v: np.ndarray, M: Sequence[int]) -> np.ndarray:
    """[v down M](n) = v(Mn) on the trailing len(M) axes."""
    v = np.asarray(v, dtype=float)
    M = tuple(M)
    _check_divisible(v.shape[-len(M):], M)
    return v[(Ellipsis,) + _sampler(M)].copy()


def upsample(v: np.ndarray, M: Sequence[int]) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    M = tuple(M)
    lead = v.shape[:v.ndim - len(M)]
    out = np.zeros(lead + tuple(n * k for n, k in zip(v.shape[-len(M):], M)))
    out[(Ellipsis,) + _sampler(M)] = v
    return out


def _signal_geometry(shape, support, M, channel_support, channel_sampling):
    """
    Extended sampling and output shape for a signal of the given shape, with
    the channel axis treated as one more periodic axis.
    """
    d = len(M)
    if len(support) != d:
        raise DimensionMismatch(f'support {tuple(support)} for sampling {tuple(M)}')
    if channel_support:
        if len(shape) != d + 1:
            raise ChannelMismatch(f'signal of shape {tuple(shape)} has no channel axis')
        channels = shape[0]
        step = channel_sampling or channel_support
        if channel_sampling == 0 and channels != channel_support:
            raise ChannelMismatch(f'{channels} channels for channel support {channel_support}')
        if channels % step or channel_support > channels:
            raise ChannelMismatch(f'{channels} channels for channel support {channel_support}, step {step}')
        ext_M = (step,) + tuple(M)
    else:
        if len(shape) != d:
            raise ChannelMismatch(f'signal of shape {tuple(shape)} for a {d}-dimensional scalar filter')
        ext_M = tuple(M)
    _check_divisible(shape[-d:], M)
    out_shape = tuple(n // k for n, k in zip(shape, ext_M))
    return ext_M, out_shape


def _squeeze(out: np.ndarray, channel_support: int) -> np.ndarray:
    if channel_support and out.shape[0] == 1:
        return out[0]
    return out


def patch_matrix(
        v: np.ndarray,
        support: Sequence[int],
        M: Sequence[int],
        channel_support: int = 0,
        channel_sampling: int = 0,
) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """
    X with X[n, p] = v(Mn + p), so that transition(v, a, M) = X @ a.ravel().

    :return: the patch matrix and the (unsqueezed) shape of one output map
    """
    v = np.asarray(v, dtype=float)
    ext_M, out_shape = _signal_geometry(v.shape, tuple(support), tuple(M), channel_support, channel_sampling)
    ext_support = ((channel_support,) if channel_support else ()) + tuple(support)
    axes = tuple(range(v.ndim))
    sampler = _sampler(ext_M)
    columns = []
    for p in np.ndindex(*ext_support):
        shifted = np.roll(v, tuple(-i for i in p), axis=axes)
        columns.append(shifted[sampler].ravel())
    return np.stack(columns, axis=1), out_shape


def _as_filter(a: Union[Filter, np.ndarray], d: int) -> Filter:
    if isinstance(a, Filter):
        return a
    taps = np.asarray(a, dtype=float)
    return Filter(taps, taps.shape[0] if taps.ndim == d + 1 else 0)


def transition(v: np.ndarray, a: Union[Filter, np.ndarray], M: Sequence[int], channel_sampling: int = 0) -> np.ndarray:
    """(T_{a,M} v)(n) = sum_p a(p) v(Mn + p), indices on v taken periodically."""
    M = tuple(M)
    a = _as_filter(a, len(M))
    X, out_shape = patch_matrix(v, a.support, M, a.channel_support, channel_sampling)
    return _squeeze((X @ a.taps.ravel()).reshape(out_shape), a.channel_support)


def _expand_channels(w: np.ndarray, d: int, channel_support: int) -> np.ndarray:
    if channel_support and w.ndim == d:
        return w[None]
    return w


def subdivision(w: np.ndarray, b: Union[Filter, np.ndarray], M: Sequence[int], channel_sampling: int = 0) -> np.ndarray:
    """(S_{b,M} w)(n) = |det M| sum_k w(k) b(n - Mk), periodic over shape(w) * M."""
    M = tuple(M)
    b = _as_filter(b, len(M))
    w = _expand_channels(np.asarray(w, dtype=float), len(M), b.channel_support)
    ext_M = ((channel_sampling or b.channel_support,) if b.channel_support else ()) + M
    if w.ndim != len(ext_M):
        raise ChannelMismatch(f'coefficient map of shape {w.shape} for sampling {ext_M}')
    up = upsample(w, ext_M)
    out = np.zeros_like(up)
    axes = tuple(range(up.ndim))
    for p in np.ndindex(*b.taps.shape):
        if b.taps[p] != 0.0:
            out += b.taps[p] * np.roll(up, p, axis=axes)
    return np.prod(ext_M) * out


def decompose(v: np.ndarray, A: FilterBank) -> CoeffSet:
    """W_A v: one transition per filter, all filters sharing one patch matrix."""
    X, out_shape = patch_matrix(v, A.support, A.M, A.channel_support, A.channel_sampling)
    coeffs = X @ A.matrix.T
    return CoeffSet([_squeeze(coeffs[:, l].reshape(out_shape), A.channel_support) for l in range(A.m)])


def reconstruct(c: CoeffSet, B: FilterBank) -> np.ndarray:
    """R_B: sum of subdivisions of every map with its filter."""
    if c.m != B.m:
        raise ArityMismatch(f'{c.m} maps for {B.m} filters')
    maps = [_expand_channels(np.asarray(w, dtype=float), B.d, B.channel_support) for w in c.maps]
    shapes = {w.shape for w in maps}
    if len(shapes) != 1:
        raise ShapeMismatch(f'coefficient maps of shapes {sorted(shapes)}')
    ext_M = B.ext_sampling
    if maps[0].ndim != len(ext_M):
        raise ChannelMismatch(f'coefficient map of shape {maps[0].shape} for sampling {ext_M}')
    up = np.stack([upsample(w, ext_M) for w in maps])
    out = np.zeros(up.shape[1:])
    axes = tuple(range(out.ndim))
    matrix = B.matrix
    for j, p in enumerate(np.ndindex(*B.ext_support)):
        combined = np.tensordot(matrix[:, j], up, axes=1)
        out += np.roll(combined, p, axis=axes)
    return B.det * out


def flip(A: FilterBank) -> FilterBank:
    """Reverse every filter along every tap axis."""
    axes = tuple(range(1, A.taps.ndim))
    return replace(A, taps=np.flip(A.taps, axis=axes).copy(), kind='biframe_recon')


def tight_dual(A: FilterBank) -> FilterBank:
    """
    Reconstruction bank of a tight frame. transition is correlation-form and
    subdivision convolution-form on the same index origin, so the adjoint of
    T_a is S_a up to |det M| and the dual keeps A's taps unchanged.
    """
    return replace(A, taps=A.taps.copy(), kind='biframe_recon')


def dft_filter(a: Union[Filter, np.ndarray], grid_shape: Sequence[int]) -> np.ndarray:
    """a_hat(xi_j) = sum_k a(k) exp(-i k . xi_j) on xi_j = 2 pi j / grid_shape."""
    taps = a.taps if isinstance(a, Filter) else np.asarray(a, dtype=float)
    grid_shape = tuple(grid_shape)
    if len(grid_shape) != taps.ndim or any(g < s for g, s in zip(grid_shape, taps.shape)):
        raise ShapeMismatch(f'grid {grid_shape} for taps of shape {taps.shape}')
    return np.fft.fftn(taps, s=grid_shape)


@dataclass(eq=False)
class PatchData:
    """
    Patch matrices of a batch of signals for one bank geometry, with the
    accumulated Gram matrix sum_i X_i^T X_i.
    """
    matrices: List[np.ndarray]
    gram: np.ndarray

    @classmethod
    def from_batch(cls, batch, bank: FilterBank) -> 'PatchData':
        logger = logging.getLogger(f'{LOGGER}.PatchData.from_batch')
        if isinstance(batch, np.ndarray):
            batch = [batch]
        matrices = [
            patch_matrix(x, bank.support, bank.M, bank.channel_support, bank.channel_sampling)[0]
            for x in batch
        ]
        gram = sum(X.T @ X for X in matrices)
        logger.debug(f'Prepared {len(matrices)} signals with {bank.n_taps} taps per patch')
        return cls(matrices, gram)

    def coefficients(self, matrix: np.ndarray) -> List[np.ndarray]:
        return [X @ matrix.T for X in self.matrices]

    def correlate(self, targets: List[np.ndarray]) -> np.ndarray:
        """sum_i X_i^T Y_i, shape (taps, m)."""
        return sum(X.T @ Y for X, Y in zip(self.matrices, targets))
