"""
End-user procedures on top of the transforms: PSNR, compression, denoising,
feature extraction, max pooling with switches, activation inversion and the
transpose versus designed-filter reconstruction comparison.
"""
# stdlib
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple
# lib
import numpy as np
from scipy import special
# local
from adaframe.controllers.exceptions import (
    InvalidSwitch,
    OutOfRange,
    ShapeMismatch,
    ShapeNotDivisible,
    UnsupportedCase,
)
from adaframe.learn import design_recon_filters
from adaframe.multilevel import DecompTree, TreeSpec, build_tree, mra_decompose, mra_reconstruct
from adaframe.prox import hard, shrink
from adaframe.tensor import CoeffSet, FilterBank, decompose, reconstruct, tight_dual


__all__ = [
    'ACTIVATIONS',
    'CompressionResult',
    'DeconvReport',
    'LayerSpec',
    'PoolResult',
    'activation',
    'activation_inverse',
    'compress',
    'deconv_compare',
    'denoise',
    'extract_features',
    'maxpool',
    'psnr',
    'tree_features',
    'unpool',
]

LOGGER = 'adaframe.pipelines'

PEAK = 255.0
CLAMP = 1e-12
ACTIVATIONS = ('sigmoid', 'tanh', 'none')
ACTIVATION_RANGES = {'sigmoid': (0.0, 1.0), 'tanh': (-1.0, 1.0)}


def psnr(x: np.ndarray, x_hat: np.ndarray, scale: float = PEAK) -> float:
    """
    10 log10(255^2 / MSE) with the MSE taken on the 8-bit scale; math.inf for
    identical images. `scale` maps signal values onto that scale: the default
    suits signals normalized to [0, 1] (as read_pgm returns them), pass 1.0 for
    values already in 0-255.
    """
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise ShapeMismatch(f'{x.shape} and {x_hat.shape}')
    if not scale > 0:
        raise OutOfRange(f'psnr scale must be positive, got {scale}')
    mse = float(np.mean((scale * (x - x_hat)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


@dataclass
class CompressionResult:
    reconstructed: np.ndarray
    compression_ratio: float
    psnr_db: float
    kept: int
    total: int

    def to_dict(self) -> dict:
        return {
            'compressionRatio': self.compression_ratio,
            'psnrDb': self.psnr_db,
            'kept': self.kept,
            'total': self.total,
        }


def compress(
        x: np.ndarray,
        A: FilterBank,
        B: FilterBank,
        levels: int,
        keep: float,
        scale: float = PEAK,
) -> CompressionResult:
    """
    Keep the global top `keep` fraction of MRA leaf coefficients by magnitude,
    ties going to the smaller flat index, and reconstruct.
    """
    logger = logging.getLogger(f'{LOGGER}.compress')
    if not 0.0 < keep <= 1.0:
        raise OutOfRange(f'keep fraction must lie in (0, 1], got {keep}')
    tree = mra_decompose(x, A, levels)
    leaves = tree.leaves()
    flat = np.concatenate([node.data.ravel() for node in leaves])
    total = flat.size
    kept = max(1, int(math.floor(keep * total + 0.5)))
    order = np.argsort(-np.abs(flat), kind='stable')
    mask = np.zeros(total, dtype=bool)
    mask[order[:kept]] = True
    flat = np.where(mask, flat, 0.0)
    offset = 0
    for node in leaves:
        size = node.data.size
        node.data = flat[offset:offset + size].reshape(node.data.shape)
        offset += size
    rebuilt = mra_reconstruct(tree, B)
    ratio = total / kept
    quality = psnr(x, rebuilt, scale)
    logger.debug(f'Kept {kept} of {total} coefficients, PSNR {quality:.2f} dB')
    return CompressionResult(rebuilt, ratio, quality, kept, total)


def denoise(
        x: np.ndarray,
        A: FilterBank,
        B: FilterBank,
        tau: float,
        levels: int = 1,
        rule: str = 'soft',
        exempt_lowpass: bool = False,
) -> np.ndarray:
    """Threshold every MRA leaf map, the lowpass map included unless exempted."""
    if tau < 0:
        raise OutOfRange(f'threshold must be non-negative, got {tau}')
    if rule not in ('soft', 'hard'):
        raise UnsupportedCase(f'thresholding rule {rule!r}')
    threshold = shrink if rule == 'soft' else hard
    tree = mra_decompose(x, A, levels)
    lowpass = tree.nodes[levels][0]
    for node in tree.leaves():
        if exempt_lowpass and node is lowpass:
            continue
        node.data = threshold(node.data, tau)
    return mra_reconstruct(tree, B)


def tree_features(tree: DecompTree) -> np.ndarray:
    """relu of every non-root node, level-major, node index, row-major."""
    nodes = tree.coefficient_nodes()
    if not nodes:
        return np.zeros(0)
    return np.concatenate([np.maximum(node.data, 0.0).ravel() for node in nodes])


def extract_features(x: np.ndarray, spec: TreeSpec) -> np.ndarray:
    return tree_features(build_tree(x, spec))


@dataclass
class PoolResult:
    values: np.ndarray
    switches: np.ndarray
    window: Tuple[int, ...] = ()


def _blocks(v: np.ndarray, window: Tuple[int, ...]) -> np.ndarray:
    """View v as (..., *blocks, prod(window)) over the trailing len(window) axes."""
    d = len(window)
    lead = v.shape[:v.ndim - d]
    spatial = v.shape[v.ndim - d:]
    split = []
    for n, w in zip(spatial, window):
        split += [n // w, w]
    blocked = v.reshape(lead + tuple(split))
    k = len(lead)
    order = list(range(k)) + [k + 2 * i for i in range(d)] + [k + 2 * i + 1 for i in range(d)]
    blocked = blocked.transpose(order)
    return blocked.reshape(blocked.shape[:k + d] + (-1,))


def maxpool(v: np.ndarray, window: Sequence[int]) -> PoolResult:
    """Signed max-magnitude entry of every window and its flat in-window index."""
    v = np.asarray(v, dtype=float)
    window = tuple(int(w) for w in window)
    if len(window) > v.ndim or any(n % w for n, w in zip(v.shape[v.ndim - len(window):], window)):
        raise ShapeNotDivisible(f'shape {v.shape}, window {window}')
    blocks = _blocks(v, window)
    switches = np.argmax(np.abs(blocks), axis=-1)
    values = np.take_along_axis(blocks, switches[..., None], axis=-1)[..., 0]
    return PoolResult(values, switches, window)


def unpool(p: PoolResult, window: Optional[Sequence[int]] = None) -> np.ndarray:
    window = tuple(int(w) for w in (window if window is not None else p.window))
    size = int(np.prod(window))
    switches = np.asarray(p.switches)
    values = np.asarray(p.values, dtype=float)
    if switches.shape != values.shape:
        raise InvalidSwitch(f'switches {switches.shape} for values {values.shape}')
    if not np.issubdtype(switches.dtype, np.integer) or np.any((switches < 0) | (switches >= size)):
        raise InvalidSwitch(f'switches outside a window of {size} entries')
    d = len(window)
    k = values.ndim - d
    blocks = np.zeros(values.shape + (size,))
    np.put_along_axis(blocks, switches[..., None], values[..., None], axis=-1)
    blocks = blocks.reshape(values.shape + window)
    order = list(range(k))
    for i in range(d):
        order += [k + i, k + d + i]
    out = blocks.transpose(order)
    return out.reshape(values.shape[:k] + tuple(n * w for n, w in zip(values.shape[k:], window)))


def activation(v: np.ndarray, kind: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if kind == 'sigmoid':
        return special.expit(v)
    if kind == 'tanh':
        return np.tanh(v)
    if kind == 'none':
        return v.copy()
    raise UnsupportedCase(f'activation {kind!r}, expected one of {ACTIVATIONS}')


def activation_inverse(v: np.ndarray, kind: str) -> np.ndarray:
    """
    Componentwise inverse. Values on the boundary of the range are clamped
    CLAMP inside it; values outside the closed range raise OutOfRange.
    """
    v = np.asarray(v, dtype=float)
    if kind == 'none':
        return v.copy()
    if kind not in ACTIVATION_RANGES:
        raise UnsupportedCase(f'activation {kind!r}, expected one of {ACTIVATIONS}')
    low, high = ACTIVATION_RANGES[kind]
    inverse = special.logit if kind == 'sigmoid' else np.arctanh
    if np.any(~np.isfinite(v)) or np.any((v < low) | (v > high)):
        raise OutOfRange(f'{kind} inverse needs values in [{low}, {high}]')
    return inverse(np.clip(v, low + CLAMP, high - CLAMP))


@dataclass
class LayerSpec:
    """
    One convolutional layer: decomposition with `bank` (which also
    downsamples by bank.M), the activation, then optional max pooling.
    """
    bank: FilterBank
    activation: str = 'none'
    pooling: str = 'downsample'
    window: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise UnsupportedCase(f'activation {self.activation!r}')
        if self.pooling not in ('downsample', 'maxpool'):
            raise UnsupportedCase(f'pooling {self.pooling!r}')
        if self.pooling == 'maxpool' and not self.window:
            raise UnsupportedCase('max pooling needs a window')
        self.window = tuple(self.window)


@dataclass
class DeconvReport:
    transpose_error: List[float] = field(default_factory=list)
    uep_error: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'transposeErrorPerLayer': self.transpose_error,
            'uepErrorPerLayer': self.uep_error,
        }


def _invert(
        h: np.ndarray,
        layers: List[LayerSpec],
        switches: List[Optional[PoolResult]],
        recon: List[FilterBank],
        clip: bool = False,
) -> np.ndarray:
    """clip=True moves values into the activation range before inverting."""
    for layer, pooled, B in zip(reversed(layers), reversed(switches), reversed(recon)):
        if pooled is not None:
            h = unpool(PoolResult(h, pooled.switches, layer.window))
        if clip and layer.activation in ACTIVATION_RANGES:
            h = np.clip(h, *ACTIVATION_RANGES[layer.activation])
        coeffs = activation_inverse(h, layer.activation)
        h = reconstruct(CoeffSet.from_stacked(coeffs, layer.bank), B)
    return h


def deconv_compare(x: np.ndarray, layers: List[LayerSpec]) -> DeconvReport:
    """
    Run the layers forward, then rebuild the input from each layer's output
    twice: with the layer banks themselves (the transpose) and with designed
    reconstruction banks satisfying the UEP. Errors are relative L2.
    """
    logger = logging.getLogger(f'{LOGGER}.deconv_compare')
    x = np.asarray(x, dtype=float)
    norm = np.linalg.norm(x)
    transposed = [tight_dual(layer.bank) for layer in layers]
    designed = [design_recon_filters(layer.bank, 'minNorm') for layer in layers]

    report = DeconvReport()
    h = x
    switches: List[Optional[PoolResult]] = []
    for depth, layer in enumerate(layers, start=1):
        h = activation(decompose(h, layer.bank).stack(layer.bank.d), layer.activation)
        if layer.pooling == 'maxpool':
            pooled = maxpool(h, layer.window)
            switches.append(pooled)
            h = pooled.values
        else:
            switches.append(None)
        stack = layers[:depth]
        paths = ((transposed, report.transpose_error, True), (designed, report.uep_error, False))
        for recon, errors, clip in paths:
            rebuilt = _invert(h, stack, switches, recon[:depth], clip)
            errors.append(float(np.linalg.norm(rebuilt - x) / norm))
        logger.debug(
            f'layer {depth}: transpose error {report.transpose_error[-1]:.3e}, '
            f'designed error {report.uep_error[-1]:.3e}',
        )
    return report
