"""
Synthetic signal generators for the learning experiments.
"""
# stdlib
import logging
from typing import Sequence, Tuple
# lib
import numpy as np
from scipy import ndimage
# local
from adaframe.controllers.exceptions import OutOfRange, ShapeNotDivisible
from adaframe.tensor import CoeffSet, reconstruct, tight_dual
from adaframe.wavelets import get_bank


__all__ = [
    'add_gaussian_noise',
    'gen_oscillatory_texture',
    'gen_sparse_wavelet_signal',
    'gen_staircase',
    'gen_test_image',
]

LOGGER = 'adaframe.corpus'


def gen_staircase(length: int, s: int, seed: int = 0) -> np.ndarray:
    """
    +1/-1 runs of length in [s, 2s], alternating sign from a random start.
    The final run takes whatever remains, which is at least s.
    """
    if s < 1 or length < 2 * s:
        raise OutOfRange(f'staircase needs s >= 1 and length >= 2s, got length={length}, s={s}')
    rng = np.random.default_rng(seed)
    out = np.empty(length)
    sign = rng.choice([-1.0, 1.0])
    pos = 0
    while length - pos >= 2 * s:
        run = int(rng.integers(s, min(2 * s, length - pos - s) + 1))
        out[pos:pos + run] = sign
        pos += run
        sign = -sign
    out[pos:] = sign
    return out


def gen_sparse_wavelet_signal(
        wavelet_name: str,
        density: float,
        length: int,
        seed: int = 0,
) -> np.ndarray:
    """
    Synthesis R_A c of a coefficient set with floor(density * length)
    standard normal entries at uniformly drawn positions. The positions range
    over all m * length / M coefficients, so for redundant banks the fraction
    of nonzero coefficients is below `density`.
    """
    logger = logging.getLogger(f'{LOGGER}.gen_sparse_wavelet_signal')
    if not 0.0 < density <= 1.0:
        raise OutOfRange(f'density must lie in (0, 1], got {density}')
    bank = get_bank(wavelet_name)
    if length % bank.M[0]:
        raise ShapeNotDivisible(f'length {length}, sampling {bank.M}')
    rng = np.random.default_rng(seed)
    per_map = length // bank.M[0]
    total = bank.m * per_map
    nonzeros = int(np.floor(density * length))
    coeffs = np.zeros(total)
    support = rng.choice(total, size=nonzeros, replace=False)
    coeffs[support] = rng.standard_normal(nonzeros)
    logger.debug(f'{nonzeros} nonzero {wavelet_name} coefficients over {total}')
    return reconstruct(CoeffSet(list(coeffs.reshape(bank.m, per_map))), tight_dual(bank))


def gen_oscillatory_texture(
        shape: Sequence[int] = (128, 128),
        orientations: int = 4,
        frequency: Tuple[float, float] = (0.08, 0.15),
        seed: int = 0,
) -> np.ndarray:
    """
    Fingerprint-like texture: oriented cosines blended by smooth random
    weights, so the dominant orientation drifts across the image. In [0, 1].
    """
    rng = np.random.default_rng(seed)
    rows, cols = np.meshgrid(np.arange(shape[0]), np.arange(shape[1]), indexing='ij')
    image = np.zeros(tuple(shape))
    weights = []
    for _ in range(orientations):
        field = ndimage.gaussian_filter(rng.standard_normal(tuple(shape)), sigma=min(shape) / 8, mode='wrap')
        weights.append(np.exp(4.0 * field / (field.std() + 1e-12)))
    total = sum(weights)
    for k, weight in enumerate(weights):
        theta = np.pi * k / orientations + rng.uniform(-0.1, 0.1)
        f = rng.uniform(*frequency)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        wave = np.cos(2.0 * np.pi * f * (rows * np.cos(theta) + cols * np.sin(theta)) + phase)
        image += weight / total * wave
    image -= image.min()
    return image / max(image.max(), 1e-12)


def gen_test_image(shape: Sequence[int] = (256, 256), seed: int = 0) -> np.ndarray:
    """
    Natural-like grayscale test image in [0, 1]: a smooth shaded background,
    flat discs and rectangles with sharp edges, and one textured patch.
    """
    rng = np.random.default_rng(seed)
    height, width = shape
    rows, cols = np.meshgrid(np.linspace(0, 1, height), np.linspace(0, 1, width), indexing='ij')
    image = 0.3 + 0.3 * rows * rng.uniform(0.5, 1.0) + 0.2 * cols * rng.uniform(0.5, 1.0)
    for _ in range(4):
        r0, c0 = rng.uniform(0.1, 0.9, size=2)
        radius = rng.uniform(0.05, 0.2)
        image[(rows - r0) ** 2 + (cols - c0) ** 2 < radius ** 2] = rng.uniform(0.0, 1.0)
    for _ in range(3):
        r0, c0 = rng.uniform(0.0, 0.7, size=2)
        h, w = rng.uniform(0.1, 0.3, size=2)
        image[(rows >= r0) & (rows < r0 + h) & (cols >= c0) & (cols < c0 + w)] = rng.uniform(0.0, 1.0)
    patch = (slice(height // 2, height // 2 + height // 4), slice(width // 8, width // 8 + width // 4))
    texture = gen_oscillatory_texture((height // 4, width // 4), seed=seed + 1)
    image[patch] = 0.6 * image[patch] + 0.4 * texture
    return np.clip(ndimage.gaussian_filter(image, sigma=0.7), 0.0, 1.0)


def add_gaussian_noise(x: np.ndarray, sigma: float, seed: int = 0) -> np.ndarray:
    if sigma < 0:
        raise OutOfRange(f'noise level must be non-negative, got {sigma}')
    rng = np.random.default_rng(seed)
    return np.asarray(x, dtype=float) + sigma * rng.standard_normal(np.shape(x))
