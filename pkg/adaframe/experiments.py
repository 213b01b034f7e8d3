"""
Experiment runners: filter alignment, the wavelet recovery table, bank
verification and the layer stacks of the deconvolution comparison.
"""
# stdlib
import csv
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple
# lib
import numpy as np
from scipy.optimize import linear_sum_assignment
# local
from adaframe.controllers.exceptions import DimensionMismatch, NumericalFailure, UnsupportedCase
from adaframe.corpus import gen_sparse_wavelet_signal
from adaframe.learn import LearnConfig, learn_frame
from adaframe.pipelines import LayerSpec
from adaframe.tensor import FilterBank, tight_dual
from adaframe.uep import UepReport, uep_report
from adaframe.wavelets import get_bank


__all__ = [
    'RecoveryCell',
    'RecoveryTable',
    'SUCCESS_DISTANCE',
    'align_filters',
    'deconv_default_layers',
    'deconv_full_connect_layers',
    'run_recovery_experiment',
    'verify_bank',
]

LOGGER = 'adaframe.experiments'

SUCCESS_DISTANCE = 1e-4
DEFAULT_LENGTH = 1024


def align_filters(learned: FilterBank, reference: FilterBank) -> Tuple[FilterBank, float]:
    """
    Best signed permutation of the learned filters onto the reference, by
    assignment on min(||a - b||, ||a + b||)^2. Returns the aligned bank and
    its Frobenius distance to the reference.
    """
    if learned.taps.shape != reference.taps.shape:
        raise DimensionMismatch(f'{learned.taps.shape} and {reference.taps.shape}')
    a = learned.matrix
    b = reference.matrix
    minus = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    plus = np.linalg.norm(a[:, None, :] + b[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(np.minimum(minus, plus) ** 2)
    aligned = np.empty_like(b)
    for i, j in zip(rows, cols):
        aligned[j] = a[i] if minus[i, j] <= plus[i, j] else -a[i]
    distance = float(np.linalg.norm(aligned - b))
    return learned.with_matrix(aligned, roles=reference.roles), distance


@dataclass
class RecoveryCell:
    wavelet: str
    density: float
    trials: int
    successes: int
    distances: List[float] = field(default_factory=list)

    @property
    def ratio(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


@dataclass
class RecoveryTable:
    cells: List[RecoveryCell]
    length: int = DEFAULT_LENGTH

    def cell(self, wavelet: str, density: float) -> RecoveryCell:
        for cell in self.cells:
            if cell.wavelet == wavelet and np.isclose(cell.density, density):
                return cell
        raise KeyError((wavelet, density))

    def to_csv(self, path):
        with open(path, 'w', newline='') as handle:
            handle.write(f'# length={self.length}\n')
            writer = csv.writer(handle)
            writer.writerow(['wavelet', 'density', 'trials', 'successes', 'ratio', 'bestDistance'])
            for cell in self.cells:
                best = min(cell.distances) if cell.distances else float('inf')
                writer.writerow([
                    cell.wavelet,
                    f'{cell.density:.17g}',
                    cell.trials,
                    cell.successes,
                    f'{cell.ratio:.17g}',
                    f'{best:.17g}',
                ])


def _trial_seed(seed: int, *indices: int) -> int:
    return int(np.random.SeedSequence([seed, *indices]).generate_state(1)[0])


def run_recovery_experiment(
        wavelets: Sequence[str],
        densities: Sequence[float],
        trials: int = 10,
        restarts: int = 10,
        length: int = DEFAULT_LENGTH,
        seed: int = 0,
        max_outer: int = 200,
) -> RecoveryTable:
    """
    For every (wavelet, density) cell and trial: synthesize a sparse signal,
    learn a frame of the wavelet's shape from `restarts` random starts and
    count the trial a success when the smallest aligned distance is below
    SUCCESS_DISTANCE.
    """
    logger = logging.getLogger(f'{LOGGER}.run_recovery_experiment')
    cells = []
    for wi, name in enumerate(wavelets):
        reference = get_bank(name)
        for di, density in enumerate(densities):
            cell = RecoveryCell(name, float(density), trials, 0)
            for trial in range(trials):
                signal = gen_sparse_wavelet_signal(name, density, length, _trial_seed(seed, wi, di, trial))
                best = np.inf
                for restart in range(restarts):
                    cfg = LearnConfig(
                        m=reference.m,
                        support=reference.support,
                        M=reference.M,
                        seed=_trial_seed(seed, wi, di, trial, restart),
                        max_outer=max_outer,
                    )
                    try:
                        learned, _ = learn_frame([signal], cfg)
                    except NumericalFailure as e:
                        logger.debug(f'{name} density {density} trial {trial} restart {restart}: {e}')
                        continue
                    best = min(best, align_filters(learned, reference)[1])
                    if best < SUCCESS_DISTANCE:
                        break
                cell.distances.append(float(best))
                cell.successes += int(best < SUCCESS_DISTANCE)
            logger.info(f'{name} density {density}: {cell.successes}/{trials} recovered')
            cells.append(cell)
    return RecoveryTable(cells, length)


def verify_bank(A: FilterBank, B: Optional[FilterBank] = None, grid: Optional[Sequence[int]] = None) -> UepReport:
    """UEP report of (A, B); a frame is checked against its own tight dual."""
    if B is None:
        if A.kind != 'frame':
            raise UnsupportedCase(f'a {A.kind} bank needs its reconstruction bank')
        B = tight_dual(A)
    return uep_report(A, B, grid)


def _random_bank(rng: np.random.Generator, shape: Tuple[int, ...], M, **kwargs) -> FilterBank:
    taps = rng.standard_normal(shape)
    norms = np.linalg.norm(taps.reshape(shape[0], -1), axis=1)
    taps /= norms.reshape((-1,) + (1,) * (len(shape) - 1))
    return FilterBank(taps=taps, M=M, **kwargs)


def deconv_default_layers(seed: int = 0, activation: str = 'sigmoid') -> List[LayerSpec]:
    """
    Layer 1: 12 random 6x6 filters, sampling 2x2. Layer 2: 12 random 4x4
    filters spanning 2 input channels with channel step 2 and sampling (2, 1),
    redundant enough for designed reconstruction filters.
    """
    rng = np.random.default_rng(seed)
    first = _random_bank(rng, (12, 6, 6), (2, 2))
    second = _random_bank(rng, (12, 2, 4, 4), (2, 1), channel_support=2, channel_sampling=2)
    return [LayerSpec(first, activation), LayerSpec(second, activation)]


def deconv_full_connect_layers(seed: int = 0, activation: str = 'sigmoid') -> List[LayerSpec]:
    """Layer 2 fully connected over the 12 channels of layer 1 (not redundant)."""
    rng = np.random.default_rng(seed)
    first = _random_bank(rng, (12, 6, 6), (2, 2))
    second = _random_bank(rng, (12, 12, 4, 4), (2, 2), channel_support=12)
    return [LayerSpec(first, activation), LayerSpec(second, activation)]
