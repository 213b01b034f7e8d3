import csv

import numpy as np
import pytest

from adaframe.controllers.exceptions import DimensionMismatch, UnsupportedCase
from adaframe.corpus import gen_sparse_wavelet_signal
from adaframe.experiments import (
    RecoveryCell,
    RecoveryTable,
    align_filters,
    deconv_default_layers,
    deconv_full_connect_layers,
    run_recovery_experiment,
    verify_bank,
)
from adaframe.learn import LearnConfig, learn_frame, sparsity_objective
from adaframe.tensor import FilterBank
from adaframe.uep import bank_pattern
from adaframe.wavelets import get_bank, haar


def test_align_signed_permutation():
    reference = get_bank('bspline-linear')
    shuffled = reference.with_matrix(np.array([-reference.matrix[2], reference.matrix[0], -reference.matrix[1]]))
    aligned, distance = align_filters(shuffled, reference)
    assert distance == 0.0
    assert np.array_equal(aligned.taps, reference.taps)
    assert aligned.roles == reference.roles


def test_align_distance():
    reference = haar()
    learned = reference.with_matrix(reference.matrix + np.array([[0.0, 0.03], [0.04, 0.0]]))
    _, distance = align_filters(learned, reference)
    assert distance == pytest.approx(0.05)
    with pytest.raises(DimensionMismatch):
        align_filters(get_bank('db2'), reference)


def test_recovery_table_csv(tmp_path):
    table = RecoveryTable([
        RecoveryCell('db2', 0.1, 2, 2, [1e-6, 2e-6]),
        RecoveryCell('db2', 0.5, 2, 0, [0.3, 0.4]),
    ])
    assert table.cell('db2', 0.5).ratio == 0.0
    assert table.cell('db2', 0.1).ratio == 1.0
    with pytest.raises(KeyError):
        table.cell('db3', 0.1)
    path = tmp_path / 'table.csv'
    table.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == '# length=1024'
    rows = list(csv.reader(lines[1:]))
    assert rows[0] == ['wavelet', 'density', 'trials', 'successes', 'ratio', 'bestDistance']
    assert rows[1][:5] == ['db2', '0.10000000000000001', '2', '2', '1']
    assert float(rows[2][5]) == 0.3


def test_recovery_experiment_structure():
    kwargs = dict(wavelets=['haar'], densities=[0.1, 0.2], trials=2, restarts=2, length=64, max_outer=10)
    table = run_recovery_experiment(**kwargs)
    assert [(cell.wavelet, cell.density) for cell in table.cells] == [('haar', 0.1), ('haar', 0.2)]
    for cell in table.cells:
        assert cell.trials == 2
        assert len(cell.distances) == 2
        assert 0 <= cell.successes <= 2
    again = run_recovery_experiment(**kwargs)
    assert [cell.distances for cell in again.cells] == [cell.distances for cell in table.cells]
    assert table.length == 64


@pytest.mark.slow
@pytest.mark.parametrize('name', ['db2', 'db3'])
def test_recovery_sparse_signals(name):
    densities = [0.1, 0.2, 0.3]
    table = run_recovery_experiment([name], densities, trials=5, restarts=50)
    for density in densities:
        assert table.cell(name, density).successes >= 4


@pytest.mark.slow
def test_recovery_fails_on_dense_signals():
    table = run_recovery_experiment(['db2'], [0.5], trials=2, restarts=5)
    assert table.cell('db2', 0.5).successes == 0
    reference = get_bank('db2')
    x = gen_sparse_wavelet_signal('db2', 0.5, 1024, seed=4)
    cfg = LearnConfig(m=2, support=(4,), M=(2,), init='waveletBank', init_name='db2')
    learned, _ = learn_frame([x], cfg)
    assert sparsity_objective(learned, [x]) < sparsity_objective(reference, [x])


def test_verify_bank():
    report = verify_bank(get_bank('bspline-linear'))
    assert max(report.time_residual, report.spectral_residual) <= 1e-12
    A = FilterBank(taps=haar().taps, M=(2,), kind='biframe_decomp')
    with pytest.raises(UnsupportedCase):
        verify_bank(A)
    assert verify_bank(A, haar()).time_residual <= 1e-14


def test_deconv_layer_stacks():
    first, second = deconv_default_layers(seed=3)
    assert first.bank.taps.shape == (12, 6, 6)
    assert np.allclose(np.linalg.norm(first.bank.matrix, axis=1), 1.0)
    assert second.bank.channel_support == 2
    assert second.bank.channel_sampling == 2
    assert first.activation == second.activation == 'sigmoid'
    # designed reconstruction needs more unknowns than equations
    assert bank_pattern(first.bank).n_rows == 400 < first.bank.m * first.bank.n_taps == 432
    assert bank_pattern(second.bank).n_rows == 336 < second.bank.m * second.bank.n_taps == 384
    _, full = deconv_full_connect_layers(seed=3)
    assert bank_pattern(full.bank).n_rows > full.bank.m * full.bank.n_taps
