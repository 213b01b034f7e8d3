import numpy as np
import pytest

from adaframe.controllers.exceptions import (
    ModeMismatch,
    NoLowpassFlag,
    OutOfRange,
    ShapeNotDivisible,
    UnsupportedCase,
)
from adaframe.multilevel import (
    TreeSpec,
    build_tree,
    convnet_decompose,
    mra_decompose,
    mra_reconstruct,
    scatter_decompose,
)
from adaframe.tensor import FilterBank, decompose, tight_dual
from adaframe.wavelets import get_bank, haar


def test_mra_single_level_is_decompose():
    v = np.random.default_rng(0).standard_normal(16)
    A = get_bank('db2')
    tree = mra_decompose(v, A, 1)
    maps = decompose(v, A).maps
    assert [node.data.tolist() for node in tree.level(1)] == [c.tolist() for c in maps]
    assert tree.nodes[0][0].data is None


def test_mra_haar_constant():
    tree = mra_decompose(np.full(8, 3.0), haar(), 3)
    for level in range(1, 4):
        assert np.allclose(tree.level(level)[1].data, 0.0)
    assert tree.level(3)[0].data.shape == (1,)
    assert np.allclose(tree.level(3)[0].data, 3.0)


def test_mra_tree_shape():
    A = get_bank('bspline-linear')
    tree = mra_decompose(np.zeros(64), A, 4)
    assert len(tree.leaves()) == 4 * (A.m - 1) + 1
    for level in range(1, 4):
        expanded = [node for node in tree.level(level) if node.expanded]
        assert [node.filter_index for node in expanded] == [0]
    assert not any(node.expanded for node in tree.level(4))
    assert tree.level(3)[2].path == (0, 0, 2)
    assert tree.node_count() == 4 * A.m


@pytest.mark.parametrize('levels', [1, 2, 3, 4, 5])
def test_mra_round_trip_1d(levels):
    v = np.random.default_rng(levels).standard_normal(128)
    for name in ('haar', 'bspline-linear', 'db2'):
        A = get_bank(name)
        rebuilt = mra_reconstruct(mra_decompose(v, A, levels), tight_dual(A))
        assert np.max(np.abs(rebuilt - v)) <= 1e-8


@pytest.mark.parametrize('levels', [1, 3, 5])
def test_mra_round_trip_2d(levels):
    v = np.random.default_rng(10 + levels).standard_normal((32, 32))
    for name in ('haar', 'bspline-linear'):
        A = get_bank(name, d=2)
        rebuilt = mra_reconstruct(mra_decompose(v, A, levels), tight_dual(A))
        assert np.max(np.abs(rebuilt - v)) <= 1e-8


def test_mra_zeroed_tree():
    A = get_bank('db2')
    tree = mra_decompose(np.random.default_rng(1).standard_normal(32), A, 3)
    for node in tree.coefficient_nodes():
        node.data = np.zeros_like(node.data)
    assert np.array_equal(mra_reconstruct(tree, tight_dual(A)), np.zeros(32))


def test_mra_zeroing_vanishing_highpass():
    v = np.repeat(np.array([1.0, -2.0, 4.0, 0.5, 3.0, -1.0, 2.0, 2.5]), 2)
    A = haar()
    tree = mra_decompose(v, A, 3)
    tree.level(1)[1].data = np.zeros(8)
    assert np.max(np.abs(mra_reconstruct(tree, tight_dual(A)) - v)) <= 1e-12


def test_mra_errors():
    with pytest.raises(NoLowpassFlag):
        mra_decompose(np.zeros(8), FilterBank(taps=haar().taps, M=(2,), roles=('highpass', 'lowpass')), 1)
    with pytest.raises(ShapeNotDivisible):
        mra_decompose(np.zeros(12), haar(), 3)
    with pytest.raises(OutOfRange):
        mra_decompose(np.zeros(8), haar(), 0)
    tree = scatter_decompose(np.ones(8), haar(), 1)
    with pytest.raises(ModeMismatch):
        mra_reconstruct(tree, haar())


def test_scatter_full_tree():
    v = np.random.default_rng(2).standard_normal(16)
    tree = scatter_decompose(v, haar(), 2, nonlinearity='none')
    assert len(tree.level(1)) == 2
    assert len(tree.level(2)) == 4
    assert len(tree.leaves()) == 4
    assert [node.path for node in tree.level(2)] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert [node.parent for node in tree.level(2)] == [0, 0, 1, 1]


def test_scatter_prune_all():
    tree = scatter_decompose(np.random.default_rng(3).standard_normal(16), haar(), 3, prune_threshold=1.1)
    assert len(tree.nodes) == 2
    assert len(tree.level(1)) == 2
    assert all(node.pruned and not node.expanded for node in tree.level(1))


def test_scatter_energy_accounting():
    A = get_bank('bspline-linear', M=(1,))
    v = np.random.default_rng(4).standard_normal(32)
    tree = scatter_decompose(v, A, 2, nonlinearity='none')
    assert abs(sum(node.energy for node in tree.level(1)) - float(v @ v)) <= 1e-10
    for parent_index, parent in enumerate(tree.level(1)):
        children = [node for node in tree.level(2) if node.parent == parent_index]
        assert abs(sum(node.energy for node in children) - parent.energy) <= 1e-10


def test_scatter_lowpass_path_matches_mra():
    v = np.random.default_rng(5).standard_normal(32)
    A = get_bank('db2')
    scattering = scatter_decompose(v, A, 3, nonlinearity='none')
    mra = mra_decompose(v, A, 3)
    lowpass = next(node for node in scattering.level(3) if node.path == (0, 0, 0))
    assert np.array_equal(lowpass.data, mra.level(3)[0].data)


def test_scatter_pruning_is_monotone():
    v = np.random.default_rng(6).standard_normal(64)
    counts = [
        scatter_decompose(v, get_bank('bspline-linear'), 3, prune_threshold=t).node_count()
        for t in (0.0, 0.01, 0.05, 0.2, 0.5)
    ]
    assert counts == sorted(counts, reverse=True)


def test_scatter_nonlinearity():
    v = np.random.default_rng(7).standard_normal(16)
    tree = scatter_decompose(v, haar(), 2, nonlinearity='abs')
    expected = decompose(np.abs(tree.level(1)[1].data), haar()).maps
    assert np.array_equal(tree.level(2)[2].data, expected[0])
    with pytest.raises(UnsupportedCase):
        scatter_decompose(v, haar(), 2, nonlinearity='tanh')
    with pytest.raises(OutOfRange):
        scatter_decompose(v, haar(), 2, prune_threshold=-1.0)


def test_scatter_per_node_banks():
    v = np.random.default_rng(8).standard_normal(16)
    second = [haar(), get_bank('bspline-linear')]
    tree = scatter_decompose(v, [haar(), second], 2, nonlinearity='none')
    assert len(tree.level(2)) == 5
    assert tree.banks[1] == second


def test_scatter_shape_not_divisible():
    with pytest.raises(ShapeNotDivisible):
        scatter_decompose(np.zeros(6), haar(), 2)


def test_convnet_single_level():
    v = np.random.default_rng(9).standard_normal((8, 8))
    A = get_bank('haar', d=2)
    tree = convnet_decompose(v, A, 1)
    assert np.array_equal(tree.level(1)[0].data, np.stack(decompose(v, A).maps))


def test_convnet_two_layers():
    rng = np.random.default_rng(10)
    first = FilterBank(taps=rng.standard_normal((12, 6, 6)), M=(2, 2))
    second = FilterBank(taps=rng.standard_normal((12, 12, 4, 4)), M=(2, 2), channel_support=12)
    tree = convnet_decompose(rng.standard_normal((16, 16)), [first, second], 2)
    assert tree.level(1)[0].data.shape == (12, 8, 8)
    assert tree.level(2)[0].data.shape == (12, 4, 4)
    assert all(len(tree.level(level)) == 1 for level in (1, 2))


def test_convnet_relu_on_negative_coefficients():
    first = FilterBank(taps=[[-1.0]], M=(1,))
    second = FilterBank(taps=[[[1.0]]], M=(1,), channel_support=1)
    tree = convnet_decompose(np.ones(4), [first, second], 2, nonlinearity='relu')
    assert np.all(tree.level(1)[0].data < 0)
    assert np.array_equal(tree.level(2)[0].data, np.zeros((1, 4)))


def test_build_tree():
    v = np.random.default_rng(11).standard_normal(16)
    tree = build_tree(v, TreeSpec(mode='mra', banks=haar(), levels=2))
    assert tree.mode == 'mra'
    tree = build_tree(v, TreeSpec(mode='scattering', banks=haar(), levels=2, prune_threshold=1.1))
    assert tree.node_count() == 2
    with pytest.raises(ModeMismatch):
        build_tree(v, TreeSpec(mode='wavelet', banks=haar()))
