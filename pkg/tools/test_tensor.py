import numpy as np
import pytest

from adaframe.controllers.exceptions import (
    ArityMismatch,
    ChannelMismatch,
    InvalidFilterBank,
    ShapeNotDivisible,
)
from adaframe.tensor import (
    CoeffSet,
    FilterBank,
    PatchData,
    decompose,
    dft_filter,
    downsample,
    flip,
    patch_matrix,
    reconstruct,
    subdivision,
    tight_dual,
    transition,
    upsample,
)
from adaframe.wavelets import bspline_linear, get_bank, haar


def direct_transition(v, a, M):
    """out(n) = sum_k v(k) a(k - M n), k periodic; 1D only."""
    N = len(v)
    out = np.zeros(N // M)
    for n in range(N // M):
        for p, tap in enumerate(a):
            out[n] += tap * v[(M * n + p) % N]
    return out


def direct_subdivision(w, b, M):
    N = len(w) * M
    out = np.zeros(N)
    for n in range(N):
        for k, value in enumerate(w):
            p = (n - M * k) % N
            if p < len(b):
                out[n] += value * b[p]
    return M * out


def test_downsample():
    assert np.array_equal(downsample([1, 2, 3, 4, 5, 6], (2,)), [1, 3, 5])
    v = np.arange(16.0).reshape(4, 4)
    assert np.array_equal(downsample(v, (2, 2)), [[0, 2], [8, 10]])
    assert np.array_equal(downsample(v, (1, 1)), v)


def test_downsample_not_divisible():
    with pytest.raises(ShapeNotDivisible):
        downsample(np.zeros(7), (2,))


def test_upsample():
    assert np.array_equal(upsample([1, 2], (2,)), [1, 0, 2, 0])
    assert np.array_equal(upsample([5], (3,)), [5, 0, 0])
    v = np.random.default_rng(0).standard_normal((3, 5))
    assert np.array_equal(downsample(upsample(v, (2, 3)), (2, 3)), v)


def test_transition_examples():
    assert np.allclose(transition([1, 0, 0, 0], [0.5, 0.5], (1,)), [0.5, 0, 0, 0.5])
    assert np.allclose(transition([1, 1, 1, 1], [0.5, 0.5], (2,)), [1, 1])
    v = np.random.default_rng(1).standard_normal(6)
    assert np.allclose(transition(v, [1.0], (1,)), v)


def test_transition_matches_direct_summation():
    rng = np.random.default_rng(2)
    for M in (1, 2, 3):
        v = rng.standard_normal(12)
        a = rng.standard_normal(5)
        assert np.allclose(transition(v, a, (M,)), direct_transition(v, a, M), atol=1e-12)


def test_subdivision_examples():
    assert np.allclose(subdivision([1, 0], [1, 1], (2,)), [2, 2, 0, 0])
    assert np.allclose(subdivision([1], [1, 1], (2,)), [2, 2])
    w = np.random.default_rng(3).standard_normal(5)
    assert np.allclose(subdivision(w, [1.0], (1,)), w)


def test_subdivision_matches_direct_summation():
    rng = np.random.default_rng(4)
    for M in (1, 2, 3):
        w = rng.standard_normal(4)
        b = rng.standard_normal(4)
        assert np.allclose(subdivision(w, b, (M,)), direct_subdivision(w, b, M), atol=1e-12)


def test_subdivision_is_scaled_adjoint_of_transition():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((3, 2))
    v = rng.standard_normal((8, 6))
    w = rng.standard_normal((4, 3))
    lhs = np.sum(transition(v, a, (2, 2)) * w)
    rhs = np.sum(v * subdivision(w, a, (2, 2))) / 4
    assert abs(lhs - rhs) < 1e-10


def test_decompose_haar_constant():
    maps = decompose(np.ones(4), haar()).maps
    assert np.allclose(maps[0], [1, 1])
    assert np.allclose(maps[1], [0, 0])


def test_decompose_delta_bank():
    bank = FilterBank(taps=[[1.0]], M=(1,))
    v = np.random.default_rng(6).standard_normal(7)
    assert np.allclose(decompose(v, bank).maps[0], v)


def test_bspline_highpass_annihilates_constants():
    bank = get_bank('bspline-linear', d=2)
    maps = decompose(np.full((8, 8), 3.0), bank).maps
    assert np.allclose(maps[0], 3.0)
    for c in maps[1:]:
        assert np.allclose(c, 0.0, atol=1e-14)


@pytest.mark.parametrize('name,d,M', [
    ('haar', 1, None),
    ('haar', 2, None),
    ('haar', 1, (1,)),
    ('bspline-linear', 1, None),
    ('bspline-linear', 2, (1, 2)),
    ('db2', 1, None),
    ('db3', 2, None),
])
def test_perfect_reconstruction(name, d, M):
    A = get_bank(name, d=d, M=M)
    rng = np.random.default_rng(7)
    for _ in range(5):
        v = rng.standard_normal((16,) * d)
        rebuilt = reconstruct(decompose(v, A), tight_dual(A))
        assert np.max(np.abs(rebuilt - v)) < 1e-8


def test_haar_round_trip_exact():
    v = np.random.default_rng(8).standard_normal(8)
    A = haar()
    assert np.max(np.abs(reconstruct(decompose(v, A), tight_dual(A)) - v)) < 1e-12


def test_reconstruct_zero_maps():
    A = bspline_linear()
    c = CoeffSet([np.zeros(4) for _ in range(A.m)])
    assert np.array_equal(reconstruct(c, A), np.zeros(8))


def test_reconstruct_arity_mismatch():
    with pytest.raises(ArityMismatch):
        reconstruct(CoeffSet([np.zeros(4)]), haar())


def test_decompose_shape_not_divisible():
    with pytest.raises(ShapeNotDivisible):
        decompose(np.zeros(9), haar())


def test_decompose_channel_mismatch():
    with pytest.raises(ChannelMismatch):
        decompose(np.zeros((4, 4)), haar())


def test_flip():
    A = FilterBank(taps=[[1.0, 2.0, 3.0]], M=(1,))
    assert np.array_equal(flip(A).taps, [[3.0, 2.0, 1.0]])
    assert flip(A).kind == 'biframe_recon'
    sym = FilterBank(taps=[[1.0, 2.0, 1.0]], M=(1,))
    assert np.array_equal(flip(sym).taps, sym.taps)
    B = get_bank('db2', d=2)
    assert np.array_equal(flip(flip(B)).taps, B.taps)


def test_tight_dual_keeps_taps():
    A = get_bank('db2')
    B = tight_dual(A)
    assert np.array_equal(B.taps, A.taps)
    assert B.kind == 'biframe_recon'
    assert B.taps is not A.taps


def test_dft_filter():
    assert np.allclose(dft_filter(np.array([1.0]), (4,)), np.ones(4))
    assert np.allclose(dft_filter(np.array([0.5, 0.5]), (2,)), [1, 0])
    a = np.random.default_rng(9).standard_normal((3, 2))
    assert np.isclose(dft_filter(a, (8, 8))[0, 0], a.sum())


def test_subdivision_fourier_identity():
    rng = np.random.default_rng(10)
    w = rng.standard_normal(6)
    b = rng.standard_normal(3)
    out = np.fft.fft(subdivision(w, b, (2,)))
    xi = np.arange(12)
    # w_hat(2 xi) on the 12-point grid is w_hat at index j mod 6 of the 6-point grid
    expected = 2 * np.fft.fft(w)[xi % 6] * dft_filter(b, (12,))
    assert np.max(np.abs(out - expected)) < 1e-10


def test_transition_fourier_identity():
    rng = np.random.default_rng(13)
    v = rng.standard_normal(12)
    a = rng.standard_normal(3)
    out = np.fft.fft(transition(v, a, (2,)))
    # correlation at full rate is conj(a_hat) v_hat; keeping even samples folds the two halves
    full = np.conj(dft_filter(a, (12,))) * np.fft.fft(v)
    expected = 0.5 * (full[:6] + full[6:])
    assert np.max(np.abs(out - expected)) < 1e-10


def test_transition_fourier_identity_2d():
    rng = np.random.default_rng(14)
    v = rng.standard_normal((8, 6))
    a = rng.standard_normal((2, 3))
    out = np.fft.fft2(transition(v, a, (2, 3)))
    full = np.conj(dft_filter(a, (8, 6))) * np.fft.fft2(v)
    expected = np.zeros((4, 2), dtype=complex)
    for g0 in range(2):
        for g1 in range(3):
            expected += full[4 * g0:4 * g0 + 4, 2 * g1:2 * g1 + 2]
    assert np.max(np.abs(out - expected / 6)) < 1e-10


def test_transition_is_linear():
    rng = np.random.default_rng(15)
    v, w = rng.standard_normal((2, 8, 8))
    a, b = rng.standard_normal((2, 3, 3))
    M = (2, 2)
    assert np.allclose(transition(2.5 * v - w, a, M), 2.5 * transition(v, a, M) - transition(w, a, M))
    assert np.allclose(transition(v, a - 3.0 * b, M), transition(v, a, M) - 3.0 * transition(v, b, M))
    assert np.array_equal(transition(np.zeros((8, 8)), a, M), np.zeros((4, 4)))


def test_patch_matrix_reproduces_transition():
    rng = np.random.default_rng(11)
    v = rng.standard_normal((6, 8))
    a = rng.standard_normal((3, 2))
    X, shape = patch_matrix(v, (3, 2), (2, 2))
    assert shape == (3, 4)
    assert np.allclose((X @ a.ravel()).reshape(shape), transition(v, a, (2, 2)))


def test_channel_convolutional_bank():
    rng = np.random.default_rng(12)
    bank = FilterBank(
        taps=rng.standard_normal((3, 2, 2)),
        M=(2,),
        channel_support=2,
        channel_sampling=2,
    )
    v = rng.standard_normal((4, 8))
    c = decompose(v, bank)
    assert [w.shape for w in c.maps] == [(2, 4)] * 3
    stacked = c.stack(bank.d)
    assert stacked.shape == (6, 4)
    # filter-major stacking
    assert np.array_equal(stacked[2], c.maps[1][0])
    again = CoeffSet.from_stacked(stacked, bank)
    assert all(np.array_equal(x, y) for x, y in zip(again.maps, c.maps))
    # the second channel position reads channels 2 and 3
    expected = sum(transition(v[ch + 2], bank.taps[0, ch], (2,)) for ch in range(2))
    assert np.allclose(c.maps[0][1], expected)


def test_fully_connected_channels_squeeze():
    rng = np.random.default_rng(13)
    bank = FilterBank(taps=rng.standard_normal((2, 3, 2)), M=(1,), channel_support=3)
    v = rng.standard_normal((3, 5))
    maps = decompose(v, bank).maps
    assert maps[0].shape == (5,)
    expected = sum(transition(v[ch], bank.taps[0, ch], (1,)) for ch in range(3))
    assert np.allclose(maps[0], expected)
    with pytest.raises(ChannelMismatch):
        decompose(rng.standard_normal((4, 5)), bank)


def test_filter_bank_validation():
    with pytest.raises(InvalidFilterBank):
        FilterBank(taps=[[1.0, 1.0]], M=(0,))
    with pytest.raises(InvalidFilterBank):
        FilterBank(taps=[[1.0, 1.0]], M=(2,), roles=('bandpass',))
    with pytest.raises(InvalidFilterBank):
        FilterBank(taps=[[np.nan, 1.0]], M=(2,))
    with pytest.raises(InvalidFilterBank):
        FilterBank(taps=[[1.0, 1.0]], M=(2,), channel_sampling=2)
    bank = FilterBank(taps=np.ones((3, 2, 2)), M=(2, 2))
    assert bank.roles == ('lowpass', 'highpass', 'highpass')
    assert bank.det == 4
    assert bank.n_taps == 4


def test_patch_data_gram():
    A = haar()
    rng = np.random.default_rng(14)
    batch = [rng.standard_normal(8), rng.standard_normal(8)]
    data = PatchData.from_batch(batch, A)
    X0, _ = patch_matrix(batch[0], A.support, A.M)
    X1, _ = patch_matrix(batch[1], A.support, A.M)
    assert np.allclose(data.gram, X0.T @ X0 + X1.T @ X1)
    coeffs = data.coefficients(A.matrix)
    assert np.allclose(coeffs[0][:, 1], decompose(batch[0], A).maps[1])
