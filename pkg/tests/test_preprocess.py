import io

import numpy as np
import pytest

from adipsim.preprocess import (
    PackedWeightTile,
    Precision,
    PrecisionMode,
    WeightTile,
    deinterleave,
    interleave,
    inverse_permute,
    permute,
    prepare_weights,
    read_packed,
    write_packed,
)

MODE_CONFIGS = [
    PrecisionMode(Precision.W8, 1),
    PrecisionMode(Precision.W4, 1),
    PrecisionMode(Precision.W4, 2),
    PrecisionMode(Precision.W2, 1),
    PrecisionMode(Precision.W2, 2),
    PrecisionMode(Precision.W2, 3),
    PrecisionMode(Precision.W2, 4),
]


def _random_tile(rng, n, width):
    lo = -(1 << (width - 1))
    hi = (1 << (width - 1)) - 1
    return WeightTile(rng.integers(lo, hi + 1, size=(n, n)), width)


# -- precision modes ----------------------------------------------------------


@pytest.mark.parametrize(
    "precision, r, bits, stages",
    [(Precision.W8, 1, 8, 2), (Precision.W4, 2, 4, 1), (Precision.W2, 4, 2, 0)],
)
def test_precision_properties(precision, r, bits, stages):
    assert precision.r == r
    assert precision.weight_bits == bits
    assert precision.reducer_stages == stages


@pytest.mark.parametrize("precision, nw", [(Precision.W8, 2), (Precision.W4, 3), (Precision.W2, 5)])
def test_mode_rejects_nw_above_r(precision, nw):
    with pytest.raises(ValueError):
        PrecisionMode(precision, nw)


def test_precision_from_name():
    assert Precision.from_name("W4") is Precision.W4
    with pytest.raises(ValueError):
        Precision.from_name("w16")


# -- permutation --------------------------------------------------------------


def test_permute_column_rotation():
    n = 4
    tile = WeightTile(np.fromfunction(lambda k, j: 10 * k + j, (n, n), dtype=int), 8)
    out = permute(tile)
    assert out.data[0].tolist() == [0, 11, 22, 33]
    k, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    assert np.array_equal(out.data, tile.data[(k + j) % n, j])


def test_permute_identity_cases():
    single = WeightTile(np.array([[5]]), 8)
    assert np.array_equal(permute(single).data, single.data)
    flat = WeightTile(np.full((6, 6), -3), 8)
    assert np.array_equal(permute(flat).data, flat.data)


def test_permute_is_bijection():
    rng = np.random.default_rng(3)
    tile = _random_tile(rng, 8, 8)
    out = permute(tile)
    assert sorted(out.data.ravel()) == sorted(tile.data.ravel())
    assert np.array_equal(inverse_permute(out).data, tile.data)


def test_non_square_tile_rejected():
    with pytest.raises(ValueError):
        WeightTile(np.zeros((3, 4), dtype=int), 8)


# -- interleaving -------------------------------------------------------------


def test_interleave_w4_byte_layout():
    u = WeightTile(np.array([[3]]), 4)
    v = WeightTile(np.array([[-2]]), 4)
    packed = interleave([u, v], PrecisionMode(Precision.W4, 2))
    assert packed.words[0, 0] == 0xE3
    back = deinterleave(packed)
    assert back[0].data[0, 0] == 3
    assert back[1].data[0, 0] == -2


def test_interleave_w8_is_twos_complement_passthrough():
    rng = np.random.default_rng(11)
    tile = _random_tile(rng, 4, 8)
    packed = interleave([tile], PrecisionMode(Precision.W8, 1))
    assert np.array_equal(packed.words, tile.data.astype(np.uint8))


def test_interleave_w2_three_matrices_top_slot_zero():
    tiles = [WeightTile(np.array([[v]]), 2) for v in (1, -1, 0)]
    packed = interleave(tiles, PrecisionMode(Precision.W2, 3))
    word = int(packed.words[0, 0])
    assert word & 0b11 == 0b01
    assert (word >> 2) & 0b11 == 0b11
    assert (word >> 4) & 0b11 == 0b00
    assert (word >> 6) & 0b11 == 0b00  # unused fourth field stays zero
    full = deinterleave(PackedWeightTile(packed.words, PrecisionMode(Precision.W2, 4)))
    assert full[3].data[0, 0] == 0


def test_interleave_validation():
    tile = WeightTile(np.zeros((2, 2), dtype=int), 4)
    with pytest.raises(ValueError):
        interleave([tile], PrecisionMode(Precision.W4, 2))  # wrong count
    with pytest.raises(ValueError):
        interleave([tile, WeightTile(np.zeros((3, 3), dtype=int), 4)], PrecisionMode(Precision.W4, 2))
    with pytest.raises(ValueError):
        interleave([WeightTile(np.zeros((2, 2), dtype=int), 8)], PrecisionMode(Precision.W4, 1))


@pytest.mark.parametrize("mode", MODE_CONFIGS)
def test_deinterleave_round_trip(mode):
    rng = np.random.default_rng(mode.nw * 10 + mode.weight_bits)
    for _ in range(20):
        tiles = [_random_tile(rng, 5, mode.weight_bits) for _ in range(mode.nw)]
        back = deinterleave(interleave(tiles, mode))
        for original, recovered in zip(tiles, back):
            assert np.array_equal(original.data, recovered.data)


def test_zero_tile_round_trip():
    mode = PrecisionMode(Precision.W2, 1)
    packed = interleave([WeightTile(np.zeros((4, 4), dtype=int), 2)], mode)
    assert not packed.words.any()
    # inactive fields of a single-matrix pack decode to zero
    full = deinterleave(PackedWeightTile(packed.words, PrecisionMode(Precision.W2, 4)))
    for tile in full[1:]:
        assert not tile.data.any()


# -- whole-matrix preparation ---------------------------------------------------


def test_prepare_single_w8_tile_is_permuted_input():
    rng = np.random.default_rng(21)
    w = rng.integers(-128, 128, size=(4, 4))
    grid = prepare_weights([w], PrecisionMode(Precision.W8, 1), 4)
    assert len(grid) == 1 and len(grid[0]) == 1
    expected = permute(WeightTile(w, 8)).data.astype(np.uint8)
    assert np.array_equal(grid[0][0].words, expected)


def test_prepare_pads_with_zero_rows():
    rng = np.random.default_rng(22)
    w = rng.integers(-128, 128, size=(5, 4))
    grid = prepare_weights([w], PrecisionMode(Precision.W8, 1), 4)
    assert len(grid) == 2 and len(grid[0]) == 1
    recovered = inverse_permute(deinterleave(grid[1][0])[0]).data
    assert np.array_equal(recovered[0], w[4])
    assert not recovered[1:].any()


@pytest.mark.parametrize("mode", MODE_CONFIGS)
def test_prepare_round_trip_recovers_matrices(mode):
    rng = np.random.default_rng(mode.nw + mode.weight_bits)
    n = 4
    lo = -(1 << (mode.weight_bits - 1))
    hi = (1 << (mode.weight_bits - 1)) - 1
    for _ in range(10):
        k_dim, p_dim = (int(v) for v in rng.integers(1, 3 * n, 2))
        mats = [rng.integers(lo, hi + 1, size=(k_dim, p_dim)) for _ in range(mode.nw)]
        grid = prepare_weights(mats, mode, n)
        assert len(grid) == -(-k_dim // n)
        assert len(grid[0]) == -(-p_dim // n)
        for t, matrix in enumerate(mats):
            recovered = np.zeros((len(grid) * n, len(grid[0]) * n), dtype=np.int64)
            for k, row in enumerate(grid):
                for j, tile in enumerate(row):
                    unpacked = inverse_permute(deinterleave(tile)[t]).data
                    recovered[k * n : (k + 1) * n, j * n : (j + 1) * n] = unpacked
            assert np.array_equal(recovered[:k_dim, :p_dim], matrix)
            assert not recovered[k_dim:, :].any()
            assert not recovered[:, p_dim:].any()


def test_prepare_rejects_out_of_range_weights():
    with pytest.raises(ValueError):
        prepare_weights([np.array([[2]])], PrecisionMode(Precision.W2, 1), 4)


# -- binary dump ----------------------------------------------------------------


def test_packed_file_round_trip():
    rng = np.random.default_rng(5)
    mode = PrecisionMode(Precision.W2, 3)
    mats = [rng.integers(-2, 2, size=(9, 6)) for _ in range(3)]
    grid = prepare_weights(mats, mode, 4)
    buf = io.BytesIO()
    write_packed(grid, buf)
    assert buf.getvalue()[:4] == b"ADIP"
    assert len(buf.getvalue()) == 16 + 3 * 2 * 16
    buf.seek(0)
    loaded = read_packed(buf)
    assert len(loaded) == len(grid) and len(loaded[0]) == len(grid[0])
    for row_a, row_b in zip(grid, loaded):
        for a, b in zip(row_a, row_b):
            assert a.mode == b.mode
            assert np.array_equal(a.words, b.words)


def test_read_packed_rejects_bad_magic():
    buf = io.BytesIO(b"NOPE" + bytes(12))
    with pytest.raises(ValueError):
        read_packed(buf)
