import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rpcodec.bitstream import BitReader, BitWriter, ue_length
from rpcodec.core import BitstreamError, CodingTree, leaf
from rpcodec.entropy import (MODE_BITS, coeff_bits, decode_coeffs, decode_tree, diagonal_scan,
                             encode_coeffs, encode_tree)
from trees import coding_tree, coeff_block, full_split


def bitstring(w):
    return "".join(f"{b:08b}" for b in w.getvalue())[:w.bits_written]


def test_diagonal_scan_4x4():
    # up-right diagonals starting bottom-left, as in the 4x4 HEVC scan
    want = [0, 4, 1, 8, 5, 2, 12, 9, 6, 3, 13, 10, 7, 14, 11, 15]
    assert diagonal_scan(4).tolist() == want


@pytest.mark.parametrize("n", (4, 8, 16, 32))
def test_diagonal_scan_is_permutation(n):
    assert sorted(diagonal_scan(n).tolist()) == list(range(n * n))


def test_zero_block_is_single_code():
    w = BitWriter()
    encode_coeffs(w, np.zeros((8, 8), np.int32))
    assert bitstring(w) == "1"


def test_single_negative_dc():
    blk = np.zeros((8, 8), np.int32)
    blk[0, 0] = -3
    w = BitWriter()
    encode_coeffs(w, blk)
    # ue(1) ue(0) ue(2) sign
    assert bitstring(w) == "010" + "1" + "011" + "1"


def test_run_coding_follows_scan():
    blk = np.zeros((4, 4), np.int32)
    blk[1, 0] = 2      # scan position 1
    blk[0, 2] = -1     # scan position 5
    w = BitWriter()
    encode_coeffs(w, blk)
    # count 2; run 1, |2|-1=1, +; run 3, 0, -
    assert bitstring(w) == "011" + "010" + "010" + "0" + "00100" + "1" + "1"


@settings(max_examples=200)
@given(st.sampled_from((4, 8, 16, 32)).flatmap(coeff_block))
def test_coeff_round_trip_and_bit_count(blk):
    w = BitWriter()
    encode_coeffs(w, blk)
    assert coeff_bits(blk) == w.bits_written
    r = BitReader(w.getvalue())
    np.testing.assert_array_equal(decode_coeffs(r, blk.shape[0]), blk)
    assert r.pos == w.bits_written


def test_decode_coeffs_errors():
    w = BitWriter()
    w.ue(17)                   # more nonzeros than a 4x4 block holds
    with pytest.raises(BitstreamError):
        decode_coeffs(BitReader(w.getvalue()), 4)
    w = BitWriter()
    w.ue(1)
    w.ue(16)                   # run past the end of the block
    w.ue(0)
    w.write_bit(0)
    with pytest.raises(BitstreamError):
        decode_coeffs(BitReader(w.getvalue()), 4)
    w = BitWriter()
    w.ue(2)
    w.ue(0)
    with pytest.raises(BitstreamError):
        decode_coeffs(BitReader(w.getvalue()), 4)


def test_single_64_leaf_layout():
    t = leaf(0, 0, 64, 7)
    w = BitWriter()
    encode_tree(w, t)
    assert bitstring(w) == "0" + format(7, f"0{MODE_BITS}b") + "1111"


def test_full_split_bit_count():
    t = full_split()
    w = BitWriter()
    encode_tree(w, t)
    split_bits = 1 + 4 + 16
    leaves = 64
    assert len(list(t.leaves())) == leaves
    assert w.bits_written == split_bits + leaves * (MODE_BITS + 1)
    assert decode_tree(BitReader(w.getvalue()), 0, 0, 64) == t


@settings(max_examples=60, deadline=None)
@given(coding_tree())
def test_tree_round_trip(t):
    w = BitWriter()
    encode_tree(w, t)
    r = BitReader(w.getvalue())
    assert decode_tree(r, 0, 0, 64) == t
    assert r.pos == w.bits_written


def test_tree_z_order():
    t = full_split(64, 0, 64)
    w = BitWriter()
    encode_tree(w, t)
    d = decode_tree(BitReader(w.getvalue()), 64, 0, 64)
    xy = [(lf.x, lf.y) for lf in d.leaves()]
    assert xy[:4] == [(64, 0), (72, 0), (64, 8), (72, 8)]


def test_truncated_tree():
    w = BitWriter()
    encode_tree(w, full_split())
    data = w.getvalue()
    with pytest.raises(BitstreamError):
        decode_tree(BitReader(data[: len(data) // 2]), 0, 0, 64)


def test_invalid_mode_in_stream():
    w = BitWriter()
    w.write_bit(0)
    w.write_bits(40, MODE_BITS)
    with pytest.raises(BitstreamError):
        decode_tree(BitReader(w.getvalue() + bytes(4)), 0, 0, 64)


def test_malformed_trees_rejected():
    with pytest.raises(ValueError):
        CodingTree(0, 0, 4, mode=0, coeff_blocks=(np.zeros((4, 4)),))
    with pytest.raises(ValueError):
        CodingTree(0, 0, 64, mode=0, coeff_blocks=(np.zeros((32, 32)),))
    with pytest.raises(ValueError):
        CodingTree(0, 0, 16, children=(leaf(0, 0, 8, 0),) * 4)
    with pytest.raises(ValueError):
        CodingTree(0, 0, 16, mode=35, coeff_blocks=(np.zeros((16, 16)),))


def test_ue_length_consistent():
    for v in range(300):
        w = BitWriter()
        w.ue(v)
        assert ue_length(v) == w.bits_written
