import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rpcodec import (CodecConfig, ConstantResidual, EncodedImage, RandomPerturbation, Standard,
                     ZeroResidual, deblock, decode_frame, encode_frame, reconstruct_cu)
from rpcodec.codec import (BETA_TABLE, HEADER_SIZE, TC_TABLE, beta_tc, edge_maps, parse_trees,
                           rd_lambda, satd)
from rpcodec.core import BitstreamError, Frame, leaf, parse_strategy, split
from rpcodec.perturb import RpSeries, SERIES_LENGTH


def small_frame(seed=0, h=72, w=100):
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:h, 0:w]
    img = 120 + 60 * np.sin(x / 9.0) * np.cos(y / 13.0) + rng.normal(0, 6, (h, w))
    return Frame.from_array(np.clip(img, 0, 255).astype(np.uint8))


@pytest.fixture(scope="module")
def encoded():
    return encode_frame(small_frame(), CodecConfig(qp=30))


def fixed_series(head):
    vals = np.zeros(SERIES_LENGTH, dtype=np.int32)
    vals[:len(head)] = head
    return RpSeries(vals, sigma=1.0, seed=0, achieved_mean=0.0, achieved_std=1.0)


# -- reconstruct_cu ---------------------------------------------------------

def test_reconstruct_zero_and_constant():
    pred = np.full((8, 8), 128)
    assert np.all(reconstruct_cu(pred, None, ZeroResidual()) == 128)
    assert np.all(reconstruct_cu(pred, None, ConstantResidual(1)) == 129)
    assert np.all(reconstruct_cu(np.full((8, 8), 250), None, ConstantResidual(20)) == 255)
    assert np.all(reconstruct_cu(np.full((8, 8), 5), None, ConstantResidual(-20)) == 0)


def test_reconstruct_perturbation_layout():
    rp = fixed_series([3, -2, 0, 5])
    out = reconstruct_cu(np.full((2, 2), 128), None, RandomPerturbation(1.0, 0), rp)
    assert out.tolist() == [[131, 126], [128, 133]]


def test_reconstruct_perturbation_resets_per_cu():
    rp = fixed_series(np.arange(1, 65))
    out = reconstruct_cu(np.full((8, 8), 100), None, RandomPerturbation(1.0, 0), rp)
    np.testing.assert_array_equal(out, 100 + np.arange(1, 65).reshape(8, 8))


def test_reconstruct_standard_needs_coeffs():
    with pytest.raises(ValueError):
        reconstruct_cu(np.zeros((8, 8)), None, Standard())
    with pytest.raises(ValueError):
        reconstruct_cu(np.zeros((8, 8)), None, RandomPerturbation())


def test_reconstruct_standard_dc():
    blocks = [np.zeros((8, 8), np.int32)]
    blocks[0][0, 0] = 4
    out = reconstruct_cu(np.full((8, 8), 100), blocks, Standard(), qp=22)
    assert np.all(out == out[0, 0]) and out[0, 0] > 100


# -- strategies -------------------------------------------------------------

def test_strategy_validation():
    with pytest.raises(ValueError):
        ConstantResidual(256)
    with pytest.raises(ValueError):
        RandomPerturbation(sigma=0)
    with pytest.raises(ValueError):
        RandomPerturbation(seed=-1)
    assert parse_strategy("constant:-5") == ConstantResidual(-5)
    assert parse_strategy("perturb", sigma=3, seed=9) == RandomPerturbation(3, 9)
    for bad in ("constant:x", "nope", "constant:999"):
        with pytest.raises(ValueError):
            parse_strategy(bad)


def test_config_validation():
    with pytest.raises(ValueError):
        CodecConfig(qp=52)
    with pytest.raises(ValueError):
        CodecConfig(qp=-1)
    with pytest.raises(ValueError):
        CodecConfig(ctu_log2=5)


# -- encoder / decoder ------------------------------------------------------

def test_constant_128_round_trip():
    f = Frame.filled(64, 64, 128)
    for qp in (0, 32, 51):
        res = encode_frame(f, CodecConfig(qp=qp))
        assert res.recon == f
        assert decode_frame(res.encoded).frame == f
        assert res.stats["cus"] == 1
        assert res.encoded.size_bytes <= 200


def test_closed_loop(encoded):
    assert decode_frame(encoded.encoded, Standard()).frame == encoded.recon


def test_closed_loop_without_loop_filter():
    res = encode_frame(small_frame(3), CodecConfig(qp=27, loop_filter_enabled=False))
    assert decode_frame(res.encoded).frame == res.recon


def test_zero_residual_is_gray(encoded):
    out = decode_frame(encoded.encoded, ZeroResidual()).frame
    assert np.all(out.samples == 128)
    assert decode_frame(encoded.encoded, ConstantResidual(0)).frame == out


def test_constant_residual_brightens():
    res = encode_frame(small_frame(1, 130, 140), CodecConfig(qp=32))
    out = decode_frame(res.encoded, ConstantResidual(3)).frame
    assert out.samples.mean() > 128


def test_perturbation_deterministic(encoded):
    a = decode_frame(encoded.encoded, RandomPerturbation(7.0, 1)).frame
    b = decode_frame(encoded.encoded, RandomPerturbation(7.0, 1)).frame
    c = decode_frame(encoded.encoded, RandomPerturbation(7.0, 2)).frame
    assert a == b
    assert a != c


def test_parser_sync_and_timings(encoded):
    bits = set()
    for s in (Standard(), ZeroResidual(), ConstantResidual(-4), RandomPerturbation(3.0, 5)):
        d = decode_frame(encoded.encoded, s)
        bits.add(d.bits_consumed)
        t = d.timings
        assert min(t.ed, t.ip, t.rd, t.lf, t.wall) >= 0
        if isinstance(s, Standard):
            assert t.rd > 0
        else:
            assert t.rd == 0.0
        assert t.ed + t.ip + t.rd + t.lf <= t.wall
    assert bits == {encoded.stats["payload_bits"]}


def test_timing_keys(encoded):
    ms = decode_frame(encoded.encoded).timings.as_ms()
    assert set(ms) == {"ed_ms", "ip_ms", "rd_ms", "lf_ms", "wall_ms"}


def test_rate_decreases_with_qp():
    f = small_frame(2, 128, 128)
    sizes = [encode_frame(f, CodecConfig(qp=qp)).encoded.size_bytes for qp in (22, 37)]
    assert sizes[0] > sizes[1]


def test_reencode_of_standard_decode_is_deterministic(encoded):
    dec = decode_frame(encoded.encoded).frame
    a = encode_frame(dec, CodecConfig(qp=30)).encoded
    b = encode_frame(dec, CodecConfig(qp=30)).encoded
    assert a.to_bytes() == b.to_bytes()


def test_decode_accepts_bytes(encoded):
    assert decode_frame(encoded.encoded.to_bytes()).frame == encoded.recon


def test_stats(encoded):
    s = encoded.stats
    assert s["ctus"] == 4
    assert sum(s["cu_sizes"].values()) == s["cus"] == sum(s["modes"])
    assert s["bytes"] == HEADER_SIZE + len(encoded.encoded.payload)


def test_parse_trees_matches_decoder(encoded):
    trees, bits = parse_trees(encoded.encoded)
    d = decode_frame(encoded.encoded)
    assert trees == d.trees and bits == d.bits_consumed


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 150), st.integers(1, 150), st.integers(0, 51), st.integers(0, 2**31))
def test_random_frames_closed_loop_and_gray(w, h, qp, seed):
    rng = np.random.default_rng(seed)
    f = Frame.from_array(rng.integers(0, 256, (h, w)).astype(np.uint8))
    res = encode_frame(f, CodecConfig(qp=qp))
    assert decode_frame(res.encoded).frame == res.recon
    assert np.all(decode_frame(res.encoded, ZeroResidual()).frame.samples == 128)


# -- container --------------------------------------------------------------

def test_container_round_trip(encoded):
    data = encoded.encoded.to_bytes()
    assert data[:4] == b"HVS1"
    back = EncodedImage.from_bytes(data)
    assert back == encoded.encoded
    assert (back.width, back.height, back.qp, back.loop_filter) == (100, 72, 30, True)


@pytest.mark.parametrize("mutate", [
    lambda d: b"XVS1" + d[4:],
    lambda d: d[:4] + b"\x00\x00" + d[6:],
    lambda d: d[:8] + bytes([60]) + d[9:],
    lambda d: d[:9] + bytes([5]) + d[10:],
    lambda d: d[:10] + bytes([0x80]) + d[11:],
    lambda d: d[:7],
])
def test_container_header_errors(encoded, mutate):
    with pytest.raises(BitstreamError):
        EncodedImage.from_bytes(mutate(encoded.encoded.to_bytes()))


def test_truncated_and_oversized_payload(encoded):
    data = encoded.encoded.to_bytes()
    with pytest.raises(BitstreamError):
        decode_frame(data[:-5])
    with pytest.raises(BitstreamError):
        decode_frame(data + b"\x00\x00")


# -- deblocking -------------------------------------------------------------

def test_beta_tc_tables():
    assert len(BETA_TABLE) == 52 and len(TC_TABLE) == 54
    assert beta_tc(32) == (26, 3)
    assert beta_tc(0) == (0, 0)


def _two_cus():
    t = split(0, 0, 64, [leaf(0, 0, 32, 0), leaf(32, 0, 32, 0),
                         leaf(0, 32, 32, 0), leaf(32, 32, 32, 0)])
    return edge_maps([t], 64, 64)


def test_edge_maps_exclude_frame_border():
    vert, horz = _two_cus()
    assert vert[:, 4].all() and not vert[:, 0].any()
    assert vert.sum() == 8 and horz.sum() == 8


def test_deblock_uniform_unchanged():
    f = Frame.filled(64, 64, 77)
    assert deblock(f, _two_cus(), 40) == f


def test_deblock_step_edge_preserved():
    a = np.full((64, 64), 20, np.uint8)
    a[:, 32:] = 220
    out = deblock(a, _two_cus(), 32)
    np.testing.assert_array_equal(out, a)


def test_deblock_small_ripple_smoothed():
    a = np.full((64, 64), 128, np.uint8)
    a[:, 32:] = 130
    a[:, :32] = 126
    out = deblock(a, _two_cus(), 32)
    delta = int(out[10, 31]) - 126
    assert abs(delta) >= 1
    assert int(out[10, 32]) - 130 == -delta
    # away from the edges nothing moves
    assert out[10, 20] == 126


def test_deblock_dimension_check():
    with pytest.raises(ValueError):
        deblock(np.zeros((64, 64), np.uint8), edge_maps([], 128, 64), 32)


# -- helpers ----------------------------------------------------------------

def test_satd_matches_direct_hadamard():
    from scipy.linalg import hadamard
    h = hadamard(8)
    rng = np.random.default_rng(4)
    d = rng.integers(-50, 50, (16, 16))
    want = sum(np.abs(h @ d[y:y + 8, x:x + 8] @ h).sum() for y in (0, 8) for x in (0, 8))
    assert satd(d) == want


def test_rd_lambda():
    assert rd_lambda(12) == pytest.approx(0.85)
    assert rd_lambda(15) == pytest.approx(1.7)
