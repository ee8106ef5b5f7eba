"""Word-level transform tests: frozen examples, exhaustive properties at
8 bits, and an independent bit-list reference implementation."""

import random

import numpy as np
import pytest

from motimem.bitcodec import (
    CodingParams,
    EncodedFrame,
    Frame,
    decode_bg,
    decode_frame,
    decode_roi,
    encode_bg,
    encode_frame,
    encode_roi,
    inversion_flag,
    msb_mask,
    top_k_weight,
    truncate_k,
    truncate_words,
)
from motimem.errors import DimensionMismatch
from motimem.roi import RoiMask


def all_params_8bit():
    for k in range(1, 8):
        for tau in range(0, k + 1):
            yield CodingParams(bit_width=8, retained_k=k, tau=tau)


# ---------------------------------------------------------------- reference

def ref_encode_roi(x, p):
    """Bit-list reimplementation, independent of the integer arithmetic."""
    bits = [(x >> i) & 1 for i in range(p.bit_width)]  # LSB first
    top = bits[p.bit_width - p.retained_k:]
    flag = 1 if sum(top) > p.tau else 0
    if flag:
        top = [1 - b for b in top]
    out = bits[:p.bit_width - p.retained_k] + top
    out[0] = flag
    return sum(b << i for i, b in enumerate(out))


def ref_encode_bg(x, p):
    bits = [(x >> i) & 1 for i in range(p.bit_width)]
    bits[:p.bit_width - p.retained_k] = [0] * (p.bit_width - p.retained_k)
    top = bits[p.bit_width - p.retained_k:]
    flag = 1 if sum(top) > p.tau else 0
    if flag:
        top = [1 - b for b in top]
    out = bits[:p.bit_width - p.retained_k] + top
    out[0] = flag
    return sum(b << i for i, b in enumerate(out))


def ref_decode(e, p):
    bits = [(e >> i) & 1 for i in range(p.bit_width)]
    if bits[0]:
        tail = p.bit_width - p.retained_k
        bits[tail:] = [1 - b for b in bits[tail:]]
    return sum(b << i for i, b in enumerate(bits))


# ------------------------------------------------------------------ params

def test_tau_defaults_to_half_k():
    for k in range(1, 8):
        assert CodingParams(retained_k=k).tau == k // 2


@pytest.mark.parametrize("kwargs", [
    dict(bit_width=0),
    dict(bit_width=17),
    dict(retained_k=0),
    dict(retained_k=8),            # k = B would put the flag inside the shaped range
    dict(retained_k=4, tau=5),
    dict(retained_k=4, tau=-1),
    dict(block_size=0),
    dict(block_size=70000),
])
def test_invalid_params_rejected(kwargs):
    with pytest.raises(ValueError):
        CodingParams(**kwargs)


# ---------------------------------------------------------- frozen examples

def test_msb_mask_values():
    assert msb_mask(CodingParams(retained_k=4)) == 0b11110000
    assert msb_mask(CodingParams(retained_k=1)) == 0b10000000
    assert msb_mask(CodingParams(retained_k=7)) == 0b11111110


def test_top_k_weight_values():
    p = CodingParams(retained_k=4)
    assert top_k_weight(0b10110110, p) == 3
    assert top_k_weight(0, p) == 0
    for params in all_params_8bit():
        assert top_k_weight(255, params) == params.retained_k


def test_inversion_flag_values():
    p = CodingParams(retained_k=4, tau=2)
    assert inversion_flag(0b11110000, p) == 1
    assert inversion_flag(0b00110000, p) == 0
    for params in all_params_8bit():
        assert inversion_flag(0, params) == 0


def test_truncate_values():
    p = CodingParams(retained_k=4)
    assert truncate_k(182, p) == 176
    assert truncate_k(0, p) == 0
    assert truncate_k(255, p) == 240


def test_encode_roi_values():
    p = CodingParams(retained_k=4, tau=2)
    assert encode_roi(0b11110110, p) == 0b00000111
    assert encode_roi(0b00100100, p) == 0b00100100
    assert encode_roi(0, p) == 0


def test_decode_roi_values():
    p = CodingParams(retained_k=4, tau=2)
    assert decode_roi(0b00000111, p) == 0b11110111
    assert decode_roi(0, p) == 0
    assert decode_roi(encode_roi(255, p), p) == 255  # original LSB equals the flag


def test_encode_bg_values():
    p = CodingParams(retained_k=4, tau=2)
    assert encode_bg(0b11111111, p) == 0b00000001
    assert encode_bg(0b00101111, p) == 0b00100000
    assert encode_bg(0, p) == 0


def test_decode_bg_values():
    p = CodingParams(retained_k=4, tau=2)
    assert decode_bg(0b00000001, p) == 0b11110001
    assert decode_bg(0, p) == 0
    assert decode_bg(encode_bg(0b00100000, p), p) == 0b00100000


# ------------------------------------------------------- exhaustive checks

def test_exhaustive_matches_reference():
    for p in all_params_8bit():
        for x in range(256):
            assert encode_roi(x, p) == ref_encode_roi(x, p)
            assert encode_bg(x, p) == ref_encode_bg(x, p)
            assert decode_roi(x, p) == ref_decode(x, p)


def test_exhaustive_roi_roundtrip_error_bound():
    for p in all_params_8bit():
        for x in range(256):
            back = decode_roi(encode_roi(x, p), p)
            assert abs(x - back) <= 1
            assert (x ^ back) & ~1 == 0  # only bit 0 may differ


def test_exhaustive_bg_low_bits_zero():
    for p in all_params_8bit():
        low_above_flag = ((1 << (p.bit_width - p.retained_k)) - 1) & ~1
        for x in range(256):
            assert encode_bg(x, p) & low_above_flag == 0


def test_exhaustive_top_weight_cap():
    for p in all_params_8bit():
        cap = max(p.tau, p.retained_k - p.tau - 1)
        for x in range(256):
            assert top_k_weight(encode_roi(x, p), p) <= cap
            assert top_k_weight(encode_bg(x, p), p) <= cap
            assert encode_bg(x, p).bit_count() <= cap + 1


def test_exhaustive_bg_error_bound():
    for p in all_params_8bit():
        bound = max(1, (1 << (p.bit_width - p.retained_k)) - 1)
        for x in range(256):
            back = decode_bg(encode_bg(x, p), p)
            assert abs(x - back) <= bound
            # retained MSBs always survive exactly
            m = msb_mask(p)
            assert back & m == x & m


def test_exhaustive_inversion_never_adds_ones_at_default_tau():
    for k in range(1, 8):
        p = CodingParams(retained_k=k)  # tau = k // 2
        for x in range(256):
            assert encode_bg(x, p).bit_count() <= truncate_k(x, p).bit_count()


def test_exhaustive_reencode_idempotent():
    for p in all_params_8bit():
        for x in range(256):
            once = decode_roi(encode_roi(x, p), p)
            again = decode_roi(encode_roi(once, p), p)
            assert once == again


def test_decoding_stray_words_is_total():
    # decoding arbitrary (non-encoder) words must not raise and stays in range
    for p in all_params_8bit():
        for e in range(256):
            assert 0 <= decode_roi(e, p) <= 255
            assert 0 <= decode_bg(e, p) <= 255


# ------------------------------------------------------------- frame level

def _random_frame(rng, width=24, height=16, channels=1, bit_width=8):
    data = rng.integers(0, 1 << bit_width, size=(height, width, channels))
    return Frame(data, bit_width=bit_width)


def test_frame_validation():
    with pytest.raises(ValueError):
        Frame(np.zeros((4, 4, 2), dtype=np.uint8))
    with pytest.raises(ValueError):
        Frame(np.full((4, 4, 1), 300, dtype=np.int32), bit_width=8)
    with pytest.raises(ValueError):
        Frame(np.zeros((0, 4, 1), dtype=np.uint8))
    gray2d = Frame(np.zeros((4, 6), dtype=np.uint8))
    assert gray2d.channels == 1 and gray2d.width == 6


def test_encode_frame_all_roi_matches_scalar():
    rng = np.random.default_rng(7)
    frame = _random_frame(rng)
    p = CodingParams(block_size=8)
    mask = RoiMask.full(frame.width, frame.height, 8)
    enc = encode_frame(frame, mask, p)
    for v_in, v_out in zip(frame.pixels.reshape(-1), enc.pixels.reshape(-1)):
        assert int(v_out) == encode_roi(int(v_in), p)


def test_encode_frame_all_bg_matches_scalar():
    rng = np.random.default_rng(8)
    frame = _random_frame(rng)
    p = CodingParams(block_size=8)
    mask = RoiMask.empty(frame.width, frame.height, 8)
    enc = encode_frame(frame, mask, p)
    for v_in, v_out in zip(frame.pixels.reshape(-1), enc.pixels.reshape(-1)):
        assert int(v_out) == encode_bg(int(v_in), p)


def test_encode_frame_routes_left_column_roi():
    p = CodingParams(block_size=1)
    frame = Frame(np.array([[[200], [200]], [[90], [90]]], dtype=np.uint8))
    mask = RoiMask(np.array([[1, 0], [1, 0]]), block_size=1)
    enc = encode_frame(frame, mask, p)
    assert int(enc.pixels[0, 0, 0]) == encode_roi(200, p)
    assert int(enc.pixels[0, 1, 0]) == encode_bg(200, p)
    assert int(enc.pixels[1, 0, 0]) == encode_roi(90, p)
    assert int(enc.pixels[1, 1, 0]) == encode_bg(90, p)


def test_channels_share_pixel_mask_bit():
    rng = np.random.default_rng(9)
    frame = _random_frame(rng, width=6, height=4, channels=3)
    p = CodingParams(block_size=2)
    bits = np.array([[1, 0, 1], [0, 1, 0]])
    mask = RoiMask(bits, block_size=2)
    enc = encode_frame(frame, mask, p)
    sel = mask.pixel_selector(frame.width, frame.height)
    for y in range(frame.height):
        for x in range(frame.width):
            op = encode_roi if sel[y, x] else encode_bg
            for c in range(3):
                assert int(enc.pixels[y, x, c]) == op(int(frame.pixels[y, x, c]), p)


def test_vectorized_equals_scalar_over_params():
    rng = np.random.default_rng(10)
    random_py = random.Random(11)
    for _ in range(12):
        k = random_py.randint(1, 7)
        tau = random_py.randint(0, k)
        p = CodingParams(retained_k=k, tau=tau, block_size=4)
        frame = _random_frame(rng, width=12, height=8)
        bits = rng.random((2, 3)) < 0.5
        mask = RoiMask(bits, block_size=4)
        enc = encode_frame(frame, mask, p)
        sel = mask.pixel_selector(frame.width, frame.height)
        for y in range(frame.height):
            for x in range(frame.width):
                op = encode_roi if sel[y, x] else encode_bg
                assert int(enc.pixels[y, x, 0]) == op(int(frame.pixels[y, x, 0]), p)


def test_encode_frame_jobs_fanout_identical():
    rng = np.random.default_rng(12)
    frame = _random_frame(rng, width=32, height=24)
    p = CodingParams(block_size=8)
    mask = RoiMask(rng.random((3, 4)) < 0.5, block_size=8)
    serial = encode_frame(frame, mask, p, jobs=1)
    fanned = encode_frame(frame, mask, p, jobs=4)
    assert np.array_equal(serial.pixels, fanned.pixels)


def test_decode_frame_error_bounds_by_region():
    rng = np.random.default_rng(13)
    frame = _random_frame(rng, width=16, height=16)
    p = CodingParams(block_size=8)
    bits = np.array([[1, 0], [0, 1]])  # checkerboard
    mask = RoiMask(bits, block_size=8)
    enc = encode_frame(frame, mask, p)
    back = decode_frame(enc)
    sel = mask.pixel_selector(16, 16)
    err = np.abs(frame.pixels.astype(int) - back.pixels.astype(int))[:, :, 0]
    assert (err[sel] <= 1).all()
    assert (err[~sel] <= 15).all()


def test_decode_of_zero_frame_is_zero():
    p = CodingParams()
    frame = Frame(np.zeros((16, 16, 1), dtype=np.uint8))
    enc = encode_frame(frame, RoiMask.full(16, 16, 16), p)
    assert not enc.pixels.any()
    assert not decode_frame(enc).pixels.any()


def test_encode_commutes_with_block_aligned_crop():
    rng = np.random.default_rng(14)
    frame = _random_frame(rng, width=32, height=24)
    p = CodingParams(block_size=8)
    mask = RoiMask(rng.random((3, 4)) < 0.5, block_size=8)
    whole = encode_frame(frame, mask, p)
    # crop the right-bottom 16x16 region, two blocks in from each edge
    sub = Frame(frame.pixels[8:24, 16:32], bit_width=8)
    sub_mask = RoiMask(mask.bits[1:3, 2:4], block_size=8)
    part = encode_frame(sub, sub_mask, p)
    assert np.array_equal(whole.pixels[8:24, 16:32], part.pixels)


def test_mask_cover_mismatch_raises():
    frame = Frame(np.zeros((16, 16, 1), dtype=np.uint8))
    p = CodingParams(block_size=16)
    with pytest.raises(DimensionMismatch):
        encode_frame(frame, RoiMask(np.ones((2, 2)), block_size=16), p)
    with pytest.raises(DimensionMismatch):
        encode_frame(frame, RoiMask(np.ones((1, 1)), block_size=8), p)


def test_truncate_words_matches_scalar():
    rng = np.random.default_rng(15)
    p = CodingParams(retained_k=3)
    values = rng.integers(0, 256, size=(5, 7, 1))
    out = truncate_words(values.astype(np.uint16), p)
    for v_in, v_out in zip(values.reshape(-1), out.reshape(-1)):
        assert int(v_out) == truncate_k(int(v_in), p)


def test_encoded_frame_rejects_bad_geometry():
    p = CodingParams(block_size=16)
    mask = RoiMask.full(16, 16, 16)
    with pytest.raises(DimensionMismatch):
        EncodedFrame(params=p, mask=RoiMask.full(16, 16, 8), pixels=np.zeros((16, 16, 1), dtype=np.uint16))
    with pytest.raises(DimensionMismatch):
        EncodedFrame(params=p, mask=mask, pixels=np.zeros((32, 32, 1), dtype=np.uint16))
    EncodedFrame(params=p, mask=mask, pixels=np.zeros((16, 16, 1), dtype=np.uint16))
