"""Bitstream activity and fidelity metrics.

A frame becomes a bitstream by walking pixels row-major with channels
interleaved and emitting each word MSB-first. Bit-1 density does not
depend on that order; the transition rate does, so the order is part of
the contract here.

Two energy proxies are reported: the fraction of set bits in the stream
(linear proxy for data-dependent switching on the memory path) and the
mean per-bit Hamming distance between consecutive W-bit words (proxy for
bus toggling). Fidelity is plain MSE/PSNR against the peak value of the
configured word width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitcodec import Frame
from .errors import DimensionMismatch, EmptyStream, Misaligned, TooShort, UndefinedRatio


def frame_bits(pixels: np.ndarray, bit_width: int) -> np.ndarray:
    """Flatten words into a 0/1 stream, MSB-first within each word."""
    flat = np.asarray(pixels, dtype=np.uint16).reshape(-1)
    shifts = np.arange(bit_width - 1, -1, -1, dtype=np.uint16)
    bits = (flat[:, np.newaxis] >> shifts) & np.uint16(1)
    return bits.reshape(-1).astype(np.uint8)


def bit1_density(stream: np.ndarray) -> float:
    """Fraction of set bits in a 0/1 stream."""
    bits = np.asarray(stream)
    if bits.size == 0:
        raise EmptyStream("bit1_density needs a non-empty stream")
    return float(np.count_nonzero(bits)) / bits.size


def nbd(raw_stream: np.ndarray, enc_stream: np.ndarray) -> float:
    """Encoded bit-1 density over raw bit-1 density.

    Below 1.0 means the encoded stream carries fewer set bits than the
    raw one. Raises UndefinedRatio when the raw stream is all zeros.
    """
    raw_density = bit1_density(raw_stream)
    enc_density = bit1_density(enc_stream)
    if raw_density == 0.0:
        raise UndefinedRatio("raw stream has no set bits; normalized density undefined")
    return enc_density / raw_density


def transition_activity(stream: np.ndarray, word_width: int = 8) -> float:
    """Mean per-bit Hamming distance between consecutive words.

    The stream is split into N words of ``word_width`` bits; the result
    is the total Hamming distance over consecutive pairs divided by
    (N-1) * word_width, so it lies in [0, 1].
    """
    if word_width < 1:
        raise ValueError("word_width must be >= 1")
    bits = np.asarray(stream)
    if bits.size % word_width != 0:
        raise Misaligned(
            f"stream length {bits.size} is not a multiple of word width {word_width}"
        )
    n_words = bits.size // word_width
    if n_words < 2:
        raise TooShort(f"transition activity needs >= 2 words, got {n_words}")
    words = bits.reshape(n_words, word_width)
    toggles = int(np.count_nonzero(words[1:] != words[:-1]))
    return toggles / ((n_words - 1) * word_width)


def psnr(reference: Frame, test: Frame) -> tuple[float, float]:
    """MSE over all channels and the matching PSNR in dB.

    PSNR uses the peak of the reference word width and is infinite when
    the frames are identical.
    """
    if reference.pixels.shape != test.pixels.shape or reference.bit_width != test.bit_width:
        raise DimensionMismatch(
            f"frame shapes {reference.pixels.shape}/{test.pixels.shape} or bit widths "
            f"{reference.bit_width}/{test.bit_width} differ"
        )
    diff = reference.pixels.astype(np.int32) - test.pixels.astype(np.int32)
    mse = float(np.mean(diff.astype(np.float64) ** 2))
    if mse == 0.0:
        return 0.0, math.inf
    peak = float((1 << reference.bit_width) - 1)
    return mse, 10.0 * math.log10(peak * peak / mse)


@dataclass
class ActivityReport:
    """Per-frame energy-proxy and fidelity numbers.

    ``nbd`` is None when the raw frame had no set bits (the undefined
    case is surfaced, never silently coerced).
    """

    frame_index: int
    raw_bit1_density: float
    enc_bit1_density: float
    nbd: float | None
    alpha_raw: float
    alpha_enc: float
    word_width: int
    mse: float
    psnr_db: float


def measure_frame(
    frame_index: int,
    raw: Frame,
    encoded_pixels: np.ndarray,
    decoded: Frame,
    word_width: int = 8,
) -> ActivityReport:
    """Full per-frame report: stream stats raw vs encoded, PSNR raw vs decoded."""
    raw_bits = frame_bits(raw.pixels, raw.bit_width)
    enc_bits = frame_bits(encoded_pixels, raw.bit_width)
    raw_density = bit1_density(raw_bits)
    enc_density = bit1_density(enc_bits)
    try:
        ratio: float | None = nbd(raw_bits, enc_bits)
    except UndefinedRatio:
        ratio = None
    mse, psnr_db = psnr(raw, decoded)
    return ActivityReport(
        frame_index=frame_index,
        raw_bit1_density=raw_density,
        enc_bit1_density=enc_density,
        nbd=ratio,
        alpha_raw=transition_activity(raw_bits, word_width),
        alpha_enc=transition_activity(enc_bits, word_width),
        word_width=word_width,
        mse=mse,
        psnr_db=psnr_db,
    )
