"""Word-level pixel transforms and mask-routed frame coding.

Values are unsigned ``B``-bit words, bit 0 the LSB. Three bit-level
moves shape a word:

* truncation -- zero the low ``B-k`` bits, keeping the top ``k`` MSBs;
* selective inversion -- complement the top ``k`` MSBs when more than
  ``tau`` of them are set, so dense-one patterns become sparse ones;
* flag embedding -- overwrite bit 0 with the inversion decision so the
  decoder can undo the complement without side metadata.

The high-fidelity path (:func:`encode_roi`) skips truncation and passes
bits ``1..B-k-1`` through verbatim; the background path
(:func:`encode_bg`) truncates first and takes the inversion decision
from the truncated word. Both keep the word ``B`` bits wide. Decoding
reads the flag from bit 0 and re-applies the complement; the
reconstruction error is at most 1 on the high-fidelity path (only the
overwritten LSB can be lost) and below ``2**(B-k)`` on the background
path (the low bits stay zeroed).

Frame-level routing picks the path per pixel from a block-granularity
mask; all channels of a pixel follow the pixel's mask bit. The decoder
never needs the mask: the reverse transform is flag-driven and
identical for both paths.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .roi import RoiMask


@dataclass(frozen=True)
class CodingParams:
    """Shared knobs: word width ``bit_width``, retained MSB count
    ``retained_k``, inversion threshold ``tau`` (default
    ``retained_k // 2``), and the mask block size in pixels.

    ``retained_k`` must stay below ``bit_width`` so the LSB remains
    outside the shaped range and can host the flag.
    """

    bit_width: int = 8
    retained_k: int = 4
    tau: int | None = None
    block_size: int = 16

    def __post_init__(self):
        if not 1 <= self.bit_width <= 16:
            raise ValueError(f"bit_width must be in 1..16, got {self.bit_width}")
        if not 1 <= self.retained_k <= self.bit_width - 1:
            raise ValueError(
                f"retained_k must be in 1..{self.bit_width - 1} for bit_width "
                f"{self.bit_width}, got {self.retained_k}"
            )
        if self.tau is None:
            object.__setattr__(self, "tau", self.retained_k // 2)
        if not 0 <= self.tau <= self.retained_k:
            raise ValueError(f"tau must be in 0..{self.retained_k}, got {self.tau}")
        if not 1 <= self.block_size <= 0xFFFF:
            raise ValueError(f"block_size must be in 1..65535, got {self.block_size}")

    @property
    def word_max(self) -> int:
        return (1 << self.bit_width) - 1


def msb_mask(params: CodingParams) -> int:
    """Bitmask selecting the top ``retained_k`` bits of a word."""
    return ((1 << params.retained_k) - 1) << (params.bit_width - params.retained_k)


def top_k_weight(x: int, params: CodingParams) -> int:
    """Number of set bits among the top ``retained_k`` MSBs of ``x``."""
    return (x & msb_mask(params)).bit_count()


def inversion_flag(x: int, params: CodingParams) -> int:
    """1 iff the top-k weight of ``x`` exceeds ``tau``."""
    return 1 if top_k_weight(x, params) > params.tau else 0


def truncate_k(x: int, params: CodingParams) -> int:
    """Zero the low ``bit_width - retained_k`` bits of ``x``."""
    shift = params.bit_width - params.retained_k
    return (x >> shift) << shift


def encode_roi(x: int, params: CodingParams) -> int:
    """High-fidelity path: selective MSB inversion, flag in the LSB."""
    f = inversion_flag(x, params)
    y = x ^ msb_mask(params) if f else x
    return (y & ~1) | f


def decode_roi(e: int, params: CodingParams) -> int:
    """Undo the selective inversion recorded in the LSB of ``e``.

    Total on all B-bit words; for encoder output the result matches the
    source everywhere except possibly bit 0, so the absolute error is
    at most 1. The flag stays in the decoded LSB.
    """
    return e ^ msb_mask(params) if e & 1 else e


def encode_bg(x: int, params: CodingParams) -> int:
    """Background path: truncate, then invert-and-flag the retained MSBs.

    The inversion decision is taken from the truncated word, which can
    differ from the raw word's decision.
    """
    t = truncate_k(x, params)
    f = inversion_flag(t, params)
    y = t ^ msb_mask(params) if f else t
    return (y & ~1) | f


def decode_bg(e: int, params: CodingParams) -> int:
    """Reverse the background path; the truncated low bits stay zero.

    Same flag-driven transform as :func:`decode_roi`; only the error
    bound differs (below ``2**(bit_width - retained_k)``).
    """
    return decode_roi(e, params)


@dataclass(eq=False)
class Frame:
    """``(height, width, channels)`` raster of ``bit_width``-bit words.

    Stored as uint16 regardless of ``bit_width``; a 2D array is accepted
    and treated as single-channel.
    """

    pixels: np.ndarray
    bit_width: int = 8

    def __post_init__(self):
        if not 1 <= self.bit_width <= 16:
            raise ValueError(f"bit_width must be in 1..16, got {self.bit_width}")
        arr = np.asarray(self.pixels)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError("pixels must be (H, W) or (H, W, C) with C in {1, 3}")
        if arr.size == 0:
            raise ValueError("frame must contain at least one pixel")
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError(f"pixels must be integers, got dtype {arr.dtype}")
        if int(arr.min()) < 0 or int(arr.max()) > (1 << self.bit_width) - 1:
            raise ValueError(f"pixel values exceed {self.bit_width}-bit range")
        self.pixels = arr.astype(np.uint16, copy=False)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


@dataclass(eq=False)
class EncodedFrame:
    """Shaped pixel words plus the mask and parameters that produced them.

    Same shape and word width as the source frame.
    """

    params: CodingParams
    mask: RoiMask
    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError("encoded pixels must be (H, W, C) with C in {1, 3}")
        if int(arr.max()) > self.params.word_max or int(arr.min()) < 0:
            raise ValueError("encoded values exceed the configured bit width")
        if self.mask.block_size != self.params.block_size:
            raise DimensionMismatch(
                f"mask block size {self.mask.block_size} != "
                f"coding block size {self.params.block_size}"
            )
        if not self.mask.covers(arr.shape[1], arr.shape[0]):
            raise DimensionMismatch(
                f"mask grid {self.mask.grid_width}x{self.mask.grid_height} does not "
                f"cover a {arr.shape[1]}x{arr.shape[0]} frame at block "
                f"{self.params.block_size}"
            )
        self.pixels = arr.astype(np.uint16, copy=False)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


def _encode_words(x: np.ndarray, roi: np.ndarray, params: CodingParams) -> np.ndarray:
    """Vectorized per-word transform; ``roi`` broadcasts against ``x``."""
    m = np.uint16(msb_mask(params))
    low = (1 << (params.bit_width - params.retained_k)) - 1
    keep = np.uint16(params.word_max & ~low)
    base = np.where(roi, x, x & keep)
    flag = np.bitwise_count(base & m) > params.tau
    shaped = np.where(flag, base ^ m, base)
    lsb_clear = np.uint16(params.word_max ^ 1)
    return np.where(flag, shaped | np.uint16(1), shaped & lsb_clear)


def truncate_words(pixels: np.ndarray, params: CodingParams) -> np.ndarray:
    """Plain truncation of every word: no inversion, no flag."""
    low = (1 << (params.bit_width - params.retained_k)) - 1
    return pixels & np.uint16(params.word_max & ~low)


def encode_frame(
    frame: Frame,
    mask: RoiMask,
    params: CodingParams,
    jobs: int = 1,
) -> EncodedFrame:
    """Route every pixel through the high-fidelity or background path.

    A pixel follows the path its mask block selects; all channels of a
    pixel share the block's bit. ``jobs`` > 1 fans the work out over
    horizontal bands (pure elementwise transform, so the result is
    identical).
    """
    if frame.bit_width != params.bit_width:
        raise ValueError(
            f"frame bit width {frame.bit_width} != coding bit width {params.bit_width}"
        )
    if mask.block_size != params.block_size:
        raise DimensionMismatch(
            f"mask block size {mask.block_size} != coding block size {params.block_size}"
        )
    roi = mask.pixel_selector(frame.width, frame.height)[:, :, np.newaxis]
    x = frame.pixels
    if jobs > 1 and frame.height >= jobs:
        bounds = np.linspace(0, frame.height, jobs + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(
                pool.map(
                    lambda se: _encode_words(x[se[0]:se[1]], roi[se[0]:se[1]], params),
                    zip(bounds[:-1], bounds[1:]),
                )
            )
        enc = np.concatenate(parts, axis=0)
    else:
        enc = _encode_words(x, roi, params)
    return EncodedFrame(params=params, mask=mask, pixels=enc)


def decode_frame(enc: EncodedFrame) -> Frame:
    """Invert the flagged MSB complement on every word.

    The mask never travels to the decoder; the embedded flags carry all
    the information the reverse transform needs.
    """
    m = np.uint16(msb_mask(enc.params))
    e = enc.pixels
    out = np.where((e & 1).astype(bool), e ^ m, e)
    return Frame(out.astype(np.uint16), bit_width=enc.params.bit_width)
