"""File formats: netpbm frames, the encoded-frame container, and
line-delimited detection records.

Frames travel as binary netpbm (PGM ``P5`` for one channel, PPM ``P6``
for three) with ``maxval = 2**bit_width - 1``; samples are one byte up
to maxval 255 and two big-endian bytes above, per the netpbm
convention. Roundtrips are bit-exact.

Encoded frames use a fixed little-endian container::

    magic          4s   b"MTMM"
    version        u8   currently 1
    bit_width      u8
    retained_k     u8
    tau            u8
    block_size     u16
    width          u32
    height         u32
    channels       u8
    mask_bytes_len u32

followed by the mask bits packed row-major MSB-first (zero padding in
the final byte's low bits) and the pixel words row-major,
channel-interleaved, each in ``ceil(bit_width / 8)`` little-endian
bytes.

Detections are one JSON object per line with keys
``frame, x1, y1, x2, y2, class, conf, track`` (``track`` may be null),
grouped by ascending frame index on read; frame indices absent from the
file come back as empty detection sets.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .bitcodec import CodingParams, EncodedFrame, Frame
from .errors import (
    BadMagic,
    LengthMismatch,
    OrderError,
    ParseError,
    UnsupportedMaxval,
    UnsupportedVersion,
)
from .roi import DetectionBox, FrameDetections, RoiMask

_HEADER = struct.Struct("<4sBBBBHIIBI")
MAGIC = b"MTMM"
CONTAINER_VERSION = 1

_WHITESPACE = b" \t\n\r\x0b\x0c"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited header token, skipping '#' comments."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c in (b"#",):
            while pos < n and data[pos:pos + 1] != b"\n":
                pos += 1
        elif c in _WHITESPACE:
            pos += 1
        else:
            break
    if pos >= n:
        raise ParseError("unexpected end of header", offset=pos)
    start = pos
    while pos < n and data[pos:pos + 1] not in _WHITESPACE and data[pos:pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def _int_token(data: bytes, pos: int, what: str) -> tuple[int, int]:
    token, end = _next_token(data, pos)
    try:
        value = int(token.decode("ascii"))
    except (UnicodeDecodeError, ValueError):
        raise ParseError(f"invalid {what} {token!r}", offset=pos) from None
    return value, end


def read_frame(path: str | Path) -> Frame:
    """Parse a binary PGM/PPM file into a Frame."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise ParseError(f"{path}: not a binary PGM/PPM (magic {magic!r})", offset=0)
    width, pos = _int_token(data, 2, "width")
    height, pos = _int_token(data, pos, "height")
    maxval, pos = _int_token(data, pos, "maxval")
    if width < 1 or height < 1:
        raise ParseError(f"{path}: bad dimensions {width}x{height}", offset=2)
    if not 1 <= maxval <= 0xFFFF:
        raise ParseError(f"{path}: maxval {maxval} out of range", offset=pos)
    bit_width = maxval.bit_length()
    if maxval != (1 << bit_width) - 1:
        raise UnsupportedMaxval(
            f"{path}: maxval {maxval} is not of the form 2**B - 1"
        )
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise ParseError(f"{path}: missing whitespace after maxval", offset=pos)
    pos += 1
    sample_bytes = 1 if maxval < 256 else 2
    expected = width * height * channels * sample_bytes
    if len(data) - pos < expected:
        raise ParseError(
            f"{path}: truncated pixel payload ({len(data) - pos} of {expected} bytes)",
            offset=len(data),
        )
    if len(data) - pos > expected:
        raise ParseError(f"{path}: trailing bytes after pixel payload", offset=pos + expected)
    dtype = np.dtype(">u2") if sample_bytes == 2 else np.dtype("u1")
    samples = np.frombuffer(data, dtype=dtype, count=width * height * channels, offset=pos)
    if int(samples.max()) > maxval:
        bad = int(np.argmax(samples > maxval))
        raise ParseError(
            f"{path}: sample {int(samples[bad])} exceeds maxval {maxval}",
            offset=pos + bad * sample_bytes,
        )
    pixels = samples.reshape(height, width, channels)
    return Frame(pixels, bit_width=bit_width)


def write_frame(path: str | Path, frame: Frame) -> None:
    """Write a Frame as binary PGM (1 channel) or PPM (3 channels)."""
    maxval = (1 << frame.bit_width) - 1
    magic = "P5" if frame.channels == 1 else "P6"
    header = f"{magic}\n{frame.width} {frame.height}\n{maxval}\n".encode("ascii")
    if maxval < 256:
        payload = frame.pixels.astype(np.uint8).tobytes()
    else:
        payload = frame.pixels.astype(">u2").tobytes()
    Path(path).write_bytes(header + payload)


def write_encoded(path: str | Path, enc: EncodedFrame) -> None:
    """Serialize an EncodedFrame to the container format."""
    p = enc.params
    mask_bytes = np.packbits(enc.mask.bits, axis=None).tobytes()
    header = _HEADER.pack(
        MAGIC,
        CONTAINER_VERSION,
        p.bit_width,
        p.retained_k,
        p.tau,
        p.block_size,
        enc.width,
        enc.height,
        enc.channels,
        len(mask_bytes),
    )
    if p.bit_width <= 8:
        payload = enc.pixels.astype(np.uint8).tobytes()
    else:
        payload = enc.pixels.astype("<u2").tobytes()
    Path(path).write_bytes(header + mask_bytes + payload)


def read_encoded(path: str | Path) -> EncodedFrame:
    """Parse a container file back into an EncodedFrame."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise LengthMismatch(f"{path}: file shorter than the container header")
    magic, version, bit_width, retained_k, tau, block_size, width, height, channels, mask_len = (
        _HEADER.unpack_from(data, 0)
    )
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != CONTAINER_VERSION:
        raise UnsupportedVersion(f"{path}: unsupported container version {version}")
    try:
        params = CodingParams(bit_width, retained_k, tau, block_size)
    except ValueError as exc:
        raise ParseError(f"{path}: invalid header: {exc}", offset=5) from None
    if channels not in (1, 3) or width < 1 or height < 1:
        raise ParseError(
            f"{path}: invalid geometry {width}x{height}x{channels}", offset=11
        )
    grid_w = -(-width // block_size)
    grid_h = -(-height // block_size)
    expected_mask = (grid_w * grid_h + 7) // 8
    if mask_len != expected_mask:
        raise LengthMismatch(
            f"{path}: mask payload {mask_len} bytes, expected {expected_mask}"
        )
    word_bytes = 1 if bit_width <= 8 else 2
    expected_total = _HEADER.size + mask_len + width * height * channels * word_bytes
    if len(data) != expected_total:
        raise LengthMismatch(
            f"{path}: file is {len(data)} bytes, expected {expected_total}"
        )
    mask_raw = np.frombuffer(data, dtype=np.uint8, count=mask_len, offset=_HEADER.size)
    mask_bits = np.unpackbits(mask_raw)[: grid_w * grid_h].reshape(grid_h, grid_w)
    if mask_len * 8 > grid_w * grid_h and np.any(
        np.unpackbits(mask_raw)[grid_w * grid_h:]
    ):
        raise ParseError(
            f"{path}: nonzero padding in the mask payload",
            offset=_HEADER.size + mask_len - 1,
        )
    dtype = np.dtype("u1") if word_bytes == 1 else np.dtype("<u2")
    pixels = np.frombuffer(
        data, dtype=dtype, count=width * height * channels, offset=_HEADER.size + mask_len
    ).reshape(height, width, channels)
    mask = RoiMask(mask_bits.astype(bool), block_size)
    return EncodedFrame(params=params, mask=mask, pixels=pixels.astype(np.uint16))


_DETECTION_KEYS = ("frame", "x1", "y1", "x2", "y2", "class", "conf", "track")


def read_detections(path: str | Path) -> list[FrameDetections]:
    """Parse line-delimited detection records, grouped by frame.

    Returns one FrameDetections per index from 0 to the highest frame
    seen; indices with no records come back with empty box lists. Frame
    indices must be non-decreasing through the file.
    """
    groups: dict[int, list[DetectionBox]] = {}
    last_frame = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: {exc.msg}", line=lineno) from None
            if not isinstance(record, dict):
                raise ParseError(f"{path}: record is not an object", line=lineno)
            missing = [k for k in _DETECTION_KEYS if k not in record]
            if missing:
                raise ParseError(f"{path}: missing keys {missing}", line=lineno)
            try:
                frame_index = int(record["frame"])
                track = record["track"]
                box = DetectionBox(
                    x1=float(record["x1"]),
                    y1=float(record["y1"]),
                    x2=float(record["x2"]),
                    y2=float(record["y2"]),
                    class_id=int(record["class"]),
                    confidence=float(record["conf"]),
                    track_id=None if track is None else int(track),
                )
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{path}: {exc}", line=lineno) from None
            if frame_index < 0:
                raise ParseError(f"{path}: negative frame index {frame_index}", line=lineno)
            if frame_index < last_frame:
                raise OrderError(
                    f"{path}: frame index {frame_index} regresses below {last_frame}",
                    line=lineno,
                )
            last_frame = frame_index
            groups.setdefault(frame_index, []).append(box)
    if not groups:
        return []
    return [
        FrameDetections(i, groups.get(i, [])) for i in range(max(groups) + 1)
    ]


def write_detections(path: str | Path, detections: list[FrameDetections]) -> None:
    """Emit detection records, one JSON object per line, frames ascending."""
    with open(path, "w", encoding="utf-8") as fh:
        for det in detections:
            for box in det.boxes:
                record = {
                    "frame": det.frame_index,
                    "x1": box.x1,
                    "y1": box.y1,
                    "x2": box.x2,
                    "y2": box.y2,
                    "class": box.class_id,
                    "conf": box.confidence,
                    "track": box.track_id,
                }
                fh.write(json.dumps(record) + "\n")
