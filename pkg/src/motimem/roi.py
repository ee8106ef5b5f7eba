"""Detection-driven region-of-interest masks.

The routing mask for a frame is built from the *previous* frame's
detections: boxes are matched against the frame before that by IoU to
estimate a per-track center velocity, advanced one step under a
constant-velocity model, inflated by a safety margin, and rasterized
onto a block grid. Any block a box touches with positive area is set,
so the mask errs toward keeping fidelity.

When there are no usable prior detections (first frame, an empty
detector output, or everything below the confidence floor) the
predictor falls back to a full mask: the whole frame is treated as
region of interest until the loop has something to go on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import DimensionMismatch


@dataclass(frozen=True)
class DetectionBox:
    """Axis-aligned box in pixel coordinates, x1 < x2 and y1 < y2."""

    x1: float
    y1: float
    x2: float
    y2: float
    class_id: int = 0
    confidence: float = 1.0
    track_id: int | None = None

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"degenerate box ({self.x1}, {self.y1}, {self.x2}, {self.y2})")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def center(self) -> tuple[float, float]:
        return (self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0

    def area(self) -> float:
        return self.width * self.height


@dataclass
class FrameDetections:
    """All boxes reported for one frame."""

    frame_index: int
    boxes: list[DetectionBox] = field(default_factory=list)


@dataclass
class MotionState:
    """Latest center-velocity estimate for one track, in pixels/frame."""

    vx: float = 0.0
    vy: float = 0.0
    last_seen: int = 0


def iou(a: DetectionBox, b: DetectionBox) -> float:
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    inter = max(0.0, ix2 - ix1) * max(0.0, iy2 - iy1)
    if inter == 0.0:
        return 0.0
    return inter / (a.area() + b.area() - inter)


def match_tracks(
    prev: FrameDetections,
    curr: FrameDetections,
    iou_threshold: float = 0.3,
) -> list[tuple[int, int]]:
    """Greedy one-to-one association between two detection sets.

    Same-class pairs with IoU above ``iou_threshold`` are taken in
    descending IoU order; ties break toward the lower prev index, then
    the lower curr index. Each box is used at most once.
    """
    candidates = []
    for pi, pb in enumerate(prev.boxes):
        for ci, cb in enumerate(curr.boxes):
            if pb.class_id != cb.class_id:
                continue
            score = iou(pb, cb)
            if score > iou_threshold:
                candidates.append((-score, pi, ci))
    candidates.sort()
    pairs: list[tuple[int, int]] = []
    used_prev: set[int] = set()
    used_curr: set[int] = set()
    for _, pi, ci in candidates:
        if pi in used_prev or ci in used_curr:
            continue
        used_prev.add(pi)
        used_curr.add(ci)
        pairs.append((pi, ci))
    return pairs


def estimate_velocity(
    prev_box: DetectionBox,
    curr_box: DetectionBox,
    dframes: int,
) -> tuple[float, float]:
    """Center displacement per frame between two observations of one track."""
    if dframes < 1:
        raise ValueError("dframes must be >= 1")
    (px, py), (cx, cy) = prev_box.center, curr_box.center
    return (cx - px) / dframes, (cy - py) / dframes


class BoxTracker:
    """Frame-to-frame box association with per-track velocity.

    Feed detector outputs in frame order through :meth:`observe`; the
    boxes come back with track ids assigned, and :attr:`states` holds
    the most recent center displacement per live track. Velocity uses
    only the latest displacement (no smoothing); unmatched boxes start
    new tracks at zero velocity.
    """

    def __init__(self, iou_threshold: float = 0.3):
        self.iou_threshold = iou_threshold
        self._last: FrameDetections | None = None
        self._states: dict[int, MotionState] = {}
        self._next_id = 0

    @property
    def states(self) -> dict[int, MotionState]:
        return self._states

    def observe(self, det: FrameDetections) -> FrameDetections:
        if self._last is not None and det.frame_index <= self._last.frame_index:
            raise ValueError(
                f"frame_index must advance: got {det.frame_index} after {self._last.frame_index}"
            )
        assigned: list[DetectionBox | None] = [None] * len(det.boxes)
        states: dict[int, MotionState] = {}
        if self._last is not None:
            dt = det.frame_index - self._last.frame_index
            for pi, ci in match_tracks(self._last, det, self.iou_threshold):
                prev_box = self._last.boxes[pi]
                tid = prev_box.track_id
                assert tid is not None  # every stored box was assigned an id
                vx, vy = estimate_velocity(prev_box, det.boxes[ci], dt)
                assigned[ci] = replace(det.boxes[ci], track_id=tid)
                states[tid] = MotionState(vx, vy, det.frame_index)
        for i, box in enumerate(det.boxes):
            if assigned[i] is None:
                tid = self._next_id
                self._next_id += 1
                assigned[i] = replace(box, track_id=tid)
                states[tid] = MotionState(0.0, 0.0, det.frame_index)
        out = FrameDetections(det.frame_index, [b for b in assigned if b is not None])
        self._last = out
        self._states = states
        return out


def propagate_box(box: DetectionBox, velocity: tuple[float, float], dt: float) -> DetectionBox:
    """Shift a box by ``dt`` frames of constant-velocity motion."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    dx, dy = velocity[0] * dt, velocity[1] * dt
    return replace(box, x1=box.x1 + dx, y1=box.y1 + dy, x2=box.x2 + dx, y2=box.y2 + dy)


@dataclass(frozen=True)
class InflationPolicy:
    """Symmetric per-side growth: max of an absolute pixel floor and a
    fraction of the box side length."""

    abs_floor_px: float = 8.0
    rel_fraction: float = 0.1


def inflate_box(
    box: DetectionBox,
    policy: InflationPolicy,
    frame_width: int,
    frame_height: int,
) -> DetectionBox | None:
    """Grow a box by the policy margin, then clamp to the frame.

    Returns None when the grown box has no positive-area intersection
    with the frame (a propagated box may have left the image entirely).
    """
    dx = max(policy.abs_floor_px, policy.rel_fraction * box.width)
    dy = max(policy.abs_floor_px, policy.rel_fraction * box.height)
    x1 = max(0.0, box.x1 - dx)
    y1 = max(0.0, box.y1 - dy)
    x2 = min(float(frame_width), box.x2 + dx)
    y2 = min(float(frame_height), box.y2 + dy)
    if x1 >= x2 or y1 >= y2:
        return None
    return replace(box, x1=x1, y1=y1, x2=x2, y2=y2)


@dataclass(eq=False)
class RoiMask:
    """Block-granularity binary mask.

    Bit ``(by, bx)`` covers the pixel square
    ``[bx*block_size, (bx+1)*block_size) x [by*block_size, (by+1)*block_size)``,
    clipped to the frame at the right/bottom edges.
    """

    bits: np.ndarray
    block_size: int

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("mask bits must be a non-empty 2D grid")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        self.bits = arr.astype(bool)

    @property
    def grid_width(self) -> int:
        return self.bits.shape[1]

    @property
    def grid_height(self) -> int:
        return self.bits.shape[0]

    @classmethod
    def full(cls, frame_width: int, frame_height: int, block_size: int) -> "RoiMask":
        gw, gh = _grid_dims(frame_width, frame_height, block_size)
        return cls(np.ones((gh, gw), dtype=bool), block_size)

    @classmethod
    def empty(cls, frame_width: int, frame_height: int, block_size: int) -> "RoiMask":
        gw, gh = _grid_dims(frame_width, frame_height, block_size)
        return cls(np.zeros((gh, gw), dtype=bool), block_size)

    def covers(self, frame_width: int, frame_height: int) -> bool:
        gw, gh = _grid_dims(frame_width, frame_height, self.block_size)
        return (self.grid_width, self.grid_height) == (gw, gh)

    def pixel_selector(self, frame_width: int, frame_height: int) -> np.ndarray:
        """Boolean per-pixel routing map of shape (frame_height, frame_width)."""
        if not self.covers(frame_width, frame_height):
            raise DimensionMismatch(
                f"mask grid {self.grid_width}x{self.grid_height} (block {self.block_size}) "
                f"does not cover a {frame_width}x{frame_height} frame"
            )
        up = np.repeat(np.repeat(self.bits, self.block_size, axis=0), self.block_size, axis=1)
        return up[:frame_height, :frame_width]

    def coverage(self, frame_width: int, frame_height: int) -> float:
        """Fraction of frame pixels routed through the high-fidelity path."""
        return float(self.pixel_selector(frame_width, frame_height).mean())


def _grid_dims(frame_width: int, frame_height: int, block_size: int) -> tuple[int, int]:
    if frame_width < 1 or frame_height < 1 or block_size < 1:
        raise ValueError("frame dimensions and block size must be positive")
    return -(-frame_width // block_size), -(-frame_height // block_size)


def rasterize_mask(
    boxes: list[DetectionBox],
    frame_width: int,
    frame_height: int,
    block_size: int,
) -> RoiMask:
    """Union of boxes on the block grid.

    A block is set iff some box overlaps the block's in-frame pixel
    extent with positive area. Boxes are clipped to the frame first, so
    out-of-frame area never sets a block.
    """
    gw, gh = _grid_dims(frame_width, frame_height, block_size)
    bits = np.zeros((gh, gw), dtype=bool)
    for box in boxes:
        x1 = max(box.x1, 0.0)
        y1 = max(box.y1, 0.0)
        x2 = min(box.x2, float(frame_width))
        y2 = min(box.y2, float(frame_height))
        if x1 >= x2 or y1 >= y2:
            continue
        bx0 = int(math.floor(x1 / block_size))
        bx1 = min(gw, int(math.ceil(x2 / block_size)))
        by0 = int(math.floor(y1 / block_size))
        by1 = min(gh, int(math.ceil(y2 / block_size)))
        bits[by0:by1, bx0:bx1] = True
    return RoiMask(bits, block_size)


def predict_mask(
    prev: FrameDetections | None,
    motion: Mapping[int, MotionState],
    dt: int,
    frame_width: int,
    frame_height: int,
    block_size: int,
    inflation: InflationPolicy,
    min_confidence: float = 0.0,
    cold_start_full: bool = True,
) -> RoiMask:
    """Predict the routing mask for the frame ``dt`` steps after ``prev``.

    Propagate each prior box by its track velocity (zero for unknown
    tracks), inflate, and rasterize the union. With no usable prior
    boxes the cold-start fallback applies: a full mask by default, an
    empty one when ``cold_start_full`` is False (ablation only).
    """
    usable = [] if prev is None else [b for b in prev.boxes if b.confidence >= min_confidence]
    if not usable:
        make = RoiMask.full if cold_start_full else RoiMask.empty
        return make(frame_width, frame_height, block_size)
    predicted = []
    for box in usable:
        state = motion.get(box.track_id) if box.track_id is not None else None
        velocity = (state.vx, state.vy) if state is not None else (0.0, 0.0)
        moved = propagate_box(box, velocity, dt)
        grown = inflate_box(moved, inflation, frame_width, frame_height)
        if grown is not None:
            predicted.append(grown)
    return rasterize_mask(predicted, frame_width, frame_height, block_size)
