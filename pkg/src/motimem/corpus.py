"""Synthetic moving-object corpus with ground-truth boxes.

Noise-textured rectangles drift over a static gradient-plus-noise
background and bounce off the frame edges, so box motion is piecewise
constant-velocity -- exactly the regime the mask predictor assumes,
with occasional direction breaks for the inflation margin to absorb.
Everything derives from one seeded generator: the same config always
yields byte-identical frames and records.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .bitcodec import Frame
from .roi import DetectionBox, FrameDetections
from .stream import read_detections, read_frame, write_detections, write_frame

CORPUS_META = "corpus.json"
DETECTIONS_FILE = "gt.jsonl"


@dataclass(frozen=True)
class CorpusConfig:
    width: int = 192
    height: int = 144
    channels: int = 1
    num_frames: int = 60
    num_objects: int = 3
    min_size: int = 20
    max_size: int = 40
    max_speed: float = 4.0
    noise_amplitude: int = 24
    seed: int = 0

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        if self.num_frames < 1 or self.num_objects < 0:
            raise ValueError("need at least one frame and a non-negative object count")
        if not 4 <= self.min_size <= self.max_size:
            raise ValueError("object sizes must satisfy 4 <= min_size <= max_size")
        if self.max_size >= min(self.width, self.height):
            raise ValueError("objects must fit inside the frame")


class _Object:
    """One drifting rectangle: float center, fixed size, bouncing velocity."""

    def __init__(self, rng: np.random.Generator, cfg: CorpusConfig, class_id: int):
        self.w = int(rng.integers(cfg.min_size, cfg.max_size + 1))
        self.h = int(rng.integers(cfg.min_size, cfg.max_size + 1))
        self.cx = float(rng.uniform(self.w / 2, cfg.width - self.w / 2))
        self.cy = float(rng.uniform(self.h / 2, cfg.height - self.h / 2))
        speed = rng.uniform(0.5, cfg.max_speed, size=2)
        sign = rng.choice((-1.0, 1.0), size=2)
        self.vx, self.vy = float(speed[0] * sign[0]), float(speed[1] * sign[1])
        self.class_id = class_id
        self.texture = rng.integers(0, 256, size=(self.h, self.w, cfg.channels), dtype=np.uint16)

    def step(self, cfg: CorpusConfig) -> None:
        self.cx += self.vx
        self.cy += self.vy
        if self.cx - self.w / 2 < 0 or self.cx + self.w / 2 > cfg.width:
            self.vx = -self.vx
            self.cx = float(np.clip(self.cx, self.w / 2, cfg.width - self.w / 2))
        if self.cy - self.h / 2 < 0 or self.cy + self.h / 2 > cfg.height:
            self.vy = -self.vy
            self.cy = float(np.clip(self.cy, self.h / 2, cfg.height - self.h / 2))

    def box(self, track_id: int) -> DetectionBox:
        x1 = int(round(self.cx - self.w / 2))
        y1 = int(round(self.cy - self.h / 2))
        return DetectionBox(
            x1=float(x1),
            y1=float(y1),
            x2=float(x1 + self.w),
            y2=float(y1 + self.h),
            class_id=self.class_id,
            confidence=1.0,
            track_id=track_id,
        )


def generate_corpus(cfg: CorpusConfig) -> tuple[list[Frame], list[FrameDetections]]:
    """Render the frame sequence and its ground-truth boxes."""
    rng = np.random.default_rng(cfg.seed)
    grad_x = (np.arange(cfg.width) * 96) // max(1, cfg.width - 1)
    grad_y = (np.arange(cfg.height) * 96) // max(1, cfg.height - 1)
    base = 32 + grad_x[np.newaxis, :] + grad_y[:, np.newaxis]
    noise = rng.integers(
        -cfg.noise_amplitude, cfg.noise_amplitude + 1, size=(cfg.height, cfg.width, cfg.channels)
    )
    background = np.clip(base[:, :, np.newaxis] + noise, 0, 255).astype(np.uint16)
    objects = [_Object(rng, cfg, class_id=i % 3) for i in range(cfg.num_objects)]

    frames: list[Frame] = []
    detections: list[FrameDetections] = []
    for t in range(cfg.num_frames):
        pixels = background.copy()
        boxes = []
        for oid, obj in enumerate(objects):
            box = obj.box(track_id=oid)
            x1, y1 = int(box.x1), int(box.y1)
            x1 = max(0, min(x1, cfg.width - obj.w))
            y1 = max(0, min(y1, cfg.height - obj.h))
            pixels[y1:y1 + obj.h, x1:x1 + obj.w] = obj.texture
            boxes.append(
                DetectionBox(
                    float(x1), float(y1), float(x1 + obj.w), float(y1 + obj.h),
                    class_id=box.class_id, confidence=1.0, track_id=oid,
                )
            )
        frames.append(Frame(pixels, bit_width=8))
        detections.append(FrameDetections(t, boxes))
        for obj in objects:
            obj.step(cfg)
    return frames, detections


def _frame_name(index: int, channels: int) -> str:
    ext = "pgm" if channels == 1 else "ppm"
    return f"frame_{index:05d}.{ext}"


def save_corpus(
    directory: str | Path,
    frames: list[Frame],
    detections: list[FrameDetections],
    cfg: CorpusConfig | None = None,
) -> None:
    """Write frames as netpbm files plus gt.jsonl and a metadata echo."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        write_frame(out / _frame_name(i, frame.channels), frame)
    write_detections(out / DETECTIONS_FILE, detections)
    meta = {"num_frames": len(frames)}
    if cfg is not None:
        meta["config"] = asdict(cfg)
    (out / CORPUS_META).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_corpus(directory: str | Path) -> tuple[list[Frame], list[FrameDetections]]:
    """Read a saved corpus back; detections are padded to the frame count."""
    src = Path(directory)
    paths = sorted(p for p in src.iterdir() if p.suffix in (".pgm", ".ppm"))
    if not paths:
        raise FileNotFoundError(f"no .pgm/.ppm frames under {src}")
    frames = [read_frame(p) for p in paths]
    gt_path = src / DETECTIONS_FILE
    detections = read_detections(gt_path) if gt_path.exists() else []
    while len(detections) < len(frames):
        detections.append(FrameDetections(len(detections), []))
    return frames, detections
