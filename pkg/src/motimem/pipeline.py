"""Closed-loop harness, k sweep, and variant comparison.

The loop runs strictly sequentially in t: the routing mask for frame t
is predicted from the detector output on frame t-1 (full-frame fallback
at t=0 or after an empty output), the frame is encoded, decoded and
measured, and then the detector stub runs on frame t's ground truth to
produce the feedback for t+1. A detector has no business being perfect,
so the stub drops boxes and jitters coordinates under one seeded
generator; a fixed seed makes whole runs byte-reproducible.

Four encoding variants share this loop:

* ``motimem``  -- mask-routed hybrid coding (the full scheme);
* ``global``   -- every pixel through the background path (no mask);
* ``uniform``  -- plain truncation, no inversion, no flag;
* ``raw``      -- passthrough baseline.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .bitcodec import (
    CodingParams,
    Frame,
    decode_frame,
    encode_frame,
    truncate_words,
)
from .errors import AlignmentError
from .metrics import measure_frame
from .roi import (
    BoxTracker,
    DetectionBox,
    FrameDetections,
    InflationPolicy,
    RoiMask,
    predict_mask,
)

VARIANTS = ("motimem", "global", "uniform", "raw")

REPORT_COLUMNS = [
    "frame", "variant", "k", "tau", "W",
    "raw_density", "enc_density", "nbd", "alpha_raw", "alpha_enc",
    "mse", "psnr_db", "mask_coverage",
]

SWEEP_COLUMNS = ["k", "mean_nbd", "mean_psnr_db", "mean_mask_coverage"]


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a run needs; a fixed seed makes the run deterministic.

    The detector stub defaults (1 px jitter, 5% dropout) are arbitrary
    stand-ins for real detector error and exist to be overridden.
    """

    params: CodingParams = CodingParams()
    inflation: InflationPolicy = InflationPolicy()
    iou_threshold: float = 0.3
    detector_sigma_px: float = 1.0
    detector_dropout_p: float = 0.05
    seed: int = 0
    word_width: int = 8
    min_confidence: float = 0.0
    cold_start_full: bool = True


@dataclass
class ReportRow:
    """One per-frame line of the report CSV."""

    frame: int
    variant: str
    k: int
    tau: int
    word_width: int
    raw_density: float
    enc_density: float
    nbd: float | None
    alpha_raw: float
    alpha_enc: float
    mse: float
    psnr_db: float
    mask_coverage: float


@dataclass
class RunSummary:
    """Per-frame rows plus aggregates recomputable from them.

    ``masks`` holds the routing mask applied at each frame (for the
    motimem variant, the predicted one)."""

    variant: str
    params: CodingParams
    word_width: int
    seed: int
    rows: list[ReportRow]
    masks: list[RoiMask] = field(repr=False, default_factory=list)
    mean_raw_density: float = 0.0
    mean_enc_density: float = 0.0
    mean_nbd: float | None = None
    mean_alpha_raw: float = 0.0
    mean_alpha_enc: float = 0.0
    mean_mse: float = 0.0
    mean_psnr_db: float = 0.0
    mean_mask_coverage: float = 0.0

    @classmethod
    def from_rows(
        cls,
        variant: str,
        params: CodingParams,
        word_width: int,
        seed: int,
        rows: list[ReportRow],
        masks: list[RoiMask],
    ) -> "RunSummary":
        defined = [r.nbd for r in rows if r.nbd is not None]
        return cls(
            variant=variant,
            params=params,
            word_width=word_width,
            seed=seed,
            rows=rows,
            masks=masks,
            mean_raw_density=_mean(r.raw_density for r in rows),
            mean_enc_density=_mean(r.enc_density for r in rows),
            mean_nbd=sum(defined) / len(defined) if defined else None,
            mean_alpha_raw=_mean(r.alpha_raw for r in rows),
            mean_alpha_enc=_mean(r.alpha_enc for r in rows),
            mean_mse=_mean(r.mse for r in rows),
            mean_psnr_db=_mean(r.psnr_db for r in rows),
            mean_mask_coverage=_mean(r.mask_coverage for r in rows),
        )


def _mean(values) -> float:
    vals = list(values)
    return sum(vals) / len(vals)


def oracle_detector(
    ground_truth: FrameDetections,
    cfg: PipelineConfig,
    rng: np.random.Generator,
    frame_width: int,
    frame_height: int,
) -> FrameDetections:
    """Detector stand-in: seeded dropout plus integer coordinate jitter.

    Each ground-truth box is dropped with probability ``dropout_p``;
    survivors get independent rounded-normal offsets of scale
    ``sigma_px`` on every coordinate, re-ordered and clamped so the
    result is a valid in-frame box. Track identity is stripped -- a
    detector would not know it.
    """
    boxes: list[DetectionBox] = []
    for box in ground_truth.boxes:
        if rng.random() < cfg.detector_dropout_p:
            continue
        dx1, dy1, dx2, dy2 = np.rint(rng.normal(0.0, cfg.detector_sigma_px, size=4))
        x1, y1 = box.x1 + dx1, box.y1 + dy1
        x2, y2 = box.x2 + dx2, box.y2 + dy2
        x1, x2 = min(x1, x2), max(x1, x2)
        y1, y2 = min(y1, y2), max(y1, y2)
        x1 = float(np.clip(x1, 0, frame_width - 1))
        y1 = float(np.clip(y1, 0, frame_height - 1))
        x2 = float(np.clip(x2, x1 + 1, frame_width))
        y2 = float(np.clip(y2, y1 + 1, frame_height))
        boxes.append(
            DetectionBox(x1, y1, x2, y2, class_id=box.class_id,
                         confidence=box.confidence, track_id=None)
        )
    return FrameDetections(ground_truth.frame_index, boxes)


def pad_detections(
    detections: Sequence[FrameDetections], num_frames: int
) -> list[FrameDetections]:
    """Extend a detection sequence with empty sets up to ``num_frames``."""
    if len(detections) > num_frames:
        raise AlignmentError(
            f"{len(detections)} detection frames for {num_frames} image frames"
        )
    out = list(detections)
    while len(out) < num_frames:
        out.append(FrameDetections(len(out), []))
    return out


def _check_aligned(frames: Sequence[Frame], detections: Sequence[FrameDetections]) -> None:
    if not frames:
        raise AlignmentError("no frames to process")
    if len(detections) != len(frames):
        raise AlignmentError(
            f"{len(frames)} frames but {len(detections)} detection sets"
        )
    for i, det in enumerate(detections):
        if det.frame_index != i:
            raise AlignmentError(f"detection set {i} carries frame_index {det.frame_index}")
    first = frames[0]
    for frame in frames[1:]:
        if (frame.width, frame.height, frame.channels, frame.bit_width) != (
            first.width, first.height, first.channels, first.bit_width
        ):
            raise AlignmentError("all frames in a run must share shape and bit width")


def run_closed_loop(
    frames: Sequence[Frame],
    detections: Sequence[FrameDetections],
    cfg: PipelineConfig,
    variant: str = "motimem",
    jobs: int = 1,
) -> RunSummary:
    """Run one variant over the sequence and collect per-frame reports.

    Strictly sequential in t; the mask applied at frame t depends only
    on detector outputs for frames before t.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    _check_aligned(frames, detections)
    params = cfg.params
    if frames[0].bit_width != params.bit_width:
        raise AlignmentError(
            f"frames are {frames[0].bit_width}-bit but coding expects {params.bit_width}-bit"
        )
    rng = np.random.default_rng(cfg.seed)
    tracker = BoxTracker(cfg.iou_threshold)
    prev_out: FrameDetections | None = None
    rows: list[ReportRow] = []
    masks: list[RoiMask] = []
    for t, frame in enumerate(frames):
        fw, fh = frame.width, frame.height
        if variant == "motimem":
            if prev_out is None:
                make = RoiMask.full if cfg.cold_start_full else RoiMask.empty
                mask = make(fw, fh, params.block_size)
            else:
                mask = predict_mask(
                    prev_out, tracker.states, t - prev_out.frame_index,
                    fw, fh, params.block_size, cfg.inflation,
                    min_confidence=cfg.min_confidence,
                    cold_start_full=cfg.cold_start_full,
                )
        elif variant in ("global", "uniform"):
            mask = RoiMask.empty(fw, fh, params.block_size)
        else:
            mask = RoiMask.full(fw, fh, params.block_size)

        if variant in ("motimem", "global"):
            enc = encode_frame(frame, mask, params, jobs=jobs)
            enc_pixels = enc.pixels
            decoded = decode_frame(enc)
        elif variant == "uniform":
            enc_pixels = truncate_words(frame.pixels, params)
            decoded = Frame(enc_pixels, bit_width=frame.bit_width)
        else:
            enc_pixels = frame.pixels
            decoded = frame

        report = measure_frame(t, frame, enc_pixels, decoded, cfg.word_width)
        rows.append(
            ReportRow(
                frame=t,
                variant=variant,
                k=params.retained_k,
                tau=params.tau,
                word_width=cfg.word_width,
                raw_density=report.raw_bit1_density,
                enc_density=report.enc_bit1_density,
                nbd=report.nbd,
                alpha_raw=report.alpha_raw,
                alpha_enc=report.alpha_enc,
                mse=report.mse,
                psnr_db=report.psnr_db,
                mask_coverage=mask.coverage(fw, fh),
            )
        )
        masks.append(mask)

        prev_out = tracker.observe(
            oracle_detector(detections[t], cfg, rng, fw, fh)
        )
    return RunSummary.from_rows(variant, params, cfg.word_width, cfg.seed, rows, masks)


def run_sweep(
    frames: Sequence[Frame],
    detections: Sequence[FrameDetections],
    cfg: PipelineConfig,
    k_values: Sequence[int],
    variant: str = "motimem",
    jobs: int = 1,
) -> list[RunSummary]:
    """Independent closed-loop runs per retained-bit count, same seed.

    Each sweep point re-derives the inversion threshold as ``k // 2``.
    """
    summaries = []
    for k in k_values:
        point = replace(
            cfg, params=replace(cfg.params, retained_k=k, tau=k // 2)
        )
        summaries.append(run_closed_loop(frames, detections, point, variant, jobs))
    return summaries


def sweep_rows(summaries: Sequence[RunSummary]) -> list[dict]:
    """Fixed-schema rows for the sweep summary CSV."""
    return [
        {
            "k": s.params.retained_k,
            "mean_nbd": s.mean_nbd,
            "mean_psnr_db": s.mean_psnr_db,
            "mean_mask_coverage": s.mean_mask_coverage,
        }
        for s in summaries
    ]


def compare_variants(
    frames: Sequence[Frame],
    detections: Sequence[FrameDetections],
    cfg: PipelineConfig,
    jobs: int = 1,
) -> dict[str, RunSummary]:
    """All four variants over identical inputs with identical seeds."""
    return {
        variant: run_closed_loop(frames, detections, cfg, variant, jobs)
        for variant in VARIANTS
    }


def _format_cell(value) -> str:
    if value is None:
        return "undef"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return repr(value)
    return str(value)


def write_report_csv(path: str | Path, rows: Sequence[ReportRow]) -> None:
    """Per-frame report; dates, hostnames and other run noise stay out,
    so identical runs produce byte-identical files."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in rows:
            writer.writerow(
                _format_cell(v)
                for v in (
                    r.frame, r.variant, r.k, r.tau, r.word_width,
                    r.raw_density, r.enc_density, r.nbd, r.alpha_raw,
                    r.alpha_enc, r.mse, r.psnr_db, r.mask_coverage,
                )
            )


def write_sweep_csv(path: str | Path, rows: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow(_format_cell(row[col]) for col in SWEEP_COLUMNS)


def summary_manifest(summaries: Sequence[RunSummary]) -> dict:
    """JSON-ready echo of configs, seeds, and aggregates for a run."""
    entries = []
    for s in summaries:
        entries.append(
            {
                "variant": s.variant,
                "bit_width": s.params.bit_width,
                "k": s.params.retained_k,
                "tau": s.params.tau,
                "block_size": s.params.block_size,
                "word_width": s.word_width,
                "seed": s.seed,
                "frames": len(s.rows),
                "mean_raw_density": s.mean_raw_density,
                "mean_enc_density": s.mean_enc_density,
                "mean_nbd": s.mean_nbd,
                "mean_alpha_raw": s.mean_alpha_raw,
                "mean_alpha_enc": s.mean_alpha_enc,
                "mean_mse": s.mean_mse,
                "mean_psnr_db": None if math.isinf(s.mean_psnr_db) else s.mean_psnr_db,
                "mean_psnr_infinite": math.isinf(s.mean_psnr_db),
                "mean_mask_coverage": s.mean_mask_coverage,
            }
        )
    return {"runs": entries}


def write_summary_json(path: str | Path, summaries: Sequence[RunSummary]) -> None:
    Path(path).write_text(
        json.dumps(summary_manifest(summaries), indent=2, sort_keys=True) + "\n"
    )
