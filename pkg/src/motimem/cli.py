"""Command-line surface.

Thin shell over the library: every subcommand maps onto one pipeline or
stream operation, inputs are never mutated, and all outputs are
path-addressed. Exit codes: 0 success, 1 usage error, 2 unreadable or
malformed data, 3 internal error. Set MOTIMEM_LOG=debug|info|warning to
control log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .bitcodec import CodingParams, decode_frame, encode_frame
from .errors import MotiMemError, UndefinedRatio
from .metrics import frame_bits, measure_frame, nbd as nbd_ratio
from .pipeline import (
    PipelineConfig,
    REPORT_COLUMNS,
    RunSummary,
    SWEEP_COLUMNS,
    VARIANTS,
    compare_variants,
    pad_detections,
    run_closed_loop,
    run_sweep,
    sweep_rows,
    write_report_csv,
    write_summary_json,
    write_sweep_csv,
)
from .roi import FrameDetections, InflationPolicy, RoiMask, predict_mask
from .stream import read_detections, read_encoded, read_frame, write_encoded, write_frame

log = logging.getLogger("motimem")

AGGREGATE_COLUMNS = [
    "variant", "k", "tau", "W", "frames",
    "mean_raw_density", "mean_enc_density", "mean_nbd",
    "mean_alpha_raw", "mean_alpha_enc", "mean_mse", "mean_psnr_db",
    "mean_mask_coverage",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # the exit-code contract reserves 2 for data errors; usage problems exit 1
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(value) -> str:
    if value is None:
        return "undef"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return f"{value:.6g}"
    return str(value)


def _coding_params(bit_width: int, args) -> CodingParams:
    try:
        return CodingParams(
            bit_width=bit_width,
            retained_k=args.k,
            tau=args.tau,
            block_size=args.block,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _inflation(args) -> InflationPolicy:
    if args.inflate_abs < 0 or args.inflate_rel < 0:
        raise UsageError("inflation margins must be non-negative")
    return InflationPolicy(abs_floor_px=args.inflate_abs, rel_fraction=args.inflate_rel)


def _pipeline_config(bit_width: int, args) -> PipelineConfig:
    if args.sigma < 0 or not 0.0 <= args.dropout <= 1.0:
        raise UsageError("need sigma >= 0 and dropout in [0, 1]")
    if args.word_width < 1:
        raise UsageError("word width must be >= 1")
    return PipelineConfig(
        params=_coding_params(bit_width, args),
        inflation=_inflation(args),
        iou_threshold=args.iou,
        detector_sigma_px=args.sigma,
        detector_dropout_p=args.dropout,
        seed=args.seed,
        word_width=args.word_width,
        min_confidence=args.min_conf,
    )


def _aggregate_cells(summary: RunSummary) -> list:
    return [
        summary.variant,
        summary.params.retained_k,
        summary.params.tau,
        summary.word_width,
        len(summary.rows),
        summary.mean_raw_density,
        summary.mean_enc_density,
        summary.mean_nbd,
        summary.mean_alpha_raw,
        summary.mean_alpha_enc,
        summary.mean_mse,
        summary.mean_psnr_db,
        summary.mean_mask_coverage,
    ]


def _print_aggregates(summaries: list[RunSummary], as_csv: bool) -> None:
    if as_csv:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(AGGREGATE_COLUMNS)
        for s in summaries:
            writer.writerow(_fmt(v) for v in _aggregate_cells(s))
    else:
        for s in summaries:
            pairs = zip(AGGREGATE_COLUMNS, _aggregate_cells(s))
            print("  ".join(f"{name}={_fmt(value)}" for name, value in pairs))


def _load_corpus(args):
    frames, detections = corpus_mod.load_corpus(args.corpus)
    return frames, pad_detections(detections, len(frames))


def _maybe_figures(args, render) -> None:
    if args.no_figures:
        return
    render()


def cmd_encode(args) -> int:
    frame = read_frame(args.frame)
    params = _coding_params(frame.bit_width, args)
    if args.detections:
        groups = read_detections(args.detections)
        prior = groups[-1] if groups else FrameDetections(0, [])
        mask = predict_mask(
            prior, {}, 1, frame.width, frame.height,
            params.block_size, _inflation(args), min_confidence=args.min_conf,
        )
        if not prior.boxes:
            log.warning("%s: no boxes in detections file; using a full mask", args.detections)
    else:
        log.warning("no detections file given; using a full (all-RoI) mask")
        mask = RoiMask.full(frame.width, frame.height, params.block_size)
    enc = encode_frame(frame, mask, params)
    write_encoded(args.out, enc)
    raw_bits = frame_bits(frame.pixels, frame.bit_width)
    enc_bits = frame_bits(enc.pixels, frame.bit_width)
    try:
        ratio = _fmt(nbd_ratio(raw_bits, enc_bits))
    except UndefinedRatio:
        ratio = "undef"
    coverage = mask.coverage(frame.width, frame.height)
    print(f"nbd={ratio} mask_coverage={_fmt(coverage)} out={args.out}")
    return 0


def cmd_decode(args) -> int:
    enc = read_encoded(args.container)
    frame = decode_frame(enc)
    write_frame(args.out, frame)
    print(
        f"out={args.out} size={frame.width}x{frame.height}x{frame.channels} "
        f"bits={frame.bit_width}"
    )
    return 0


def cmd_metrics(args) -> int:
    if args.word_width < 1:
        raise UsageError("word width must be >= 1")
    raw = read_frame(args.raw)
    other = read_frame(args.other)
    report = measure_frame(0, raw, other.pixels, other, args.word_width)
    cells = [
        0, "metrics", "", "", report.word_width,
        report.raw_bit1_density, report.enc_bit1_density, report.nbd,
        report.alpha_raw, report.alpha_enc, report.mse, report.psnr_db, "",
    ]
    if args.csv:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        writer.writerow(_fmt(v) for v in cells)
    else:
        for name, value in zip(REPORT_COLUMNS, cells):
            if value != "":
                print(f"{name}={_fmt(value)}")
    return 0


def cmd_run(args) -> int:
    frames, detections = _load_corpus(args)
    cfg = _pipeline_config(frames[0].bit_width, args)
    summary = run_closed_loop(frames, detections, cfg, args.variant, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report_csv(out / "report.csv", summary.rows)
    write_summary_json(out / "summary.json", [summary])

    def render():
        from . import plots

        plots.plot_run(summary.rows, out / "run.png")

    _maybe_figures(args, render)
    _print_aggregates([summary], args.csv)
    return 0


def cmd_sweep(args) -> int:
    frames, detections = _load_corpus(args)
    k_values = _parse_k_range(args.k, frames[0].bit_width)
    base = argparse.Namespace(**vars(args))
    base.k = k_values[0]
    base.tau = None  # per-point threshold is re-derived as k // 2
    cfg = _pipeline_config(frames[0].bit_width, base)
    summaries = run_sweep(frames, detections, cfg, k_values, args.variant, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    all_rows = [row for s in summaries for row in s.rows]
    write_report_csv(out / "report.csv", all_rows)
    rows = sweep_rows(summaries)
    write_sweep_csv(out / "sweep.csv", rows)
    write_summary_json(out / "summary.json", summaries)

    def render():
        from . import plots

        plots.plot_sweep(rows, out / "sweep.png")

    _maybe_figures(args, render)
    if args.csv:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow(_fmt(row[c]) for c in SWEEP_COLUMNS)
    else:
        for row in rows:
            print("  ".join(f"{c}={_fmt(row[c])}" for c in SWEEP_COLUMNS))
    return 0


def cmd_compare(args) -> int:
    frames, detections = _load_corpus(args)
    cfg = _pipeline_config(frames[0].bit_width, args)
    summaries = compare_variants(frames, detections, cfg, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    all_rows = [row for s in summaries.values() for row in s.rows]
    write_report_csv(out / "report.csv", all_rows)
    with open(out / "compare.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGGREGATE_COLUMNS)
        for s in summaries.values():
            writer.writerow(_fmt(v) for v in _aggregate_cells(s))
    write_summary_json(out / "summary.json", list(summaries.values()))

    def render():
        from . import plots

        plots.plot_compare(summaries, out / "compare.png")

    _maybe_figures(args, render)
    _print_aggregates(list(summaries.values()), args.csv)
    if not args.csv:
        moti, glob = summaries["motimem"].mean_nbd, summaries["global"].mean_nbd
        if moti is not None and glob is not None:
            inside = "yes" if glob < moti < 1.0 else "no"
            print(f"motimem NBD inside the (global, raw) interval: {inside}")
    return 0


def cmd_gen_corpus(args) -> int:
    try:
        cfg = corpus_mod.CorpusConfig(
            width=args.width,
            height=args.height,
            channels=args.channels,
            num_frames=args.frames,
            num_objects=args.objects,
            min_size=args.min_size,
            max_size=args.max_size,
            max_speed=args.max_speed,
            noise_amplitude=args.noise,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    frames, detections = corpus_mod.generate_corpus(cfg)
    corpus_mod.save_corpus(args.out, frames, detections, cfg)
    boxes = sum(len(d.boxes) for d in detections)
    print(f"out={args.out} frames={len(frames)} boxes={boxes} seed={cfg.seed}")
    return 0


def _parse_k_range(text: str, bit_width: int) -> list[int]:
    try:
        if ":" in text:
            lo_s, hi_s = text.split(":", 1)
            lo, hi = int(lo_s), int(hi_s)
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"bad k range {text!r}; expected K or LO:HI") from None
    if not 1 <= lo <= hi <= bit_width - 1:
        raise UsageError(
            f"k range {text!r} outside 1..{bit_width - 1} for {bit_width}-bit frames"
        )
    return list(range(lo, hi + 1))


def _add_coding_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=4, help="retained MSBs per word")
    p.add_argument("--tau", type=int, default=None,
                   help="inversion threshold (default: k // 2)")
    p.add_argument("--block", type=int, default=16, help="mask block size in pixels")


def _add_loop_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True, help="corpus directory (frames + gt.jsonl)")
    p.add_argument("--out", required=True, help="output directory for reports")
    p.add_argument("--seed", type=int, default=0, help="RNG seed for the detector stub")
    p.add_argument("--sigma", type=float, default=1.0,
                   help="detector stub coordinate jitter scale, pixels")
    p.add_argument("--dropout", type=float, default=0.05,
                   help="detector stub per-box dropout probability")
    p.add_argument("--iou", type=float, default=0.3, help="IoU threshold for track matching")
    p.add_argument("--min-conf", type=float, default=0.0,
                   help="ignore prior boxes below this confidence")
    p.add_argument("--inflate-abs", type=float, default=8.0,
                   help="absolute mask inflation floor, pixels per side")
    p.add_argument("--inflate-rel", type=float, default=0.1,
                   help="relative mask inflation, fraction of box side")
    p.add_argument("--word-width", type=int, default=8,
                   help="word width for transition activity")
    p.add_argument("--jobs", type=int, default=1,
                   help="intra-frame encode worker fan-out")
    p.add_argument("--no-figures", action="store_true", default=False,
                   help="skip rendering PNG figures next to the CSVs")
    p.add_argument("--csv", action="store_true", default=False,
                   help="print the summary as CSV instead of key=value lines")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="motimem",
        description="RoI-guided hybrid pixel coding and memory-activity reporting.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_text):
        p = sub.add_parser(
            name, help=help_text, description=help_text,
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        )
        p.set_defaults(func=func)
        return p

    p = add("encode", cmd_encode, "Encode one netpbm frame into a container file.")
    p.add_argument("frame", help="input .pgm/.ppm frame")
    p.add_argument("--detections", default=None,
                   help="detection records; the last frame group becomes the prior "
                        "(omit for a full mask)")
    p.add_argument("--out", required=True, help="output container path")
    _add_coding_flags(p)
    p.add_argument("--inflate-abs", type=float, default=8.0,
                   help="absolute mask inflation floor, pixels per side")
    p.add_argument("--inflate-rel", type=float, default=0.1,
                   help="relative mask inflation, fraction of box side")
    p.add_argument("--min-conf", type=float, default=0.0,
                   help="ignore prior boxes below this confidence")

    p = add("decode", cmd_decode, "Decode a container file back to a netpbm frame.")
    p.add_argument("container", help="input container path")
    p.add_argument("--out", required=True, help="output .pgm/.ppm path")

    p = add("metrics", cmd_metrics, "Report stream activity and fidelity for two frames.")
    p.add_argument("raw", help="reference .pgm/.ppm frame")
    p.add_argument("other", help="encoded or decoded .pgm/.ppm frame")
    p.add_argument("--word-width", type=int, default=8,
                   help="word width for transition activity")
    p.add_argument("--csv", action="store_true", default=False,
                   help="print a CSV header and row instead of key=value lines")

    p = add("run", cmd_run, "Closed-loop run of one variant over a corpus.")
    p.add_argument("--variant", choices=VARIANTS, default="motimem",
                   help="encoding variant")
    _add_coding_flags(p)
    _add_loop_flags(p)

    p = add("sweep", cmd_sweep, "Sweep the retained-bit parameter over a corpus.")
    p.add_argument("--k", default="1:7",
                   help="k value or LO:HI range; tau is k // 2 per point")
    p.add_argument("--block", type=int, default=16, help="mask block size in pixels")
    p.add_argument("--variant", choices=VARIANTS, default="motimem",
                   help="encoding variant")
    _add_loop_flags(p)

    p = add("compare", cmd_compare, "Run all four variants over identical inputs.")
    _add_coding_flags(p)
    _add_loop_flags(p)

    p = add("gen-corpus", cmd_gen_corpus, "Generate a synthetic corpus with ground truth.")
    p.add_argument("--out", required=True, help="corpus output directory")
    p.add_argument("--frames", type=int, default=60, help="number of frames")
    p.add_argument("--width", type=int, default=192, help="frame width, pixels")
    p.add_argument("--height", type=int, default=144, help="frame height, pixels")
    p.add_argument("--channels", type=int, choices=(1, 3), default=1,
                   help="channels per pixel")
    p.add_argument("--objects", type=int, default=3, help="number of moving objects")
    p.add_argument("--min-size", type=int, default=20, help="minimum object side, pixels")
    p.add_argument("--max-size", type=int, default=40, help="maximum object side, pixels")
    p.add_argument("--max-speed", type=float, default=4.0,
                   help="maximum object speed, pixels/frame")
    p.add_argument("--noise", type=int, default=24, help="background noise amplitude")
    p.add_argument("--seed", type=int, default=0, help="corpus RNG seed")
    return parser


def _configure_logging() -> None:
    level = os.environ.get("MOTIMEM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        print("run 'motimem COMMAND --help' for flag details", file=sys.stderr)
        return 1
    except (MotiMemError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 -- contract maps unknown failures to 3
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
