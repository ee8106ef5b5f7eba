"""RoI-guided hybrid pixel coding with motion-propagated masks and
memory-interface activity metrics.

The library routes each pixel of a frame through a high-fidelity or a
background bit-shaping path according to a block-level mask predicted
from the previous frame's detections, and reports bit-1 density,
word-transition activity, and PSNR as energy/fidelity proxies. See the
``cli`` module (``motimem`` entry point) for the batch surface.
"""

from .bitcodec import (
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
from .corpus import CorpusConfig, generate_corpus, load_corpus, save_corpus
from .metrics import (
    ActivityReport,
    bit1_density,
    frame_bits,
    measure_frame,
    nbd,
    psnr,
    transition_activity,
)
from .pipeline import (
    PipelineConfig,
    ReportRow,
    RunSummary,
    compare_variants,
    oracle_detector,
    pad_detections,
    run_closed_loop,
    run_sweep,
)
from .roi import (
    BoxTracker,
    DetectionBox,
    FrameDetections,
    InflationPolicy,
    MotionState,
    RoiMask,
    estimate_velocity,
    inflate_box,
    iou,
    match_tracks,
    predict_mask,
    propagate_box,
    rasterize_mask,
)
from .stream import (
    read_detections,
    read_encoded,
    read_frame,
    write_detections,
    write_encoded,
    write_frame,
)

__version__ = "0.1.0"
