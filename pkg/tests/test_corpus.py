"""Synthetic corpus generator checks."""

import numpy as np

from motimem.corpus import CorpusConfig, generate_corpus, load_corpus, save_corpus


SMALL = CorpusConfig(width=96, height=64, num_frames=8, num_objects=2,
                     min_size=12, max_size=20, seed=3)


def test_corpus_shapes_and_alignment():
    frames, detections = generate_corpus(SMALL)
    assert len(frames) == len(detections) == 8
    for t, (frame, det) in enumerate(zip(frames, detections)):
        assert det.frame_index == t
        assert (frame.width, frame.height) == (96, 64)
        assert len(det.boxes) == 2
        for b in det.boxes:
            assert 0 <= b.x1 < b.x2 <= 96
            assert 0 <= b.y1 < b.y2 <= 64
            assert b.track_id is not None


def test_corpus_boxes_move():
    frames, detections = generate_corpus(SMALL)
    first = detections[0].boxes[0]
    last = detections[-1].boxes[0]
    assert (first.x1, first.y1) != (last.x1, last.y1)


def test_corpus_deterministic():
    a_frames, a_dets = generate_corpus(SMALL)
    b_frames, b_dets = generate_corpus(SMALL)
    for fa, fb in zip(a_frames, b_frames):
        assert np.array_equal(fa.pixels, fb.pixels)
    assert a_dets == b_dets
    c_frames, _ = generate_corpus(CorpusConfig(width=96, height=64, num_frames=8,
                                               num_objects=2, min_size=12, max_size=20,
                                               seed=4))
    assert not np.array_equal(a_frames[0].pixels, c_frames[0].pixels)


def test_corpus_save_load_roundtrip(tmp_path):
    frames, detections = generate_corpus(SMALL)
    save_corpus(tmp_path / "c", frames, detections, SMALL)
    back_frames, back_dets = load_corpus(tmp_path / "c")
    assert len(back_frames) == len(frames)
    for fa, fb in zip(frames, back_frames):
        assert np.array_equal(fa.pixels, fb.pixels)
    assert back_dets == detections


def test_corpus_density_sits_near_half():
    # gradient + noise keeps the raw stream near 0.5 ones density, the
    # regime the background cap arguments assume
    frames, _ = generate_corpus(CorpusConfig())
    ones = sum(int(np.bitwise_count(f.pixels).sum()) for f in frames)
    total = sum(f.pixels.size * 8 for f in frames)
    assert 0.45 <= ones / total <= 0.55
