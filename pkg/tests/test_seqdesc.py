"""Sequence type, CTED binary format and the synthetic event generator."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cte.errors import TruncatedFileError, ValidationError
from cte.seqdesc import (
    DescriptorSequence,
    GroundTruthTimeline,
    read_sequence,
    synth_event,
    write_sequence,
)

from conftest import unit_frames


class TestDescriptorSequence:
    def test_basic_construction(self):
        seq = DescriptorSequence("v", 15.0, np.eye(3, dtype=np.float32))
        assert seq.n == 3 and seq.d == 3
        assert seq.duration_sec == pytest.approx(0.2)

    def test_frames_are_read_only(self):
        seq = DescriptorSequence("v", 15.0, np.eye(3))
        with pytest.raises(ValueError):
            seq.frames[0, 0] = 2.0

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            DescriptorSequence("v", 15.0, np.empty((0, 3), dtype=np.float32))

    def test_rejects_non_finite(self):
        frames = np.ones((2, 2), dtype=np.float32)
        frames[1, 1] = np.nan
        with pytest.raises(ValidationError):
            DescriptorSequence("v", 15.0, frames)

    def test_rejects_bad_fps(self):
        with pytest.raises(ValidationError):
            DescriptorSequence("v", 0.0, np.eye(2))

    def test_rejects_oversized_norm(self):
        with pytest.raises(ValidationError):
            DescriptorSequence("v", 15.0, np.full((1, 4), 1.5, dtype=np.float32))

    def test_norm_two_allowed(self):
        # Concatenating two unit descriptors gives norm 2; that is legal.
        frames = np.zeros((1, 8), dtype=np.float32)
        frames[0, 0] = frames[0, 4] = np.sqrt(2.0)
        DescriptorSequence("v", 15.0, frames)


class TestCtedFormat:
    def test_header_example(self, tmp_path):
        # d=2, n=3, fps=15 and six payload floats decode to a 3x2 sequence.
        frames = np.arange(6, dtype=np.float32).reshape(3, 2) / 10.0
        path = tmp_path / "a.cted"
        write_sequence(DescriptorSequence("vid", 15.0, frames), path)
        seq = read_sequence(path)
        assert (seq.n, seq.d, seq.fps) == (3, 2, 15.0)
        np.testing.assert_array_equal(seq.frames, frames)

    def test_single_value_file_size(self, tmp_path):
        # Empty video id: 21-byte header + one 4-byte float.
        path = tmp_path / "b.cted"
        write_sequence(DescriptorSequence("", 15.0, np.array([[0.5]], dtype=np.float32)), path)
        assert path.stat().st_size == 21 + 4

    def test_roundtrip_byte_identical(self, tmp_path):
        rng = np.random.default_rng(1)
        seq = DescriptorSequence("roundtrip", 29.97, unit_frames(rng, 17, 5).astype(np.float32))
        first = tmp_path / "c.cted"
        second = tmp_path / "d.cted"
        write_sequence(seq, first)
        write_sequence(read_sequence(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_roundtrip_random_matrix(self, tmp_path):
        # Element-wise equality after a write/read cycle on a 64x32 matrix.
        rng = np.random.default_rng(2)
        frames = unit_frames(rng, 64, 32).astype(np.float32)
        path = tmp_path / "e.cted"
        write_sequence(DescriptorSequence("m", 15.0, frames), path)
        back = read_sequence(path)
        assert (back.frames == frames).all()

    def test_truncated_payload(self, tmp_path):
        # Header declares 4 frames but only 3 are present.
        frames = np.ones((4, 1), dtype=np.float32)
        path = tmp_path / "f.cted"
        write_sequence(DescriptorSequence("t", 15.0, frames), path)
        data = path.read_bytes()
        path.write_bytes(data[:-4])
        with pytest.raises(TruncatedFileError):
            read_sequence(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "g.cted"
        write_sequence(DescriptorSequence("x", 15.0, np.eye(2)), path)
        raw = bytearray(path.read_bytes())
        raw[0:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        from cte.errors import FormatError

        with pytest.raises(FormatError):
            read_sequence(path)

    def test_unwritable_path(self, tmp_path):
        seq = DescriptorSequence("x", 15.0, np.eye(2))
        with pytest.raises(OSError):
            write_sequence(seq, tmp_path)  # a directory, not a file

    def test_non_finite_payload_rejected(self, tmp_path):
        path = tmp_path / "h.cted"
        write_sequence(DescriptorSequence("x", 15.0, np.eye(1)), path)
        raw = bytearray(path.read_bytes())
        raw[-4:] = struct.pack("<f", np.inf)
        path.write_bytes(bytes(raw))
        with pytest.raises(ValidationError):
            read_sequence(path)

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(1, 20), d=st.integers(1, 8), seed=st.integers(0, 10_000))
    def test_roundtrip_property(self, tmp_path_factory, n, d, seed):
        rng = np.random.default_rng(seed)
        seq = DescriptorSequence("p", 15.0, unit_frames(rng, n, d))
        path = tmp_path_factory.mktemp("rt") / "seq.cted"
        write_sequence(seq, path)
        back = read_sequence(path)
        assert back.video_id == seq.video_id
        np.testing.assert_array_equal(back.frames, seq.frames)


class TestSynthEvent:
    def test_deterministic(self):
        a_clips, a_gt = synth_event(200, 8, 3, (40, 60), seed=7)
        b_clips, b_gt = synth_event(200, 8, 3, (40, 60), seed=7)
        for x, y in zip(a_clips, b_clips):
            np.testing.assert_array_equal(x.frames, y.frames)
        assert a_gt.entries == b_gt.entries

    def test_noise_free_clips_copy_master(self):
        # With the clip length pinned to the master length, both clips are
        # the same excerpt, so they must be bit-identical.
        clips, _ = synth_event(100, 6, 2, (100, 100), rho=0.0, sigma=0.0, seed=1)
        np.testing.assert_array_equal(clips[0].frames, clips[1].frames)

    def test_noise_free_overlap_frames_equal(self):
        clips, gt = synth_event(300, 8, 6, (80, 120), sigma=0.0, seed=3)
        starts = {e.video_id: round(e.global_start_sec * gt.fps) for e in gt.entries}
        found = 0
        for i in range(len(clips)):
            for j in range(i + 1, len(clips)):
                a, b = clips[i], clips[j]
                sa, sb = starts[a.video_id], starts[b.video_id]
                lo, hi = max(sa, sb), min(sa + a.n, sb + b.n)
                if hi - lo < 30:
                    continue
                found += 1
                np.testing.assert_array_equal(
                    a.frames[lo - sa : hi - sa], b.frames[lo - sb : hi - sb]
                )
        assert found > 0

    def test_frames_unit_norm(self):
        clips, _ = synth_event(150, 16, 3, (50, 80), sigma=0.1, seed=5)
        for clip in clips:
            norms = np.linalg.norm(clip.frames.astype(np.float64), axis=1)
            np.testing.assert_allclose(norms, 1.0, atol=1e-6)

    def test_ground_truth_matches_clip_lengths(self):
        clips, gt = synth_event(200, 4, 4, (30, 70), seed=9)
        for clip, entry in zip(clips, gt.entries):
            assert entry.video_id == clip.video_id
            assert entry.end_frame - entry.start_frame == clip.n

    def test_invalid_ranges(self):
        with pytest.raises(ValidationError):
            synth_event(50, 4, 2, (60, 80), seed=0)  # clips longer than master
        with pytest.raises(ValidationError):
            synth_event(50, 4, 2, (10, 5), seed=0)  # inverted range
        with pytest.raises(ValidationError):
            synth_event(50, 4, 2, (10, 20), rho=1.0, seed=0)
        with pytest.raises(ValidationError):
            synth_event(50, 4, 2, (10, 20), sigma=-0.1, seed=0)


class TestGroundTruthJson:
    def test_roundtrip(self):
        _, gt = synth_event(120, 4, 3, (30, 50), seed=2)
        back = GroundTruthTimeline.from_json(gt.to_json(), fps=gt.fps)
        assert back.entries == gt.entries
