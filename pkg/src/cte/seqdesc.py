"""Frame-descriptor sequences: validation, binary I/O and a synthetic generator.

A video enters the engine as a matrix of per-frame descriptors together with
its frame rate.  This module owns that type, the ``.cted`` on-disk format,
the ground-truth timeline used for evaluation, and a seeded generator that
plants clips of a synthetic master sequence on a known timeline.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, TruncatedFileError, ValidationError

CTED_MAGIC = b"CTED"
CTED_VERSION = 1

# Frames are expected to be unit descriptors, or the concatenation of two
# unit descriptors (norm 2).  Anything above that is rejected as malformed.
MAX_FRAME_NORM = 2.0 + 1e-6


@dataclass(frozen=True)
class DescriptorSequence:
    """An (n_frames x dim) float32 matrix of per-frame descriptors.

    Immutable after construction; the frame buffer is marked read-only so
    instances can be shared freely across threads.
    """

    video_id: str
    fps: float
    frames: np.ndarray

    def __post_init__(self):
        frames = np.ascontiguousarray(self.frames, dtype=np.float32)
        if frames.ndim != 2:
            raise ValidationError(f"frames must be 2-D, got shape {frames.shape}")
        if frames.shape[0] < 1 or frames.shape[1] < 1:
            raise ValidationError(f"need at least one frame and one dimension, got {frames.shape}")
        if not np.isfinite(frames).all():
            raise ValidationError(f"non-finite descriptor values in '{self.video_id}'")
        if not (self.fps > 0):
            raise ValidationError(f"fps must be positive, got {self.fps}")
        norms = np.linalg.norm(frames.astype(np.float64), axis=1)
        worst = float(norms.max())
        if worst > MAX_FRAME_NORM:
            raise ValidationError(
                f"frame norm {worst:.6f} exceeds {MAX_FRAME_NORM} in '{self.video_id}'"
            )
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def n(self) -> int:
        return self.frames.shape[0]

    @property
    def d(self) -> int:
        return self.frames.shape[1]

    @property
    def duration_sec(self) -> float:
        return self.n / self.fps


@dataclass(frozen=True)
class GroundTruthEntry:
    """One annotated segment: frames [start_frame, end_frame) of a video and
    the master-timeline second at which the segment starts."""

    video_id: str
    start_frame: int
    end_frame: int
    global_start_sec: float


@dataclass
class GroundTruthTimeline:
    """Planted or annotated truth for a set of videos on a shared timeline."""

    entries: list[GroundTruthEntry] = field(default_factory=list)
    tolerance: float = 0.5
    fps: float = 15.0

    def span(self, entry: GroundTruthEntry) -> tuple[float, float]:
        """Master-timeline interval covered by a ground-truth segment."""
        length = (entry.end_frame - entry.start_frame) / self.fps
        return entry.global_start_sec, entry.global_start_sec + length

    def to_json(self) -> str:
        rows = [
            {
                "video_id": e.video_id,
                "start_frame": e.start_frame,
                "end_frame": e.end_frame,
                "global_start_sec": e.global_start_sec,
            }
            for e in self.entries
        ]
        return json.dumps(rows, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str, tolerance: float = 0.5, fps: float = 15.0) -> "GroundTruthTimeline":
        rows = json.loads(text)
        entries = [
            GroundTruthEntry(
                video_id=r["video_id"],
                start_frame=int(r["start_frame"]),
                end_frame=int(r["end_frame"]),
                global_start_sec=float(r["global_start_sec"]),
            )
            for r in rows
        ]
        return cls(entries=entries, tolerance=tolerance, fps=fps)


def write_sequence(seq: DescriptorSequence, path) -> None:
    """Write a sequence in the CTED binary format.

    Layout (little endian): magic ``CTED``, version u8, d u32, n u32,
    fps f32, video-id length u32 + UTF-8 bytes, then n*d float32 values in
    frame-major order (all of frame 0, then frame 1, ...).
    """
    vid = seq.video_id.encode("utf-8")
    header = struct.pack("<4sBIIfI", CTED_MAGIC, CTED_VERSION, seq.d, seq.n, seq.fps, len(vid))
    payload = np.ascontiguousarray(seq.frames, dtype="<f4").tobytes()
    Path(path).write_bytes(header + vid + payload)


def read_sequence(path) -> DescriptorSequence:
    """Read a CTED file written by :func:`write_sequence`.

    Raises FormatError on a bad magic or version, TruncatedFileError when
    the payload is shorter than the header declares, and ValidationError on
    non-finite values.
    """
    raw = Path(path).read_bytes()
    head_fmt = "<4sBIIfI"
    head_len = struct.calcsize(head_fmt)
    if len(raw) < head_len:
        raise TruncatedFileError(f"{path}: file shorter than header ({len(raw)} bytes)")
    magic, version, d, n, fps, id_len = struct.unpack_from(head_fmt, raw, 0)
    if magic != CTED_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != CTED_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    offset = head_len
    if len(raw) < offset + id_len:
        raise TruncatedFileError(f"{path}: file ends inside the video id")
    video_id = raw[offset : offset + id_len].decode("utf-8")
    offset += id_len
    expected = n * d * 4
    if len(raw) - offset < expected:
        raise TruncatedFileError(
            f"{path}: payload holds {(len(raw) - offset) // 4} floats, header declares {n * d}"
        )
    frames = np.frombuffer(raw, dtype="<f4", count=n * d, offset=offset).reshape(n, d)
    return DescriptorSequence(video_id=video_id, fps=float(np.float32(fps)), frames=frames)


def synth_event(
    master_len: int,
    d: int,
    n_clips: int,
    clip_len_range: tuple[int, int],
    rho: float = 0.8,
    sigma: float = 0.1,
    seed: int = 0,
    fps: float = 15.0,
) -> tuple[list[DescriptorSequence], GroundTruthTimeline]:
    """Generate clips of one synthetic event with a known timeline.

    A master sequence of ``master_len`` unit-norm frames is drawn from an
    isotropic Gaussian and smoothed frame-to-frame with first-order
    coefficient ``rho`` (x_t = rho*x_{t-1} + (1-rho)*g_t, then re-normalized),
    which makes consecutive frames similar the way real footage is.  Each
    clip is a contiguous excerpt with additive Gaussian noise ``sigma``
    (re-normalized per frame).  The returned timeline records every clip's
    true start on the master clock.  Deterministic for a fixed seed.
    """
    lo, hi = int(clip_len_range[0]), int(clip_len_range[1])
    if master_len < 1 or d < 1 or n_clips < 1:
        raise ValidationError("master_len, d and n_clips must all be >= 1")
    if not (1 <= lo <= hi):
        raise ValidationError(f"invalid clip length range [{lo}, {hi}]")
    if hi > master_len:
        raise ValidationError(f"max clip length {hi} exceeds master length {master_len}")
    if not (0.0 <= rho < 1.0):
        raise ValidationError(f"smoothing coefficient must be in [0, 1), got {rho}")
    if sigma < 0:
        raise ValidationError(f"noise level must be >= 0, got {sigma}")

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((master_len, d))
    master = np.empty((master_len, d))
    state = noise[0]
    master[0] = state / np.linalg.norm(state)
    for t in range(1, master_len):
        state = rho * state + (1.0 - rho) * noise[t]
        master[t] = state / np.linalg.norm(state)
    master = master.astype(np.float32)

    clips: list[DescriptorSequence] = []
    entries: list[GroundTruthEntry] = []
    for i in range(n_clips):
        length = int(rng.integers(lo, hi + 1))
        start = int(rng.integers(0, master_len - length + 1))
        frames = master[start : start + length]
        if sigma > 0:
            frames = frames.astype(np.float64) + sigma * rng.standard_normal((length, d))
            frames /= np.linalg.norm(frames, axis=1, keepdims=True)
        video_id = f"clip{i:03d}"
        clips.append(DescriptorSequence(video_id=video_id, fps=fps, frames=frames))
        entries.append(GroundTruthEntry(video_id, 0, length, start / fps))
    return clips, GroundTruthTimeline(entries=entries, fps=fps)
