"""Shared builders and independent oracles used across the test suite."""

from __future__ import annotations

import numpy as np

from cte.seqdesc import DescriptorSequence


def unit_frames(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """Random frames of exactly unit norm."""
    frames = rng.standard_normal((n, d))
    return frames / np.linalg.norm(frames, axis=1, keepdims=True)


def make_seq(rng: np.random.Generator, n: int, d: int, video_id: str = "seq", fps: float = 15.0) -> DescriptorSequence:
    return DescriptorSequence(video_id=video_id, fps=fps, frames=unit_frames(rng, n, d))


def naive_dft(x, inverse: bool = False) -> np.ndarray:
    """Direct O(L^2) transform straight from the definition."""
    x = np.asarray(x, dtype=np.complex128)
    L = len(x)
    k = np.arange(L)
    sign = 2j if inverse else -2j
    matrix = np.exp(sign * np.pi * np.outer(k, k) / L)
    out = matrix @ x
    return out / L if inverse else out


def naive_circular_scores(q: np.ndarray, b: np.ndarray, N: int) -> np.ndarray:
    """Offset scores from the definition: values[delta] = sum_t <q_t, b_{t-delta}>.

    Frames outside either matrix are zero; indices wrap modulo N.  Written
    with an explicit python loop so it shares nothing with the library path.
    """
    qp = np.zeros((N, q.shape[1]))
    qp[: len(q)] = q
    bp = np.zeros((N, b.shape[1]))
    bp[: len(b)] = b
    values = np.zeros(N)
    for delta in range(N):
        acc = 0.0
        for t in range(N):
            acc += float(np.dot(qp[t], bp[(t - delta) % N]))
        values[delta] = acc
    return values


def repeat_padded(seq: DescriptorSequence, factor: int, N: int | None = None) -> DescriptorSequence:
    """The sequence zero-padded to a power of two and tiled ``factor`` times."""
    from cte.spectral import next_pow2

    Npad = next_pow2(seq.n) if N is None else N
    padded = np.zeros((Npad, seq.d), dtype=np.float32)
    padded[: seq.n] = seq.frames
    return DescriptorSequence(
        video_id=seq.video_id, fps=seq.fps, frames=np.tile(padded, (factor, 1))
    )
