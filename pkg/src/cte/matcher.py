"""Scoring of sequence pairs over all circular time shifts.

The comparison of two descriptor sequences for every temporal offset at once
is an element-wise product of their spectra followed by one inverse
transform.  Dividing each frequency by the query's own power spectrum plus a
floor ``lam`` whitens self-similar content, so a self-match collapses to a
unit impulse at shift zero and long static shots stop dominating the score.
``score_direct`` is the brute-force time-domain reference used to validate
the frequency path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NoOverlapError, ValidationError, ZeroDenominatorError
from .seqdesc import DescriptorSequence
from .spectral import (
    MODE_FULL,
    SpectralDescriptor,
    encode,
    expand,
    is_pow2,
    next_pow2,
)


@dataclass(frozen=True)
class ScoreVector:
    """Match score per candidate shift.

    ``values[i]`` is the score at temporal offset ``i * stride`` frames;
    ``stride = N / len(values)`` is 1 when the full spectrum was used and
    grows as frequencies are pruned.
    """

    values: np.ndarray
    stride: int
    N: int

    def __post_init__(self):
        L = len(self.values)
        if not is_pow2(L):
            raise ValidationError(f"score vector length {L} is not a power of two")
        if self.stride * L != self.N:
            raise ValidationError(f"stride {self.stride} * length {L} != padded length {self.N}")
        self.values.setflags(write=False)

    @property
    def L(self) -> int:
        return len(self.values)


@dataclass
class RefinedMatch:
    """Frame-accurate match segment on the query timeline.

    ``delta`` is the offset actually used after resolving the wrap-around
    ambiguity of the circular comparison; [t_start, t_end] is the inclusive
    run of query frames whose per-frame similarity stays above half the
    peak, and ``score`` the sum of per-frame similarities over that run.
    """

    t_start: int
    t_end: int
    score: float
    delta: int


@dataclass
class MatchCandidate:
    """One scored (query, database) pair with its best temporal offset."""

    query_id: str
    db_id: str
    delta: int
    score: float
    refined: Optional[RefinedMatch] = None

    def to_json_dict(self) -> dict:
        row = {
            "query_id": self.query_id,
            "db_id": self.db_id,
            "delta_frames": int(self.delta),
            "score": float(self.score),
        }
        if self.refined is not None:
            row.update(
                t_start=int(self.refined.t_start),
                t_end=int(self.refined.t_end),
                refined_score=float(self.refined.score),
            )
        return row

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, row: dict) -> "MatchCandidate":
        cand = cls(
            query_id=row["query_id"],
            db_id=row["db_id"],
            delta=int(row["delta_frames"]),
            score=float(row["score"]),
        )
        if "refined_score" in row:
            cand.refined = RefinedMatch(
                t_start=int(row["t_start"]),
                t_end=int(row["t_end"]),
                score=float(row["refined_score"]),
                delta=int(row["delta_frames"]),
            )
        return cand


def score_direct(q: DescriptorSequence, b: DescriptorSequence, circular_N: int) -> ScoreVector:
    """Brute-force circular correlation; the reference the fast path must match.

    values[delta] = sum_t <q_t, b_{(t - delta) mod N}> with frames outside
    either sequence treated as zero.  Cost is O(N^2 * d): every pairwise
    frame inner product is materialized, then summed along wrapped
    diagonals.  Only suitable for small N.
    """
    N = int(circular_N)
    if not is_pow2(N) or N < max(q.n, b.n):
        raise ValidationError(f"circular length {N} must be a power of two >= max(m, n)")
    qp = np.zeros((N, q.d))
    qp[: q.n] = q.frames
    bp = np.zeros((N, b.d))
    bp[: b.n] = b.frames
    gram = qp @ bp.T  # gram[t, s] = <q_t, b_s>
    t = np.arange(N)
    values = np.empty(N)
    for delta in range(N):
        values[delta] = gram[t, (t - delta) % N].sum()
    return ScoreVector(values=values, stride=1, N=N)


def assemble_scores(numerator: np.ndarray, N: int, full: bool) -> ScoreVector:
    """Inverse-transform a per-frequency numerator into offset scores.

    The numerator is the half-spectrum sum(conj(Q) * B) per stored
    frequency; a plain inverse transform of it yields sum_t <q_t, b_{t+i}>
    at output index i, so the result is index-reversed to match the
    convention that ``values[delta]`` pairs q_t with b_{t-delta} (delta is
    where b starts on q's timeline).  Full mode inverts at length N; pruned
    mode extends the kept coefficients with a zero Nyquist and inverts at
    length 2*n_kept, quantizing offsets to a stride of N / (2*n_kept).
    """
    if full:
        raw = np.fft.irfft(numerator, n=N)
    else:
        raw = np.fft.irfft(np.concatenate([numerator, [0.0]]), n=2 * len(numerator))
    values = np.empty_like(raw)
    values[0] = raw[0]
    values[1:] = raw[:0:-1]
    return ScoreVector(values=values, stride=N // len(values), N=N)


def score(
    qspec: SpectralDescriptor,
    bspec: SpectralDescriptor,
    lam: float = 0.1,
    regularize: bool = True,
) -> ScoreVector:
    """Score two spectral descriptors over all shifts with one inverse FFT.

    Per stored frequency the numerator is the conjugate query column dotted
    with the database column.  With ``regularize`` it is divided by the
    query's summed power spectrum plus ``lam``, which whitens self-similar
    content so that a self-match collapses to a unit impulse at shift zero.
    """
    if qspec.N != bspec.N:
        raise ValidationError(f"padded lengths differ: {qspec.N} vs {bspec.N}")
    if qspec.mode != bspec.mode or qspec.n_kept != bspec.n_kept:
        raise ValidationError(
            f"incompatible descriptors: {qspec.mode}/{qspec.n_kept} vs {bspec.mode}/{bspec.n_kept}"
        )
    if qspec.d != bspec.d:
        raise ValidationError(f"descriptor dimensions differ: {qspec.d} vs {bspec.d}")
    if lam < 0:
        raise ValidationError(f"lambda must be >= 0, got {lam}")

    numerator = np.einsum("ji,ji->i", np.conj(qspec.coeffs), bspec.coeffs)
    if regularize:
        denominator = np.einsum("ji,ji->i", np.conj(qspec.coeffs), qspec.coeffs).real + lam
        if lam == 0.0:
            zero = np.flatnonzero(denominator == 0.0)
            if zero.size:
                raise ZeroDenominatorError(
                    f"zero denominator at frequency {int(zero[0])} with lambda = 0"
                )
        numerator = numerator / denominator

    return assemble_scores(numerator, qspec.N, full=qspec.mode == MODE_FULL)


def find_peak(sv: ScoreVector) -> tuple[int, float]:
    """Best offset of a score vector: (delta in frames, score at the peak).

    Ties go to the smallest index.  The raw bin index times the stride is
    mapped into (-N/2, N/2] so offsets past the midpoint read as negative.
    """
    if sv.L == 0:
        raise ValidationError("empty score vector")
    idx = int(np.argmax(sv.values))
    delta = idx * sv.stride
    if delta > sv.N // 2:
        delta -= sv.N
    return delta, float(sv.values[idx])


def refine_boundaries(
    q: DescriptorSequence, b: DescriptorSequence, delta: int, search_window: int = 0
) -> RefinedMatch:
    """Frame-accurate match boundaries around a coarse offset.

    The circular comparison reports ``delta`` only modulo the padded length
    of the database item (repetition makes the peak periodic), so every
    candidate offset ``delta + k * next_pow2(n)`` with a non-empty frame
    overlap is evaluated in the time domain and the one with the largest
    summed per-frame similarity wins.  ``search_window`` additionally scans
    that many frames around each candidate, which restores frame accuracy
    when pruning quantized the peak position.  The matching segment is the
    contiguous run around the per-frame peak where similarity stays at or
    above half the peak.
    """
    m, n = q.n, b.n
    if q.d != b.d:
        raise ValidationError(f"descriptor dimensions differ: {q.d} vs {b.d}")
    if search_window < 0:
        raise ValidationError(f"search window must be >= 0, got {search_window}")
    period = next_pow2(n)
    qf = q.frames.astype(np.float64)
    bf = b.frames.astype(np.float64)

    # Offsets with >= 1 overlapping frame satisfy -n < c < m.
    k_lo = -((n - 1 + search_window + delta) // period)
    k_hi = (m - 1 + search_window - delta) // period
    best_c = None
    best_profile = None
    best_t0 = 0
    best_total = -np.inf
    for k in range(k_lo, k_hi + 1):
        for off in range(-search_window, search_window + 1):
            c = delta + k * period + off
            t0, t1 = max(0, c), min(m, c + n)
            if t0 >= t1:
                continue
            profile = np.einsum("td,td->t", qf[t0:t1], bf[t0 - c : t1 - c])
            total = float(profile.sum())
            if total > best_total:
                best_total = total
                best_c = c
                best_t0 = t0
                best_profile = profile
    if best_profile is None:
        raise NoOverlapError(f"no overlap between '{q.video_id}' and '{b.video_id}' near delta {delta}")

    peak_idx = int(np.argmax(best_profile))
    threshold = best_profile[peak_idx] / 2.0
    lo = peak_idx
    while lo > 0 and best_profile[lo - 1] >= threshold:
        lo -= 1
    hi = peak_idx
    while hi + 1 < len(best_profile) and best_profile[hi + 1] >= threshold:
        hi += 1
    segment_score = float(best_profile[lo : hi + 1].sum())
    return RefinedMatch(
        t_start=best_t0 + lo,
        t_end=best_t0 + hi,
        score=segment_score,
        delta=int(best_c),
    )


def match_pair(
    q: DescriptorSequence,
    b: DescriptorSequence,
    beta: float | None = None,
    lam: float = 0.1,
    regularize: bool = True,
    normalize_freqs: bool = False,
    refine: bool = True,
) -> MatchCandidate:
    """Convenience wrapper: encode, score, peak-pick and optionally refine one pair.

    Handles the size mismatch the same way the index does: a query shorter
    than the database item is zero-padded up, a longer one is matched
    against the self-concatenated expansion of the database spectrum.
    """
    Nq, Nb = next_pow2(q.n), next_pow2(b.n)
    if Nb >= Nq:
        bspec = encode(b, beta=beta, normalize_freqs=normalize_freqs)
        qspec = encode(q, beta=beta, normalize_freqs=normalize_freqs, size=Nb)
    else:
        bspec = expand(encode(b, beta=beta, normalize_freqs=normalize_freqs), Nq // Nb)
        qspec = encode(q, beta=beta, normalize_freqs=normalize_freqs)
    sv = score(qspec, bspec, lam=lam, regularize=regularize)
    delta, peak = find_peak(sv)
    cand = MatchCandidate(query_id=q.video_id, db_id=b.video_id, delta=delta, score=peak)
    if refine:
        refined = refine_boundaries(q, b, delta, search_window=sv.stride)
        cand.refined = refined
        cand.delta = refined.delta
    return cand
