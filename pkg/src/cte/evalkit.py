"""Quality metrics for retrieval and timeline alignment."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .align import GlobalAlignment
from .matcher import MatchCandidate
from .seqdesc import DescriptorSequence, GroundTruthTimeline


@dataclass(frozen=True)
class PasReport:
    """Pairwise alignment score: how many ground-truth overlapping pairs were
    recovered with the right relative offset (possibly fractionally)."""

    pas: float
    gt_pairs: int
    tolerance: float


def _video_spans(gt: GroundTruthTimeline) -> dict[str, tuple[float, float]]:
    spans = {}
    for e in gt.entries:
        if e.video_id not in spans:
            spans[e.video_id] = gt.span(e)
    return spans


def _overlapping_video_pairs(gt: GroundTruthTimeline) -> list[tuple[str, str]]:
    spans = _video_spans(gt)
    ids = sorted(spans)
    pairs = []
    for x in range(len(ids)):
        for y in range(x + 1, len(ids)):
            a, b = spans[ids[x]], spans[ids[y]]
            if min(a[1], b[1]) > max(a[0], b[0]):
                pairs.append((ids[x], ids[y]))
    return pairs


def pas_unedited(
    gt: GroundTruthTimeline, alignment: GlobalAlignment, tolerance: float | None = None
) -> PasReport:
    """Count overlapping ground-truth pairs whose recovered relative offset is
    within tolerance.

    Comparison is relative (offset differences), so the per-component gauge
    freedom of the solver does not matter; pairs split across components
    score zero.
    """
    tol = gt.tolerance if tolerance is None else tolerance
    spans = _video_spans(gt)
    starts = {}
    comp_of = alignment.component_of()
    video_comp = {}
    for a in alignment.anchors:
        if a.video_id in starts:
            continue
        t = alignment.start_times.get(a.anchor_id)
        if t is None:
            continue
        starts[a.video_id] = t - a.start / gt.fps
        video_comp[a.video_id] = comp_of.get(a.anchor_id)
    pairs = _overlapping_video_pairs(gt)
    hits = 0
    for va, vb in pairs:
        if va not in starts or vb not in starts:
            continue
        if video_comp.get(va) != video_comp.get(vb):
            continue
        true_rel = spans[vb][0] - spans[va][0]
        got_rel = starts[vb] - starts[va]
        if abs(got_rel - true_rel) < tol:
            hits += 1
    return PasReport(pas=float(hits), gt_pairs=len(pairs), tolerance=tol)


def pas_fractional(
    gt: GroundTruthTimeline,
    frame_offsets: dict[tuple[str, int], float],
    tolerance: float | None = None,
) -> PasReport:
    """Fraction of each ground-truth overlap recovered at the right offset.

    For every pair of overlapping ground-truth segments, frames of both
    videos that correspond to the same master instant must be placed within
    tolerance of each other on the recovered timeline.  Unmapped frames
    count as wrong, and partially correct overlaps contribute their correct
    fraction, so the score is generally non-integer.
    """
    tol = gt.tolerance if tolerance is None else tolerance
    fps = gt.fps
    total = 0.0
    pairs = 0
    entries = gt.entries
    for x in range(len(entries)):
        for y in range(x + 1, len(entries)):
            ea, eb = entries[x], entries[y]
            if ea.video_id == eb.video_id:
                continue
            sa, sb = gt.span(ea), gt.span(eb)
            lo, hi = max(sa[0], sb[0]), min(sa[1], sb[1])
            if hi <= lo:
                continue
            pairs += 1
            correct = 0
            count = 0
            frame_lo = int(np.ceil((lo - sa[0]) * fps - 1e-9))
            frame_hi = int(np.floor((hi - sa[0]) * fps - 1e-9))
            for rel in range(frame_lo, frame_hi + 1):
                fa = ea.start_frame + rel
                master_t = sa[0] + rel / fps
                fb = eb.start_frame + int(round((master_t - sb[0]) * fps))
                if fb < eb.start_frame or fb >= eb.end_frame:
                    continue
                count += 1
                ta = frame_offsets.get((ea.video_id, fa))
                tb = frame_offsets.get((eb.video_id, fb))
                if ta is None or tb is None:
                    continue
                if abs(ta - tb) < tol:
                    correct += 1
            if count:
                total += correct / count
    return PasReport(pas=float(total), gt_pairs=pairs, tolerance=tol)


def label_match(m: MatchCandidate, gt: GroundTruthTimeline, tolerance: float | None = None) -> bool:
    """True when the pair overlaps in the ground truth and the predicted
    relative offset is within tolerance."""
    tol = gt.tolerance if tolerance is None else tolerance
    spans = _video_spans(gt)
    if m.query_id not in spans or m.db_id not in spans:
        return False
    a, b = spans[m.query_id], spans[m.db_id]
    if min(a[1], b[1]) <= max(a[0], b[0]):
        return False
    return abs(m.delta / gt.fps - (b[0] - a[0])) < tol


def match_pr(
    matches: list[MatchCandidate], gt: GroundTruthTimeline, tolerance: float | None = None
) -> list[tuple[float, float]]:
    """Precision-recall curve of scored matches against the ground truth.

    Matches are swept in descending score order (stable for ties); recall is
    measured against the number of overlapping ground-truth pairs.
    """
    total = len(_overlapping_video_pairs(gt))
    ranked = sorted(range(len(matches)), key=lambda i: -matches[i].score)
    curve = []
    hits = 0
    for rank, idx in enumerate(ranked, start=1):
        if label_match(matches[idx], gt, tolerance):
            hits += 1
        recall = hits / total if total else 0.0
        curve.append((recall, hits / rank))
    return curve


def pr_area(curve: list[tuple[float, float]]) -> float:
    """Step-wise area under a precision-recall curve (equals average precision)."""
    area = 0.0
    prev_recall = 0.0
    for recall, precision in curve:
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return area


def mean_average_precision(
    rankings: dict[str, list[str]], relevance: dict[str, set[str]]
) -> float:
    """Mean over queries of the average precision of their rankings.

    Queries with an empty relevant set are skipped with a warning.
    """
    aps = []
    for query, ranked in rankings.items():
        if len(set(ranked)) != len(ranked):
            raise ValueError(f"ranking for '{query}' contains duplicates")
        relevant = relevance.get(query, set())
        if not relevant:
            warnings.warn(f"query '{query}' has no relevant items; skipped")
            continue
        hits = 0
        precisions = []
        for rank, item in enumerate(ranked, start=1):
            if item in relevant:
                hits += 1
                precisions.append(hits / rank)
        aps.append(sum(precisions) / len(relevant))
    return float(np.mean(aps)) if aps else 0.0


def mean_descriptor(seq: DescriptorSequence) -> np.ndarray:
    """Average of the frame descriptors, unit-normalized (zero stays zero)."""
    mean = seq.frames.astype(np.float64).mean(axis=0)
    norm = np.linalg.norm(mean)
    return mean / norm if norm > 0 else mean


def mean_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Dot-product similarity of two mean descriptors."""
    return float(np.dot(a, b))
