"""Retrieval and alignment quality metrics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cte.align import AnchorSegment, GlobalAlignment
from cte.evalkit import (
    label_match,
    match_pr,
    mean_average_precision,
    mean_descriptor,
    mean_similarity,
    pas_fractional,
    pas_unedited,
    pr_area,
)
from cte.matcher import MatchCandidate
from cte.seqdesc import DescriptorSequence, GroundTruthEntry, GroundTruthTimeline

from conftest import unit_frames


def chain_gt(n=3, clip_sec=10.0, step_sec=4.0, fps=15.0):
    """n clips stepping by step_sec; with the defaults all pairs of three
    consecutive clips overlap."""
    entries = [
        GroundTruthEntry(f"v{i}", 0, int(clip_sec * fps), i * step_sec) for i in range(n)
    ]
    return GroundTruthTimeline(entries=entries, fps=fps)


def alignment_for(times: dict[str, float], length=150) -> GlobalAlignment:
    ids = sorted(times)
    anchors = [AnchorSegment(i, vid, 0, length) for i, vid in enumerate(ids)]
    return GlobalAlignment(
        start_times={i: times[vid] for i, vid in enumerate(ids)},
        components=[list(range(len(ids)))],
        retained=[],
        anchors=anchors,
    )


class TestPasUnedited:
    def test_perfect_chain(self):
        gt = chain_gt(3)
        report = pas_unedited(gt, alignment_for({"v0": 0.0, "v1": 4.0, "v2": 8.0}))
        assert report.pas == 3.0 and report.gt_pairs == 3

    def test_error_beyond_tolerance_scores_zero(self):
        gt = chain_gt(2)
        report = pas_unedited(gt, alignment_for({"v0": 0.0, "v1": 4.6}), tolerance=0.5)
        assert report.pas == 0.0 and report.gt_pairs == 1

    def test_gauge_invariance(self):
        gt = chain_gt(3)
        shifted = alignment_for({"v0": 100.0, "v1": 104.0, "v2": 108.0})
        assert pas_unedited(gt, shifted).pas == 3.0

    def test_cross_component_pairs_score_zero(self):
        gt = chain_gt(2)
        anchors = [AnchorSegment(0, "v0", 0, 150), AnchorSegment(1, "v1", 0, 150)]
        split = GlobalAlignment(
            start_times={0: 0.0, 1: 4.0},
            components=[[0], [1]],
            retained=[],
            anchors=anchors,
        )
        assert pas_unedited(gt, split).pas == 0.0

    def test_relabeling_invariance(self):
        gt = chain_gt(3)
        renamed = GroundTruthTimeline(
            entries=[
                GroundTruthEntry("x" + e.video_id, e.start_frame, e.end_frame, e.global_start_sec)
                for e in gt.entries
            ],
            fps=gt.fps,
        )
        times = {"xv0": 0.0, "xv1": 4.0, "xv2": 8.0}
        assert pas_unedited(renamed, alignment_for(times)).pas == 3.0


class TestPasFractional:
    def frame_offsets_for(self, gt, recovered_starts):
        offsets = {}
        for e in gt.entries:
            start = recovered_starts.get(e.video_id)
            if start is None:
                continue
            for f in range(e.start_frame, e.end_frame):
                offsets[(e.video_id, f)] = start + (f - e.start_frame) / gt.fps
        return offsets

    def test_full_correct_overlap(self):
        gt = chain_gt(2)
        offsets = self.frame_offsets_for(gt, {"v0": 0.0, "v1": 4.0})
        report = pas_fractional(gt, offsets)
        assert report.pas == pytest.approx(1.0)
        assert report.gt_pairs == 1

    def test_half_correct_overlap(self):
        # First half of v1's overlap correctly placed, second half shifted
        # far off: the pair contributes one half.
        gt = chain_gt(2, clip_sec=10.0, step_sec=5.0)
        offsets = self.frame_offsets_for(gt, {"v0": 0.0, "v1": 5.0})
        fps = gt.fps
        e1 = gt.entries[1]
        overlap_frames = int(5.0 * fps)
        for f in range(e1.start_frame + overlap_frames // 2, e1.end_frame):
            if (e1.video_id, f) in offsets:
                offsets[(e1.video_id, f)] += 30.0
        report = pas_fractional(gt, offsets)
        assert report.pas == pytest.approx(0.5, abs=0.05)

    def test_unmapped_frames_count_zero(self):
        gt = chain_gt(2)
        offsets = self.frame_offsets_for(gt, {"v0": 0.0})  # v1 never mapped
        assert pas_fractional(gt, offsets).pas == 0.0

    def test_matches_integer_pas_on_uniform_offsets(self):
        gt = chain_gt(4, clip_sec=8.0, step_sec=3.0)
        starts = {"v0": 0.0, "v1": 3.0, "v2": 6.0, "v3": 99.0}  # one wrong
        integer = pas_unedited(gt, alignment_for(starts))
        fractional = pas_fractional(gt, self.frame_offsets_for(gt, starts))
        assert fractional.pas == pytest.approx(integer.pas)


class TestMatchPr:
    def cand(self, q, b, delta_frames, score):
        return MatchCandidate(query_id=q, db_id=b, delta=delta_frames, score=score)

    def test_all_correct(self):
        gt = chain_gt(3)
        fps = gt.fps
        matches = [
            self.cand("v0", "v1", int(4 * fps), 3.0),
            self.cand("v1", "v2", int(4 * fps), 2.0),
            self.cand("v0", "v2", int(8 * fps), 1.0),
        ]
        curve = match_pr(matches, gt)
        assert all(p == 1.0 for _, p in curve)
        assert curve[-1][0] == pytest.approx(1.0)
        assert pr_area(curve) == pytest.approx(1.0)

    def test_correct_ranked_above_incorrect(self):
        gt = chain_gt(2)
        matches = [
            self.cand("v0", "v1", int(4 * gt.fps), 5.0),
            self.cand("v0", "v1", 0, 1.0),  # wrong offset, lower score
        ]
        curve = match_pr(matches, gt)
        assert curve[0] == (pytest.approx(1.0), pytest.approx(1.0))
        assert curve[1][1] == pytest.approx(0.5)

    def test_random_labels_area_matches_monte_carlo_oracle(self):
        # With random scores the average precision over many seeds must
        # agree with a direct simulation over random label permutations.
        rng = np.random.default_rng(3)
        gt = chain_gt(2)
        correct_delta = int(4 * gt.fps)
        n_matches, n_correct, trials = 40, 12, 400

        def average_precision(labels):
            hits, area = 0, 0.0
            for rank, good in enumerate(labels, start=1):
                if good:
                    hits += 1
                    area += hits / rank
            return area / n_correct

        oracle = np.mean(
            [average_precision(rng.permutation([True] * n_correct + [False] * (n_matches - n_correct)))
             for _ in range(trials)]
        )

        areas = []
        for _ in range(trials):
            labels = [True] * n_correct + [False] * (n_matches - n_correct)
            matches = [
                self.cand("v0", "v1", correct_delta if good else 999, float(rng.random()))
                for good in labels
            ]
            ranked = sorted(matches, key=lambda m: -m.score)
            areas.append(average_precision([label_match(m, gt) for m in ranked]))
        assert np.mean(areas) == pytest.approx(oracle, abs=0.02)

    def test_recall_non_decreasing(self):
        gt = chain_gt(3)
        rng = np.random.default_rng(4)
        matches = [
            self.cand("v0", "v1", int(rng.integers(0, 200)), float(rng.random()))
            for _ in range(20)
        ]
        curve = match_pr(matches, gt)
        recalls = [r for r, _ in curve]
        assert recalls == sorted(recalls)


class TestMeanAveragePrecision:
    def test_relevant_always_first(self):
        rankings = {"q1": ["a", "b", "c"], "q2": ["x", "y"]}
        relevance = {"q1": {"a"}, "q2": {"x"}}
        assert mean_average_precision(rankings, relevance) == 1.0

    def test_single_relevant_at_rank_two(self):
        rankings = {"q": [f"d{i}" for i in range(10)]}
        relevance = {"q": {"d1"}}
        assert mean_average_precision(rankings, relevance) == pytest.approx(0.5)

    def test_against_brute_force_definition(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            items = [f"d{i}" for i in range(15)]
            ranked = list(rng.permutation(items))
            relevant = set(rng.choice(items, size=4, replace=False))
            expected_precisions = []
            hits = 0
            for rank, item in enumerate(ranked, start=1):
                if item in relevant:
                    hits += 1
                    expected_precisions.append(hits / rank)
            expected = sum(expected_precisions) / len(relevant)
            got = mean_average_precision({"q": ranked}, {"q": relevant})
            assert got == pytest.approx(expected)

    def test_empty_relevant_set_warns_and_skips(self):
        with pytest.warns(UserWarning):
            value = mean_average_precision(
                {"q1": ["a"], "q2": ["b"]}, {"q1": {"a"}, "q2": set()}
            )
        assert value == 1.0

    def test_duplicate_ranking_rejected(self):
        with pytest.raises(ValueError):
            mean_average_precision({"q": ["a", "a"]}, {"q": {"a"}})

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 1000))
    def test_bounded(self, seed):
        rng = np.random.default_rng(seed)
        items = [f"d{i}" for i in range(8)]
        ranked = list(rng.permutation(items))
        relevant = set(rng.choice(items, size=int(rng.integers(1, 5)), replace=False))
        value = mean_average_precision({"q": ranked}, {"q": relevant})
        assert 0.0 <= value <= 1.0


class TestMeanDescriptor:
    def test_identical_sequences_similarity_one(self):
        rng = np.random.default_rng(6)
        seq = DescriptorSequence("a", 15.0, unit_frames(rng, 20, 8))
        v = mean_descriptor(seq)
        assert mean_similarity(v, v) == pytest.approx(1.0)

    def test_orthogonal_constant_sequences(self):
        e1 = np.tile(np.eye(1, 4, 0, dtype=np.float32), (5, 1))
        e2 = np.tile(np.eye(1, 4, 1, dtype=np.float32), (5, 1))
        a = mean_descriptor(DescriptorSequence("a", 15.0, e1))
        b = mean_descriptor(DescriptorSequence("b", 15.0, e2))
        assert mean_similarity(a, b) == pytest.approx(0.0)

    def test_zero_mean_stays_zero(self):
        frames = np.array([[1.0, 0.0], [-1.0, 0.0]], dtype=np.float32)
        v = mean_descriptor(DescriptorSequence("z", 15.0, frames))
        np.testing.assert_allclose(v, 0.0)

    def test_tiny_overlap_dilutes_mean_but_not_temporal_match(self):
        # A query sharing ~1% of its frames with the true item: the mean
        # descriptor ranks a look-alike distractor first, while the
        # regularized temporal match still finds the true item.
        from cte.matcher import match_pair

        rng = np.random.default_rng(7)
        d = 256
        bias = unit_frames(rng, 1, d)[0]

        def biased(n):
            raw = rng.standard_normal((n, d)) + 1.2 * bias
            return (raw / np.linalg.norm(raw, axis=1, keepdims=True)).astype(np.float32)

        true_frames = unit_frames(rng, 2048, d).astype(np.float32)
        true = DescriptorSequence("true", 15.0, true_frames)
        query_frames = biased(2048)
        query_frames[500:524] = true_frames[200:224]  # 24 of 2048 frames
        query = DescriptorSequence("q", 15.0, query_frames)
        distractors = [DescriptorSequence(f"d{i}", 15.0, biased(2048)) for i in range(5)]

        entries = [true] + distractors
        mmv_scores = {
            e.video_id: mean_similarity(mean_descriptor(query), mean_descriptor(e))
            for e in entries
        }
        cte_scores = {
            e.video_id: match_pair(query, e, beta=0.25, lam=0.1, refine=False).score
            for e in entries
        }
        assert max(cte_scores, key=cte_scores.get) == "true"
        assert max(mmv_scores, key=mmv_scores.get) != "true"
