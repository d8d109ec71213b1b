"""Global timeline estimation from noisy pairwise offsets.

Pairwise matches induce a graph whose nodes are anchor segments (sub-ranges
of videos, or whole videos for unedited footage) and whose edges carry an
estimated relative start time and a confidence score.  Per connected
component, a maximum spanning tree seeds a consistent edge set; start times
minimizing the squared offset errors are solved exactly through the anchored
graph Laplacian, then every edge whose residual fits within the tolerance is
added and the system re-solved, until the set stops growing.  Outlier edges
never enter the retained set, so a fraction of wrong matches cannot corrupt
the timeline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .matcher import MatchCandidate
from .seqdesc import DescriptorSequence

M_LINK = "m-link"
O_LINK = "o-link"


@dataclass(frozen=True)
class AnchorSegment:
    """Frames [start, end) of one video, treated as a rigid unit."""

    anchor_id: int
    video_id: str
    start: int
    end: int
    score: float = 0.0

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValidationError(f"bad anchor range [{self.start}, {self.end})")


@dataclass(frozen=True)
class MatchEdge:
    """Constraint t_j ~ t_i + delta (seconds) with confidence ``score``."""

    i: int
    j: int
    delta: float
    score: float
    kind: str = M_LINK

    def __post_init__(self):
        if self.i == self.j:
            raise ValidationError(f"self-edge on anchor {self.i}")
        if not (self.score > 0):
            raise ValidationError(f"edge score must be positive, got {self.score}")


@dataclass
class GlobalAlignment:
    """Solved start times on a shared clock, plus the retained edge set."""

    start_times: dict[int, float]
    components: list[list[int]]
    retained: list[MatchEdge]
    anchors: list[AnchorSegment] = field(default_factory=list)
    iterations: int = 0
    max_residual: float = 0.0

    def component_of(self) -> dict[int, int]:
        out = {}
        for idx, comp in enumerate(self.components):
            for aid in comp:
                out[aid] = idx
        return out

    def to_json_dict(self) -> dict:
        comp_map = self.component_of()
        components = []
        for idx, comp in enumerate(self.components):
            anchors = [
                {
                    "anchor_id": a.anchor_id,
                    "video_id": a.video_id,
                    "start_frame": a.start,
                    "end_frame": a.end,
                    "t_sec": self.start_times[a.anchor_id],
                    "score": a.score,
                }
                for a in sorted(self.anchors, key=lambda a: a.anchor_id)
                if comp_map.get(a.anchor_id) == idx
            ]
            edges = [
                {"i": e.i, "j": e.j, "delta_sec": e.delta, "score": e.score, "kind": e.kind}
                for e in self.retained
                if comp_map.get(e.i) == idx
            ]
            components.append({"anchors": anchors, "retained_edges": edges})
        return {"components": components}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def _solve_component(ids: list[int], edges: list[MatchEdge]) -> dict[int, float]:
    """Least-squares start times for one component, gauge anchor pinned to 0.

    Normal equations of sum (t_j - t_i - delta)^2 form the graph Laplacian;
    dropping the row/column of the lowest anchor id pins the free global
    shift and makes the system non-singular for any connected edge set.
    """
    if len(ids) == 1:
        return {ids[0]: 0.0}
    pos = {aid: idx for idx, aid in enumerate(ids)}
    k = len(ids)
    lap = np.zeros((k, k))
    rhs = np.zeros(k)
    for e in edges:
        a, b = pos[e.i], pos[e.j]
        lap[a, a] += 1.0
        lap[b, b] += 1.0
        lap[a, b] -= 1.0
        lap[b, a] -= 1.0
        rhs[a] -= e.delta
        rhs[b] += e.delta
    keep = np.arange(1, k)  # ids are sorted; index 0 is the gauge anchor
    solution = np.linalg.solve(lap[np.ix_(keep, keep)], rhs[keep])
    times = {ids[0]: 0.0}
    for idx, aid in enumerate(ids[1:]):
        times[aid] = float(solution[idx])
    return times


def solve_alignment(
    anchors: list[AnchorSegment], edges: list[MatchEdge], tau: float
) -> GlobalAlignment:
    """Robust global alignment of anchors from pairwise offset constraints.

    Per connected component: seed the retained set with the maximum
    spanning tree by score (ties: higher score first, then lower input
    position), solve the least-squares start times, admit every edge whose
    residual |t_j - (t_i + delta)| is below ``tau``, and repeat until no
    edge is added.  Edges are never removed once admitted; the worst final
    residual is reported on the result.
    """
    if not (tau > 0):
        raise ValidationError(f"tolerance must be positive, got {tau}")
    anchor_ids = {a.anchor_id for a in anchors}
    if len(anchor_ids) != len(anchors):
        raise ValidationError("duplicate anchor ids")
    for e in edges:
        if e.i not in anchor_ids or e.j not in anchor_ids:
            raise ValidationError(f"edge ({e.i}, {e.j}) references an unknown anchor")

    uf = _UnionFind(anchor_ids)
    order = sorted(range(len(edges)), key=lambda idx: (-edges[idx].score, idx))
    tree_idx: list[int] = []
    for idx in order:
        if uf.union(edges[idx].i, edges[idx].j):
            tree_idx.append(idx)

    comp_members: dict[int, list[int]] = {}
    for aid in sorted(anchor_ids):
        comp_members.setdefault(uf.find(aid), []).append(aid)
    comp_edges: dict[int, list[int]] = {root: [] for root in comp_members}
    for idx, e in enumerate(edges):
        comp_edges[uf.find(e.i)].append(idx)

    start_times: dict[int, float] = {}
    retained: list[MatchEdge] = []
    components: list[list[int]] = []
    total_rounds = 0
    max_residual = 0.0

    tree_set = set(tree_idx)
    for root in sorted(comp_members, key=lambda r: comp_members[r][0]):
        ids = comp_members[root]
        components.append(ids)
        member_edges = comp_edges[root]
        in_set = [idx for idx in member_edges if idx in tree_set]
        if not member_edges:
            start_times.update({aid: 0.0 for aid in ids})
            continue
        chosen = set(in_set)
        times = _solve_component(ids, [edges[idx] for idx in in_set])
        total_rounds += 1
        while True:
            added = False
            for idx in member_edges:
                if idx in chosen:
                    continue
                e = edges[idx]
                if abs(times[e.j] - times[e.i] - e.delta) < tau:
                    chosen.add(idx)
                    added = True
            if not added:
                break
            times = _solve_component(ids, [edges[idx] for idx in sorted(chosen)])
            total_rounds += 1
        start_times.update(times)
        for idx in sorted(chosen):
            e = edges[idx]
            retained.append(e)
            max_residual = max(max_residual, abs(times[e.j] - times[e.i] - e.delta))

    return GlobalAlignment(
        start_times=start_times,
        components=components,
        retained=retained,
        anchors=list(anchors),
        iterations=total_rounds,
        max_residual=max_residual,
    )


def build_anchor_graph(
    matches: list[MatchCandidate], fps: float, min_score: float
) -> tuple[list[AnchorSegment], list[MatchEdge]]:
    """Anchors and edges for edited footage, from refined pairwise matches.

    Every match at or above ``min_score`` contributes one anchor per side
    covering exactly the matched frame ranges; the pair is tied by an
    m-link with zero relative offset (the trimmed ranges are simultaneous
    by construction).  Overlapping anchors within one video are bound by
    o-links whose delta is their start difference and whose score is the
    overlap duration plus the best m-link score, so intra-video structure
    always outranks cross-video matches in the spanning tree.
    """
    anchors: list[AnchorSegment] = []
    edges: list[MatchEdge] = []
    next_id = 0
    for m in matches:
        if m.refined is None:
            raise ValidationError(f"match {m.query_id}->{m.db_id} lacks refined boundaries")
        r = m.refined
        if r.score < min_score:
            continue
        qa = AnchorSegment(next_id, m.query_id, r.t_start, r.t_end + 1, score=r.score)
        ba = AnchorSegment(next_id + 1, m.db_id, r.t_start - r.delta, r.t_end + 1 - r.delta, score=r.score)
        next_id += 2
        anchors.append(qa)
        anchors.append(ba)
        edges.append(MatchEdge(qa.anchor_id, ba.anchor_id, 0.0, r.score, M_LINK))

    best_m = max((e.score for e in edges), default=0.0)
    by_video: dict[str, list[AnchorSegment]] = {}
    for a in anchors:
        by_video.setdefault(a.video_id, []).append(a)
    for video_anchors in by_video.values():
        video_anchors.sort(key=lambda a: a.anchor_id)
        for x in range(len(video_anchors)):
            for y in range(x + 1, len(video_anchors)):
                a, b = video_anchors[x], video_anchors[y]
                overlap = min(a.end, b.end) - max(a.start, b.start)
                if overlap <= 0:
                    continue
                edges.append(
                    MatchEdge(
                        a.anchor_id,
                        b.anchor_id,
                        (b.start - a.start) / fps,
                        overlap / fps + best_m,
                        O_LINK,
                    )
                )
    return anchors, edges


def resolve_frame_offsets(
    alignment: GlobalAlignment, anchors: list[AnchorSegment], fps: float
) -> dict[tuple[str, int], float]:
    """Unique global time per covered frame.

    Where anchors of one video overlap, the anchor with the highest
    supporting score wins (ties: lower anchor id); frames outside every
    anchor stay unmapped.
    """
    best: dict[tuple[str, int], tuple[float, int, float]] = {}
    for a in anchors:
        t0 = alignment.start_times.get(a.anchor_id)
        if t0 is None:
            continue
        for frame in range(a.start, a.end):
            key = (a.video_id, frame)
            rank = (-a.score, a.anchor_id)
            cur = best.get(key)
            if cur is None or rank < cur[:2]:
                best[key] = (rank[0], rank[1], t0 + (frame - a.start) / fps)
    return {key: val[2] for key, val in best.items()}


def solve_unedited(
    videos: list[DescriptorSequence],
    matches: list[MatchCandidate],
    tau: float,
    min_score: float = 0.0,
) -> GlobalAlignment:
    """Whole videos as units: one full-length anchor each, m-links only."""
    anchors = []
    id_of: dict[str, int] = {}
    fps = videos[0].fps if videos else 15.0
    for idx, v in enumerate(videos):
        if v.video_id in id_of:
            raise ValidationError(f"duplicate video id '{v.video_id}'")
        if not math.isclose(v.fps, fps):
            raise ValidationError("videos must share one frame rate")
        id_of[v.video_id] = idx
        anchors.append(AnchorSegment(idx, v.video_id, 0, v.n))
    edges = []
    for m in matches:
        if m.score < min_score or m.score <= 0:
            continue
        edges.append(MatchEdge(id_of[m.query_id], id_of[m.db_id], m.delta / fps, m.score, M_LINK))
    return solve_alignment(anchors, edges, tau)
