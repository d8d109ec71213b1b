"""HTTP service for interactive timeline review.

The service owns an alignment session over one index: the pairwise match
candidates, the edges the user has accepted or rejected, and manual anchor
positions.  Every mutation re-solves the global timeline and snapshots the
session to a JSON file, so a crashed or restarted server resumes where the
user left off.  Reads and mutations are serialized by one lock; a reader
always sees a fully solved timeline.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import engine
from .align import AnchorSegment, M_LINK, MatchEdge, solve_alignment

# Accepted edges get a weight high above any real score so the spanning
# tree always includes them, while staying JSON-representable.
FORCED_SCORE = 1e12


def _edge_key(i: int, j: int, delta: float) -> str:
    return f"{i}:{j}:{delta:.6f}"


class AlignmentSession:
    """All mutable state behind the API, guarded by ``self.lock``."""

    def __init__(self, index: engine.Index, session_path):
        self.index = index
        self.session_path = Path(session_path)
        self.lock = threading.RLock()
        self.sequences = {e.video_id: index.load_sequence(e.video_id) for e in index.entries}

        ordered = sorted(self.sequences)
        self.anchors = [
            AnchorSegment(idx, vid, 0, self.sequences[vid].n)
            for idx, vid in enumerate(ordered)
        ]
        self.anchor_of_video = {a.video_id: a.anchor_id for a in self.anchors}
        self.candidates = engine.all_pairs_match(index, refine=True)

        self.accepted: list[dict] = []
        self.rejected: list[dict] = []
        self.manual: dict[int, float] = {}
        if self.session_path.exists():
            state = json.loads(self.session_path.read_text())
            self.accepted = state.get("accepted", [])
            self.rejected = state.get("rejected", [])
            self.manual = {int(k): float(v) for k, v in state.get("manual", {}).items()}
        self.alignment = None
        self._solve()

    # -- solving ---------------------------------------------------------

    def _candidate_edges(self) -> list[MatchEdge]:
        fps = self.index.config.fps
        min_score = self.index.config.min_score
        rejected = {_edge_key(r["i"], r["j"], r["delta_sec"]) for r in self.rejected}
        edges = []
        for c in self.candidates:
            if c.score < min_score or c.score <= 0:
                continue
            i = self.anchor_of_video[c.query_id]
            j = self.anchor_of_video[c.db_id]
            delta = c.delta / fps
            if _edge_key(i, j, delta) in rejected:
                continue
            edges.append(MatchEdge(i, j, delta, c.score, M_LINK))
        for a in self.accepted:
            edges.append(MatchEdge(a["i"], a["j"], a["delta_sec"], FORCED_SCORE, M_LINK))
        return edges

    def _solve(self) -> None:
        alignment = solve_alignment(self.anchors, self._candidate_edges(), self.index.config.tau)
        # Manual positions act as the gauge: shift whole components so the
        # most recently pinned member sits where the user dropped it.
        for comp in alignment.components:
            pin = None
            for aid in self.manual:  # insertion order: later pins win
                if aid in comp:
                    pin = aid
            if pin is not None:
                shift = self.manual[pin] - alignment.start_times[pin]
                for aid in comp:
                    alignment.start_times[aid] += shift
        self.alignment = alignment

    def _snapshot(self) -> None:
        state = {"accepted": self.accepted, "rejected": self.rejected,
                 "manual": {str(k): v for k, v in self.manual.items()}}
        tmp = self.session_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(state, indent=2, sort_keys=True))
        os.replace(tmp, self.session_path)

    def mutate(self, fn) -> None:
        with self.lock:
            fn()
            self._solve()
            self._snapshot()

    # -- views -----------------------------------------------------------

    def timeline_dict(self) -> dict:
        with self.lock:
            return self.alignment.to_json_dict()

    def anchor_rows(self) -> list[dict]:
        with self.lock:
            fps = self.index.config.fps
            return [
                {
                    "anchor_id": a.anchor_id,
                    "video_id": a.video_id,
                    "start_frame": a.start,
                    "end_frame": a.end,
                    "duration_sec": (a.end - a.start) / fps,
                    "t_sec": self.alignment.start_times[a.anchor_id],
                }
                for a in self.anchors
            ]

    def hypotheses_for(self, anchor_id: int, top_k: int) -> list[dict]:
        with self.lock:
            anchor = next((a for a in self.anchors if a.anchor_id == anchor_id), None)
            if anchor is None:
                raise KeyError(anchor_id)
            fps = self.index.config.fps
            rows = []
            for c in self.candidates:
                if anchor.video_id not in (c.query_id, c.db_id):
                    continue
                i = self.anchor_of_video[c.query_id]
                j = self.anchor_of_video[c.db_id]
                delta = c.delta / fps
                if j == anchor_id:
                    preview = self.alignment.start_times[i] + delta
                    other = i
                else:
                    preview = self.alignment.start_times[j] - delta
                    other = j
                rows.append(
                    {
                        "i": i,
                        "j": j,
                        "delta_sec": delta,
                        "score": c.score,
                        "refined_score": c.refined.score if c.refined else None,
                        "other_anchor_id": other,
                        "other_video_id": self.anchors[other].video_id,
                        "preview_t_sec": preview,
                    }
                )
            rows.sort(key=lambda r: (-r["score"], r["other_video_id"]))
            return rows[:top_k]


class EdgeBody(BaseModel):
    i: int
    j: int
    delta_sec: float
    score: float = 0.0


class HypothesesBody(BaseModel):
    anchor_id: int
    top_k: int = 10


class AcceptBody(BaseModel):
    edge: EdgeBody


class ManualBody(BaseModel):
    anchor_id: int
    t_sec: float


def create_app(index: engine.Index, session_path) -> FastAPI:
    app = FastAPI(title="cte alignment service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    session = AlignmentSession(index, session_path)
    app.state.session = session

    @app.get("/api/videos")
    def videos():
        with session.lock:
            return [
                {
                    "video_id": e.video_id,
                    "n_frames": e.n,
                    "fps": index.config.fps,
                    "duration_sec": e.n / index.config.fps,
                }
                for e in sorted(index.entries, key=lambda e: e.video_id)
            ]

    @app.get("/api/anchors")
    def anchors():
        return session.anchor_rows()

    @app.get("/api/timeline")
    def timeline():
        return session.timeline_dict()

    @app.post("/api/hypotheses")
    def hypotheses(body: HypothesesBody):
        try:
            return session.hypotheses_for(body.anchor_id, body.top_k)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown anchor {body.anchor_id}")

    @app.post("/api/accept")
    def accept(body: AcceptBody):
        edge = body.edge.model_dump()
        session.mutate(lambda: session.accepted.append(edge))
        return {"ok": True}

    @app.post("/api/reject")
    def reject(body: AcceptBody):
        edge = body.edge.model_dump()
        session.mutate(lambda: session.rejected.append(edge))
        return {"ok": True}

    @app.post("/api/manual")
    def manual(body: ManualBody):
        def apply():
            session.manual.pop(body.anchor_id, None)  # re-pin moves to last position
            session.manual[body.anchor_id] = body.t_sec

        session.mutate(apply)
        return {"ok": True}

    @app.post("/api/solve")
    def solve():
        with session.lock:
            session._solve()
            return session.timeline_dict()

    @app.get("/api/strip/{video_id}")
    def strip(video_id: str):
        with session.lock:
            seq = session.sequences.get(video_id)
        if seq is None:
            raise HTTPException(status_code=404, detail=f"unknown video {video_id}")
        frames = seq.frames.astype(np.float64)
        if seq.n > 1:
            values = np.einsum("td,td->t", frames[:-1], frames[1:])
            values = np.append(values, values[-1])
        else:
            values = np.ones(1)
        return {"video_id": video_id, "fps": seq.fps, "values": [float(v) for v in values]}

    return app


def serve(index: engine.Index, host: str, port: int, session_path, ui_dir=None) -> None:
    """Run the service until interrupted.  Raises on a busy port."""
    import uvicorn

    app = create_app(index, session_path)
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    uvicorn.run(app, host=host, port=port, log_level="warning")
