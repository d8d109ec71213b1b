/** Payload shapes of the engine HTTP API. */

export interface VideoInfo {
    video_id: string;
    n_frames: number;
    fps: number;
    duration_sec: number;
}

export interface AnchorInfo {
    anchor_id: number;
    video_id: string;
    start_frame: number;
    end_frame: number;
    duration_sec: number;
    t_sec: number;
}

export interface TimelineAnchor {
    anchor_id: number;
    video_id: string;
    start_frame: number;
    end_frame: number;
    t_sec: number;
    score: number;
}

export interface RetainedEdge {
    i: number;
    j: number;
    delta_sec: number;
    score: number;
    kind: string;
}

export interface TimelineComponent {
    anchors: TimelineAnchor[];
    retained_edges: RetainedEdge[];
}

export interface Timeline {
    components: TimelineComponent[];
}

export interface Hypothesis {
    i: number;
    j: number;
    delta_sec: number;
    score: number;
    refined_score: number | null;
    other_anchor_id: number;
    other_video_id: string;
    preview_t_sec: number;
}

export interface StripResponse {
    video_id: string;
    fps: number;
    values: number[];
}

export interface EdgeBody {
    i: number;
    j: number;
    delta_sec: number;
    score: number;
}

/** One recorded HTTP interaction, enough to replay the session. */
export interface LoggedCall {
    method: "GET" | "POST";
    path: string;
    body?: unknown;
}
