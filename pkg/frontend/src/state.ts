/** Pure view-state: rows derived from server data, selection and cursor.
 *
 * Nothing in here computes alignment; every t_sec comes verbatim from the
 * engine and the only client-side arithmetic is presentation (pixel
 * positions, cursor wrapping).
 */

import type { AnchorInfo, Timeline, TimelineAnchor } from "./types.js";

/** Positions snap to a tenth of a second, well below the 0.5 s evaluation
 * tolerance, so zooming never fabricates sub-tolerance precision. */
export const TIME_QUANTUM_SEC = 0.1;

export interface AnchorView extends TimelineAnchor {
    duration_sec: number;
    component: number;
}

export interface RowView {
    video_id: string;
    anchors: AnchorView[];
}

export interface TimelineView {
    rows: RowView[];
    selection: number | null;
    hypothesisCursor: number;
    error: string | null;
}

export function emptyView(): TimelineView {
    return { rows: [], selection: null, hypothesisCursor: 0, error: null };
}

export function quantizeTime(tSec: number): number {
    return Math.round(tSec / TIME_QUANTUM_SEC) * TIME_QUANTUM_SEC;
}

/** Merge the solved timeline with per-anchor durations into rows, one per
 * video, anchors ordered by id, rows ordered by video id. */
export function buildRows(timeline: Timeline, anchors: AnchorInfo[]): RowView[] {
    const durations = new Map(anchors.map((a) => [a.anchor_id, a.duration_sec]));
    const byVideo = new Map<string, AnchorView[]>();
    timeline.components.forEach((component, index) => {
        for (const anchor of component.anchors) {
            const view: AnchorView = {
                ...anchor,
                duration_sec: durations.get(anchor.anchor_id) ?? 0,
                component: index,
            };
            const row = byVideo.get(anchor.video_id);
            if (row) {
                row.push(view);
            } else {
                byVideo.set(anchor.video_id, [view]);
            }
        }
    });
    return [...byVideo.keys()].sort().map((video_id) => ({
        video_id,
        anchors: (byVideo.get(video_id) ?? []).sort((a, b) => a.anchor_id - b.anchor_id),
    }));
}

export function findAnchor(view: TimelineView, anchorId: number): AnchorView | null {
    for (const row of view.rows) {
        for (const anchor of row.anchors) {
            if (anchor.anchor_id === anchorId) {
                return anchor;
            }
        }
    }
    return null;
}

/** Wrap a cursor over a list of n hypotheses: ... n-1 -> 0 -> 1 -> ... */
export function wrapCursor(cursor: number, count: number): number {
    if (count <= 0) {
        return 0;
    }
    return ((cursor % count) + count) % count;
}

/** Overall time extent of all placed anchors (for the minimap). */
export function timeExtent(rows: RowView[]): [number, number] {
    let lo = Infinity;
    let hi = -Infinity;
    for (const row of rows) {
        for (const anchor of row.anchors) {
            lo = Math.min(lo, anchor.t_sec);
            hi = Math.max(hi, anchor.t_sec + anchor.duration_sec);
        }
    }
    return lo <= hi ? [lo, hi] : [0, 1];
}
