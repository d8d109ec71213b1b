/** Session controller: wires user intents to engine calls.
 *
 * Selecting an anchor fetches its hypothesis list exactly once; cycling
 * through hypotheses is purely local until the user accepts (Enter) or
 * rejects (Escape), each of which is a single mutation followed by a
 * timeline re-sync.  Dragging posts the dropped position and re-syncs, so
 * the view always shows server-solved times.
 */

import { EngineClient } from "./api.js";
import {
    TimelineView,
    buildRows,
    emptyView,
    findAnchor,
    quantizeTime,
    wrapCursor,
} from "./state.js";
import type { EdgeBody, Hypothesis } from "./types.js";

export class AlignController {
    view: TimelineView = emptyView();
    hypotheses: Hypothesis[] = [];
    onChange: (() => void) | null = null;

    constructor(readonly client: EngineClient) {}

    private notify(): void {
        this.onChange?.();
    }

    /** Pull the solved timeline; on failure flag the error and keep the
     * previous rows visible but refuse mutations. */
    async loadTimeline(): Promise<void> {
        try {
            const [timeline, anchors] = await Promise.all([
                this.client.timeline(),
                this.client.anchors(),
            ]);
            this.view.rows = buildRows(timeline, anchors);
            this.view.error = null;
        } catch (err) {
            this.view.error = String(err);
        }
        this.notify();
    }

    get offline(): boolean {
        return this.view.error !== null;
    }

    /** Select an anchor and fetch its ranked hypotheses (one request). */
    async selectAnchor(anchorId: number, topK = 10): Promise<void> {
        if (findAnchor(this.view, anchorId) === null) {
            throw new Error(`unknown anchor ${anchorId}`);
        }
        this.view.selection = anchorId;
        this.view.hypothesisCursor = 0;
        this.hypotheses = await this.client.hypotheses(anchorId, topK);
        this.notify();
    }

    clearSelection(): void {
        this.view.selection = null;
        this.hypotheses = [];
        this.view.hypothesisCursor = 0;
        this.notify();
    }

    currentHypothesis(): Hypothesis | null {
        if (this.view.selection === null || this.hypotheses.length === 0) {
            return null;
        }
        return this.hypotheses[this.view.hypothesisCursor] ?? null;
    }

    /** Step the cursor; no network traffic. */
    cycle(step = 1): Hypothesis | null {
        if (this.hypotheses.length === 0) {
            return null;
        }
        this.view.hypothesisCursor = wrapCursor(
            this.view.hypothesisCursor + step,
            this.hypotheses.length,
        );
        this.notify();
        return this.currentHypothesis();
    }

    /** Where the selected anchor would land under the current hypothesis. */
    previewPosition(): number | null {
        return this.currentHypothesis()?.preview_t_sec ?? null;
    }

    private edgeOf(h: Hypothesis): EdgeBody {
        return { i: h.i, j: h.j, delta_sec: h.delta_sec, score: h.score };
    }

    /** Accept the hypothesis under the cursor and re-sync. */
    async acceptCurrent(): Promise<void> {
        const current = this.currentHypothesis();
        if (current === null || this.offline) {
            return;
        }
        await this.client.accept(this.edgeOf(current));
        await this.loadTimeline();
    }

    /** Reject the hypothesis under the cursor (it disappears locally, no
     * re-fetch) and re-sync the timeline. */
    async rejectCurrent(): Promise<void> {
        const current = this.currentHypothesis();
        if (current === null || this.offline) {
            return;
        }
        await this.client.reject(this.edgeOf(current));
        this.hypotheses = this.hypotheses.filter((h) => h !== current);
        this.view.hypothesisCursor = wrapCursor(this.view.hypothesisCursor, this.hypotheses.length);
        await this.loadTimeline();
    }

    /** Drop an anchor at a new position (selects it first if needed). */
    async dragTo(anchorId: number, tSec: number): Promise<void> {
        if (this.offline) {
            return;
        }
        if (this.view.selection !== anchorId) {
            await this.selectAnchor(anchorId);
        }
        await this.client.manual(anchorId, quantizeTime(tSec));
        await this.loadTimeline();
    }
}
