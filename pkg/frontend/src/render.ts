/** DOM rendering: one row per video, anchors as draggable strips on a
 * shared, zoomable time axis, with a minimap overview on top. */

import { AlignController } from "./controller.js";
import { TIME_QUANTUM_SEC, quantizeTime, timeExtent } from "./state.js";
import type { StripResponse } from "./types.js";

const COMPONENT_COLORS = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2"];

export class TimelineBoard {
    pixelsPerSecond = 40;
    private originSec = 0;
    private strips = new Map<string, StripResponse>();
    private dragging: { anchorId: number; startX: number; startT: number; moved: boolean } | null =
        null;

    constructor(
        private readonly root: HTMLElement,
        private readonly controller: AlignController,
    ) {
        controller.onChange = () => this.render();
    }

    async loadStrips(): Promise<void> {
        for (const row of this.controller.view.rows) {
            if (!this.strips.has(row.video_id)) {
                try {
                    this.strips.set(row.video_id, await this.controller.client.strip(row.video_id));
                } catch {
                    // Strips are a rendering aid only; rows render without them.
                }
            }
        }
        this.render();
    }

    zoom(factor: number): void {
        this.pixelsPerSecond = Math.min(400, Math.max(4, this.pixelsPerSecond * factor));
        this.render();
    }

    private xOf(tSec: number): number {
        return (quantizeTime(tSec) - this.originSec) * this.pixelsPerSecond;
    }

    render(): void {
        const view = this.controller.view;
        this.root.textContent = "";
        if (view.error !== null) {
            const banner = document.createElement("div");
            banner.className = "error-banner";
            banner.textContent = `Engine unreachable: ${view.error} — retry?`;
            const retry = document.createElement("button");
            retry.textContent = "retry";
            retry.addEventListener("click", () => void this.controller.loadTimeline());
            banner.appendChild(retry);
            this.root.appendChild(banner);
        }
        if (view.rows.length === 0) {
            const hint = document.createElement("div");
            hint.className = "empty-hint";
            hint.textContent = "No videos indexed. Build an index and restart the engine.";
            this.root.appendChild(hint);
            return;
        }

        const [lo, hi] = timeExtent(view.rows);
        this.originSec = Math.floor(lo) - 1;
        this.root.appendChild(this.renderMinimap(lo, hi));

        const preview = this.controller.previewPosition();
        for (const row of view.rows) {
            const rowEl = document.createElement("div");
            rowEl.className = "video-row";
            const label = document.createElement("span");
            label.className = "video-label";
            label.textContent = row.video_id;
            rowEl.appendChild(label);

            const lane = document.createElement("div");
            lane.className = "lane";
            for (const anchor of row.anchors) {
                const selected = view.selection === anchor.anchor_id;
                const t = selected && preview !== null ? preview : anchor.t_sec;
                const strip = document.createElement("div");
                strip.className = selected ? "anchor selected" : "anchor";
                strip.style.left = `${this.xOf(t)}px`;
                strip.style.width = `${Math.max(2, anchor.duration_sec * this.pixelsPerSecond)}px`;
                strip.style.borderColor =
                    COMPONENT_COLORS[anchor.component % COMPONENT_COLORS.length] ?? "#888";
                strip.title = `${anchor.video_id} #${anchor.anchor_id} @ ${t.toFixed(1)}s (score ${anchor.score.toFixed(2)})`;
                strip.appendChild(this.renderHeatBand(anchor.video_id, anchor.start_frame, anchor.end_frame, anchor.duration_sec));
                this.attachDrag(strip, anchor.anchor_id, t);
                lane.appendChild(strip);
            }
            rowEl.appendChild(lane);
            this.root.appendChild(rowEl);
        }
        this.root.appendChild(this.renderStatus());
    }

    private renderHeatBand(videoId: string, startFrame: number, endFrame: number, durationSec: number): HTMLCanvasElement {
        const canvas = document.createElement("canvas");
        canvas.className = "heat";
        const width = Math.max(2, Math.round(durationSec * this.pixelsPerSecond));
        canvas.width = width;
        canvas.height = 16;
        const strip = this.strips.get(videoId);
        const ctx = canvas.getContext("2d");
        if (!strip || !ctx) {
            return canvas;
        }
        const values = strip.values.slice(startFrame, endFrame);
        for (let x = 0; x < width; x++) {
            const idx = Math.min(values.length - 1, Math.floor((x / width) * values.length));
            const v = Math.max(0, Math.min(1, values[idx] ?? 0));
            const shade = Math.round(230 - 150 * v);
            ctx.fillStyle = `rgb(${shade}, ${shade}, 255)`;
            ctx.fillRect(x, 0, 1, canvas.height);
        }
        return canvas;
    }

    private renderMinimap(lo: number, hi: number): HTMLElement {
        const map = document.createElement("canvas");
        map.className = "minimap";
        map.width = 600;
        map.height = 8 + 4 * this.controller.view.rows.length;
        const ctx = map.getContext("2d");
        if (ctx) {
            const span = Math.max(hi - lo, TIME_QUANTUM_SEC);
            this.controller.view.rows.forEach((row, rowIdx) => {
                for (const anchor of row.anchors) {
                    ctx.fillStyle =
                        COMPONENT_COLORS[anchor.component % COMPONENT_COLORS.length] ?? "#888";
                    const x = ((anchor.t_sec - lo) / span) * map.width;
                    const w = Math.max(1, (anchor.duration_sec / span) * map.width);
                    ctx.fillRect(x, 4 + 4 * rowIdx, w, 3);
                }
            });
        }
        return map;
    }

    private renderStatus(): HTMLElement {
        const bar = document.createElement("div");
        bar.className = "status";
        const view = this.controller.view;
        if (view.selection === null) {
            bar.textContent = "Click an anchor, then ←/→ to cycle hypotheses, Enter accept, Esc reject, drag to place manually.";
        } else if (this.controller.hypotheses.length === 0) {
            bar.textContent = `Anchor #${view.selection}: no matches.`;
        } else {
            const h = this.controller.currentHypothesis();
            bar.textContent =
                `Anchor #${view.selection}: hypothesis ${view.hypothesisCursor + 1}/` +
                `${this.controller.hypotheses.length}` +
                (h ? ` — link to ${h.other_video_id} (score ${h.score.toFixed(3)})` : "");
        }
        return bar;
    }

    private attachDrag(strip: HTMLElement, anchorId: number, currentT: number): void {
        strip.addEventListener("pointerdown", (ev) => {
            ev.preventDefault();
            strip.setPointerCapture(ev.pointerId);
            this.dragging = { anchorId, startX: ev.clientX, startT: currentT, moved: false };
        });
        strip.addEventListener("pointermove", (ev) => {
            const drag = this.dragging;
            if (!drag || drag.anchorId !== anchorId) {
                return;
            }
            const dx = ev.clientX - drag.startX;
            if (Math.abs(dx) > 2) {
                drag.moved = true;
                strip.style.left = `${this.xOf(drag.startT) + dx}px`;
            }
        });
        strip.addEventListener("pointerup", (ev) => {
            const drag = this.dragging;
            this.dragging = null;
            if (!drag || drag.anchorId !== anchorId) {
                return;
            }
            const dx = ev.clientX - drag.startX;
            if (drag.moved) {
                void this.controller.dragTo(anchorId, drag.startT + dx / this.pixelsPerSecond);
            } else {
                void this.controller.selectAnchor(anchorId);
            }
        });
    }
}
