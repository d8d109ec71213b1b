import { beforeEach, describe, expect, it } from "vitest";

import { EngineClient } from "../src/api.js";
import { AlignController } from "../src/controller.js";
import type { AnchorInfo, Hypothesis, Timeline } from "../src/types.js";

/** In-memory engine stub that counts requests per endpoint. */
class FakeEngine {
    counts = new Map<string, number>();
    accepted: unknown[] = [];
    rejected: unknown[] = [];
    manual: unknown[] = [];
    tSecOf = new Map<number, number>([
        [0, 0.0],
        [1, 3.0],
        [2, 7.0],
    ]);

    hypothesesFor(anchorId: number): Hypothesis[] {
        const make = (other: number, score: number): Hypothesis => ({
            i: other,
            j: anchorId,
            delta_sec: 1.5,
            score,
            refined_score: score,
            other_anchor_id: other,
            other_video_id: `v${other}`,
            preview_t_sec: (this.tSecOf.get(other) ?? 0) + 1.5,
        });
        return [make((anchorId + 1) % 3, 5.0), make((anchorId + 2) % 3, 2.0)];
    }

    timeline(): Timeline {
        return {
            components: [
                {
                    anchors: [0, 1, 2].map((id) => ({
                        anchor_id: id,
                        video_id: `v${id}`,
                        start_frame: 0,
                        end_frame: 150,
                        t_sec: this.tSecOf.get(id) ?? 0,
                        score: 0,
                    })),
                    retained_edges: [],
                },
            ],
        };
    }

    anchors(): AnchorInfo[] {
        return [0, 1, 2].map((id) => ({
            anchor_id: id,
            video_id: `v${id}`,
            start_frame: 0,
            end_frame: 150,
            duration_sec: 10,
            t_sec: this.tSecOf.get(id) ?? 0,
        }));
    }

    fetch = async (url: string, init?: RequestInit): Promise<Response> => {
        const path = url.replace(/^https?:\/\/[^/]+/, "");
        this.counts.set(path, (this.counts.get(path) ?? 0) + 1);
        const body = init?.body ? JSON.parse(String(init.body)) : undefined;
        let payload: unknown;
        if (path === "/api/timeline") {
            payload = this.timeline();
        } else if (path === "/api/anchors") {
            payload = this.anchors();
        } else if (path === "/api/hypotheses") {
            payload = this.hypothesesFor(body.anchor_id);
        } else if (path === "/api/accept") {
            this.accepted.push(body.edge);
            this.tSecOf.set(body.edge.j, (this.tSecOf.get(body.edge.i) ?? 0) + body.edge.delta_sec);
            payload = { ok: true };
        } else if (path === "/api/reject") {
            this.rejected.push(body.edge);
            payload = { ok: true };
        } else if (path === "/api/manual") {
            this.manual.push(body);
            this.tSecOf.set(body.anchor_id, body.t_sec);
            payload = { ok: true };
        } else {
            return new Response("not found", { status: 404 });
        }
        return new Response(JSON.stringify(payload), {
            status: 200,
            headers: { "content-type": "application/json" },
        });
    };
}

describe("AlignController", () => {
    let engine: FakeEngine;
    let controller: AlignController;

    beforeEach(async () => {
        engine = new FakeEngine();
        controller = new AlignController(new EngineClient("http://fake", engine.fetch));
        await controller.loadTimeline();
    });

    it("reflects the server timeline exactly", () => {
        expect(controller.view.rows.map((r) => r.video_id)).toEqual(["v0", "v1", "v2"]);
        expect(controller.view.rows[1]!.anchors[0]!.t_sec).toBe(3.0);
        expect(controller.view.error).toBeNull();
    });

    it("issues exactly one hypotheses request per anchor selection", async () => {
        await controller.selectAnchor(1);
        controller.cycle(1);
        controller.cycle(1);
        controller.cycle(-1);
        expect(engine.counts.get("/api/hypotheses")).toBe(1);
        await controller.selectAnchor(2);
        controller.cycle(1);
        expect(engine.counts.get("/api/hypotheses")).toBe(2);
    });

    it("cycles with wrap-around and previews the hypothesis position", async () => {
        await controller.selectAnchor(0);
        expect(controller.view.hypothesisCursor).toBe(0);
        expect(controller.previewPosition()).toBeCloseTo(engine.hypothesesFor(0)[0]!.preview_t_sec);
        controller.cycle(1);
        expect(controller.view.hypothesisCursor).toBe(1);
        controller.cycle(1);
        expect(controller.view.hypothesisCursor).toBe(0);
    });

    it("accept posts the edge and re-syncs from the server", async () => {
        await controller.selectAnchor(1);
        await controller.acceptCurrent();
        expect(engine.accepted).toHaveLength(1);
        const t = controller.view.rows[1]!.anchors[0]!.t_sec;
        expect(t).toBe(engine.tSecOf.get(1));
        expect(engine.counts.get("/api/timeline")).toBeGreaterThanOrEqual(2);
    });

    it("reject drops the hypothesis locally without a re-fetch", async () => {
        await controller.selectAnchor(1);
        const first = controller.currentHypothesis();
        await controller.rejectCurrent();
        expect(engine.rejected).toHaveLength(1);
        expect(controller.hypotheses).toHaveLength(1);
        expect(controller.currentHypothesis()).not.toBe(first);
        expect(engine.counts.get("/api/hypotheses")).toBe(1);
    });

    it("rejecting everything leaves the anchor at its server position", async () => {
        await controller.selectAnchor(1);
        await controller.rejectCurrent();
        await controller.rejectCurrent();
        expect(controller.hypotheses).toHaveLength(0);
        expect(controller.previewPosition()).toBeNull();
        expect(controller.view.rows[1]!.anchors[0]!.t_sec).toBe(3.0);
    });

    it("drag selects, quantizes and posts the manual position", async () => {
        await controller.dragTo(2, 12.34);
        expect(engine.manual).toEqual([{ anchor_id: 2, t_sec: 12.3 }]);
        expect(controller.view.selection).toBe(2);
        expect(controller.view.rows[2]!.anchors[0]!.t_sec).toBeCloseTo(12.3);
    });

    it("offline load sets the error banner and blocks mutations", async () => {
        const broken = new AlignController(
            new EngineClient("http://fake", async () => {
                throw new Error("refused");
            }),
        );
        await broken.loadTimeline();
        expect(broken.offline).toBe(true);
        await broken.acceptCurrent(); // must be a no-op, not a crash
        expect(broken.view.rows).toHaveLength(0);
    });

    it("records every call in the replayable log", async () => {
        await controller.selectAnchor(1);
        await controller.acceptCurrent();
        const paths = controller.client.log.map((c) => c.path);
        expect(paths.filter((p) => p === "/api/accept")).toHaveLength(1);
        expect(paths[0]).toBe("/api/timeline");
    });
});
