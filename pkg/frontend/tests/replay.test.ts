/** Acceptance: a recorded accept/reject/drag session replayed against a
 * fresh engine reproduces the identical timeline JSON. */

import { describe, expect, it } from "vitest";

import { EngineClient, replayLog } from "../src/api.js";
import { AlignController } from "../src/controller.js";
import { RECORD_URL, REPLAY_URL } from "./ports.js";

describe("session replay against a fresh engine", () => {
    it("reproduces the identical /api/timeline JSON", async () => {
        const client = new EngineClient(RECORD_URL);
        const controller = new AlignController(client);

        // Scripted review session: accept one hypothesis, reject another,
        // drag a third anchor to a manual position.
        await controller.loadTimeline();
        expect(controller.view.error).toBeNull();
        const anchorIds = controller.view.rows.flatMap((r) => r.anchors.map((a) => a.anchor_id));
        expect(anchorIds.length).toBeGreaterThanOrEqual(3);

        await controller.selectAnchor(anchorIds[0]!);
        controller.cycle(1);
        controller.cycle(1);
        controller.cycle(-1);
        await controller.acceptCurrent();

        await controller.selectAnchor(anchorIds[1]!);
        if (controller.currentHypothesis() !== null) {
            await controller.rejectCurrent();
        }

        await controller.dragTo(anchorIds[2]!, 12.34);
        await controller.loadTimeline();
        const recorded = await client.timeline();

        // One hypotheses request per selection (dragTo selects once more).
        const hypothesisCalls = client.log.filter((c) => c.path === "/api/hypotheses");
        expect(hypothesisCalls).toHaveLength(3);

        await replayLog(client.log, REPLAY_URL);
        const replayed = await new EngineClient(REPLAY_URL).timeline();
        expect(replayed).toEqual(recorded);
    });

    it("strip endpoint serves per-frame values for rendering", async () => {
        const client = new EngineClient(RECORD_URL);
        const videos = await client.videos();
        const strip = await client.strip(videos[0]!.video_id);
        expect(strip.values.length).toBe(videos[0]!.n_frames);
    });
});
