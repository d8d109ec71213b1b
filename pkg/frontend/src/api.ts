/** Thin typed client for the engine API.
 *
 * Every request is appended to a call log, so a whole review session can be
 * replayed against a fresh engine; replaying the log must reproduce the
 * same timeline (the server owns all alignment state, the client holds
 * none).
 */

import type {
    AnchorInfo,
    EdgeBody,
    Hypothesis,
    LoggedCall,
    StripResponse,
    Timeline,
    VideoInfo,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class EngineError extends Error {
    constructor(message: string, readonly status?: number) {
        super(message);
    }
}

export class EngineClient {
    readonly log: LoggedCall[] = [];

    constructor(
        readonly baseUrl: string,
        private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
    ) {}

    private async request<T>(method: "GET" | "POST", path: string, body?: unknown): Promise<T> {
        const entry: LoggedCall = body === undefined ? { method, path } : { method, path, body };
        this.log.push(entry);
        let response: Response;
        try {
            response = await this.fetchFn(this.baseUrl + path, {
                method,
                headers: body === undefined ? undefined : { "content-type": "application/json" },
                body: body === undefined ? undefined : JSON.stringify(body),
            });
        } catch (err) {
            throw new EngineError(`engine unreachable: ${String(err)}`);
        }
        if (!response.ok) {
            throw new EngineError(`${method} ${path} failed: ${response.status}`, response.status);
        }
        return (await response.json()) as T;
    }

    videos(): Promise<VideoInfo[]> {
        return this.request("GET", "/api/videos");
    }

    anchors(): Promise<AnchorInfo[]> {
        return this.request("GET", "/api/anchors");
    }

    timeline(): Promise<Timeline> {
        return this.request("GET", "/api/timeline");
    }

    hypotheses(anchorId: number, topK = 10): Promise<Hypothesis[]> {
        return this.request("POST", "/api/hypotheses", { anchor_id: anchorId, top_k: topK });
    }

    accept(edge: EdgeBody): Promise<{ ok: boolean }> {
        return this.request("POST", "/api/accept", { edge });
    }

    reject(edge: EdgeBody): Promise<{ ok: boolean }> {
        return this.request("POST", "/api/reject", { edge });
    }

    manual(anchorId: number, tSec: number): Promise<{ ok: boolean }> {
        return this.request("POST", "/api/manual", { anchor_id: anchorId, t_sec: tSec });
    }

    solve(): Promise<Timeline> {
        return this.request("POST", "/api/solve");
    }

    strip(videoId: string): Promise<StripResponse> {
        return this.request("GET", `/api/strip/${videoId}`);
    }
}

/** Re-issue a recorded call log against another engine, in order. */
export async function replayLog(
    log: LoggedCall[],
    baseUrl: string,
    fetchFn: FetchLike = (url, init) => fetch(url, init),
): Promise<void> {
    for (const call of log) {
        const response = await fetchFn(baseUrl + call.path, {
            method: call.method,
            headers: call.body === undefined ? undefined : { "content-type": "application/json" },
            body: call.body === undefined ? undefined : JSON.stringify(call.body),
        });
        if (!response.ok) {
            throw new EngineError(`replay ${call.method} ${call.path} failed: ${response.status}`);
        }
        await response.json();
    }
}
