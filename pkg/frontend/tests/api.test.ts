import { afterEach, describe, expect, it, vi } from "vitest";
import {
    ApiError,
    checkSequences,
    getEnrichment,
    getPathSummary,
    getPathTree,
    startEnrichment,
    waitForJob,
} from "../src/api";

interface Call {
    url: string;
    init?: RequestInit;
}

function stubFetch(responder: (url: string, init?: RequestInit) => unknown): Call[] {
    const calls: Call[] = [];
    vi.stubGlobal("fetch", async (url: string, init?: RequestInit) => {
        calls.push({ url, init });
        const body = responder(url, init);
        return {
            ok: true,
            status: 200,
            statusText: "OK",
            json: async () => body,
        };
    });
    return calls;
}

afterEach(() => {
    vi.unstubAllGlobals();
});

describe("service client", () => {
    it("encodes hierarchy queries with core and frequency filter", async () => {
        const calls = stubFetch(() => ({ nodes: [], edges: [] }));
        await getPathTree("p1", "Mesenchyme/αβ", 40);
        expect(calls).toHaveLength(1);
        const url = new URL(calls[0].url, "http://localhost");
        expect(url.pathname).toBe("/api/projects/p1/views/path-tree");
        expect(url.searchParams.get("core")).toBe("Mesenchyme/αβ");
        expect(url.searchParams.get("min_freq")).toBe("40");
    });

    it("posts candidate sequences as JSON", async () => {
        const calls = stubFetch(() => ({ project_id: "p1", results: [] }));
        await checkSequences("p1", [["A", "B"], ["B", "C"]]);
        expect(calls[0].init?.method).toBe("POST");
        expect(JSON.parse(calls[0].init?.body as string)).toEqual({
            sequences: [["A", "B"], ["B", "C"]],
        });
    });

    it("joins requested path ids into one query parameter", async () => {
        const calls = stubFetch(() => ({ paths: [] }));
        await getPathSummary("p1", ["A>B>C", "B>C"], "B");
        const url = new URL(calls[0].url, "http://localhost");
        expect(url.searchParams.get("ids")).toBe("A>B>C,B>C");
        expect(url.searchParams.get("core")).toBe("B");

        await getPathSummary("p1");
        expect(new URL(calls[1].url, "http://localhost").search).toBe("");
    });

    it("addresses enrichment by trajectory id", async () => {
        const calls = stubFetch(() => ({ rows: [] }));
        await startEnrichment("p1", "A>B#3");
        expect(JSON.parse(calls[0].init?.body as string)).toEqual({
            trajectory_id: "A>B#3",
        });
        await getEnrichment("p1", "A>B#3");
        const url = new URL(calls[1].url, "http://localhost");
        expect(url.searchParams.get("trajectory")).toBe("A>B#3");
    });

    it("surfaces the service's error detail with the status code", async () => {
        vi.stubGlobal("fetch", async () => ({
            ok: false,
            status: 409,
            statusText: "Conflict",
            json: async () => ({ detail: "view requires pipeline stage 'predicted'" }),
        }));
        const err = await getPathTree("p1", "A", 0).catch((e) => e);
        expect(err).toBeInstanceOf(ApiError);
        expect(err.status).toBe(409);
        expect(err.message).toBe("view requires pipeline stage 'predicted'");
    });

    it("polls a job to completion and reports progress", async () => {
        let polls = 0;
        stubFetch(() => {
            polls += 1;
            return {
                job_id: "j1",
                status: polls < 3 ? "running" : "done",
                progress: polls / 3,
            };
        });
        const seen: number[] = [];
        const job = await waitForJob("j1", (j) => seen.push(j.progress), 1);
        expect(job.status).toBe("done");
        expect(polls).toBe(3);
        expect(seen).toHaveLength(3);
    });

    it("rejects when the polled job fails", async () => {
        stubFetch(() => ({ job_id: "j1", status: "failed", error: "train blew up" }));
        const err = await waitForJob("j1", undefined, 1).catch((e) => e);
        expect(err).toBeInstanceOf(ApiError);
        expect(err.message).toBe("train blew up");
    });
});
