// Typed client for the exploration service.
//
// Views never fetch anything themselves: the app layer requests payloads
// here and hands plain objects to the render functions, so every view also
// renders from canned fixtures in tests with no service running.

export type Point = [number, number];

export interface CellCounts {
    stages: number[];
    series: Record<string, number[]>;
}

export interface CellsPayload {
    project_id: string;
    types: string[];
    cell_counts: CellCounts;
}

export interface TreeNode {
    cell_type: string;
    relation: "root" | "ancestor" | "descendant";
    distance: number;
    path_count: number;
}

export interface TreeEdge {
    src_type: string;
    dst_type: string;
    weight: number;
}

export interface PathTreePayload {
    project_id: string;
    root: string;
    min_freq: number;
    nodes: TreeNode[];
    edges: TreeEdge[];
}

export interface SelectionResult {
    sequence: string[];
    accepted: boolean;
    path_id?: string;
    frequency?: number;
    reason?: string;
    broken_pair?: [string, string];
}

export interface SelectionResponse {
    project_id: string;
    results: SelectionResult[];
}

export interface SummaryNode {
    cell_type: string;
    populations: string[];
    n_cells: number;
    /** xmin, xmax, ymin, ymax in the core-anchored frame. */
    bounds: [number, number, number, number];
    outer: Point[][];
    inner: Point[][];
    x_hist: number[];
    y_hist: number[];
    centroid: Point;
    theta: number;
    r_std: number;
    lambda1: number;
    lambda2: number;
    mean_count: number;
}

export interface SummaryLink {
    src_type: string;
    dst_type: string;
    d_ab: number;
    d_ba: number;
    d_sym: number;
}

export interface PathSummary {
    id: string;
    types: string[];
    frequency: number;
    anchor: Point;
    nodes: SummaryNode[];
    links: SummaryLink[];
}

export interface PathSummaryPayload {
    project_id: string;
    core: string | null;
    paths: PathSummary[];
}

export interface TrajectoryStep {
    node_id: string;
    sample_id: string;
    stage: number;
    cell_type: string;
    count: number;
    centroid: Point;
    boundary: Point[];
    cells: Point[];
}

export interface Trajectory {
    trajectory_id: string;
    steps: TrajectoryStep[];
}

export interface TrajectoriesPayload {
    project_id: string;
    path_id: string;
    frequency: number;
    trajectories: Trajectory[];
}

export interface EnrichmentRow {
    term_id: string;
    name: string;
    namespace: string;
    k: number;
    K: number;
    n: number;
    N: number;
    p: number;
    fdr: number;
    significant: boolean;
    genes: string[];
}

export interface EnrichmentPayload {
    project_id: string;
    format: string;
    version: number;
    trajectory: string;
    rows: EnrichmentRow[];
}

export interface ProjectRecord {
    project_id: string;
    dataset_root: string;
    state: Record<string, boolean>;
    artifacts: Record<string, string>;
    core?: string;
    ingest?: { n_samples: number; n_nodes: number; n_cells: number };
    [key: string]: unknown;
}

export interface JobRecord {
    job_id: string;
    project_id: string;
    kind: string;
    params: Record<string, unknown>;
    status: "queued" | "running" | "done" | "failed";
    progress: number;
    result: Record<string, unknown> | null;
    error: string | null;
    created_at: string;
    updated_at: string;
}

export class ApiError extends Error {
    status: number;

    constructor(status: number, detail: string) {
        super(detail);
        this.name = "ApiError";
        this.status = status;
    }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(path, init);
    if (!resp.ok) {
        let detail = resp.statusText || `request failed (${resp.status})`;
        try {
            const body = await resp.json();
            if (body && typeof body.detail === "string") detail = body.detail;
        } catch {
            // non-JSON error body; keep the status text
        }
        throw new ApiError(resp.status, detail);
    }
    return resp.json() as Promise<T>;
}

function getJson<T>(path: string): Promise<T> {
    return request<T>(path);
}

function postJson<T>(path: string, body: unknown): Promise<T> {
    return request<T>(path, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
    });
}

const enc = encodeURIComponent;

export function createProject(datasetRoot: string): Promise<ProjectRecord> {
    return postJson("/api/projects", { dataset_root: datasetRoot });
}

export function getProject(project: string): Promise<ProjectRecord> {
    return getJson(`/api/projects/${enc(project)}`);
}

export function submitJob(
    project: string,
    kind: string,
    params: Record<string, unknown> = {}
): Promise<JobRecord> {
    return postJson(`/api/projects/${enc(project)}/jobs`, { kind, params });
}

export function getJob(jobId: string): Promise<JobRecord> {
    return getJson(`/api/jobs/${enc(jobId)}`);
}

function sleep(ms: number): Promise<void> {
    return new Promise((resolve) => setTimeout(resolve, ms));
}

/** Poll a job until it settles; rejects with the job's error on failure. */
export async function waitForJob(
    jobId: string,
    onProgress?: (job: JobRecord) => void,
    intervalMs = 400
): Promise<JobRecord> {
    for (;;) {
        const job = await getJob(jobId);
        if (onProgress) onProgress(job);
        if (job.status === "done") return job;
        if (job.status === "failed") {
            throw new ApiError(500, job.error ?? `job ${job.job_id} failed`);
        }
        await sleep(intervalMs);
    }
}

export function getCells(project: string): Promise<CellsPayload> {
    return getJson(`/api/projects/${enc(project)}/views/cells`);
}

export function getPathTree(
    project: string,
    core: string,
    minFreq: number
): Promise<PathTreePayload> {
    return getJson(
        `/api/projects/${enc(project)}/views/path-tree?core=${enc(core)}&min_freq=${minFreq}`
    );
}

export function checkSequences(
    project: string,
    sequences: string[][]
): Promise<SelectionResponse> {
    return postJson(`/api/projects/${enc(project)}/paths`, { sequences });
}

export function getPathSummary(
    project: string,
    ids?: string[],
    core?: string
): Promise<PathSummaryPayload> {
    const params = new URLSearchParams();
    if (ids && ids.length) params.set("ids", ids.join(","));
    if (core) params.set("core", core);
    const query = params.toString();
    return getJson(
        `/api/projects/${enc(project)}/views/path-summary${query ? `?${query}` : ""}`
    );
}

export function getTrajectories(
    project: string,
    pathId: string
): Promise<TrajectoriesPayload> {
    return getJson(`/api/projects/${enc(project)}/views/trajectories?path=${enc(pathId)}`);
}

export function startEnrichment(project: string, trajectoryId: string): Promise<JobRecord> {
    return postJson(`/api/projects/${enc(project)}/enrich`, { trajectory_id: trajectoryId });
}

export function getEnrichment(
    project: string,
    trajectoryId: string
): Promise<EnrichmentPayload> {
    return getJson(
        `/api/projects/${enc(project)}/views/enrichment?trajectory=${enc(trajectoryId)}`
    );
}
