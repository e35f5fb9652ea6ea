// Application shell: project bar, pipeline strip, tab bar, and the five
// linked views. All state that defines "what is on screen" lives in the
// URL-serialized ViewState so a reload lands on the same selection; payload
// caches and in-flight job handles stay module-local.

import "./style.css";
import * as api from "./api";
import { ApiError } from "./api";
import { loadPalette } from "./palette";
import {
    TAB_LABELS,
    ViewState,
    readViewState,
    writeViewState,
    type TabId,
} from "./state";
import { renderJobProgress } from "./progress";
import { renderCellsView } from "./views/cells";
import { renderTreeView } from "./views/tree";
import { renderPathsView } from "./views/paths";
import { renderTrajectoriesView } from "./views/trajectories";
import { renderGenesView } from "./views/genes";

const app = document.getElementById("app") as HTMLElement;

// ---------------------------------------------------------------------------
// Module state

const state: ViewState = readViewState();
let project: api.ProjectRecord | null = null;
let appError: string | null = null;

// Sequence being composed in the tree view and the last connection check.
let pending: string[] = [];
let checkResults: api.SelectionResult[] | null = null;

// In-flight jobs we are polling (pipeline steps, gene-function analysis).
let pipelineJob: api.JobRecord | null = null;
let enrichJob: api.JobRecord | null = null;

const data = {
    cells: null as api.CellsPayload | null,
    tree: null as api.PathTreePayload | null,
    treeKey: null as string | null,
    summary: null as api.PathSummaryPayload | null,
    summaryKey: null as string | null,
    trajectories: null as api.TrajectoriesPayload | null,
    trajKey: null as string | null,
    enrichment: null as api.EnrichmentPayload | null,
    enrichKey: null as string | null,
};

const busy: Partial<Record<TabId, string>> = {};
const viewErrors: Partial<Record<TabId, string>> = {};
const loading = new Set<string>();

const PIPELINE: { key: string; kind: string; label: string }[] = [
    { key: "ingested", kind: "", label: "ingest" },
    { key: "trained", kind: "train", label: "train" },
    { key: "predicted", kind: "predict", label: "predict" },
    { key: "summarized", kind: "summarize", label: "summarize" },
];

function errMessage(err: unknown): string {
    return err instanceof Error ? err.message : String(err);
}

function resetCaches(): void {
    data.cells = null;
    data.tree = null;
    data.treeKey = null;
    data.summary = null;
    data.summaryKey = null;
    data.trajectories = null;
    data.trajKey = null;
    data.enrichment = null;
    data.enrichKey = null;
}

// ---------------------------------------------------------------------------
// Actions

function update(): void {
    writeViewState(state);
    render();
    void ensureActiveData();
}

function openTab(tab: TabId): void {
    if (!state.tabs.includes(tab)) state.tabs.push(tab);
    state.tab = tab;
    update();
}

function selectCore(cellType: string): void {
    state.core = cellType;
    pending = [];
    checkResults = null;
    data.tree = null;
    data.treeKey = null;
    data.summary = null;
    data.summaryKey = null;
    openTab("tree");
}

function setMinFreq(minFreq: number): void {
    state.minFreq = minFreq;
    update();
}

function toggleType(cellType: string): void {
    pending = pending.includes(cellType)
        ? pending.filter((t) => t !== cellType)
        : [...pending, cellType];
    checkResults = null;
    render();
}

function clearPending(): void {
    pending = [];
    checkResults = null;
    render();
}

function rememberSequence(seq: string[]): void {
    const id = seq.join(">");
    if (!state.sequences.some((s) => s.join(">") === id)) state.sequences.push(seq);
}

async function checkPending(): Promise<void> {
    if (!project || pending.length < 2) return;
    try {
        const resp = await api.checkSequences(project.project_id, [pending]);
        checkResults = resp.results;
        const ok = resp.results.filter((r) => r.accepted);
        if (ok.length > 0) {
            ok.forEach((r) => rememberSequence(r.sequence));
            pending = [];
            data.summary = null;
            data.summaryKey = null;
        }
        delete viewErrors.tree;
    } catch (err) {
        viewErrors.tree = errMessage(err);
    }
    update();
}

function explore(): void {
    openTab("paths");
}

function selectPath(pathId: string): void {
    state.path = pathId;
    update();
}

function openTrajectories(pathId: string): void {
    state.path = pathId;
    openTab("trajectories");
}

function selectTrajectory(trajectoryId: string): void {
    state.trajectory = trajectoryId;
    update();
}

async function startEnrichment(trajectoryId: string): Promise<void> {
    state.trajectory = trajectoryId;
    data.enrichment = null;
    data.enrichKey = null;
    openTab("genes");
    if (!project) return;
    try {
        enrichJob = await api.startEnrichment(project.project_id, trajectoryId);
        render();
        await api.waitForJob(enrichJob.job_id, (job) => {
            enrichJob = job;
            render();
        });
        enrichJob = null;
        delete viewErrors.genes;
    } catch (err) {
        enrichJob = null;
        viewErrors.genes = errMessage(err);
    }
    update();
}

async function runNextStep(): Promise<void> {
    if (!project || pipelineJob) return;
    const step = PIPELINE.find((s) => s.kind && !project!.state[s.key]);
    if (!step) return;
    const params: Record<string, unknown> = {};
    if (step.kind === "summarize" && state.core) params.core = state.core;
    try {
        pipelineJob = await api.submitJob(project.project_id, step.kind, params);
        render();
        await api.waitForJob(pipelineJob.job_id, (job) => {
            pipelineJob = job;
            render();
        });
        pipelineJob = null;
        project = await api.getProject(project.project_id);
        resetCaches();
        appError = null;
    } catch (err) {
        pipelineJob = null;
        appError = errMessage(err);
    }
    update();
}

async function loadProject(projectId: string): Promise<void> {
    appError = null;
    try {
        project = await api.getProject(projectId);
        state.project = projectId;
        resetCaches();
        // Re-register sequences restored from the URL so the service can
        // serve their summaries even against a fresh data directory; drop
        // any the current prediction no longer supports.
        if (project.state.predicted && state.sequences.length > 0) {
            const resp = await api.checkSequences(projectId, state.sequences);
            state.sequences = resp.results
                .filter((r) => r.accepted)
                .map((r) => r.sequence);
        }
    } catch (err) {
        project = null;
        appError = errMessage(err);
    }
    update();
}

async function createProject(datasetRoot: string): Promise<void> {
    appError = null;
    try {
        project = await api.createProject(datasetRoot);
        Object.assign(state, {
            project: project.project_id,
            core: null,
            minFreq: 0,
            sequences: [],
            path: null,
            trajectory: null,
            tabs: ["cells"] as TabId[],
            tab: "cells" as TabId,
        });
        pending = [];
        checkResults = null;
        resetCaches();
    } catch (err) {
        appError = errMessage(err);
    }
    update();
}

// ---------------------------------------------------------------------------
// Data loading

async function fill<T>(
    key: string,
    tab: TabId,
    fetcher: () => Promise<T>,
    assign: (value: T) => void
): Promise<void> {
    if (loading.has(key)) return;
    loading.add(key);
    busy[tab] = "loading…";
    render();
    try {
        assign(await fetcher());
        delete viewErrors[tab];
    } catch (err) {
        viewErrors[tab] = errMessage(err);
    } finally {
        loading.delete(key);
        delete busy[tab];
        render();
    }
}

async function ensureActiveData(): Promise<void> {
    if (!project) return;
    const pid = project.project_id;
    const tab = state.tab;

    if ((tab === "cells" || tab === "tree") && project.state.ingested && !data.cells) {
        await fill(`cells:${pid}`, tab, () => api.getCells(pid), (v) => {
            data.cells = v;
        });
    }
    if (tab === "tree" && state.core && project.state.predicted) {
        const key = `tree:${pid}|${state.core}|${state.minFreq}`;
        if (data.treeKey !== key) {
            await fill(
                key,
                "tree",
                () => api.getPathTree(pid, state.core!, state.minFreq),
                (v) => {
                    data.tree = v;
                    data.treeKey = key;
                }
            );
        }
    }
    if (tab === "paths" && project.state.summarized) {
        const ids = state.sequences.map((s) => s.join(">"));
        const key = `summary:${pid}|${state.core ?? ""}|${ids.join(",")}`;
        if (data.summaryKey !== key) {
            await fill(
                key,
                "paths",
                () =>
                    api.getPathSummary(
                        pid,
                        ids.length > 0 ? ids : undefined,
                        state.core ?? undefined
                    ),
                (v) => {
                    data.summary = v;
                    data.summaryKey = key;
                }
            );
        }
    }
    if (tab === "trajectories" && state.path && project.state.summarized) {
        const key = `traj:${pid}|${state.path}`;
        if (data.trajKey !== key) {
            await fill(key, "trajectories", () => api.getTrajectories(pid, state.path!), (v) => {
                data.trajectories = v;
                data.trajKey = key;
            });
        }
    }
    if (tab === "genes" && state.trajectory && project.state.summarized && !enrichJob) {
        const key = `enrich:${pid}|${state.trajectory}`;
        if (data.enrichKey !== key) {
            await fill(
                key,
                "genes",
                async () => {
                    try {
                        return await api.getEnrichment(pid, state.trajectory!);
                    } catch (err) {
                        // not computed yet — offer the analysis button instead
                        if (err instanceof ApiError && err.status === 404) return null;
                        throw err;
                    }
                },
                (v) => {
                    data.enrichment = v;
                    data.enrichKey = key;
                }
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering

function render(): void {
    app.replaceChildren();
    app.appendChild(renderHeader());
    if (appError) {
        const box = document.createElement("div");
        box.className = "app-error";
        box.textContent = appError;
        app.appendChild(box);
    }
    if (!project) {
        const hint = document.createElement("div");
        hint.className = "empty-state";
        hint.textContent = "Load a project by id or create one from a dataset root.";
        app.appendChild(hint);
        return;
    }
    app.appendChild(renderPipeline());
    app.appendChild(renderTabBar());
    const view = document.createElement("div");
    view.className = "view";
    view.dataset.tab = state.tab;
    app.appendChild(view);
    renderActiveView(view);
}

function renderHeader(): HTMLElement {
    const header = document.createElement("header");
    header.className = "app-header";

    const title = document.createElement("span");
    title.className = "app-title";
    title.textContent = "Cross-sample trajectory explorer";
    header.appendChild(title);

    const idInput = document.createElement("input");
    idInput.type = "text";
    idInput.placeholder = "project id";
    idInput.className = "project-input";
    idInput.value = state.project ?? "";
    header.appendChild(idInput);

    const loadBtn = document.createElement("button");
    loadBtn.className = "load-project";
    loadBtn.textContent = "Load";
    loadBtn.addEventListener("click", () => {
        const value = idInput.value.trim();
        if (value) void loadProject(value);
    });
    header.appendChild(loadBtn);

    const rootInput = document.createElement("input");
    rootInput.type = "text";
    rootInput.placeholder = "dataset root";
    rootInput.className = "dataset-input";
    header.appendChild(rootInput);

    const createBtn = document.createElement("button");
    createBtn.className = "create-project";
    createBtn.textContent = "Create";
    createBtn.addEventListener("click", () => {
        const value = rootInput.value.trim();
        if (value) void createProject(value);
    });
    header.appendChild(createBtn);

    if (project) {
        const label = document.createElement("span");
        label.className = "project-label";
        const ingest = project.ingest;
        label.textContent = ingest
            ? `${project.project_id}: ${ingest.n_samples} samples, ${ingest.n_cells} cells`
            : project.project_id;
        header.appendChild(label);
    }
    return header;
}

function renderPipeline(): HTMLElement {
    const strip = document.createElement("div");
    strip.className = "pipeline-strip";
    for (const step of PIPELINE) {
        const span = document.createElement("span");
        const done = Boolean(project!.state[step.key]);
        span.className = `pipeline-step${done ? " done" : ""}`;
        span.textContent = `${done ? "✓" : "·"} ${step.label}`;
        strip.appendChild(span);
    }
    if (pipelineJob) {
        const holder = document.createElement("span");
        holder.className = "pipeline-progress";
        renderJobProgress(holder, pipelineJob.kind, pipelineJob.progress);
        strip.appendChild(holder);
    } else {
        const next = PIPELINE.find((s) => s.kind && !project!.state[s.key]);
        if (next) {
            const btn = document.createElement("button");
            btn.className = "run-step";
            btn.textContent = `Run ${next.label}`;
            btn.addEventListener("click", () => void runNextStep());
            strip.appendChild(btn);
        }
    }
    return strip;
}

function renderTabBar(): HTMLElement {
    const bar = document.createElement("nav");
    bar.className = "tab-bar";
    for (const tab of state.tabs) {
        const el = document.createElement("span");
        el.className = `tab${tab === state.tab ? " active" : ""}`;
        el.dataset.tab = tab;
        el.textContent = TAB_LABELS[tab];
        el.addEventListener("click", () => {
            state.tab = tab;
            update();
        });
        bar.appendChild(el);
    }
    return bar;
}

function emptyState(container: HTMLElement, text: string): void {
    const div = document.createElement("div");
    div.className = "empty-state";
    div.textContent = text;
    container.appendChild(div);
}

function renderActiveView(container: HTMLElement): void {
    const tab = state.tab;
    if (viewErrors[tab]) {
        const box = document.createElement("div");
        box.className = "app-error";
        box.textContent = viewErrors[tab]!;
        container.appendChild(box);
    }
    if (busy[tab]) {
        const div = document.createElement("div");
        div.className = "busy";
        div.textContent = busy[tab]!;
        container.appendChild(div);
        return;
    }

    switch (tab) {
        case "cells":
            if (!data.cells) {
                emptyState(container, "No cell data loaded.");
                return;
            }
            renderCellsView(container, data.cells, state.core, {
                onSelectCore: selectCore,
            });
            return;
        case "tree":
            if (!state.core) {
                emptyState(container, "Pick a core cell type first.");
                return;
            }
            if (!project!.state.predicted) {
                emptyState(container, "Run the pipeline through predict to build the hierarchy.");
                return;
            }
            if (!data.tree) {
                emptyState(container, "No hierarchy loaded.");
                return;
            }
            renderTreeView(
                container,
                data.tree,
                data.cells,
                {
                    minFreq: state.minFreq,
                    pending,
                    results: checkResults,
                    accepted: state.sequences,
                },
                {
                    onFilterChange: setMinFreq,
                    onToggleType: toggleType,
                    onCheck: () => void checkPending(),
                    onClear: clearPending,
                    onExplore: explore,
                }
            );
            return;
        case "paths":
            if (!project!.state.summarized) {
                emptyState(container, "Run the summarize step to inspect paths.");
                return;
            }
            if (!data.summary) {
                emptyState(container, "No path summaries loaded.");
                return;
            }
            renderPathsView(container, data.summary, state.path, {
                onSelectPath: selectPath,
                onOpenTrajectories: openTrajectories,
            });
            return;
        case "trajectories":
            if (!state.path) {
                emptyState(container, "Open a path from the inspection view first.");
                return;
            }
            if (!data.trajectories) {
                emptyState(container, "No trajectories loaded.");
                return;
            }
            renderTrajectoriesView(container, data.trajectories, state.trajectory, {
                onSelectTrajectory: selectTrajectory,
                onEnrich: (id) => void startEnrichment(id),
            });
            return;
        case "genes":
            if (enrichJob) {
                renderJobProgress(container, "gene function analysis", enrichJob.progress);
                return;
            }
            if (!state.trajectory) {
                emptyState(container, "Pick a trajectory to analyze first.");
                return;
            }
            if (!data.enrichment) {
                const btn = document.createElement("button");
                btn.className = "analyze-run";
                btn.textContent = "Run gene function analysis";
                btn.addEventListener("click", () => void startEnrichment(state.trajectory!));
                const wrap = document.createElement("div");
                wrap.className = "empty-state";
                wrap.appendChild(btn);
                container.appendChild(wrap);
                return;
            }
            renderGenesView(container, data.enrichment);
            return;
    }
}

// ---------------------------------------------------------------------------
// Boot

window.addEventListener("hashchange", () => {
    const next = readViewState();
    const projectChanged = next.project !== state.project;
    Object.assign(state, next);
    if (projectChanged) {
        if (state.project) {
            void loadProject(state.project);
        } else {
            project = null;
            resetCaches();
            render();
        }
    } else {
        render();
        void ensureActiveData();
    }
});

void loadPalette()
    .catch(() => null)
    .finally(() => {
        if (state.project) {
            void loadProject(state.project);
        } else {
            render();
        }
    });
